//! On-disk formats. Every file carries `schema_version` and `kind`.
//!
//! A note file holds the simulated quantum copies in classical form, so it
//! reveals the note strings to anyone who reads it.

use std::fs;
use std::io::Write;
use std::path::Path;

use qmoney_core::coherent::{CoherentNote, MultiClickPolicy};
use qmoney_core::protocol::{BankSecret, Note, SchemeParams, VerifierReport, WireRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const NOTE_KIND: &str = "note";
pub const SECRET_KIND: &str = "bank-secret";
pub const REPORT_KIND: &str = "verifier-report";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum NoteBody {
    SinglePhoton { note: Note },
    Coherent { policy: MultiClickPolicy, note: CoherentNote },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoteFile {
    pub schema_version: u32,
    pub kind: String,
    pub serial: String,
    pub params: SchemeParams,
    #[serde(flatten)]
    pub body: NoteBody,
}

impl NoteFile {
    pub fn new(serial: String, params: SchemeParams, body: NoteBody) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: NOTE_KIND.into(),
            serial,
            params,
            body,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecretFile {
    pub schema_version: u32,
    pub kind: String,
    /// Always true: this file is Bank-private.
    pub sensitive: bool,
    pub serial: String,
    pub params: SchemeParams,
    /// Present for coherent notes.
    pub policy: Option<MultiClickPolicy>,
    pub secret: BankSecret,
}

impl SecretFile {
    pub fn new(serial: String, params: SchemeParams, policy: Option<MultiClickPolicy>, secret: BankSecret) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: SECRET_KIND.into(),
            sensitive: true,
            serial,
            params,
            policy,
            secret,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub kind: String,
    pub serial: String,
    pub l_succ: usize,
    pub records: Vec<WireRecord>,
}

impl ReportFile {
    pub fn new(serial: String, report: &VerifierReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: REPORT_KIND.into(),
            serial,
            l_succ: report.l_succ,
            records: report.wire_records(),
        }
    }

    pub fn report(&self) -> Result<VerifierReport> {
        Ok(VerifierReport::from_wire(&self.records, self.l_succ)?)
    }
}

fn format_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.to_owned(),
        message: message.into(),
    }
}

/// Reads a JSON file and checks its `schema_version` and `kind`.
pub fn read_versioned<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format_error(path, e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(format_error(path, format!("unsupported schema_version {v}"))),
        None => return Err(format_error(path, "missing schema_version")),
    }
    match value.get("kind").and_then(|v| v.as_str()) {
        Some(k) if k == kind => {}
        Some(k) => return Err(format_error(path, format!("expected a {kind} file, found {k}"))),
        None => return Err(format_error(path, "missing kind")),
    }
    serde_json::from_value(value).map_err(|e| format_error(path, e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes a Bank-private file, owner read/write only where supported.
pub fn write_sensitive(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.to_owned(),
        source,
    };
    let mut options = fs::OpenOptions::new();
    options.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    let mut file = options.open(path).map_err(io)?;
    file.write_all(bytes).map_err(io)
}

/// Writes to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_bytes(path, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

/// Serializes rows as CSV with a header line.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qmoney_core::protocol::prepare_note;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn note_file_roundtrip_and_kind_check() {
        let params = SchemeParams::new(4, 6, 2, 4, 0.2, 0.2).unwrap();
        let (secret, note) = prepare_note(&params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let note_path = dir.path().join("note.json");
        let file = NoteFile::new("s".into(), params, NoteBody::SinglePhoton { note });
        write_bytes(&note_path, &to_json(&file)).unwrap();
        let back: NoteFile = read_versioned(&note_path, NOTE_KIND).unwrap();
        assert_eq!(back, file);
        assert!(matches!(
            read_versioned::<SecretFile>(&note_path, SECRET_KIND),
            Err(CliError::Format { .. })
        ));

        let secret_path = dir.path().join("secret.json");
        write_sensitive(&secret_path, &to_json(&SecretFile::new("s".into(), params, None, secret))).unwrap();
        let s: SecretFile = read_versioned(&secret_path, SECRET_KIND).unwrap();
        assert!(s.sensitive);
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            let mode = fs::metadata(&secret_path).unwrap().permissions().mode();
            assert_eq!(mode & 0o077, 0);
        }
    }

    #[test]
    fn schema_version_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        fs::write(&path, r#"{"schema_version": 99, "kind": "verifier-report"}"#).unwrap();
        let err = read_versioned::<ReportFile>(&path, REPORT_KIND).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
