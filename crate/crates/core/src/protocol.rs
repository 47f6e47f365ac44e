//! Bank, verifier and holder state machines for the money mini-scheme, plus
//! the serial-number wrapper that turns mini-scheme notes into a full scheme.
//!
//! A verification session has two halves:
//!
//! 1. [`local_test`]: the verifier checks the `r` register, picks `|L|`
//!    unused copies uniformly at random, marks them, runs Sampling Matching on
//!    each and accepts locally iff enough copies gave a conclusive outcome.
//! 2. [`bank_validate`]: the Bank checks its attempt counter, compares every
//!    reported parity with its secret strings and accepts iff enough are
//!    correct.
//!
//! Thresholds are compared as real numbers, never rounded.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock::{encode_note_state, BitString, SinglePhotonMixedState, SinglePhotonState};
use crate::matching::{run_sm, OutcomeRecord, SmOutcome, Tuple};

/// Scheme configuration shared by the Bank and its verifiers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Modes per copy.
    pub n: usize,
    /// Copies per note.
    pub q: usize,
    /// Copies consumed by one verification, `|L|`.
    pub l_size: usize,
    /// Maximum number of copies that may be consumed over the note's life.
    pub t_max: usize,
    /// Verifier security factor.
    pub epsilon: f64,
    /// Bank cut-off.
    pub delta: f64,
}

impl SchemeParams {
    pub fn new(n: usize, q: usize, l_size: usize, t_max: usize, epsilon: f64, delta: f64) -> Result<Self> {
        let params = Self {
            n,
            q,
            l_size,
            t_max,
            epsilon,
            delta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n > BitString::MAX_LEN {
            return Err(Error::Params("n must satisfy 3 <= n <= 64"));
        }
        if self.q == 0 {
            return Err(Error::Params("q must be positive"));
        }
        if self.l_size == 0 || self.l_size > self.q {
            return Err(Error::Params("need 1 <= l_size <= q"));
        }
        if self.t_max == 0 || self.t_max > self.q {
            return Err(Error::Params("need 1 <= t_max <= q"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) || !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Params("epsilon and delta must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Bank contacts allowed over the note's life, `ceil(T / |L|)`.
    pub fn max_bank_contacts(&self) -> usize {
        self.t_max.div_ceil(self.l_size)
    }

    /// Probability of two single clicks in distinct modes, `1 - 1/n`.
    pub fn p11(&self) -> f64 {
        1.0 - 1.0 / self.n as f64
    }
}

/// Honest expectations and acceptance thresholds for one verification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Expected conclusive copies for an honest holder.
    pub expected_l_succ: f64,
    /// Local acceptance threshold, `E (1 - epsilon)`.
    pub l_min: f64,
    /// Bank acceptance threshold on correct parities, `E (1 - delta)`.
    pub l_min_cor: f64,
}

impl Thresholds {
    /// Thresholds from an honest expected count; honest parities are always
    /// correct so the Bank's expectation equals the verifier's.
    pub fn from_expected(expected_l_succ: f64, epsilon: f64, delta: f64) -> Self {
        Self {
            expected_l_succ,
            l_min: expected_l_succ * (1.0 - epsilon),
            l_min_cor: expected_l_succ * (1.0 - delta),
        }
    }
}

pub fn expected_thresholds(params: &SchemeParams) -> Thresholds {
    Thresholds::from_expected(params.l_size as f64 * params.p11(), params.epsilon, params.delta)
}

/// The `r` register: position `j` is set once copy `j` was used.
#[derive(Clone, PartialEq, Eq)]
pub struct Register {
    bits: Vec<bool>,
    weight: usize,
}

impl Register {
    pub fn zeros(q: usize) -> Self {
        Self {
            bits: alloc::vec![false; q],
            weight: 0,
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        let weight = bits.iter().filter(|&&b| b).count();
        Self { bits, weight }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Hamming weight `d(r, 0^q)`.
    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn get(&self, j: usize) -> bool {
        self.bits[j]
    }

    pub fn set(&mut self, j: usize, value: bool) {
        if self.bits[j] != value {
            self.bits[j] = value;
            if value {
                self.weight += 1;
            } else {
                self.weight -= 1;
            }
        }
    }

    pub fn unused_positions(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| (!b).then_some(j))
            .collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }
}

impl fmt::Debug for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Register(q={}, weight={})", self.len(), self.weight)
    }
}

impl Serialize for Register {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        serializer.serialize_str(&s)
    }
}

impl<'de> Deserialize<'de> for Register {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = <String as Deserialize>::deserialize(deserializer)?;
        let bits = s
            .bytes()
            .map(|c| match c {
                b'0' => Ok(false),
                b'1' => Ok(true),
                _ => Err(serde::de::Error::custom("register must contain only '0' and '1'")),
            })
            .collect::<core::result::Result<Vec<_>, _>>()?;
        Ok(Register::from_bits(bits))
    }
}

/// One copy of a single-photon note as seen by the simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoteCopy {
    /// A Bank-issued `|x>`. The string is the simulator's hidden variable;
    /// verifier code only ever sees the click distribution.
    Genuine { string: BitString },
    Pure { amplitudes: SinglePhotonState },
    Mixed { state: SinglePhotonMixedState },
    /// Vacuum or multi-photon light; fails the photon-count check.
    NotSinglePhoton,
}

impl NoteCopy {
    pub fn is_single_photon(&self) -> bool {
        !matches!(self, NoteCopy::NotSinglePhoton)
    }

    /// Runs Sampling Matching on this copy; `None` when the two-photon
    /// click check fails.
    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<SmOutcome>> {
        match self {
            NoteCopy::Genuine { string } => run_sm(&encode_note_state(string), rng).map(Some),
            NoteCopy::Pure { amplitudes } => run_sm(amplitudes, rng).map(Some),
            NoteCopy::Mixed { state } => run_sm(state, rng).map(Some),
            NoteCopy::NotSinglePhoton => Ok(None),
        }
    }

    pub fn n(&self) -> Option<usize> {
        match self {
            NoteCopy::Genuine { string } => Some(string.len()),
            NoteCopy::Pure { amplitudes } => Some(amplitudes.n()),
            NoteCopy::Mixed { state } => Some(state.n()),
            NoteCopy::NotSinglePhoton => None,
        }
    }
}

/// A note: `q` state copies plus the `r` register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Note<C = NoteCopy> {
    copies: Vec<C>,
    r: Register,
}

impl<C> Note<C> {
    pub fn new(copies: Vec<C>) -> Self {
        let r = Register::zeros(copies.len());
        Self { copies, r }
    }

    pub fn with_register(copies: Vec<C>, r: Register) -> Result<Self> {
        if copies.len() != r.len() {
            return Err(Error::DimensionMismatch {
                expected: copies.len(),
                actual: r.len(),
            });
        }
        Ok(Self { copies, r })
    }

    pub fn q(&self) -> usize {
        self.copies.len()
    }

    pub fn copies(&self) -> &[C] {
        &self.copies
    }

    pub fn copies_mut(&mut self) -> &mut [C] {
        &mut self.copies
    }

    pub fn register(&self) -> &Register {
        &self.r
    }

    /// The register travels with the note and is under the holder's control.
    pub fn register_mut(&mut self) -> &mut Register {
        &mut self.r
    }

    pub fn into_parts(self) -> (Vec<C>, Register) {
        (self.copies, self.r)
    }
}

/// The Bank's private record for one note.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankSecret {
    strings: Vec<BitString>,
    count: usize,
}

impl BankSecret {
    pub fn new(strings: Vec<BitString>) -> Self {
        Self { strings, count: 0 }
    }

    pub fn with_count(strings: Vec<BitString>, count: usize) -> Self {
        Self { strings, count }
    }

    pub fn strings(&self) -> &[BitString] {
        &self.strings
    }

    /// Bank contacts so far.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn q(&self) -> usize {
        self.strings.len()
    }
}

/// Outcomes the verifier forwards to the Bank.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub records: Vec<OutcomeRecord>,
    pub l_succ: usize,
}

impl VerifierReport {
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (usize, SmOutcome)>) -> Self {
        let records: Vec<OutcomeRecord> = outcomes.into_iter().map(|(j, o)| o.record(j)).collect();
        let l_succ = records.iter().filter(|r| r.tuple.is_some()).count();
        Self { records, l_succ }
    }

    /// Flat `{j, k, l, d}` records, `k`, `l`, `d` null for inconclusive copies.
    pub fn wire_records(&self) -> Vec<WireRecord> {
        self.records.iter().map(WireRecord::from).collect()
    }

    pub fn from_wire(records: &[WireRecord], l_succ: usize) -> Result<Self> {
        let records = records
            .iter()
            .map(|w| w.to_record())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { records, l_succ })
    }
}

/// Verifier-to-Bank record in flat form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRecord {
    pub j: usize,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub d: Option<u8>,
}

impl From<&OutcomeRecord> for WireRecord {
    fn from(r: &OutcomeRecord) -> Self {
        Self {
            j: r.copy_index,
            k: r.tuple.map(|t| t.k()),
            l: r.tuple.map(|t| t.l()),
            d: r.parity,
        }
    }
}

impl WireRecord {
    pub fn to_record(&self) -> Result<OutcomeRecord> {
        let tuple = match (self.k, self.l) {
            (Some(k), Some(l)) => Some(Tuple::new(k, l)?),
            (None, None) => None,
            _ => return Err(Error::ProtocolViolation("record has only one of k, l")),
        };
        let record = OutcomeRecord {
            copy_index: self.j,
            tuple,
            parity: self.d,
        };
        record.outcome()?;
        Ok(record)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictReason {
    NoteExhausted,
    PhotonCountFail,
    LSuccBelowMin,
    CountExceeded,
    ParityBelowThreshold,
    UnknownSerial,
    Accepted,
}

impl fmt::Display for VerdictReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictReason::NoteExhausted => "note-exhausted",
            VerdictReason::PhotonCountFail => "photon-count-fail",
            VerdictReason::LSuccBelowMin => "l_succ-below-min",
            VerdictReason::CountExceeded => "count-exceeded",
            VerdictReason::ParityBelowThreshold => "parity-below-threshold",
            VerdictReason::UnknownSerial => "unknown-serial",
            VerdictReason::Accepted => "accepted",
        })
    }
}

/// The Bank's final bit; `bit == 1` iff the reason is `Accepted`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    bit: u8,
    reason: VerdictReason,
}

impl Verdict {
    pub fn accept() -> Self {
        Self {
            bit: 1,
            reason: VerdictReason::Accepted,
        }
    }

    pub fn reject(reason: VerdictReason) -> Self {
        debug_assert!(reason != VerdictReason::Accepted);
        Self { bit: 0, reason }
    }

    pub fn bit(&self) -> u8 {
        self.bit
    }

    pub fn is_accepted(&self) -> bool {
        self.bit == 1
    }

    pub fn reason(&self) -> VerdictReason {
        self.reason
    }
}

/// Result of the verifier's local test.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalResult {
    pub accepted: bool,
    /// `Accepted` or the local rejection cause.
    pub reason: VerdictReason,
    pub report: VerifierReport,
    /// Copy indices selected for this session, ascending.
    pub selected: Vec<usize>,
}

impl LocalResult {
    fn rejected(reason: VerdictReason, report: VerifierReport, selected: Vec<usize>) -> Self {
        Self {
            accepted: false,
            reason,
            report,
            selected,
        }
    }
}

/// Bank note preparation: `q` independent uniform strings, encoded copies,
/// `r = 0^q`, `count = 0`.
pub fn prepare_note<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<(BankSecret, Note)> {
    params.validate()?;
    let strings = (0..params.q)
        .map(|_| BitString::random(params.n, rng))
        .collect::<Result<Vec<_>>>()?;
    let copies = strings.iter().map(|&string| NoteCopy::Genuine { string }).collect();
    Ok((BankSecret::new(strings), Note::new(copies)))
}

/// Uniform `l`-subset of the unused positions (partial Fisher-Yates), ascending.
pub fn select_unused<R: Rng + ?Sized>(r: &Register, l: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut pool = r.unused_positions();
    if pool.len() < l {
        return Err(Error::InsufficientCopies {
            available: pool.len(),
            required: l,
        });
    }
    for i in 0..l {
        let pick = rng.random_range(i..pool.len());
        pool.swap(i, pick);
    }
    pool.truncate(l);
    pool.sort_unstable();
    Ok(pool)
}

/// Shared local-testing steps; `measure` returns `None` when a copy fails the
/// photon-count check.
pub(crate) fn run_local_test<C, R, F>(
    note: &mut Note<C>,
    params: &SchemeParams,
    thresholds: &Thresholds,
    rng: &mut R,
    mut measure: F,
) -> Result<LocalResult>
where
    R: Rng + ?Sized,
    F: FnMut(&C, &mut R) -> Result<Option<SmOutcome>>,
{
    if note.q() != params.q {
        return Err(Error::DimensionMismatch {
            expected: params.q,
            actual: note.q(),
        });
    }
    if note.r.weight() > params.t_max {
        return Ok(LocalResult::rejected(
            VerdictReason::NoteExhausted,
            VerifierReport::default(),
            Vec::new(),
        ));
    }
    let selected = select_unused(&note.r, params.l_size, rng)?;
    for &j in &selected {
        note.r.set(j, true);
    }
    let mut photon_fail = false;
    let mut outcomes = Vec::with_capacity(selected.len());
    for &j in &selected {
        match measure(&note.copies[j], rng)? {
            Some(outcome) => outcomes.push((j, outcome)),
            None => {
                photon_fail = true;
                outcomes.push((j, SmOutcome::Inconclusive));
            }
        }
    }
    let report = VerifierReport::from_outcomes(outcomes);
    if photon_fail {
        return Ok(LocalResult::rejected(VerdictReason::PhotonCountFail, report, selected));
    }
    if (report.l_succ as f64) < thresholds.l_min {
        return Ok(LocalResult::rejected(VerdictReason::LSuccBelowMin, report, selected));
    }
    Ok(LocalResult {
        accepted: true,
        reason: VerdictReason::Accepted,
        report,
        selected,
    })
}

/// Verifier local testing for a single-photon note. Mutates the note's
/// register; fails with [`Error::InsufficientCopies`] if fewer than `|L|`
/// unused copies remain.
pub fn local_test<R: Rng + ?Sized>(note: &mut Note, params: &SchemeParams, rng: &mut R) -> Result<LocalResult> {
    params.validate()?;
    let thresholds = expected_thresholds(params);
    run_local_test(note, params, &thresholds, rng, |copy, rng| {
        if let Some(n) = copy.n() {
            if n != params.n {
                return Err(Error::DimensionMismatch {
                    expected: params.n,
                    actual: n,
                });
            }
        }
        copy.measure(rng)
    })
}

/// Bank validation with explicit thresholds.
pub fn bank_validate_with(
    secret: &mut BankSecret,
    report: &VerifierReport,
    params: &SchemeParams,
    thresholds: &Thresholds,
) -> Result<Verdict> {
    let q = secret.q();
    let mut seen = alloc::vec![false; q];
    let mut conclusive = 0;
    for record in &report.records {
        let j = record.copy_index;
        if j >= q {
            return Err(Error::ProtocolViolation("copy index out of range"));
        }
        if core::mem::replace(&mut seen[j], true) {
            return Err(Error::ProtocolViolation("copy index reported twice"));
        }
        if let SmOutcome::Conclusive { tuple, .. } = record.outcome()? {
            if !tuple.fits(params.n) {
                return Err(Error::ProtocolViolation("tuple outside the mode range"));
            }
            conclusive += 1;
        }
    }
    if conclusive != report.l_succ {
        return Err(Error::ProtocolViolation("l_succ does not match the records"));
    }
    if secret.count >= params.max_bank_contacts() {
        return Ok(Verdict::reject(VerdictReason::CountExceeded));
    }
    let l_succ_cor = report
        .records
        .iter()
        .filter(|r| match (r.tuple, r.parity) {
            (Some(t), Some(d)) => t.parity_of(&secret.strings[r.copy_index]) == d,
            _ => false,
        })
        .count();
    secret.count += 1;
    if (l_succ_cor as f64) >= thresholds.l_min_cor {
        Ok(Verdict::accept())
    } else {
        Ok(Verdict::reject(VerdictReason::ParityBelowThreshold))
    }
}

/// Bank validation of a single-photon verifier report.
pub fn bank_validate(secret: &mut BankSecret, report: &VerifierReport, params: &SchemeParams) -> Result<Verdict> {
    bank_validate_with(secret, report, params, &expected_thresholds(params))
}

/// Outcome of one complete verification session.
#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub local: LocalResult,
    pub verdict: Verdict,
    /// Whether the Bank was contacted.
    pub bank_contacted: bool,
}

/// Local test followed, if it passes, by Bank validation.
pub fn verify<R: Rng + ?Sized>(
    note: &mut Note,
    secret: &mut BankSecret,
    params: &SchemeParams,
    rng: &mut R,
) -> Result<Session> {
    let local = local_test(note, params, rng)?;
    if !local.accepted {
        return Ok(Session {
            verdict: Verdict::reject(local.reason),
            local,
            bank_contacted: false,
        });
    }
    let verdict = bank_validate(secret, &local.report, params)?;
    Ok(Session {
        local,
        verdict,
        bank_contacted: true,
    })
}

/// A mini-scheme note with a serial number attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullNote {
    pub serial: String,
    pub note: Note,
}

/// Bank-side registry of issued notes keyed by serial number.
#[derive(Clone, Debug)]
pub struct Mint {
    params: SchemeParams,
    secrets: BTreeMap<String, BankSecret>,
}

impl Mint {
    pub fn new(params: SchemeParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            secrets: BTreeMap::new(),
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn secret(&self, serial: &str) -> Option<&BankSecret> {
        self.secrets.get(serial)
    }

    /// Attaches `serial` to an already prepared mini-scheme note.
    pub fn issue_full_note(&mut self, mini_note: Note, secret: BankSecret, serial: impl Into<String>) -> Result<FullNote> {
        let serial = serial.into();
        if self.secrets.contains_key(&serial) {
            return Err(Error::DuplicateSerial);
        }
        if mini_note.q() != self.params.q || secret.q() != self.params.q {
            return Err(Error::DimensionMismatch {
                expected: self.params.q,
                actual: mini_note.q(),
            });
        }
        self.secrets.insert(serial.clone(), secret);
        Ok(FullNote { serial, note: mini_note })
    }

    /// Prepares a fresh note and issues it under `serial`.
    pub fn issue<R: Rng + ?Sized>(&mut self, serial: impl Into<String>, rng: &mut R) -> Result<FullNote> {
        let serial = serial.into();
        if self.secrets.contains_key(&serial) {
            return Err(Error::DuplicateSerial);
        }
        let (secret, note) = prepare_note(&self.params, rng)?;
        self.issue_full_note(note, secret, serial)
    }

    /// Runs the mini-scheme verification against the secret registered under
    /// the note's serial.
    pub fn verify<R: Rng + ?Sized>(&mut self, note: &mut FullNote, rng: &mut R) -> Result<Verdict> {
        let Some(secret) = self.secrets.get_mut(&note.serial) else {
            return Ok(Verdict::reject(VerdictReason::UnknownSerial));
        };
        Ok(verify(&mut note.note, secret, &self.params, rng)?.verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, q: usize, l: usize, t: usize) -> SchemeParams {
        SchemeParams::new(n, q, l, t, 0.2, 0.2).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(SchemeParams::new(2, 10, 5, 10, 0.1, 0.1).is_err());
        assert!(SchemeParams::new(4, 10, 11, 10, 0.1, 0.1).is_err());
        assert!(SchemeParams::new(4, 10, 5, 11, 0.1, 0.1).is_err());
        assert!(SchemeParams::new(4, 10, 5, 10, 1.5, 0.1).is_err());
        assert!(SchemeParams::new(4, 0, 0, 0, 0.1, 0.1).is_err());
        assert_eq!(params(4, 100, 30, 100).max_bank_contacts(), 4);
    }

    #[test]
    fn thresholds_examples() {
        let t = expected_thresholds(&SchemeParams::new(4, 10_000, 1000, 10_000, 0.0, 0.1).unwrap());
        assert!((t.expected_l_succ - 750.0).abs() < 1e-12);
        assert!((t.l_min - 750.0).abs() < 1e-12);
        assert!((t.l_min_cor - 675.0).abs() < 1e-9);
        let t = expected_thresholds(&SchemeParams::new(14, 10_000, 1000, 10_000, 0.1, 0.1).unwrap());
        assert!((t.l_min - 1000.0 * 13.0 / 14.0 * 0.9).abs() < 1e-9);
        assert!((t.l_min - 835.714).abs() < 1e-3);
    }

    #[test]
    fn prepare_single_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (secret, note) = prepare_note(&params(4, 1, 1, 1), &mut rng).unwrap();
        assert_eq!(note.q(), 1);
        assert_eq!(note.register().weight(), 0);
        assert_eq!(secret.count(), 0);
        assert!(matches!(note.copies()[0], NoteCopy::Genuine { .. }));
    }

    #[test]
    fn honest_session_accepts_and_parities_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = params(4, 1000, 100, 1000);
        let (mut secret, mut note) = prepare_note(&p, &mut rng).unwrap();
        let session = verify(&mut note, &mut secret, &p, &mut rng).unwrap();
        assert!(session.verdict.is_accepted());
        assert_eq!(secret.count(), 1);
        assert_eq!(note.register().weight(), 100);
        for rec in &session.local.report.records {
            if let (Some(t), Some(d)) = (rec.tuple, rec.parity) {
                assert_eq!(t.parity_of(&secret.strings()[rec.copy_index]), d);
            }
        }
    }

    #[test]
    fn count_exceeded_after_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // ceil(250 / 100) = 3 contacts
        let p = params(4, 400, 100, 250);
        let (mut secret, mut note) = prepare_note(&p, &mut rng).unwrap();
        let mut reports = Vec::new();
        for _ in 0..3 {
            let local = local_test(&mut note, &p, &mut rng).unwrap();
            assert!(local.accepted);
            reports.push(local.report);
        }
        for report in &reports {
            assert!(bank_validate(&mut secret, report, &p).unwrap().is_accepted());
        }
        assert_eq!(secret.count(), 3);
        let v = bank_validate(&mut secret, &reports[0], &p).unwrap();
        assert_eq!(v.reason(), VerdictReason::CountExceeded);
        assert_eq!(v.bit(), 0);
        assert_eq!(secret.count(), 3);
    }

    #[test]
    fn register_weight_above_t_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = params(4, 50, 5, 10);
        let (_, mut note) = prepare_note(&p, &mut rng).unwrap();
        for j in 0..11 {
            note.register_mut().set(j, true);
        }
        let res = local_test(&mut note, &p, &mut rng).unwrap();
        assert!(!res.accepted);
        assert_eq!(res.reason, VerdictReason::NoteExhausted);
        assert_eq!(note.register().weight(), 11);
    }

    #[test]
    fn too_few_unused_copies_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = params(4, 10, 5, 10);
        let (_, mut note) = prepare_note(&p, &mut rng).unwrap();
        // weight 6 is within T but leaves only 4 unused copies
        for j in 0..6 {
            note.register_mut().set(j, true);
        }
        assert!(matches!(
            local_test(&mut note, &p, &mut rng),
            Err(Error::InsufficientCopies { available: 4, required: 5 })
        ));
    }

    #[test]
    fn photon_count_check_rejects_missing_photon() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = params(4, 20, 20, 20);
        let (_, mut note) = prepare_note(&p, &mut rng).unwrap();
        note.copies_mut()[7] = NoteCopy::NotSinglePhoton;
        let res = local_test(&mut note, &p, &mut rng).unwrap();
        assert_eq!(res.reason, VerdictReason::PhotonCountFail);
    }

    #[test]
    fn flipped_parities_are_rejected_by_bank() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = SchemeParams::new(4, 200, 100, 200, 0.2, 0.1).unwrap();
        let (mut secret, mut note) = prepare_note(&p, &mut rng).unwrap();
        let mut local = local_test(&mut note, &p, &mut rng).unwrap();
        for rec in &mut local.report.records {
            if let Some(d) = rec.parity.as_mut() {
                *d ^= 1;
            }
        }
        let v = bank_validate(&mut secret, &local.report, &p).unwrap();
        assert_eq!(v.reason(), VerdictReason::ParityBelowThreshold);
    }

    #[test]
    fn malformed_reports_are_protocol_violations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = params(4, 20, 5, 20);
        let (mut secret, _) = prepare_note(&p, &mut rng).unwrap();
        let out_of_range = VerifierReport::from_outcomes([(20, SmOutcome::Inconclusive)]);
        assert!(matches!(
            bank_validate(&mut secret, &out_of_range, &p),
            Err(Error::ProtocolViolation(_))
        ));
        let dup = VerifierReport::from_outcomes([(1, SmOutcome::Inconclusive), (1, SmOutcome::Inconclusive)]);
        assert!(bank_validate(&mut secret, &dup, &p).is_err());
        let mut lying = VerifierReport::from_outcomes([(1, SmOutcome::Inconclusive)]);
        lying.l_succ = 1;
        assert!(bank_validate(&mut secret, &lying, &p).is_err());
        assert_eq!(secret.count(), 0);
    }

    #[test]
    fn wire_records_roundtrip() {
        let report = VerifierReport::from_outcomes([
            (
                3,
                SmOutcome::Conclusive {
                    tuple: Tuple::new(1, 4).unwrap(),
                    parity: 1,
                },
            ),
            (9, SmOutcome::Inconclusive),
        ]);
        let wire = report.wire_records();
        assert_eq!(wire[0], WireRecord { j: 3, k: Some(1), l: Some(4), d: Some(1) });
        assert_eq!(wire[1], WireRecord { j: 9, k: None, l: None, d: None });
        assert_eq!(VerifierReport::from_wire(&wire, report.l_succ).unwrap(), report);
    }

    #[test]
    fn mint_dispatches_on_serial() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = params(4, 300, 100, 300);
        let mut mint = Mint::new(p).unwrap();
        let mut a1 = mint.issue("A1", &mut rng).unwrap();
        assert!(matches!(mint.issue("A1", &mut rng), Err(Error::DuplicateSerial)));
        assert!(mint.verify(&mut a1, &mut rng).unwrap().is_accepted());
        assert_eq!(mint.secret("A1").unwrap().count(), 1);
        let mut stray = a1.clone();
        stray.serial = "ZZ".into();
        assert_eq!(mint.verify(&mut stray, &mut rng).unwrap().reason(), VerdictReason::UnknownSerial);
    }

    #[test]
    fn cross_serial_verification_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = params(4, 300, 100, 300);
        let mut mint = Mint::new(p).unwrap();
        let a = mint.issue("A", &mut rng).unwrap();
        let _b = mint.issue("B", &mut rng).unwrap();
        let mut swapped = FullNote {
            serial: "B".into(),
            note: a.note,
        };
        let v = mint.verify(&mut swapped, &mut rng).unwrap();
        assert_eq!(v.reason(), VerdictReason::ParityBelowThreshold);
    }
}
