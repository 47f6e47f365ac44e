use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qmoney(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmoney"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid json")
}

fn read_json(path: &Path) -> Value {
    json(&fs::read(path).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn prepare(dir: &Path, extra: &[&str]) {
    let mut args = vec!["prepare", "--out", p(dir)];
    args.extend_from_slice(extra);
    let o = qmoney(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn prepare_is_deterministic_and_versioned() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = ["--n", "4", "--q", "1000", "--seed", "11"];
    prepare(a.path(), &flags);
    prepare(b.path(), &flags);
    for name in ["note.json", "bank_secret.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let note = read_json(&a.path().join("note.json"));
    assert_eq!(note["schema_version"], 1);
    assert_eq!(note["kind"], "note");
    assert_eq!(note["scheme"], "single_photon");
    assert_eq!(note["note"]["copies"].as_array().unwrap().len(), 1000);
    assert_eq!(note["note"]["r"].as_str().unwrap().len(), 1000);
    let secret = read_json(&a.path().join("bank_secret.json"));
    assert_eq!(secret["sensitive"], true);
    assert_eq!(secret["secret"]["count"], 0);
}

#[test]
fn bad_configuration_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&qmoney(&["prepare", "--q", "0", "--out", p(dir.path())])), 2);
    assert_eq!(code(&qmoney(&["attack", "--trials", "0"])), 2);
    assert_eq!(code(&qmoney(&["attack", "--strategy", "nonsense"])), 2);
    assert_eq!(code(&qmoney(&["attack", "--scheme", "coherent", "--strategy", "keep-and-mix"])), 2);
    assert_eq!(code(&qmoney(&["table", "--bogus-flag"])), 2);
}

#[test]
fn io_and_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&qmoney(&["verify", "--note", p(&missing), "--secret", p(&missing)])), 3);
    prepare(dir.path(), &["--q", "40", "--l-size", "10", "--t-max", "20"]);
    let secret = dir.path().join("bank_secret.json");
    let note = dir.path().join("note.json");
    // a note passed where the secret is expected
    assert_eq!(code(&qmoney(&["verify", "--note", p(&note), "--secret", p(&note)])), 3);
    let mut v = read_json(&note);
    v["schema_version"] = 7.into();
    fs::write(&note, v.to_string()).unwrap();
    assert_eq!(code(&qmoney(&["verify", "--note", p(&note), "--secret", p(&secret)])), 3);
}

#[test]
fn verification_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path(), &["--q", "1000", "--l-size", "100", "--t-max", "200", "--seed", "5"]);
    let note = dir.path().join("note.json");
    let secret = dir.path().join("bank_secret.json");
    let verify = || qmoney(&["verify", "--note", p(&note), "--secret", p(&secret)]);

    for count in 1..=2 {
        let o = verify();
        assert_eq!(code(&o), 0);
        let out = json(&o.stdout);
        assert_eq!(out["bit"], 1);
        assert_eq!(out["bank_count"], count);
    }
    assert_eq!(read_json(&note)["note"]["r"].as_str().unwrap().matches('1').count(), 200);

    // ceil(T/|L|) = 2 contacts are spent
    let o = verify();
    assert_eq!(code(&o), 1);
    let out = json(&o.stdout);
    assert_eq!(out["bit"], 0);
    assert_eq!(out["reason"], "count-exceeded");

    // 300 copies consumed > T = 200
    let o = verify();
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o.stdout)["reason"], "note-exhausted");
}

#[test]
fn report_wire_shape_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path(), &["--q", "1000", "--l-size", "100", "--t-max", "300", "--seed", "6"]);
    let note = dir.path().join("note.json");
    let secret = dir.path().join("bank_secret.json");
    let report = dir.path().join("report.json");
    assert_eq!(code(&qmoney(&["verify", "--note", p(&note), "--secret", p(&secret)])), 0);

    let mut r = read_json(&report);
    assert_eq!(r["kind"], "verifier-report");
    let records = r["records"].as_array().unwrap();
    assert_eq!(records.len(), 100);
    for rec in records {
        let keys: Vec<&str> = rec.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["d", "j", "k", "l"]);
        assert_eq!(rec["k"].is_null(), rec["d"].is_null());
    }

    // resubmitting the honest report passes while contacts remain
    let o = qmoney(&["verify", "--secret", p(&secret), "--submit", p(&report)]);
    assert_eq!(code(&o), 0);

    for rec in r["records"].as_array_mut().unwrap() {
        if let Some(d) = rec["d"].as_u64() {
            rec["d"] = (1 - d).into();
        }
    }
    let tampered = dir.path().join("tampered.json");
    fs::write(&tampered, r.to_string()).unwrap();
    let o = qmoney(&["verify", "--secret", p(&secret), "--submit", p(&tampered)]);
    assert_eq!(code(&o), 1);
    let out = json(&o.stdout);
    assert_eq!(out["bit"], 0);
    assert_eq!(out["reason"], "parity-below-threshold");

    let mut dup = read_json(&report);
    let first = dup["records"][0].clone();
    dup["records"].as_array_mut().unwrap().push(first);
    fs::write(&tampered, dup.to_string()).unwrap();
    let o = qmoney(&["verify", "--secret", p(&secret), "--submit", p(&tampered)]);
    assert_eq!(code(&o), 1);
    assert!(json(&o.stdout)["reason"].as_str().unwrap().starts_with("protocol-violation"));
}

#[test]
fn coherent_note_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    prepare(
        dir.path(),
        &["--scheme", "coherent", "--n", "8", "--q", "2000", "--l-size", "1000", "--t-max", "2000", "--epsilon", "0.3"],
    );
    let note = read_json(&dir.path().join("note.json"));
    assert_eq!(note["scheme"], "coherent");
    assert_eq!(note["policy"], "random_pair");
    let o = qmoney(&[
        "verify",
        "--note",
        p(&dir.path().join("note.json")),
        "--secret",
        p(&dir.path().join("bank_secret.json")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn attack_output_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let out = dir.path().join(name);
        let csv = dir.path().join(format!("{name}.csv"));
        let o = qmoney(&[
            "attack",
            "--strategy",
            "full:keep-and-mix",
            "--n",
            "4",
            "--q",
            "400",
            "--l-size",
            "50",
            "--t-max",
            "150",
            "--trials",
            "40",
            "--seed",
            "9",
            "--workers",
            workers,
            "--out",
            p(&out),
            "--trials-out",
            p(&csv),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(out).unwrap(), fs::read(csv).unwrap())
    };
    let one = run("1", "a.json");
    let four = run("4", "b.json");
    assert_eq!(one, four);
    let csv = String::from_utf8(one.1).unwrap();
    assert!(csv.starts_with("trial,seed,ver1_bit,ver1_reason,ver2_bit,ver2_reason,joint_pass,"));
    assert_eq!(csv.lines().count(), 41);
}

#[test]
fn measure_resend_attack_reports_bound() {
    let o = qmoney(&[
        "attack",
        "--strategy",
        "measure-resend",
        "--n",
        "4",
        "--q",
        "2000",
        "--l-size",
        "1000",
        "--t-max",
        "2000",
        "--delta",
        "0.16666666666666666",
        "--trials",
        "30",
    ]);
    assert_eq!(code(&o), 0);
    let s = json(&o.stdout);
    assert_eq!(s["strategy"], "measure_resend/projected");
    assert_eq!(s["stats"]["joint_passes"], 0);
    let bound = s["bounds"]["measure_resend_pass_bound"].as_f64().unwrap();
    assert!(bound > 0.0 && bound <= (-41.0f64).exp());
    let rate = s["bounds"]["measure_resend_error_rate"].as_f64().unwrap();
    assert!((rate - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn honest_single_verifier_passes() {
    let o = qmoney(&[
        "attack", "--strategy", "honest", "--n", "4", "--q", "200", "--l-size", "100", "--t-max", "200", "--trials", "200",
    ]);
    assert_eq!(code(&o), 0);
    let s = json(&o.stdout);
    let bound = s["bounds"]["correctness_bound"].as_f64().unwrap();
    let ver1 = s["rates"]["ver1_pass"].as_f64().unwrap();
    assert!(1.0 - ver1 <= bound + 4.0 * (bound / 200.0).sqrt());
    // the fresh-string second note is wrong half the time
    assert_eq!(s["stats"]["ver2_passes"], 0);

    let o = qmoney(&["attack", "--scheme", "coherent", "--n", "4", "--q", "200", "--l-size", "100", "--trials", "50"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o.stdout)["stats"]["conclusive_wrong"], 0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"n": 4, "q": 100, "l_size": 20, "t_max": 40, "trials": 5, "seed": 3,
            "strategy": {"kind": "measure_resend", "mode": "random_fill"}}"#,
    )
    .unwrap();
    let o = qmoney(&["attack", "--config", p(&cfg), "--trials", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&o.stdout);
    assert_eq!(s["trials"], 7);
    assert_eq!(s["params"]["q"], 100);
    assert_eq!(s["strategy"], "measure_resend/random_fill");
}

#[test]
fn table_rows_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let o = qmoney(&["table", "--trials", "20000", "--format", "csv", "--out", p(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(code(&o), 0, "{text}");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,n,analytic,empirical,stderr,bound,pass"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    let noise14 = rows.iter().find(|r| r.starts_with("noise_tolerance,14,")).unwrap();
    let analytic: f64 = noise14.split(',').nth(2).unwrap().parse().unwrap();
    assert!((analytic - 0.2143).abs() < 1e-4);
    for q in ["p2,4,", "measure_resend_error,4,", "coherent_p_not11,14,", "measure_resend_joint_pass,4,"] {
        assert!(rows.iter().any(|r| r.starts_with(q)), "missing {q}");
    }
}

#[test]
fn fidelity_and_sweep() {
    let o = qmoney(&["fidelity", "--n", "3", "--restarts", "2"]);
    assert_eq!(code(&o), 0);
    let v = json(&o.stdout);
    let r = &v[0];
    let f = r["f_bar_star"].as_f64().unwrap();
    assert!(f >= r["lower"].as_f64().unwrap() - 1e-6 && f <= r["upper"].as_f64().unwrap() + 1e-6);
    assert!(r["restart_spread"].as_f64().unwrap() < 1e-5);

    let o = qmoney(&["sweep", "--n-min", "3", "--n-max", "6", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("n,p2,tuple_mass,e_min_asymptotic,e_min,"));
    assert_eq!(text.lines().count(), 5);
}
