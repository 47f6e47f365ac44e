use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmoney_core::adversary::{
    derive_seed, e_min_asymptotic, measure_resend_error_rate, measure_resend_pass_bound, optimal_collective_error_bound,
    security_bounds, AttackStrategy, ForgeryStats, SecurityBounds, TrialOutcome,
};
use qmoney_core::coherent::{
    coherent_bank_validate, coherent_local_test, conclusive_probability, p1, p_exactly_two, p_not11,
    prepare_coherent_note, MultiClickPolicy,
};
use qmoney_core::fidelity::{build_objective, maximize_fidelity, maximize_fidelity_complex, Solver, SolverOptions};
use qmoney_core::protocol::{
    bank_validate, local_test, prepare_note, BankSecret, SchemeParams, Verdict, VerdictReason,
    VerifierReport,
};
use qmoney_core::Error as CoreError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::campaign::{run_coherent_honest, run_forgery};
use crate::config::{describe, leaf, CommonArgs, Defaults, ExperimentConfig, Format, Scheme};
use crate::error::{CliError, Result};
use crate::files::{
    csv_bytes, emit, read_versioned, to_json, write_bytes, write_sensitive, NoteBody, NoteFile, ReportFile, SecretFile,
    NOTE_KIND, REPORT_KIND, SCHEMA_VERSION, SECRET_KIND,
};
use crate::table::{reproduction_table, ReproductionRow};

#[derive(Parser, Debug)]
#[command(name = "qmoney", version, about = "Quantum money simulator: notes, verification, attacks, bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mint a note; writes note.json and bank_secret.json into --out (a directory).
    Prepare(PrepareArgs),
    /// Verify a note against the Bank secret, or submit a stored report.
    Verify(VerifyArgs),
    /// Monte Carlo forgery campaign.
    Attack(AttackArgs),
    /// Reproduction table; exits 1 if any row fails.
    Table(TableArgs),
    /// Optimal 1 -> 2 cloning fidelity.
    Fidelity(FidelityArgs),
    /// Analytic quantities across n, optionally with a campaign per n.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "note-0")]
    pub serial: String,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub note: Option<PathBuf>,
    #[arg(long)]
    pub secret: PathBuf,
    /// Where to write the verifier report; defaults to report.json beside the note.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Send an existing report file to the Bank instead of running a local test.
    #[arg(long, conflicts_with = "note")]
    pub submit: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the per-trial CSV here.
    #[arg(long)]
    pub trials_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "kebab-case")]
pub enum SolverArg {
    FixedPoint,
    ProjectedGradient,
}

#[derive(Args, Debug)]
pub struct FidelityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Solve every n from --n up to this value.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long, value_enum, default_value = "fixed-point")]
    pub solver: SolverArg,
    /// Extra seeded random starts; the spread is reported.
    #[arg(long, default_value_t = 0)]
    pub restarts: u64,
    /// Also solve over complex Choi matrices.
    #[arg(long)]
    pub complex: bool,
    /// Write the optimal Choi matrix of the last n here.
    #[arg(long)]
    pub choi_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 3)]
    pub n_min: usize,
    #[arg(long, default_value_t = 16)]
    pub n_max: usize,
    /// Run a forgery campaign at every n (uses --strategy and --trials).
    #[arg(long)]
    pub empirical: bool,
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Prepare(a) => prepare(&a),
        Command::Verify(a) => verify_cmd(&a),
        Command::Attack(a) => attack(&a),
        Command::Table(a) => table(&a),
        Command::Fidelity(a) => fidelity(&a),
        Command::Sweep(a) => sweep(&a),
    }
}

fn prepare(args: &PrepareArgs) -> Result<u8> {
    let config = ExperimentConfig::resolve(&args.common, Defaults::default())?;
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if !dir.is_dir() {
        return Err(CliError::Io {
            path: dir,
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (secret, policy, body) = match config.scheme {
        Scheme::SinglePhoton => {
            let (secret, note) = prepare_note(&config.params, &mut rng)?;
            (secret, None, NoteBody::SinglePhoton { note })
        }
        Scheme::Coherent => {
            let (secret, note) = prepare_coherent_note(&config.params, &mut rng)?;
            (
                secret,
                Some(config.policy),
                NoteBody::Coherent {
                    policy: config.policy,
                    note,
                },
            )
        }
    };
    let note_path = dir.join("note.json");
    let secret_path = dir.join("bank_secret.json");
    write_bytes(&note_path, &to_json(&NoteFile::new(args.serial.clone(), config.params, body)))?;
    write_sensitive(&secret_path, &to_json(&SecretFile::new(args.serial.clone(), config.params, policy, secret)))?;
    eprintln!("wrote {} and {} (Bank-private)", note_path.display(), secret_path.display());
    Ok(0)
}

#[derive(Serialize)]
struct VerifyOutput {
    serial: String,
    bit: u8,
    reason: String,
    bank_contacted: bool,
    l_succ: Option<usize>,
    bank_count: usize,
}

fn print_verdict(out: &VerifyOutput) -> Result<u8> {
    emit(None, &to_json(out))?;
    Ok(if out.bit == 1 { 0 } else { 1 })
}

fn reject_output(serial: &str, reason: impl ToString, l_succ: Option<usize>, secret: &BankSecret) -> VerifyOutput {
    VerifyOutput {
        serial: serial.into(),
        bit: 0,
        reason: reason.to_string(),
        bank_contacted: false,
        l_succ,
        bank_count: secret.count(),
    }
}

/// Bank side: a malformed report is a rejection, not a crash.
fn bank_step(
    secret: &mut BankSecret,
    report: &VerifierReport,
    params: &SchemeParams,
    policy: Option<MultiClickPolicy>,
) -> Result<std::result::Result<Verdict, String>> {
    let verdict = match policy {
        None => bank_validate(secret, report, params),
        Some(p) => coherent_bank_validate(secret, report, params, p),
    };
    match verdict {
        Ok(v) => Ok(Ok(v)),
        Err(CoreError::ProtocolViolation(why)) => Ok(Err(format!("protocol-violation: {why}"))),
        Err(e) => Err(e.into()),
    }
}

fn verify_cmd(args: &VerifyArgs) -> Result<u8> {
    let mut secret_file: SecretFile = read_versioned(&args.secret, SECRET_KIND)?;
    let Some(note_path) = &args.note else {
        let Some(report_path) = &args.submit else {
            return Err(CliError::usage("verify needs --note or --submit"));
        };
        return submit(args, report_path, &mut secret_file);
    };
    let mut note_file: NoteFile = read_versioned(note_path, NOTE_KIND)?;
    if note_file.serial != secret_file.serial {
        return print_verdict(&reject_output(
            &note_file.serial,
            VerdictReason::UnknownSerial,
            None,
            &secret_file.secret,
        ));
    }
    let params = note_file.params;
    let config = ExperimentConfig::resolve(&args.common, Defaults::default())?;
    let session_seed = derive_seed(config.seed, note_file_register_weight(&note_file) as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(session_seed);
    let local = match &mut note_file.body {
        NoteBody::SinglePhoton { note } => local_test(note, &params, &mut rng),
        NoteBody::Coherent { policy, note } => coherent_local_test(note, &params, *policy, &mut rng),
    };
    let serial = note_file.serial.clone();
    let local = match local {
        Ok(l) => l,
        Err(CoreError::InsufficientCopies { .. }) => {
            return print_verdict(&reject_output(&serial, VerdictReason::NoteExhausted, None, &secret_file.secret));
        }
        Err(e) => return Err(e.into()),
    };
    write_bytes(note_path, &to_json(&note_file))?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| note_path.with_file_name("report.json"));
    write_bytes(&report_path, &to_json(&ReportFile::new(serial.clone(), &local.report)))?;
    if !local.accepted {
        return print_verdict(&reject_output(&serial, local.reason, Some(local.report.l_succ), &secret_file.secret));
    }
    let (bank_params, policy) = (secret_file.params, secret_file.policy);
    let verdict = bank_step(&mut secret_file.secret, &local.report, &bank_params, policy)?;
    write_sensitive(&args.secret, &to_json(&secret_file))?;
    print_verdict(&bank_output(&serial, verdict, local.report.l_succ, &secret_file.secret))
}

fn note_file_register_weight(file: &NoteFile) -> usize {
    match &file.body {
        NoteBody::SinglePhoton { note } => note.register().weight(),
        NoteBody::Coherent { note, .. } => note.register().weight(),
    }
}

fn bank_output(
    serial: &str,
    verdict: std::result::Result<Verdict, String>,
    l_succ: usize,
    secret: &BankSecret,
) -> VerifyOutput {
    let (bit, reason) = match verdict {
        Ok(v) => (v.bit(), v.reason().to_string()),
        Err(why) => (0, why),
    };
    VerifyOutput {
        serial: serial.into(),
        bit,
        reason,
        bank_contacted: true,
        l_succ: Some(l_succ),
        bank_count: secret.count(),
    }
}

fn submit(args: &VerifyArgs, report_path: &Path, secret_file: &mut SecretFile) -> Result<u8> {
    let report_file: ReportFile = read_versioned(report_path, REPORT_KIND)?;
    if report_file.serial != secret_file.serial {
        return print_verdict(&reject_output(
            &report_file.serial,
            VerdictReason::UnknownSerial,
            None,
            &secret_file.secret,
        ));
    }
    let (params, policy) = (secret_file.params, secret_file.policy);
    let verdict = match report_file.report() {
        Ok(report) => bank_step(&mut secret_file.secret, &report, &params, policy)?,
        Err(CliError::Core(CoreError::ProtocolViolation(why))) => Err(format!("protocol-violation: {why}")),
        Err(e) => return Err(e),
    };
    write_sensitive(&args.secret, &to_json(secret_file))?;
    print_verdict(&bank_output(&report_file.serial, verdict, report_file.l_succ, &secret_file.secret))
}

#[derive(Serialize)]
struct AttackBounds {
    /// `exp(-2 eps^2 p^2 |L|)` with `p` the conclusive probability.
    correctness_bound: f64,
    optimal_collective_error_bound: f64,
    e_min_asymptotic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    security: Option<SecurityBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measure_resend_pass_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measure_resend_error_rate: Option<f64>,
}

#[derive(Serialize)]
struct ForgeryRates {
    ver1_pass: f64,
    ver2_pass: f64,
    joint_pass: f64,
    per_copy_error: f64,
    ver1_unknown_wrong_per_copy: f64,
    ver2_unknown_wrong_per_copy: f64,
}

#[derive(Serialize)]
struct AttackSummary<S> {
    schema_version: u32,
    scheme: Scheme,
    params: SchemeParams,
    strategy: String,
    trials: u64,
    seed: u64,
    stats: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<ForgeryRates>,
    bounds: AttackBounds,
}

#[derive(Serialize)]
struct TrialRow {
    trial: u64,
    seed: u64,
    ver1_bit: u8,
    ver1_reason: String,
    ver2_bit: u8,
    ver2_reason: String,
    joint_pass: bool,
    ver1_measured: u64,
    ver1_conclusive: u64,
    ver1_wrong: u64,
    ver2_measured: u64,
    ver2_conclusive: u64,
    ver2_wrong: u64,
}

impl From<&TrialOutcome> for TrialRow {
    fn from(t: &TrialOutcome) -> Self {
        Self {
            trial: t.trial,
            seed: t.seed,
            ver1_bit: t.ver1.bit(),
            ver1_reason: t.ver1.reason().to_string(),
            ver2_bit: t.ver2.bit(),
            ver2_reason: t.ver2.reason().to_string(),
            joint_pass: t.joint_pass(),
            ver1_measured: t.ver1_copies.measured,
            ver1_conclusive: t.ver1_copies.conclusive,
            ver1_wrong: t.ver1_copies.wrong,
            ver2_measured: t.ver2_copies.measured,
            ver2_conclusive: t.ver2_copies.conclusive,
            ver2_wrong: t.ver2_copies.wrong,
        }
    }
}

#[derive(Serialize)]
struct CoherentRow {
    trial: u64,
    seed: u64,
    bit: u8,
    reason: String,
    l_succ: usize,
    conclusive_wrong: usize,
}

#[derive(Serialize)]
struct CoherentStats {
    trials: u64,
    passes: u64,
    pass_rate: f64,
    conclusive_wrong: u64,
}

fn attack_bounds(config: &ExperimentConfig, strategy: &AttackStrategy) -> Result<AttackBounds> {
    let params = &config.params;
    let p = match config.scheme {
        Scheme::SinglePhoton => params.p11(),
        Scheme::Coherent => conclusive_probability(params.n, config.policy),
    };
    let resend = match leaf(strategy) {
        AttackStrategy::MeasureResend { mode, generalized } => Some((*mode, *generalized)),
        _ => None,
    };
    Ok(AttackBounds {
        correctness_bound: (-2.0 * params.epsilon.powi(2) * p * p * params.l_size as f64).exp(),
        optimal_collective_error_bound: optimal_collective_error_bound(params.n),
        e_min_asymptotic: e_min_asymptotic(params.n),
        security: security_bounds(params).ok(),
        measure_resend_pass_bound: resend.map(|_| measure_resend_pass_bound(params.delta, 1.0 - params.p11(), params.l_size)),
        measure_resend_error_rate: match resend {
            Some((mode, generalized)) if params.n <= 12 => Some(measure_resend_error_rate(params.n, mode, generalized)?),
            _ => None,
        },
    })
}

fn attack(args: &AttackArgs) -> Result<u8> {
    let config = ExperimentConfig::resolve(&args.common, Defaults::default())?;
    let strategy = config.attack_strategy()?;
    let bounds = attack_bounds(&config, &strategy)?;
    let (summary, per_trial) = match config.scheme {
        Scheme::SinglePhoton => {
            let (outcomes, stats) = run_forgery(&strategy, &config.params, config.trials, config.seed, config.workers)?;
            let rows: Vec<TrialRow> = outcomes.iter().map(TrialRow::from).collect();
            let summary = to_json(&AttackSummary {
                schema_version: SCHEMA_VERSION,
                scheme: config.scheme,
                params: config.params,
                strategy: describe(&strategy),
                trials: config.trials,
                seed: config.seed,
                stats,
                rates: Some(rates(&stats)),
                bounds,
            });
            (summary, csv_bytes(&rows)?)
        }
        Scheme::Coherent => {
            let trials = run_coherent_honest(&config.params, config.policy, config.trials, config.seed, config.workers)?;
            let passes = trials.iter().filter(|t| t.verdict.is_accepted()).count() as u64;
            let stats = CoherentStats {
                trials: config.trials,
                passes,
                pass_rate: passes as f64 / config.trials as f64,
                conclusive_wrong: trials.iter().map(|t| t.conclusive_wrong as u64).sum(),
            };
            let rows: Vec<CoherentRow> = trials
                .iter()
                .map(|t| CoherentRow {
                    trial: t.trial,
                    seed: t.seed,
                    bit: t.verdict.bit(),
                    reason: t.verdict.reason().to_string(),
                    l_succ: t.l_succ,
                    conclusive_wrong: t.conclusive_wrong,
                })
                .collect();
            let summary = to_json(&AttackSummary {
                schema_version: SCHEMA_VERSION,
                scheme: config.scheme,
                params: config.params,
                strategy: describe(&strategy),
                trials: config.trials,
                seed: config.seed,
                stats,
                rates: None,
                bounds,
            });
            (summary, csv_bytes(&rows)?)
        }
    };
    if let Some(path) = &args.trials_out {
        write_bytes(path, &per_trial)?;
    }
    match config.format {
        Format::Json => emit(config.out.as_deref(), &summary)?,
        Format::Csv => emit(config.out.as_deref(), &per_trial)?,
    }
    Ok(0)
}

fn rates(stats: &ForgeryStats) -> ForgeryRates {
    ForgeryRates {
        ver1_pass: stats.ver1_pass_rate(),
        ver2_pass: stats.ver2_pass_rate(),
        joint_pass: stats.joint_pass_rate(),
        per_copy_error: stats.per_copy_error_rate(),
        ver1_unknown_wrong_per_copy: stats.ver1_unknown.wrong_per_copy(),
        ver2_unknown_wrong_per_copy: stats.ver2_unknown.wrong_per_copy(),
    }
}

#[derive(Serialize)]
struct TableOutput<'a> {
    schema_version: u32,
    samples: u64,
    seed: u64,
    rows: &'a [ReproductionRow],
}

fn table(args: &TableArgs) -> Result<u8> {
    let config = ExperimentConfig::resolve(
        &args.common,
        Defaults {
            trials: 100_000,
            ..Defaults::default()
        },
    )?;
    let rows = reproduction_table(config.trials, config.seed, config.workers)?;
    let bytes = match config.format {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => to_json(&TableOutput {
            schema_version: SCHEMA_VERSION,
            samples: config.trials,
            seed: config.seed,
            rows: &rows,
        }),
    };
    emit(config.out.as_deref(), &bytes)?;
    let failed: Vec<&ReproductionRow> = rows.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("row failed: {} n={}", r.quantity, r.n);
    }
    Ok(if failed.is_empty() { 0 } else { 1 })
}

#[derive(Serialize)]
struct FidelityReport {
    n: usize,
    f_bar_star: f64,
    /// `1/2 + 1/(2n)`, reached by the keep-and-mix map.
    lower: f64,
    /// `1/2 + 1/n`.
    upper: f64,
    dual_bound: f64,
    gap: f64,
    iterations: usize,
    converged: bool,
    restart_spread: Option<f64>,
    complex_f_bar_star: Option<f64>,
}

fn fidelity(args: &FidelityArgs) -> Result<u8> {
    let config = ExperimentConfig::resolve(
        &args.common,
        Defaults {
            n: 3,
            ..Defaults::default()
        },
    )?;
    let n_min = config.params.n;
    let n_max = args.n_max.unwrap_or(n_min).max(n_min);
    let solver = match args.solver {
        SolverArg::FixedPoint => Solver::FixedPoint,
        SolverArg::ProjectedGradient => Solver::ProjectedGradient,
    };
    let options = SolverOptions {
        solver,
        ..SolverOptions::default()
    };
    let mut reports = Vec::new();
    let mut last = None;
    for n in n_min..=n_max {
        let objective = build_objective(n).map_err(|e| CliError::usage(e.to_string()))?;
        let best = maximize_fidelity(&objective, &options)?;
        let restart_spread = if args.restarts > 0 {
            let (mut lo, mut hi) = (best.f_bar_star, best.f_bar_star);
            for r in 0..args.restarts {
                let seeded = SolverOptions {
                    seed: Some(derive_seed(config.seed, r)),
                    ..options
                };
                let f = maximize_fidelity(&objective, &seeded)?.f_bar_star;
                lo = lo.min(f);
                hi = hi.max(f);
            }
            Some(hi - lo)
        } else {
            None
        };
        let complex_f_bar_star = if args.complex {
            let seeded = SolverOptions {
                seed: Some(config.seed),
                ..options
            };
            Some(maximize_fidelity_complex(&objective, &seeded)?.f_bar_star)
        } else {
            None
        };
        reports.push(FidelityReport {
            n,
            f_bar_star: best.f_bar_star,
            lower: 0.5 + 0.5 / n as f64,
            upper: 1.0 - optimal_collective_error_bound(n),
            dual_bound: best.dual_bound,
            gap: best.gap,
            iterations: best.iterations,
            converged: best.converged,
            restart_spread,
            complex_f_bar_star,
        });
        last = Some(best.choi);
    }
    if let (Some(path), Some(choi)) = (&args.choi_out, &last) {
        write_bytes(path, &to_json(choi))?;
    }
    let bytes = match config.format {
        Format::Json => to_json(&reports),
        Format::Csv => csv_bytes(&reports)?,
    };
    emit(config.out.as_deref(), &bytes)?;
    Ok(0)
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    p2: f64,
    tuple_mass: f64,
    e_min_asymptotic: f64,
    e_min: Option<f64>,
    collective_error_bound: f64,
    forge_bound: Option<f64>,
    coherent_p1: f64,
    coherent_p_not11: f64,
    coherent_p_exactly_two: f64,
    joint_pass_rate: Option<f64>,
    per_copy_error: Option<f64>,
}

fn sweep(args: &SweepArgs) -> Result<u8> {
    let config = ExperimentConfig::resolve(
        &args.common,
        Defaults {
            q: 10_000,
            l_size: 1000,
            t_max: 2000,
            trials: 100,
            ..Defaults::default()
        },
    )?;
    if args.n_min > args.n_max {
        return Err(CliError::usage("--n-min exceeds --n-max"));
    }
    let mut rows = Vec::new();
    for n in args.n_min..=args.n_max {
        let params = SchemeParams::new(
            n,
            config.params.q,
            config.params.l_size,
            config.params.t_max,
            config.params.epsilon,
            config.params.delta,
        )
        .map_err(|e| CliError::usage(e.to_string()))?;
        let security = security_bounds(&params).ok();
        let (joint_pass_rate, per_copy_error) = if args.empirical {
            let per_n = ExperimentConfig {
                params,
                ..config.clone()
            };
            let strategy = per_n.attack_strategy()?;
            let (_, stats) = run_forgery(&strategy, &params, config.trials, derive_seed(config.seed, n as u64), config.workers)?;
            (Some(stats.joint_pass_rate()), Some(stats.per_copy_error_rate()))
        } else {
            (None, None)
        };
        let p11 = params.p11();
        rows.push(SweepRow {
            n,
            p2: 1.0 - p11,
            tuple_mass: p11 * 2.0 / (n * (n - 1)) as f64,
            e_min_asymptotic: e_min_asymptotic(n),
            e_min: security.map(|s| s.e_min),
            collective_error_bound: optimal_collective_error_bound(n),
            forge_bound: security.map(|s| s.forge_prob_bound),
            coherent_p1: p1(n),
            coherent_p_not11: p_not11(n),
            coherent_p_exactly_two: p_exactly_two(n),
            joint_pass_rate,
            per_copy_error,
        });
    }
    let bytes = match config.format {
        Format::Json => to_json(&rows),
        Format::Csv => csv_bytes(&rows)?,
    };
    emit(config.out.as_deref(), &bytes)?;
    Ok(0)
}
