//! Experiment configuration: a JSON file and command-line flags, flags
//! taking precedence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qmoney_core::adversary::{AttackStrategy, ClonerModel, ResendMode};
use qmoney_core::coherent::MultiClickPolicy;
use qmoney_core::fidelity::{build_objective, maximize_fidelity, SolverOptions};
use qmoney_core::protocol::SchemeParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    SinglePhoton,
    Coherent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Policy {
    RandomPair,
    ExactlyTwo,
}

impl From<Policy> for MultiClickPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::RandomPair => MultiClickPolicy::RandomPair,
            Policy::ExactlyTwo => MultiClickPolicy::ExactlyTwo,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long = "l-size")]
    pub l_size: Option<usize>,
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    /// Multi-click rule for the coherent scheme.
    #[arg(long, value_enum)]
    pub policy: Option<Policy>,
    /// honest, measure-resend, measure-resend-fill, measure-resend-generalized,
    /// keep-and-mix, maximally-mixed, optimal-cloner; prefix with register:,
    /// adaptive: or full: to add the protocol-level layers.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategySpec {
    Name(String),
    Full(AttackStrategy),
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scheme: Option<Scheme>,
    pub n: Option<usize>,
    pub q: Option<usize>,
    pub l_size: Option<usize>,
    pub t_max: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub policy: Option<Policy>,
    pub strategy: Option<StrategySpec>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Format {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }
}

/// Per-command fallbacks for fields neither the file nor the flags set.
#[derive(Clone, Copy, Debug)]
pub struct Defaults {
    pub n: usize,
    pub q: usize,
    pub l_size: usize,
    pub t_max: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            n: 4,
            q: 1000,
            l_size: 100,
            t_max: 200,
            epsilon: 0.2,
            delta: 0.2,
            trials: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub params: SchemeParams,
    pub policy: MultiClickPolicy,
    pub strategy: StrategySpec,
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs, defaults: Defaults) -> Result<Self> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let params = SchemeParams::new(
            args.n.or(file.n).unwrap_or(defaults.n),
            args.q.or(file.q).unwrap_or(defaults.q),
            args.l_size.or(file.l_size).unwrap_or(defaults.l_size),
            args.t_max.or(file.t_max).unwrap_or(defaults.t_max),
            args.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
            args.delta.or(file.delta).unwrap_or(defaults.delta),
        )
        .map_err(|e| CliError::usage(e.to_string()))?;
        let trials = args.trials.or(file.trials).unwrap_or(defaults.trials);
        if trials == 0 {
            return Err(CliError::usage("trials must be at least 1"));
        }
        if args.workers.or(file.workers) == Some(0) {
            return Err(CliError::usage("workers must be at least 1"));
        }
        let strategy = match (&args.strategy, file.strategy) {
            (Some(name), _) => StrategySpec::Name(name.clone()),
            (None, Some(spec)) => spec,
            (None, None) => StrategySpec::Name("honest".into()),
        };
        Ok(Self {
            scheme: args.scheme.or(file.scheme).unwrap_or_default(),
            params,
            policy: args.policy.or(file.policy).map(Into::into).unwrap_or_default(),
            strategy,
            trials,
            seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
            workers: args.workers.or(file.workers),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or_default(),
        })
    }

    /// The attack strategy, checked against the scheme and parameters.
    pub fn attack_strategy(&self) -> Result<AttackStrategy> {
        let strategy = match &self.strategy {
            StrategySpec::Name(name) => parse_strategy(name, self.params.n)?,
            StrategySpec::Full(s) => s.clone(),
        };
        if self.scheme == Scheme::Coherent && strategy != AttackStrategy::Honest {
            return Err(CliError::usage(format!(
                "strategy {} requires the single_photon scheme",
                describe(&strategy)
            )));
        }
        strategy
            .validate(&self.params)
            .map_err(|e| CliError::usage(e.to_string()))?;
        Ok(strategy)
    }
}

pub fn parse_strategy(name: &str, n: usize) -> Result<AttackStrategy> {
    if let Some(rest) = name.strip_prefix("full:") {
        return Ok(AttackStrategy::full(parse_strategy(rest, n)?));
    }
    if let Some(rest) = name.strip_prefix("adaptive:") {
        return Ok(AttackStrategy::adaptive(parse_strategy(rest, n)?));
    }
    if let Some(rest) = name.strip_prefix("register:") {
        return Ok(AttackStrategy::register_manipulation(parse_strategy(rest, n)?));
    }
    let resend = |mode, generalized| AttackStrategy::MeasureResend { mode, generalized };
    let cloner = |model| AttackStrategy::CollectiveCloner { model };
    Ok(match name {
        "honest" => AttackStrategy::Honest,
        "measure-resend" => resend(ResendMode::Projected, false),
        "measure-resend-fill" => resend(ResendMode::RandomFill, false),
        "measure-resend-generalized" => resend(ResendMode::Projected, true),
        "keep-and-mix" => cloner(ClonerModel::KeepAndMix),
        "maximally-mixed" => cloner(ClonerModel::MaximallyMixed),
        "optimal-cloner" => {
            let objective = build_objective(n).map_err(|e| CliError::usage(e.to_string()))?;
            let optimum = maximize_fidelity(&objective, &SolverOptions::default())?;
            cloner(ClonerModel::Channel(optimum.choi))
        }
        other => return Err(CliError::usage(format!("unknown strategy {other:?}"))),
    })
}

/// Short label, e.g. `adaptive(register_manipulation(measure_resend/projected))`.
pub fn describe(strategy: &AttackStrategy) -> String {
    match strategy {
        AttackStrategy::Honest => "honest".into(),
        AttackStrategy::MeasureResend { mode, generalized } => {
            let mode = match mode {
                ResendMode::Projected => "projected",
                ResendMode::RandomFill => "random_fill",
            };
            let suffix = if *generalized { "/generalized" } else { "" };
            format!("measure_resend/{mode}{suffix}")
        }
        AttackStrategy::CollectiveCloner { model } => match model {
            ClonerModel::KeepAndMix => "collective_cloner/keep_and_mix".into(),
            ClonerModel::MaximallyMixed => "collective_cloner/maximally_mixed".into(),
            ClonerModel::Channel(_) => "collective_cloner/channel".into(),
        },
        AttackStrategy::RegisterManipulation { inner } => format!("register_manipulation({})", describe(inner)),
        AttackStrategy::Adaptive { inner } => format!("adaptive({})", describe(inner)),
    }
}

/// The copy-level strategy under any protocol-level layers.
pub fn leaf(strategy: &AttackStrategy) -> &AttackStrategy {
    match strategy {
        AttackStrategy::RegisterManipulation { inner } | AttackStrategy::Adaptive { inner } => leaf(inner),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"n": 6, "q": 50, "l_size": 10, "t_max": 20, "seed": 9, "strategy": "keep-and-mix"}"#).unwrap();
        let args = CommonArgs {
            config: Some(path),
            n: Some(8),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(&args, Defaults::default()).unwrap();
        assert_eq!(c.params.n, 8);
        assert_eq!(c.params.q, 50);
        assert_eq!(c.seed, 9);
        assert_eq!(c.strategy, StrategySpec::Name("keep-and-mix".into()));
    }

    #[test]
    fn full_strategy_object_in_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"strategy": {"kind": "measure_resend", "mode": "random_fill"}}"#).unwrap();
        let args = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(&args, Defaults::default()).unwrap();
        assert_eq!(
            c.attack_strategy().unwrap(),
            AttackStrategy::MeasureResend {
                mode: ResendMode::RandomFill,
                generalized: false
            }
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let zero_q = CommonArgs {
            q: Some(0),
            ..Default::default()
        };
        assert!(matches!(
            ExperimentConfig::resolve(&zero_q, Defaults::default()),
            Err(CliError::Usage(_))
        ));
        let zero_trials = CommonArgs {
            trials: Some(0),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(&zero_trials, Defaults::default()).is_err());
        let coherent_cloner = CommonArgs {
            scheme: Some(Scheme::Coherent),
            strategy: Some("keep-and-mix".into()),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(&coherent_cloner, Defaults::default()).unwrap();
        assert!(c.attack_strategy().is_err());
        assert!(parse_strategy("nope", 4).is_err());
    }

    #[test]
    fn layered_names() {
        let s = parse_strategy("full:measure-resend", 4).unwrap();
        assert_eq!(s, AttackStrategy::full(AttackStrategy::measure_resend()));
        assert_eq!(describe(&s), "adaptive(register_manipulation(measure_resend/projected))");
        assert_eq!(leaf(&s), &AttackStrategy::measure_resend());
    }
}
