//! The reproduction table: analytic values from the core formulas next to
//! Monte Carlo estimates.

use qmoney_core::adversary::{
    default_delta, e_min_asymptotic, forge_probability_bound, measure_resend, measure_resend_error_rate,
    measure_resend_pass_bound, AttackStrategy, ResendMode,
};
use qmoney_core::coherent::{encode_coherent, p_not11, run_sm_coherent, MultiClickPolicy};
use qmoney_core::fidelity::build_objective;
use qmoney_core::fock::{encode_note_state, BitString};
use qmoney_core::matching::{run_sm, tuple_set, SmOutcome, Tuple};
use qmoney_core::protocol::{prepare_note, verify, SchemeParams};
use serde::Serialize;

use crate::campaign::{count_samples, run_forgery};
use crate::error::Result;

/// Mode counts covered by the table.
pub const TABLE_N: [usize; 3] = [4, 8, 14];
/// Absolute tolerance for rows whose empirical value is itself exact.
pub const NUMERIC_TOL: f64 = 1e-9;
/// Largest `n` whose fidelity objective is diagonalised for the table.
pub const DUAL_BOUND_MAX_N: usize = 8;

/// One line of the table. CSV columns: quantity,n,analytic,empirical,stderr,bound,pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproductionRow {
    pub quantity: String,
    pub n: usize,
    pub analytic: f64,
    pub empirical: Option<f64>,
    pub stderr: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
}

impl ReproductionRow {
    /// Passes when `|empirical - analytic| <= 4 stderr`, or within
    /// [`NUMERIC_TOL`] for exact estimates.
    pub fn compare(quantity: &str, n: usize, analytic: f64, empirical: f64, stderr: f64) -> Self {
        let pass = (empirical - analytic).abs() <= (4.0 * stderr).max(NUMERIC_TOL);
        Self {
            quantity: quantity.into(),
            n,
            analytic,
            empirical: Some(empirical),
            stderr: Some(stderr),
            bound: None,
            pass,
        }
    }

    /// Passes when `empirical <= bound`.
    pub fn bounded(quantity: &str, n: usize, analytic: f64, empirical: f64, stderr: f64, bound: f64) -> Self {
        Self {
            quantity: quantity.into(),
            n,
            analytic,
            empirical: Some(empirical),
            stderr: Some(stderr),
            bound: Some(bound),
            pass: empirical <= bound,
        }
    }

    /// No estimate to compare against; passes when the value is finite.
    pub fn analytic(quantity: &str, n: usize, analytic: f64) -> Self {
        Self {
            quantity: quantity.into(),
            n,
            analytic,
            empirical: None,
            stderr: None,
            bound: None,
            pass: analytic.is_finite(),
        }
    }
}

fn rate(hits: u64, total: u64) -> (f64, f64) {
    if total == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

fn honest_rows(n: usize, samples: u64, seed: u64, workers: Option<usize>, rows: &mut Vec<ReproductionRow>) -> Result<()> {
    let params = SchemeParams::new(n, 100, 100, 100, 0.2, 0.2)?;
    let p11 = params.p11();
    let first = Tuple::new(1, 2)?;
    // inconclusive, tuple (1, 2), wrong
    let [inc, first_hits, wrong] = count_samples(samples, seed, workers, |rng| {
        let x = BitString::random(n, rng)?;
        let out = run_sm(&encode_note_state(&x), rng)?;
        Ok([
            !out.is_conclusive() as u64,
            (out.tuple() == Some(first)) as u64,
            (out.is_wrong_for(&x) == Some(true)) as u64,
        ])
    })?;
    let (p, se) = rate(inc, samples);
    rows.push(ReproductionRow::compare("p2", n, 1.0 - p11, p, se));
    let (p, se) = rate(first_hits, samples);
    rows.push(ReproductionRow::compare("tuple_mass", n, p11 / tuple_set(n)?.len() as f64, p, se));
    let (p, se) = rate(wrong, samples - inc);
    rows.push(ReproductionRow::bounded("honest_parity_error", n, 0.0, p, se, 0.0));

    let runs = (samples / 10).max(1);
    let [rejected] = count_samples(runs, seed ^ 1, workers, |rng| {
        let (mut secret, mut note) = prepare_note(&params, rng)?;
        Ok([!verify(&mut note, &mut secret, &params, rng)?.verdict.is_accepted() as u64])
    })?;
    let (p, se) = rate(rejected, runs);
    let bound = (-2.0 * params.epsilon.powi(2) * p11.powi(2) * params.l_size as f64).exp();
    rows.push(ReproductionRow::bounded("honest_reject", n, bound, p, se, bound));
    Ok(())
}

fn coherent_rows(n: usize, samples: u64, seed: u64, workers: Option<usize>, rows: &mut Vec<ReproductionRow>) -> Result<()> {
    let [inc, wrong] = count_samples(samples, seed, workers, |rng| {
        let x = BitString::random(n, rng)?;
        let (_, out) = run_sm_coherent(&encode_coherent(&x), MultiClickPolicy::RandomPair, rng)?;
        Ok([
            (out == SmOutcome::Inconclusive) as u64,
            (out.is_wrong_for(&x) == Some(true)) as u64,
        ])
    })?;
    let (p, se) = rate(inc, samples);
    rows.push(ReproductionRow::compare("coherent_p_not11", n, p_not11(n), p, se));
    let (p, se) = rate(wrong, samples - inc);
    rows.push(ReproductionRow::bounded("coherent_parity_error", n, 0.0, p, se, 0.0));
    Ok(())
}

fn bound_rows(n: usize, rows: &mut Vec<ReproductionRow>) -> Result<()> {
    let e = e_min_asymptotic(n);
    if n <= DUAL_BOUND_MAX_N {
        let dual = build_objective(n)?.dual_bound();
        rows.push(ReproductionRow::compare("noise_tolerance", n, e, (1.0 - dual) / 2.0, 0.0));
    } else {
        rows.push(ReproductionRow::analytic("noise_tolerance", n, e));
    }
    let base = SchemeParams::new(n, 10_000, 1000, 2000, 0.2, 0.1)?;
    let params = SchemeParams {
        delta: default_delta(&base)?,
        ..base
    };
    rows.push(ReproductionRow::analytic("forge_bound", n, forge_probability_bound(&params)));
    Ok(())
}

fn measure_resend_rows(samples: u64, seed: u64, workers: Option<usize>, rows: &mut Vec<ReproductionRow>) -> Result<()> {
    let n = 4;
    let params = SchemeParams::new(n, 2000, 1000, 2000, 0.2, 1.0 / 6.0)?;
    // measured, conclusive, wrong
    let [measured, conclusive, wrong] = count_samples(samples, seed, workers, |rng| {
        let x = BitString::random(n, rng)?;
        let sent = measure_resend(&x, ResendMode::Projected, false, rng)?;
        let out = run_sm(&sent.state, rng)?;
        Ok([1, out.is_conclusive() as u64, (out.is_wrong_for(&x) == Some(true)) as u64])
    })?;
    let (p, se) = rate(measured - conclusive, measured);
    rows.push(ReproductionRow::compare("measure_resend_inconclusive", n, 1.0 - params.p11(), p, se));
    let (p, se) = rate(wrong, conclusive);
    let analytic = measure_resend_error_rate(n, ResendMode::Projected, false)?;
    rows.push(ReproductionRow::compare("measure_resend_error", n, analytic, p, se));

    let trials = (samples / 1000).max(10);
    let (_, stats) = run_forgery(&AttackStrategy::measure_resend(), &params, trials, seed ^ 2, workers)?;
    let bound = measure_resend_pass_bound(params.delta, 1.0 - params.p11(), params.l_size);
    let (p, se) = rate(stats.joint_passes, stats.trials);
    rows.push(ReproductionRow::bounded("measure_resend_joint_pass", n, bound, p, se, bound));
    Ok(())
}

/// Builds every row. `samples` is the per-quantity Monte Carlo size.
pub fn reproduction_table(samples: u64, seed: u64, workers: Option<usize>) -> Result<Vec<ReproductionRow>> {
    let mut rows = Vec::new();
    for (i, &n) in TABLE_N.iter().enumerate() {
        let s = seed.wrapping_add(16 * i as u64);
        honest_rows(n, samples, s, workers, &mut rows)?;
        coherent_rows(n, samples, s ^ 4, workers, &mut rows)?;
        bound_rows(n, &mut rows)?;
    }
    measure_resend_rows(samples, seed ^ 8, workers, &mut rows)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_rules() {
        assert!(ReproductionRow::compare("a", 4, 0.25, 0.26, 0.003).pass);
        assert!(!ReproductionRow::compare("a", 4, 0.25, 0.27, 0.003).pass);
        assert!(ReproductionRow::compare("a", 4, 0.25, 0.25 + 1e-12, 0.0).pass);
        assert!(ReproductionRow::bounded("b", 4, 1e-3, 0.0, 0.0, 1e-3).pass);
        assert!(!ReproductionRow::bounded("b", 4, 1e-3, 0.01, 0.0, 1e-3).pass);
        assert!(!ReproductionRow::analytic("c", 4, f64::NAN).pass);
    }
}
