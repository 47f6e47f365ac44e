//! Parallel Monte Carlo campaigns. Trial `t` always runs on the seed
//! `derive_seed(master, t)` and aggregation only sums counts, so results do
//! not depend on the worker count.

use qmoney_core::adversary::{derive_seed, simulate_trial, AttackStrategy, ForgeryStats, TrialOutcome};
use qmoney_core::coherent::{coherent_bank_validate, coherent_local_test, prepare_coherent_note, MultiClickPolicy};
use qmoney_core::protocol::{SchemeParams, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Samples per RNG stream in [`count_samples`].
pub const CHUNK: u64 = 1000;

pub fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    builder.build().map_err(|e| CliError::usage(e.to_string()))
}

pub fn run_forgery(
    strategy: &AttackStrategy,
    params: &SchemeParams,
    trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<(Vec<TrialOutcome>, ForgeryStats)> {
    let outcomes = pool(workers)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| simulate_trial(strategy, params, seed, t))
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;
    let mut stats = ForgeryStats::default();
    for o in &outcomes {
        stats.record(o);
    }
    Ok((outcomes, stats))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoherentTrial {
    pub trial: u64,
    pub seed: u64,
    pub verdict: Verdict,
    pub l_succ: usize,
    pub conclusive_wrong: usize,
}

/// Honest end-to-end verification of fresh coherent notes.
pub fn run_coherent_honest(
    params: &SchemeParams,
    policy: MultiClickPolicy,
    trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<CoherentTrial>> {
    let trial = |t: u64| -> Result<CoherentTrial> {
        let s = derive_seed(seed, t);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let (mut secret, mut note) = prepare_coherent_note(params, &mut rng)?;
        let local = coherent_local_test(&mut note, params, policy, &mut rng)?;
        let conclusive_wrong = local
            .report
            .records
            .iter()
            .filter(|r| match (r.tuple, r.parity) {
                (Some(tp), Some(d)) => tp.parity_of(&secret.strings()[r.copy_index]) != d,
                _ => false,
            })
            .count();
        let verdict = if local.accepted {
            coherent_bank_validate(&mut secret, &local.report, params, policy)?
        } else {
            Verdict::reject(local.reason)
        };
        Ok(CoherentTrial {
            trial: t,
            seed: s,
            verdict,
            l_succ: local.report.l_succ,
            conclusive_wrong,
        })
    };
    pool(workers)?.install(|| (0..trials).into_par_iter().map(trial).collect())
}

/// Runs `samples` draws of `f` and sums the `K` counters it returns. Draws
/// are grouped into streams of [`CHUNK`], stream `c` seeded with
/// `derive_seed(seed, c)`.
pub fn count_samples<const K: usize, F>(samples: u64, seed: u64, workers: Option<usize>, f: F) -> Result<[u64; K]>
where
    F: Fn(&mut ChaCha8Rng) -> Result<[u64; K]> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partial = pool(workers)?.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c));
                let size = CHUNK.min(samples - c * CHUNK);
                let mut acc = [0u64; K];
                for _ in 0..size {
                    for (a, v) in acc.iter_mut().zip(f(&mut rng)?) {
                        *a += v;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut total = [0u64; K];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(total)
}
