//! Weak-coherent-state notes read out with one beam splitter and two
//! threshold detectors.
//!
//! Copy `j` is a train of `n` pulses with amplitudes `(-1)^{x_k} / sqrt n`.
//! At step `k` the verifier mixes pulse `k` with a local-oscillator pulse of
//! amplitude `1/sqrt n`; detector `D0` sees `(alpha_k + beta)/sqrt 2` and
//! `D1` sees `(beta - alpha_k)/sqrt 2`. Each detector clicks independently
//! with probability `1 - exp(-|amplitude|^2)`.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_mode_count, BitString};
use crate::matching::{SmOutcome, Tuple};
use crate::protocol::{
    bank_validate_with, run_local_test, BankSecret, LocalResult, Note, SchemeParams, Thresholds, Verdict, VerifierReport,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct CoherentNoteCopy {
    amplitudes: Vec<Complex64>,
}

impl CoherentNoteCopy {
    /// Arbitrary pulse amplitudes; no normalisation is imposed.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_mode_count(amplitudes.len())?;
        Ok(Self { amplitudes })
    }

    pub fn n(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

impl TryFrom<Vec<Complex64>> for CoherentNoteCopy {
    type Error = Error;

    fn try_from(value: Vec<Complex64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<CoherentNoteCopy> for Vec<Complex64> {
    fn from(value: CoherentNoteCopy) -> Self {
        value.amplitudes
    }
}

pub fn encode_coherent(x: &BitString) -> CoherentNoteCopy {
    let scale = 1.0 / libm::sqrt(x.len() as f64);
    CoherentNoteCopy {
        amplitudes: (0..x.len()).map(|k| Complex64::new(x.sign(k) * scale, 0.0)).collect(),
    }
}

/// One detector click.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Click {
    /// 1-based time step.
    pub step: usize,
    /// 0 for `D0`, 1 for `D1`.
    pub detector: u8,
}

/// Every click of one readout, in time order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClickRecord {
    pub clicks: Vec<Click>,
}

/// How a readout with more than two single-click steps is resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiClickPolicy {
    /// Keep a uniformly random pair of the single-click steps; the readout is
    /// inconclusive only with fewer than two single clicks.
    #[default]
    RandomPair,
    /// Conclusive only with exactly two single-click steps.
    ExactlyTwo,
}

/// Streaming readout: pulses are consumed in time order and only the click
/// record plus a two-slot reservoir are kept.
#[derive(Clone, Debug)]
pub struct CoherentDetector {
    n: usize,
    beta: f64,
    policy: MultiClickPolicy,
    step: usize,
    singles: usize,
    double_click: bool,
    kept: [Option<Click>; 2],
    record: ClickRecord,
}

impl CoherentDetector {
    pub fn new(n: usize, policy: MultiClickPolicy) -> Result<Self> {
        check_mode_count(n)?;
        Ok(Self {
            n,
            beta: 1.0 / libm::sqrt(n as f64),
            policy,
            step: 0,
            singles: 0,
            double_click: false,
            kept: [None, None],
            record: ClickRecord::default(),
        })
    }

    /// Interferes the next pulse with the local oscillator and samples both
    /// detectors.
    pub fn push<R: Rng + ?Sized>(&mut self, alpha: Complex64, rng: &mut R) -> Result<()> {
        if self.step == self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: self.n + 1,
            });
        }
        self.step += 1;
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let beta = Complex64::new(self.beta, 0.0);
        let d0 = ((alpha + beta) * h).norm_sqr();
        let d1 = ((beta - alpha) * h).norm_sqr();
        let c0 = rng.random::<f64>() < -libm::expm1(-d0);
        let c1 = rng.random::<f64>() < -libm::expm1(-d1);
        for (clicked, detector) in [(c0, 0u8), (c1, 1u8)] {
            if clicked {
                self.record.clicks.push(Click {
                    step: self.step,
                    detector,
                });
            }
        }
        match (c0, c1) {
            (true, true) => self.double_click = true,
            (true, false) | (false, true) => {
                let click = Click {
                    step: self.step,
                    detector: c1 as u8,
                };
                self.singles += 1;
                if self.singles <= 2 {
                    self.kept[self.singles - 1] = Some(click);
                } else if self.policy == MultiClickPolicy::RandomPair {
                    // reservoir sampling of a uniform 2-subset
                    let slot = rng.random_range(0..self.singles);
                    if slot < 2 {
                        self.kept[slot] = Some(click);
                    }
                }
            }
            (false, false) => {}
        }
        Ok(())
    }

    pub fn finish(self) -> Result<(ClickRecord, SmOutcome)> {
        if self.step != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: self.step,
            });
        }
        let conclusive = !self.double_click
            && match self.policy {
                MultiClickPolicy::RandomPair => self.singles >= 2,
                MultiClickPolicy::ExactlyTwo => self.singles == 2,
            };
        let outcome = match (conclusive, self.kept) {
            (true, [Some(a), Some(b)]) => {
                let (first, second) = if a.step < b.step { (a, b) } else { (b, a) };
                SmOutcome::Conclusive {
                    tuple: Tuple::new(first.step, second.step)?,
                    parity: first.detector ^ second.detector,
                }
            }
            _ => SmOutcome::Inconclusive,
        };
        Ok((self.record, outcome))
    }
}

pub fn run_sm_coherent<R: Rng + ?Sized>(
    copy: &CoherentNoteCopy,
    policy: MultiClickPolicy,
    rng: &mut R,
) -> Result<(ClickRecord, SmOutcome)> {
    let mut detector = CoherentDetector::new(copy.n(), policy)?;
    for &alpha in copy.amplitudes() {
        detector.push(alpha, rng)?;
    }
    detector.finish()
}

/// Single-click probability per step for an honest copy, `1 - exp(-2/n)`.
pub fn p1(n: usize) -> f64 {
    -libm::expm1(-2.0 / n as f64)
}

/// Probability of fewer than two single-click steps.
pub fn p_not11(n: usize) -> f64 {
    let p = p1(n);
    let nf = n as f64;
    libm::pow(1.0 - p, nf) + nf * p * libm::pow(1.0 - p, nf - 1.0)
}

/// Probability of exactly two single-click steps.
pub fn p_exactly_two(n: usize) -> f64 {
    let p = p1(n);
    let nf = n as f64;
    nf * (nf - 1.0) / 2.0 * p * p * libm::pow(1.0 - p, nf - 2.0)
}

/// Honest probability of a conclusive readout under `policy`.
pub fn conclusive_probability(n: usize, policy: MultiClickPolicy) -> f64 {
    match policy {
        MultiClickPolicy::RandomPair => 1.0 - p_not11(n),
        MultiClickPolicy::ExactlyTwo => p_exactly_two(n),
    }
}

pub fn coherent_thresholds(params: &SchemeParams, policy: MultiClickPolicy) -> Thresholds {
    Thresholds::from_expected(
        params.l_size as f64 * conclusive_probability(params.n, policy),
        params.epsilon,
        params.delta,
    )
}

pub type CoherentNote = Note<CoherentNoteCopy>;

pub fn prepare_coherent_note<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<(BankSecret, CoherentNote)> {
    params.validate()?;
    let strings = (0..params.q)
        .map(|_| BitString::random(params.n, rng))
        .collect::<Result<Vec<_>>>()?;
    let copies = strings.iter().map(encode_coherent).collect();
    Ok((BankSecret::new(strings), Note::new(copies)))
}

/// Local test of the coherent variant; there is no photon-count step.
pub fn coherent_local_test<R: Rng + ?Sized>(
    note: &mut CoherentNote,
    params: &SchemeParams,
    policy: MultiClickPolicy,
    rng: &mut R,
) -> Result<LocalResult> {
    params.validate()?;
    let thresholds = coherent_thresholds(params, policy);
    run_local_test(note, params, &thresholds, rng, |copy, rng| {
        if copy.n() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                actual: copy.n(),
            });
        }
        run_sm_coherent(copy, policy, rng).map(|(_, outcome)| Some(outcome))
    })
}

pub fn coherent_bank_validate(
    secret: &mut BankSecret,
    report: &VerifierReport,
    params: &SchemeParams,
    policy: MultiClickPolicy,
) -> Result<Verdict> {
    bank_validate_with(secret, report, params, &coherent_thresholds(params, policy))
}
