//! Test-only oracles and random state generators.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use qmoney_core::fock::{DetectorEvent, OutcomeDistribution, Port, SinglePhotonMixedState, SinglePhotonState};
use rand::Rng;
use rand_distr::StandardNormal;

/// Output modes are numbered `2k` (C port of mode k) and `2k + 1` (D port),
/// k 0-based.
pub type FockKey = (usize, usize);

/// Two-photon output distribution obtained by expanding
/// `(sum_k a_k A_k^dag)(sum_l b_l B_l^dag)|0>` with
/// `A_k^dag -> (c_k^dag + d_k^dag)/sqrt 2` and `B_l^dag -> (c_l^dag - d_l^dag)/sqrt 2`
/// term by term over creation-operator products.
pub fn fock_expansion(a: &[Complex64], b: &[Complex64]) -> BTreeMap<FockKey, f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut coef: BTreeMap<FockKey, Complex64> = BTreeMap::new();
    for (k, &ak) in a.iter().enumerate() {
        let holder = [(2 * k, h), (2 * k + 1, h)];
        for (l, &bl) in b.iter().enumerate() {
            let reference = [(2 * l, h), (2 * l + 1, -h)];
            for &(m1, s1) in &holder {
                for &(m2, s2) in &reference {
                    let key = (m1.min(m2), m1.max(m2));
                    *coef.entry(key).or_default() += ak * bl * (s1 * s2);
                }
            }
        }
    }
    coef.into_iter()
        .map(|((m1, m2), c)| {
            // (c^dag)^2 |0> = sqrt 2 |2>
            let p = if m1 == m2 { 2.0 * c.norm_sqr() } else { c.norm_sqr() };
            ((m1, m2), p)
        })
        .collect()
}

fn port(m: usize) -> Port {
    if m.is_multiple_of(2) {
        Port::C
    } else {
        Port::D
    }
}

/// Maps an oracle key to a detector event; `None` for one photon in each
/// port of the same mode, which must carry zero probability.
pub fn key_event(key: FockKey) -> Option<DetectorEvent> {
    let (m1, m2) = key;
    if m1 == m2 {
        Some(DetectorEvent::TwoSameMode { port: port(m1), mode: m1 / 2 + 1 })
    } else if m1 / 2 == m2 / 2 {
        None
    } else {
        Some(DetectorEvent::distinct(m1 / 2 + 1, port(m1), m2 / 2 + 1, port(m2)).unwrap())
    }
}

/// Largest entry-wise deviation between `dist` and the oracle probabilities;
/// oracle mass on impossible keys counts as deviation.
pub fn max_deviation(dist: &OutcomeDistribution, oracle: &BTreeMap<FockKey, f64>) -> f64 {
    let mut by_event: BTreeMap<DetectorEvent, f64> = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for (&key, &p) in oracle {
        match key_event(key) {
            Some(e) => *by_event.entry(e).or_default() += p,
            None => worst = worst.max(p),
        }
    }
    for (e, p) in dist.iter() {
        let q = by_event.remove(&e).unwrap_or(0.0);
        worst = worst.max((p - q).abs());
    }
    for (_, q) in by_event {
        worst = worst.max(q);
    }
    worst
}

/// Oracle distribution of a mixture, as the weighted sum of pure oracles.
pub fn mixture_expansion(components: &[(f64, SinglePhotonState)], b: &[Complex64]) -> BTreeMap<FockKey, f64> {
    let mut total: BTreeMap<FockKey, f64> = BTreeMap::new();
    for (w, s) in components {
        for (k, p) in fock_expansion(s.amplitudes(), b) {
            *total.entry(k).or_default() += w * p;
        }
    }
    total
}

pub fn random_pure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SinglePhotonState {
    let amps = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    SinglePhotonState::normalized(amps).unwrap()
}

pub fn random_mixture<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<(f64, SinglePhotonState)>, SinglePhotonMixedState) {
    let parts = rng.random_range(1..=n + 1);
    let raw: Vec<f64> = (0..parts).map(|_| rng.random::<f64>() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    let components: Vec<(f64, SinglePhotonState)> = raw.iter().map(|w| (w / sum, random_pure(n, rng))).collect();
    let state = SinglePhotonMixedState::mixture(&components).unwrap();
    (components, state)
}

/// `<x|A|x>` computed directly from the sign vector.
pub fn direct_fidelity(a: &SinglePhotonMixedState, x: &qmoney_core::fock::BitString) -> f64 {
    let n = a.n();
    let s: Vec<f64> = (0..n).map(|k| if x.bit(k) { -1.0 } else { 1.0 }).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            acc += a.entry(k, l) * (s[k] * s[l]);
        }
    }
    acc.re / n as f64
}

/// Half-width of a 4-sigma binomial interval.
pub fn four_sigma(p: f64, trials: u64) -> f64 {
    4.0 * (p * (1.0 - p) / trials as f64).sqrt()
}
