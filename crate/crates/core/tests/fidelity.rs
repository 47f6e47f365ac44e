mod common;

use qmoney_core::fidelity::*;
use qmoney_core::fock::{encode_note_state, BitString, SinglePhotonMixedState};
use qmoney_core::matching::wrong_parity_mass;
use qmoney_core::fock::{interfere_mixed, local_reference_state};

/// Literal `2^{-n} sum_x |x><x| (x) (|x><x| (x) I + I (x) |x><x|)/2` on
/// `out1 (x) out2 (x) in`.
fn objective_by_sum(n: usize) -> Vec<f64> {
    let d = n * n * n;
    let mut m = vec![0.0; d * d];
    let weight = 1.0 / (1u64 << n) as f64;
    for x in BitString::all(n).unwrap() {
        let v: Vec<f64> = encode_note_state(&x).amplitudes().iter().map(|a| a.re).collect();
        for r in 0..d {
            let (a, b, c) = (r / (n * n), (r / n) % n, r % n);
            for s in 0..d {
                let (a2, b2, c2) = (s / (n * n), (s / n) % n, s % n);
                let mut t = 0.0;
                if b == b2 {
                    t += v[a] * v[a2];
                }
                if a == a2 {
                    t += v[b] * v[b2];
                }
                m[r * d + s] += weight * 0.5 * t * v[c] * v[c2];
            }
        }
    }
    m
}

#[test]
fn closed_form_matches_literal_sum() {
    for n in 2..=5 {
        let obj = build_objective(n).unwrap();
        let oracle = objective_by_sum(n);
        let d = n * n * n;
        for r in 0..d {
            for s in 0..d {
                assert!((obj.matrix()[(r, s)] - oracle[r * d + s]).abs() < 1e-12, "n={n} ({r},{s})");
            }
        }
    }
}

#[test]
fn value_matches_string_average() {
    let n = 3;
    let obj = build_objective(n).unwrap();
    let opt = maximize_fidelity(&obj, &SolverOptions { seed: Some(4), ..Default::default() }).unwrap();
    for choi in [opt.choi, ChoiMatrix::keep_and_mix(n).unwrap(), ChoiMatrix::keep_and_mix(n).unwrap().symmetrized()] {
        let mut avg = 0.0;
        for x in BitString::all(n).unwrap() {
            let (f, g) = choi.fidelity_pair(&x).unwrap();
            avg += (f + g) / 2.0;
        }
        avg /= 8.0;
        assert!((avg - obj.value(&choi)).abs() < 1e-9);
    }
}

#[test]
fn solvers_agree_at_n3() {
    let obj = build_objective(3).unwrap();
    let fixed = maximize_fidelity(&obj, &SolverOptions::default()).unwrap();
    let pg = maximize_fidelity(
        &obj,
        &SolverOptions { solver: Solver::ProjectedGradient, max_iterations: 500, ..Default::default() },
    )
    .unwrap();
    assert!(fixed.converged && pg.converged);
    assert!((fixed.f_bar_star - pg.f_bar_star).abs() < 2e-6);
    let complex = maximize_fidelity_complex(&obj, &SolverOptions { seed: Some(9), ..Default::default() }).unwrap();
    assert!(complex.f_bar_star <= fixed.dual_bound + 1e-9);
    assert!((complex.f_bar_star - fixed.f_bar_star).abs() < 2e-6);
}

#[test]
fn optimum_is_feasible_and_monotone() {
    let mut last = f64::INFINITY;
    for n in 3..=5 {
        let opt = maximize_fidelity(&build_objective(n).unwrap(), &SolverOptions::default()).unwrap();
        assert!(opt.choi.min_eigenvalue() >= -PSD_TOLERANCE);
        assert!(opt.choi.tp_deviation() <= TP_TOLERANCE);
        assert!(opt.f_bar_star <= last);
        last = opt.f_bar_star;
    }
}

#[test]
fn optimal_marginals_respect_error_floor() {
    for n in 3..=5 {
        let opt = maximize_fidelity(&build_objective(n).unwrap(), &SolverOptions::default()).unwrap();
        let r = local_reference_state(n).unwrap();
        let mut total = 0.0;
        for x in BitString::all(n).unwrap() {
            let rho = SinglePhotonMixedState::from_pure(&encode_note_state(&x));
            let (eta, tau) = opt.choi.marginals(&rho).unwrap();
            total += wrong_parity_mass(&interfere_mixed(&eta, &r).unwrap(), &x).unwrap()
                + wrong_parity_mass(&interfere_mixed(&tau, &r).unwrap(), &x).unwrap();
        }
        let avg = total / (1u64 << n) as f64;
        assert!(avg >= 0.5 - 1.0 / n as f64 - 1e-3, "n={n} avg={avg}");
    }
}

#[test]
fn keep_and_mix_at_n2() {
    let choi = ChoiMatrix::keep_and_mix(2).unwrap();
    let obj = build_objective(2).unwrap();
    assert!((obj.value(&choi) - 0.75).abs() < 1e-12);
}
