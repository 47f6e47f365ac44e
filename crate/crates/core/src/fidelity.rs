//! Average cloning fidelity of 1 -> 2 channels restricted to the one-photon
//! sector of each verifier.
//!
//! A channel is stored as its Choi matrix `J` on `out1 (x) out2 (x) in`, all
//! three factors of dimension `n`, with row index `a n^2 + b n + c` for
//! Ver1 mode `a`, Ver2 mode `b` and input mode `c`. The channel acts as
//! `Phi(rho) = Tr_in[J (I (x) rho^T)]` and is trace preserving iff
//! `Tr_out J = I`.
//!
//! The average fidelity over uniformly random note strings is linear in `J`,
//! `F_bar = Tr(M J)`, so maximising it is a semidefinite program. Any
//! Hermitian `Y` with `I (x) Y >= M` certifies `F_bar <= Tr Y`; taking
//! `Y = lambda_max(M) I` gives the bound `n lambda_max(M)` reported as the
//! dual value.

use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_mode_count, encode_note_state, fidelity_with_note, BitString, SinglePhotonMixedState};

/// Largest `n` for which [`build_objective`] is accepted.
pub const MAX_OBJECTIVE_MODES: usize = 12;
/// Smallest eigenvalue tolerated in a Choi matrix.
pub const PSD_TOLERANCE: f64 = 1e-8;
/// Largest deviation of `Tr_out J` from the identity.
pub const TP_TOLERANCE: f64 = 1e-7;

#[inline]
fn dim(n: usize) -> usize {
    n * n * n
}

/// `Tr_out X` for `X` on `out (x) in` with input dimension `n`.
fn partial_trace_out<T: ComplexField<RealField = f64>>(x: &DMatrix<T>, n: usize) -> DMatrix<T> {
    let outs = x.nrows() / n;
    DMatrix::from_fn(n, n, |c, d| {
        let mut acc = T::zero();
        for o in 0..outs {
            acc += x[(o * n + c, o * n + d)].clone();
        }
        acc
    })
}

/// `(I_out (x) L) X (I_out (x) L)^dag`.
fn conjugate_input<T: ComplexField<RealField = f64>>(x: &DMatrix<T>, l: &DMatrix<T>, n: usize) -> DMatrix<T> {
    let outs = x.nrows() / n;
    let mut lift = DMatrix::<T>::zeros(x.nrows(), x.ncols());
    for o in 0..outs {
        lift.view_mut((o * n, o * n), (n, n)).copy_from(l);
    }
    &lift * x * lift.adjoint()
}

fn hermitize<T: ComplexField<RealField = f64>>(x: &DMatrix<T>) -> DMatrix<T> {
    (x + x.adjoint()) * T::from_real(0.5)
}

/// `X^{-1/2}` for Hermitian positive definite `X`.
fn inverse_sqrt<T: ComplexField<RealField = f64>>(x: &DMatrix<T>) -> Result<DMatrix<T>> {
    let eig = hermitize(x).symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if eig.eigenvalues.iter().any(|&v| !(v > max * 1e-14)) {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.eigenvalues.min(),
        });
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| T::from_real(1.0 / libm::sqrt(v))));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Rescales a positive definite `K` into a trace-preserving Choi matrix.
fn normalize_channel<T: ComplexField<RealField = f64>>(k: &DMatrix<T>, n: usize) -> Result<DMatrix<T>> {
    let l = inverse_sqrt(&partial_trace_out(k, n))?;
    Ok(hermitize(&conjugate_input(k, &l, n)))
}

fn psd_projection<T: ComplexField<RealField = f64>>(x: &DMatrix<T>) -> DMatrix<T> {
    let eig = hermitize(x).symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| T::from_real(v.max(0.0))));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Orthogonal projection onto `{X : Tr_out X = I}`.
fn affine_projection<T: ComplexField<RealField = f64>>(x: &DMatrix<T>, n: usize) -> DMatrix<T> {
    let outs = x.nrows() / n;
    let mut excess = partial_trace_out(x, n) - DMatrix::<T>::identity(n, n);
    excess *= T::from_real(1.0 / outs as f64);
    let mut y = x.clone();
    for o in 0..outs {
        let mut block = y.view_mut((o * n, o * n), (n, n));
        block -= &excess;
    }
    y
}

fn min_eigenvalue<T: ComplexField<RealField = f64>>(x: &DMatrix<T>) -> f64 {
    hermitize(x).symmetric_eigenvalues().min()
}

fn tp_deviation<T: ComplexField<RealField = f64>>(x: &DMatrix<T>, n: usize) -> f64 {
    (partial_trace_out(x, n) - DMatrix::<T>::identity(n, n))
        .iter()
        .map(|v| v.clone().modulus())
        .fold(0.0, f64::max)
}

/// Choi matrix of a 1 -> 2 channel on the one-photon sectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChoi", into = "RawChoi")]
pub struct ChoiMatrix {
    n: usize,
    j: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawChoi {
    n: usize,
    /// Row-major entries.
    entries: Vec<Complex64>,
}

impl TryFrom<RawChoi> for ChoiMatrix {
    type Error = Error;

    fn try_from(raw: RawChoi) -> Result<Self> {
        let d = dim(raw.n);
        if raw.entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: raw.entries.len(),
            });
        }
        ChoiMatrix::new(raw.n, DMatrix::from_row_slice(d, d, &raw.entries))
    }
}

impl From<ChoiMatrix> for RawChoi {
    fn from(c: ChoiMatrix) -> Self {
        let d = dim(c.n);
        let entries = (0..d * d).map(|i| c.j[(i / d, i % d)]).collect();
        RawChoi { n: c.n, entries }
    }
}

impl ChoiMatrix {
    pub fn new(n: usize, j: DMatrix<Complex64>) -> Result<Self> {
        check_mode_count(n)?;
        let d = dim(n);
        if j.nrows() != d || j.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: j.nrows(),
            });
        }
        let choi = Self { n, j };
        choi.validate()?;
        Ok(choi)
    }

    pub fn from_real(n: usize, j: &DMatrix<f64>) -> Result<Self> {
        Self::new(n, j.map(|v| Complex64::new(v, 0.0)))
    }

    /// Channel sending the input to Ver1 untouched and `I/n` to Ver2.
    pub fn keep_and_mix(n: usize) -> Result<Self> {
        check_mode_count(n)?;
        let nn = n * n;
        let mut j = DMatrix::zeros(dim(n), dim(n));
        for a in 0..n {
            for a2 in 0..n {
                for b in 0..n {
                    j[(a * nn + b * n + a, a2 * nn + b * n + a2)] = Complex64::new(1.0 / n as f64, 0.0);
                }
            }
        }
        Self::new(n, j)
    }

    /// Channel discarding the input and sending `I/n` to both verifiers.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_mode_count(n)?;
        let j = DMatrix::identity(dim(n), dim(n)) * Complex64::new(1.0 / (n * n) as f64, 0.0);
        Self::new(n, j)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.j
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.j)
    }

    /// Largest entry of `|Tr_out J - I|`.
    pub fn tp_deviation(&self) -> f64 {
        tp_deviation(&self.j, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        let deviation = (&self.j - self.j.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if deviation > PSD_TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
        let min_eigenvalue = self.min_eigenvalue();
        if min_eigenvalue < -PSD_TOLERANCE {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        let deviation = self.tp_deviation();
        if deviation > TP_TOLERANCE {
            return Err(Error::NotTracePreserving { deviation });
        }
        Ok(())
    }

    /// The channel with Ver1 and Ver2 exchanged.
    pub fn swap_outputs(&self) -> Self {
        let n = self.n;
        let nn = n * n;
        let perm = |i: usize| {
            let (a, b, c) = (i / nn, (i / n) % n, i % n);
            b * nn + a * n + c
        };
        let j = DMatrix::from_fn(dim(n), dim(n), |r, s| self.j[(perm(r), perm(s))]);
        Self { n, j }
    }

    /// Average of the channel and its output-swapped version.
    pub fn symmetrized(&self) -> Self {
        let j = (&self.j + self.swap_outputs().j) * Complex64::new(0.5, 0.0);
        Self { n: self.n, j }
    }

    /// Joint output `Phi(rho)` on `out1 (x) out2`, row index `a n + b`.
    pub fn apply(&self, rho: &SinglePhotonMixedState) -> Result<DMatrix<Complex64>> {
        let n = self.n;
        if rho.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: rho.n(),
            });
        }
        let nn = n * n;
        Ok(DMatrix::from_fn(nn, nn, |o, p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..n {
                for d in 0..n {
                    acc += self.j[(o * n + c, p * n + d)] * rho.entry(c, d);
                }
            }
            acc
        }))
    }

    /// Reduced states `(eta, tau)` received by Ver1 and Ver2.
    pub fn marginals(&self, rho: &SinglePhotonMixedState) -> Result<(SinglePhotonMixedState, SinglePhotonMixedState)> {
        let n = self.n;
        let out = self.apply(rho)?;
        let mut eta = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        let mut tau = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for a2 in 0..n {
                for b in 0..n {
                    eta[a * n + a2] += out[(a * n + b, a2 * n + b)];
                    tau[a * n + a2] += out[(b * n + a, b * n + a2)];
                }
            }
        }
        Ok((clean_marginal(n, eta), clean_marginal(n, tau)))
    }

    /// `(F_x, G_x)`: fidelity of each verifier's marginal with `|x>`.
    pub fn fidelity_pair(&self, x: &BitString) -> Result<(f64, f64)> {
        let rho = SinglePhotonMixedState::from_pure(&encode_note_state(x));
        let (eta, tau) = self.marginals(&rho)?;
        Ok((fidelity_with_note(&eta, x)?, fidelity_with_note(&tau, x)?))
    }
}

/// Hermitian part with unit trace; round-off from the solver stays below the
/// state tolerances only after this clean-up.
fn clean_marginal(n: usize, mut entries: Vec<Complex64>) -> SinglePhotonMixedState {
    let trace: f64 = (0..n).map(|k| entries[k * n + k].re).sum();
    for k in 0..n {
        for l in k..n {
            let v = (entries[k * n + l] + entries[l * n + k].conj()) * (0.5 / trace);
            entries[k * n + l] = v;
            entries[l * n + k] = v.conj();
        }
    }
    SinglePhotonMixedState::new_unchecked(n, entries)
}

/// `M` with `F_bar = Tr(M J)` for the string-averaged fidelity.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityObjective {
    n: usize,
    m: DMatrix<f64>,
}

/// Fourth moment `E[s_a s_b s_c s_d]` of independent uniform signs.
fn sign_moment(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let paired = (a == b && c == d) || (a == c && b == d) || (a == d && b == c);
    if paired {
        1.0
    } else {
        0.0
    }
}

/// `M = 2^{-n} sum_x |x><x|_in (x) (|x><x| (x) I + I (x) |x><x|) / 2`, laid
/// out on `out1 (x) out2 (x) in` and evaluated through the sign moments.
pub fn build_objective(n: usize) -> Result<FidelityObjective> {
    check_mode_count(n)?;
    if n > MAX_OBJECTIVE_MODES {
        return Err(Error::ModeCount {
            n,
            min: 2,
            max: MAX_OBJECTIVE_MODES,
        });
    }
    let nn = n * n;
    let scale = 0.5 / (nn as f64);
    let m = DMatrix::from_fn(dim(n), dim(n), |r, s| {
        let (a, b, c) = (r / nn, (r / n) % n, r % n);
        let (a2, b2, c2) = (s / nn, (s / n) % n, s % n);
        let mut v = 0.0;
        if b == b2 {
            v += sign_moment(a, a2, c, c2);
        }
        if a == a2 {
            v += sign_moment(b, b2, c, c2);
        }
        v * scale
    });
    Ok(FidelityObjective { n, m })
}

impl FidelityObjective {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `Re Tr(M J)`.
    pub fn value(&self, choi: &ChoiMatrix) -> f64 {
        self.value_of(&choi.j)
    }

    fn value_of<T: ComplexField<RealField = f64>>(&self, j: &DMatrix<T>) -> f64 {
        let d = dim(self.n);
        let mut acc = 0.0;
        for r in 0..d {
            for s in 0..d {
                let m = self.m[(r, s)];
                if m != 0.0 {
                    acc += m * j[(s, r)].clone().real();
                }
            }
        }
        acc
    }

    /// Upper bound `n lambda_max(M)` on every achievable `F_bar`.
    pub fn dual_bound(&self) -> f64 {
        self.n as f64 * self.m.symmetric_eigenvalues().max()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Iterates `J <- (I (x) L) M J M (I (x) L)` with `L = (Tr_out M J M)^{-1/2}`.
    FixedPoint,
    /// Gradient step followed by a Dykstra projection onto the channel set.
    ProjectedGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub solver: Solver,
    pub max_iterations: usize,
    /// Stop when the objective moved less than this over `stall_window` iterations.
    pub stall_tolerance: f64,
    pub stall_window: usize,
    /// Stop when the dual bound minus the objective drops below this.
    pub gap_tolerance: f64,
    /// Gradient step for [`Solver::ProjectedGradient`].
    pub step: f64,
    /// Random feasible starting point; `None` starts from `I / n^2`.
    pub seed: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            solver: Solver::FixedPoint,
            max_iterations: 20_000,
            stall_tolerance: 1e-7,
            stall_window: 50,
            gap_tolerance: 1e-6,
            step: 1.0,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityOptimum {
    pub n: usize,
    pub f_bar_star: f64,
    pub dual_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub choi: ChoiMatrix,
}

fn random_start<T, R>(n: usize, rng: &mut R) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Imaginary,
    R: Rng + ?Sized,
{
    let d = dim(n);
    let mut b = DMatrix::<T>::zeros(d, d);
    for v in b.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = T::from_real(re) + T::from_real(im) * T::imaginary_unit();
    }
    normalize_channel(&(&b * b.adjoint()), n)
}

/// `i` for complex scalars, `0` for real ones.
trait Imaginary {
    fn imaginary_unit() -> Self;
}

impl Imaginary for f64 {
    fn imaginary_unit() -> Self {
        0.0
    }
}

impl Imaginary for Complex64 {
    fn imaginary_unit() -> Self {
        Complex64::new(0.0, 1.0)
    }
}

fn dykstra_project<T: ComplexField<RealField = f64>>(y: &DMatrix<T>, n: usize) -> Result<DMatrix<T>> {
    let mut x = y.clone();
    let mut p = DMatrix::<T>::zeros(y.nrows(), y.ncols());
    let mut q = p.clone();
    for _ in 0..500 {
        let a = affine_projection(&(&x + &p), n);
        p = &x + &p - &a;
        let b = psd_projection(&(&a + &q));
        q = &a + &q - &b;
        let moved = (&b - &x).norm();
        x = b;
        if moved < 1e-12 {
            break;
        }
    }
    // exact feasibility; the correction is tiny once Dykstra has settled
    let d = x.nrows();
    normalize_channel(&(x + DMatrix::<T>::identity(d, d) * T::from_real(1e-13)), n)
}

fn optimize<T: ComplexField<RealField = f64>>(
    objective: &FidelityObjective,
    options: &SolverOptions,
    mut j: DMatrix<T>,
) -> Result<(DMatrix<T>, f64, usize, bool)> {
    let n = objective.n;
    let m = objective.m.map(T::from_real);
    let dual = objective.dual_bound();
    let mut history: Vec<f64> = Vec::with_capacity(options.max_iterations + 1);
    let mut value = objective.value_of(&j);
    history.push(value);
    let mut best = (j.clone(), value);
    for it in 1..=options.max_iterations {
        j = match options.solver {
            Solver::FixedPoint => {
                let x = &m * &j * &m;
                normalize_channel(&x, n)?
            }
            Solver::ProjectedGradient => {
                let y = &j + &m * T::from_real(options.step);
                dykstra_project(&y, n)?
            }
        };
        value = objective.value_of(&j);
        history.push(value);
        if value > best.1 {
            best = (j.clone(), value);
        }
        if dual - best.1 < options.gap_tolerance {
            return Ok((best.0, best.1, it, true));
        }
        if it >= options.stall_window {
            let past = history[it - options.stall_window];
            if (value - past).abs() < options.stall_tolerance {
                return Ok((best.0, best.1, it, true));
            }
        }
    }
    Ok((best.0, best.1, options.max_iterations, false))
}

fn finish(objective: &FidelityObjective, j: DMatrix<Complex64>, value: f64, iterations: usize, converged: bool) -> Result<FidelityOptimum> {
    let dual_bound = objective.dual_bound();
    Ok(FidelityOptimum {
        n: objective.n,
        f_bar_star: value,
        dual_bound,
        gap: dual_bound - value,
        iterations,
        converged,
        choi: ChoiMatrix::new(objective.n, j)?,
    })
}

/// Maximises `Tr(M J)` over real symmetric Choi matrices.
pub fn maximize_fidelity(objective: &FidelityObjective, options: &SolverOptions) -> Result<FidelityOptimum> {
    use rand::SeedableRng;
    let n = objective.n;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(options.seed.unwrap_or(0));
    let start = match options.seed {
        Some(_) => random_start::<f64, _>(n, &mut rng)?,
        None => DMatrix::identity(dim(n), dim(n)) / (n * n) as f64,
    };
    let (j, value, iterations, converged) = optimize(objective, options, start)?;
    finish(objective, j.map(|v| Complex64::new(v, 0.0)), value, iterations, converged)
}

/// Same optimisation over complex Hermitian Choi matrices, from a random
/// complex starting point.
pub fn maximize_fidelity_complex(objective: &FidelityObjective, options: &SolverOptions) -> Result<FidelityOptimum> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(options.seed.unwrap_or(0));
    let start = random_start::<Complex64, _>(objective.n, &mut rng)?;
    let (j, value, iterations, converged) = optimize(objective, options, start)?;
    finish(objective, j, value, iterations, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_trace_and_symmetry() {
        for n in 2..=5 {
            let obj = build_objective(n).unwrap();
            assert!((obj.matrix().trace() - n as f64).abs() < 1e-12);
            assert!((obj.matrix() - obj.matrix().transpose()).amax() < 1e-15);
        }
        assert!(build_objective(13).is_err());
    }

    #[test]
    fn trivial_channels() {
        for n in 2..=5 {
            let obj = build_objective(n).unwrap();
            let keep = ChoiMatrix::keep_and_mix(n).unwrap();
            let expect = 0.5 + 0.5 / n as f64;
            assert!((obj.value(&keep) - expect).abs() < 1e-12);
            let mixed = ChoiMatrix::maximally_mixed(n).unwrap();
            assert!((obj.value(&mixed) - 1.0 / n as f64).abs() < 1e-12);
            let x = BitString::zeros(n).unwrap().with_bit(0, true);
            let (f, g) = keep.fidelity_pair(&x).unwrap();
            assert!((f - 1.0).abs() < 1e-12 && (g - 1.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_and_symmetrize() {
        let keep = ChoiMatrix::keep_and_mix(3).unwrap();
        let swapped = keep.swap_outputs();
        swapped.validate().unwrap();
        let x: BitString = "011".parse().unwrap();
        let (f, g) = swapped.fidelity_pair(&x).unwrap();
        assert!((g - 1.0).abs() < 1e-12 && (f - 1.0 / 3.0).abs() < 1e-12);
        let sym = keep.symmetrized();
        let (f, g) = sym.fidelity_pair(&x).unwrap();
        assert!((f - g).abs() < 1e-12);
    }

    #[test]
    fn invalid_choi_rejected() {
        let bad = DMatrix::<f64>::identity(8, 8);
        assert!(matches!(ChoiMatrix::from_real(2, &bad), Err(Error::NotTracePreserving { .. })));
        let mut neg = DMatrix::<f64>::identity(8, 8) / 4.0;
        neg[(0, 0)] = -0.25;
        neg[(1, 1)] = 0.75;
        assert!(ChoiMatrix::from_real(2, &neg).is_err());
    }

    #[test]
    fn n2_is_perfectly_cloneable() {
        let obj = build_objective(2).unwrap();
        let opt = maximize_fidelity(&obj, &SolverOptions::default()).unwrap();
        assert!((opt.f_bar_star - 1.0).abs() < 1e-6, "{}", opt.f_bar_star);
    }

    #[test]
    fn random_start_is_feasible() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let j = random_start::<Complex64, _>(3, &mut rng).unwrap();
        let choi = ChoiMatrix::new(3, j).unwrap();
        assert!(choi.tp_deviation() < 1e-10);
    }
}
