//! Forging strategies against the mini-scheme and the analytic bounds they
//! are measured against.
//!
//! In the adversary formulas `T` counts Bank contacts; with the protocol's
//! copy budget `t_max` this is `A = ceil(t_max / |L|)`.
//! [`SchemeParams::max_bank_contacts`] gives `A`.
//!
//! A forgery runs in up to three layers:
//!
//! * `Adaptive` spends `A - 2` contacts on auxiliary verifications of the
//!   original note and, in the worst case for the Bank, learns every copy
//!   they consumed. Those positions are re-prepared perfectly in both notes.
//! * `RegisterManipulation` marks `(A - 1)|L|` positions used in one note
//!   and sends the genuine copies there to the other verifier.
//! * A copy-level strategy handles every remaining copy.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::ChoiMatrix;
use crate::fock::{
    encode_note_state, interfere_pure, local_reference_state, BitString, SinglePhotonMixedState, SinglePhotonState,
};
use crate::matching::{wrong_parity_mass, SmOutcome, Tuple};
use crate::protocol::{
    prepare_note, select_unused, verify, BankSecret, Note, NoteCopy, Register, SchemeParams, Session, Verdict,
};

/// What the measure-and-resend adversary sends after learning one parity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResendMode {
    /// The post-measurement state `(|1>_k +- |1>_l)/sqrt 2`.
    #[default]
    Projected,
    /// A fresh `|r>` with `r_k XOR r_l` equal to the learned parity and every
    /// other bit uniform.
    RandomFill,
}

/// Per-copy 1 -> 2 cloning map used by the collective attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClonerModel {
    /// Original to Ver1, `I/n` to Ver2.
    KeepAndMix,
    /// `I/n` to both.
    MaximallyMixed,
    /// An arbitrary channel given by its Choi matrix.
    Channel(ChoiMatrix),
}

impl ClonerModel {
    /// `(eta, tau)` for one input copy.
    pub fn split(&self, rho: &SinglePhotonMixedState) -> Result<(SinglePhotonMixedState, SinglePhotonMixedState)> {
        match self {
            ClonerModel::KeepAndMix => Ok((rho.clone(), SinglePhotonMixedState::maximally_mixed(rho.n())?)),
            ClonerModel::MaximallyMixed => {
                let mixed = SinglePhotonMixedState::maximally_mixed(rho.n())?;
                Ok((mixed.clone(), mixed))
            }
            ClonerModel::Channel(choi) => choi.marginals(rho),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackStrategy {
    /// Note 1 is the original, note 2 is built from fresh random strings.
    Honest,
    MeasureResend {
        #[serde(default)]
        mode: ResendMode,
        /// Allow any even `n` with the mode pairs `(2i-1, 2i)`.
        #[serde(default)]
        generalized: bool,
    },
    CollectiveCloner { model: ClonerModel },
    RegisterManipulation { inner: Box<AttackStrategy> },
    Adaptive { inner: Box<AttackStrategy> },
}

impl AttackStrategy {
    pub fn measure_resend() -> Self {
        AttackStrategy::MeasureResend {
            mode: ResendMode::Projected,
            generalized: false,
        }
    }

    pub fn register_manipulation(inner: AttackStrategy) -> Self {
        AttackStrategy::RegisterManipulation { inner: Box::new(inner) }
    }

    pub fn adaptive(inner: AttackStrategy) -> Self {
        AttackStrategy::Adaptive { inner: Box::new(inner) }
    }

    /// The combined worst case: auxiliary verifications, register
    /// manipulation, then `leaf` on the unknown copies.
    pub fn full(leaf: AttackStrategy) -> Self {
        Self::adaptive(Self::register_manipulation(leaf))
    }

    fn is_copy_level(&self) -> bool {
        !matches!(
            self,
            AttackStrategy::RegisterManipulation { .. } | AttackStrategy::Adaptive { .. }
        )
    }

    fn layers(&self) -> (bool, bool, &AttackStrategy) {
        let (adaptive, rest) = match self {
            AttackStrategy::Adaptive { inner } => (true, inner.as_ref()),
            other => (false, other),
        };
        match rest {
            AttackStrategy::RegisterManipulation { inner } => (adaptive, true, inner.as_ref()),
            other => (adaptive, false, other),
        }
    }

    pub fn validate(&self, params: &SchemeParams) -> Result<()> {
        let (adaptive, manipulation, leaf) = self.layers();
        if !leaf.is_copy_level() {
            return Err(Error::Strategy("layers must nest as adaptive > register manipulation > copy strategy"));
        }
        let contacts = params.max_bank_contacts();
        if contacts < 2 {
            return Err(Error::Strategy("two verifications need at least two Bank contacts"));
        }
        let spent = if adaptive { (contacts - 2) * params.l_size } else { 0 };
        let marked = if manipulation { (contacts - 1) * params.l_size } else { 0 };
        if spent + 2 * marked + params.l_size > params.q {
            return Err(Error::Strategy("note too short for the requested layers"));
        }
        match leaf {
            AttackStrategy::MeasureResend { generalized, .. } => {
                if !params.n.is_multiple_of(2) {
                    return Err(Error::Strategy("measure-resend needs an even number of modes"));
                }
                if params.n != 4 && !generalized {
                    return Err(Error::Strategy("measure-resend beyond n = 4 needs the generalized basis"));
                }
            }
            AttackStrategy::CollectiveCloner {
                model: ClonerModel::Channel(choi),
            } if choi.n() != params.n => {
                return Err(Error::DimensionMismatch {
                    expected: params.n,
                    actual: choi.n(),
                });
            }
            _ => {}
        }
        Ok(())
    }
}

/// What one measure-and-resend round learned and sends on.
#[derive(Clone, Debug, PartialEq)]
pub struct ResendOutcome {
    pub tuple: Tuple,
    pub parity: u8,
    /// Identical state sent to both verifiers.
    pub state: SinglePhotonState,
}

fn check_resend_n(n: usize, generalized: bool) -> Result<()> {
    if !n.is_multiple_of(2) || (n != 4 && !generalized) {
        return Err(Error::Strategy("measure-resend needs n = 4, or an even n with the generalized basis"));
    }
    Ok(())
}

// outcome 2i + s: pair i, sign + (s = 0) or - (s = 1)
fn resend_outcome_probs(rho: &SinglePhotonMixedState) -> Vec<f64> {
    (0..rho.n())
        .map(|o| {
            let (a, b) = (2 * (o / 2), 2 * (o / 2) + 1);
            let sign = if o % 2 == 0 { 1.0 } else { -1.0 };
            let v = rho.entry(a, a) + rho.entry(b, b) + (rho.entry(a, b) + rho.entry(b, a)) * sign;
            (v.re * 0.5).max(0.0)
        })
        .collect()
}

fn projected_state(n: usize, a: usize, b: usize, parity: u8) -> Result<SinglePhotonState> {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut amps = alloc::vec![Complex64::new(0.0, 0.0); n];
    amps[a] = Complex64::new(h, 0.0);
    amps[b] = Complex64::new(if parity == 0 { h } else { -h }, 0.0);
    SinglePhotonState::new(amps)
}

fn fill_state(r: &BitString, a: usize, b: usize, parity: u8) -> SinglePhotonState {
    let rb = r.bit(a) ^ (parity == 1);
    encode_note_state(&(*r).with_bit(b, rb))
}

/// Measures `rho` in the basis `(|1>_{2i-1} +- |1>_{2i})/sqrt 2` and prepares
/// the resend state.
pub fn measure_resend_state<R: Rng + ?Sized>(
    rho: &SinglePhotonMixedState,
    mode: ResendMode,
    generalized: bool,
    rng: &mut R,
) -> Result<ResendOutcome> {
    let n = rho.n();
    check_resend_n(n, generalized)?;
    let probs = resend_outcome_probs(rho);
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut outcome = n - 1;
    for (o, &p) in probs.iter().enumerate() {
        if p > 0.0 && u < p {
            outcome = o;
            break;
        }
        u -= p;
    }
    let (a, b) = (2 * (outcome / 2), 2 * (outcome / 2) + 1);
    let parity = (outcome % 2) as u8;
    let tuple = Tuple::new(a + 1, b + 1)?;
    let state = match mode {
        ResendMode::Projected => projected_state(n, a, b, parity)?,
        ResendMode::RandomFill => fill_state(&BitString::random(n, rng)?, a, b, parity),
    };
    Ok(ResendOutcome { tuple, parity, state })
}

/// Exact wrong-parity rate among conclusive outcomes when a verifier measures
/// a measure-and-resend copy of a uniformly random note string. Enumerates
/// every string, so `n` is capped at 12.
pub fn measure_resend_error_rate(n: usize, mode: ResendMode, generalized: bool) -> Result<f64> {
    check_resend_n(n, generalized)?;
    if n > 12 {
        return Err(Error::Strategy("exact measure-resend rate is limited to n <= 12"));
    }
    let reference = local_reference_state(n)?;
    let strings: Vec<BitString> = BitString::all(n)?.collect();
    let (mut wrong, mut conclusive) = (0.0, 0.0);
    for x in &strings {
        let rho = SinglePhotonMixedState::from_pure(&encode_note_state(x));
        for (o, p) in resend_outcome_probs(&rho).into_iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let (a, b) = (2 * (o / 2), 2 * (o / 2) + 1);
            let parity = (o % 2) as u8;
            let sent: Vec<SinglePhotonState> = match mode {
                ResendMode::Projected => alloc::vec![projected_state(n, a, b, parity)?],
                ResendMode::RandomFill => strings.iter().map(|r| fill_state(r, a, b, parity)).collect(),
            };
            let w = p / sent.len() as f64;
            for state in &sent {
                let dist = interfere_pure(state, &reference)?;
                wrong += w * wrong_parity_mass(&dist, x)?;
                conclusive += w * (1.0 - dist.same_mode_mass());
            }
        }
    }
    Ok(wrong / conclusive)
}

/// Measure-and-resend on a Bank-issued `|x>`.
pub fn measure_resend<R: Rng + ?Sized>(x: &BitString, mode: ResendMode, generalized: bool, rng: &mut R) -> Result<ResendOutcome> {
    let rho = SinglePhotonMixedState::from_pure(&encode_note_state(x));
    measure_resend_state(&rho, mode, generalized, rng)
}

fn copy_as_mixed(copy: &NoteCopy) -> Option<SinglePhotonMixedState> {
    match copy {
        NoteCopy::Genuine { string } => Some(SinglePhotonMixedState::from_pure(&encode_note_state(string))),
        NoteCopy::Pure { amplitudes } => Some(SinglePhotonMixedState::from_pure(amplitudes)),
        NoteCopy::Mixed { state } => Some(state.clone()),
        NoteCopy::NotSinglePhoton => None,
    }
}

/// Applies a copy-level strategy to one copy.
pub fn split_copy<R: Rng + ?Sized>(strategy: &AttackStrategy, copy: &NoteCopy, n: usize, rng: &mut R) -> Result<(NoteCopy, NoteCopy)> {
    match strategy {
        AttackStrategy::Honest => Ok((
            copy.clone(),
            NoteCopy::Genuine {
                string: BitString::random(n, rng)?,
            },
        )),
        AttackStrategy::MeasureResend { mode, generalized } => {
            let Some(rho) = copy_as_mixed(copy) else {
                return Ok((NoteCopy::NotSinglePhoton, NoteCopy::NotSinglePhoton));
            };
            let out = measure_resend_state(&rho, *mode, *generalized, rng)?;
            let sent = NoteCopy::Pure { amplitudes: out.state };
            Ok((sent.clone(), sent))
        }
        AttackStrategy::CollectiveCloner { model } => {
            let Some(rho) = copy_as_mixed(copy) else {
                return Ok((NoteCopy::NotSinglePhoton, NoteCopy::NotSinglePhoton));
            };
            let (eta, tau) = model.split(&rho)?;
            Ok((NoteCopy::Mixed { state: eta }, NoteCopy::Mixed { state: tau }))
        }
        _ => Err(Error::Strategy("not a copy-level strategy")),
    }
}

/// How the adversary treated one position of the original note.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopyRole {
    /// Handled by the copy-level strategy.
    Unknown,
    /// Learned through an auxiliary verification; perfect in both notes.
    Known,
    /// Genuine in note 1, marked used in note 2.
    Ver1Only,
    /// Genuine in note 2, marked used in note 1.
    Ver2Only,
    /// Already used before the attack.
    Spent,
}

/// Honest verification access for the adversary: a full session against the
/// Bank, nothing more.
pub struct BankOracle<'a> {
    secret: &'a mut BankSecret,
    params: SchemeParams,
}

impl<'a> BankOracle<'a> {
    pub fn new(secret: &'a mut BankSecret, params: SchemeParams) -> Self {
        Self { secret, params }
    }

    pub fn verify<R: Rng + ?Sized>(&mut self, note: &mut Note, rng: &mut R) -> Result<Session> {
        verify(note, self.secret, &self.params, rng)
    }

    pub fn contacts(&self) -> usize {
        self.secret.count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForgedNotes {
    pub note1: Note,
    pub note2: Note,
    pub roles: Vec<CopyRole>,
}

impl ForgedNotes {
    pub fn count(&self, role: CopyRole) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }
}

/// Turns one genuine note into two candidate notes.
pub fn forge_two_notes<R: Rng + ?Sized>(
    strategy: &AttackStrategy,
    mut note: Note,
    bank: &mut BankOracle<'_>,
    params: &SchemeParams,
    rng: &mut R,
) -> Result<ForgedNotes> {
    strategy.validate(params)?;
    if note.q() != params.q {
        return Err(Error::DimensionMismatch {
            expected: params.q,
            actual: note.q(),
        });
    }
    let (adaptive, manipulation, leaf) = strategy.layers();
    let contacts = params.max_bank_contacts();
    let mut roles: Vec<CopyRole> = note
        .register()
        .as_slice()
        .iter()
        .map(|&used| if used { CopyRole::Spent } else { CopyRole::Unknown })
        .collect();

    if adaptive {
        for _ in 0..contacts - 2 {
            let session = bank.verify(&mut note, rng)?;
            for &j in &session.local.selected {
                roles[j] = CopyRole::Known;
            }
        }
        for (j, role) in roles.iter().enumerate() {
            if *role == CopyRole::Known {
                note.register_mut().set(j, false);
            }
        }
    }

    if manipulation {
        let marked = (contacts - 1) * params.l_size;
        let mut pool = Register::from_bits(roles.iter().map(|&r| r != CopyRole::Unknown).collect());
        let first = select_unused(&pool, marked, rng)?;
        for &j in &first {
            roles[j] = CopyRole::Ver1Only;
            pool.set(j, true);
        }
        for j in select_unused(&pool, marked, rng)? {
            roles[j] = CopyRole::Ver2Only;
        }
    }

    let (copies, _) = note.into_parts();
    let q = copies.len();
    let mut c1 = Vec::with_capacity(q);
    let mut c2 = Vec::with_capacity(q);
    let mut r1 = Vec::with_capacity(q);
    let mut r2 = Vec::with_capacity(q);
    for (copy, &role) in copies.iter().zip(&roles) {
        let (a, b, used1, used2) = match role {
            CopyRole::Known => (copy.clone(), copy.clone(), false, false),
            CopyRole::Ver1Only => (copy.clone(), NoteCopy::NotSinglePhoton, false, true),
            CopyRole::Ver2Only => (NoteCopy::NotSinglePhoton, copy.clone(), true, false),
            CopyRole::Spent => (NoteCopy::NotSinglePhoton, NoteCopy::NotSinglePhoton, true, true),
            CopyRole::Unknown => {
                let (a, b) = split_copy(leaf, copy, params.n, rng)?;
                (a, b, false, false)
            }
        };
        c1.push(a);
        c2.push(b);
        r1.push(used1);
        r2.push(used2);
    }
    Ok(ForgedNotes {
        note1: Note::with_register(c1, Register::from_bits(r1))?,
        note2: Note::with_register(c2, Register::from_bits(r2))?,
        roles,
    })
}

/// Measured, conclusive and wrong-parity copy counts at one verifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyTally {
    pub measured: u64,
    pub conclusive: u64,
    pub wrong: u64,
}

impl CopyTally {
    pub fn add(&mut self, outcome: &SmOutcome, x: &BitString) {
        self.measured += 1;
        if let Some(wrong) = outcome.is_wrong_for(x) {
            self.conclusive += 1;
            self.wrong += wrong as u64;
        }
    }

    pub fn merge(&mut self, other: &CopyTally) {
        self.measured += other.measured;
        self.conclusive += other.conclusive;
        self.wrong += other.wrong;
    }

    pub fn inconclusive_rate(&self) -> f64 {
        ratio(self.measured - self.conclusive, self.measured)
    }

    /// Wrong parities among conclusive outcomes.
    pub fn error_rate(&self) -> f64 {
        ratio(self.wrong, self.conclusive)
    }

    /// Wrong parities among all measured copies.
    pub fn wrong_per_copy(&self) -> f64 {
        ratio(self.wrong, self.measured)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub ver1: Verdict,
    pub ver2: Verdict,
    pub ver1_copies: CopyTally,
    pub ver2_copies: CopyTally,
    /// Restricted to copies the adversary had no information about.
    pub ver1_unknown: CopyTally,
    pub ver2_unknown: CopyTally,
}

impl TrialOutcome {
    pub fn joint_pass(&self) -> bool {
        self.ver1.is_accepted() && self.ver2.is_accepted()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ForgeryStats {
    pub trials: u64,
    pub ver1_passes: u64,
    pub ver2_passes: u64,
    pub joint_passes: u64,
    pub ver1_copies: CopyTally,
    pub ver2_copies: CopyTally,
    pub ver1_unknown: CopyTally,
    pub ver2_unknown: CopyTally,
}

impl ForgeryStats {
    pub fn record(&mut self, t: &TrialOutcome) {
        self.trials += 1;
        self.ver1_passes += t.ver1.is_accepted() as u64;
        self.ver2_passes += t.ver2.is_accepted() as u64;
        self.joint_passes += t.joint_pass() as u64;
        self.ver1_copies.merge(&t.ver1_copies);
        self.ver2_copies.merge(&t.ver2_copies);
        self.ver1_unknown.merge(&t.ver1_unknown);
        self.ver2_unknown.merge(&t.ver2_unknown);
    }

    pub fn merge(&mut self, other: &ForgeryStats) {
        self.trials += other.trials;
        self.ver1_passes += other.ver1_passes;
        self.ver2_passes += other.ver2_passes;
        self.joint_passes += other.joint_passes;
        self.ver1_copies.merge(&other.ver1_copies);
        self.ver2_copies.merge(&other.ver2_copies);
        self.ver1_unknown.merge(&other.ver1_unknown);
        self.ver2_unknown.merge(&other.ver2_unknown);
    }

    pub fn ver1_pass_rate(&self) -> f64 {
        ratio(self.ver1_passes, self.trials)
    }

    pub fn ver2_pass_rate(&self) -> f64 {
        ratio(self.ver2_passes, self.trials)
    }

    pub fn joint_pass_rate(&self) -> f64 {
        ratio(self.joint_passes, self.trials)
    }

    /// Wrong parities among Ver1's conclusive outcomes.
    pub fn per_copy_error_rate(&self) -> f64 {
        self.ver1_copies.error_rate()
    }
}

/// Seed for trial `index`, independent of how trials are scheduled.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tally(session: &Session, strings: &[BitString], roles: &[CopyRole]) -> Result<(CopyTally, CopyTally)> {
    let mut all = CopyTally::default();
    let mut unknown = CopyTally::default();
    for rec in &session.local.report.records {
        let outcome = rec.outcome()?;
        let x = &strings[rec.copy_index];
        all.add(&outcome, x);
        if roles[rec.copy_index] == CopyRole::Unknown {
            unknown.add(&outcome, x);
        }
    }
    Ok((all, unknown))
}

/// One unforgeability game: fresh note, forgery, one verification each for
/// Ver1 and Ver2 against the same Bank record.
pub fn simulate_trial(strategy: &AttackStrategy, params: &SchemeParams, master_seed: u64, trial: u64) -> Result<TrialOutcome> {
    let seed = derive_seed(master_seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut secret, note) = prepare_note(params, &mut rng)?;
    let strings = secret.strings().to_vec();
    let mut bank = BankOracle::new(&mut secret, *params);
    let mut forged = forge_two_notes(strategy, note, &mut bank, params, &mut rng)?;
    let s1 = bank.verify(&mut forged.note1, &mut rng)?;
    let s2 = bank.verify(&mut forged.note2, &mut rng)?;
    let (ver1_copies, ver1_unknown) = tally(&s1, &strings, &forged.roles)?;
    let (ver2_copies, ver2_unknown) = tally(&s2, &strings, &forged.roles)?;
    Ok(TrialOutcome {
        trial,
        seed,
        ver1: s1.verdict,
        ver2: s2.verdict,
        ver1_copies,
        ver2_copies,
        ver1_unknown,
        ver2_unknown,
    })
}

pub fn simulate_forgery(strategy: &AttackStrategy, params: &SchemeParams, trials: u64, master_seed: u64) -> Result<ForgeryStats> {
    if trials == 0 {
        return Err(Error::Params("trials must be positive"));
    }
    strategy.validate(params)?;
    let mut stats = ForgeryStats::default();
    for t in 0..trials {
        stats.record(&simulate_trial(strategy, params, master_seed, t)?);
    }
    Ok(stats)
}

/// `1/4 - 1/(2n)`, the per-verifier error floor with no auxiliary knowledge.
pub fn e_min_asymptotic(n: usize) -> f64 {
    0.25 - 0.5 / n as f64
}

/// `e_min` with `T|L| = lambda q` and `|L| << q`.
pub fn e_min_lambda(n: usize, lambda: f64) -> f64 {
    (1.0 - 3.0 * lambda) / (1.0 - lambda) * e_min_asymptotic(n)
}

/// `[(q - (3A-4)|L|) / (q - (A-1)|L|)] (1/4 - 1/(2n))` with `A` Bank contacts.
pub fn e_min(params: &SchemeParams) -> Result<f64> {
    if params.n < 3 {
        return Err(Error::Params("e_min needs n >= 3"));
    }
    let a = params.max_bank_contacts();
    let l = params.l_size as f64;
    let q = params.q as f64;
    let known = (3.0 * a as f64 - 4.0).max(0.0) * l;
    let denominator = q - (a as f64 - 1.0) * l;
    if denominator <= 0.0 || q - known < 0.0 {
        return Err(Error::Params("T |L| is too large compared with q"));
    }
    Ok((q - known) / denominator * e_min_asymptotic(params.n))
}

/// `1/2 - 1/n`, the floor on the summed wrong-parity probabilities of the
/// two verifiers implied by `F_bar <= 1/2 + 1/n`.
pub fn optimal_collective_error_bound(n: usize) -> f64 {
    0.5 - 1.0 / n as f64
}

/// `exp(-2 delta^2 p11^2 (1 - epsilon)^2 |L|)`.
pub fn forge_probability_bound(params: &SchemeParams) -> f64 {
    let p11 = params.p11();
    let e = 1.0 - params.epsilon;
    libm::exp(-2.0 * params.delta * params.delta * p11 * p11 * e * e * params.l_size as f64)
}

/// `exp(-2 delta^2 (1 - p2) |L|)`, the pass bound quoted for measure-and-resend.
pub fn measure_resend_pass_bound(delta: f64, p2: f64, l_size: usize) -> f64 {
    libm::exp(-2.0 * delta * delta * (1.0 - p2) * l_size as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityBounds {
    pub e_min: f64,
    /// Largest correct-parity fraction an adversary can expect.
    pub c_adv: f64,
    /// `c - c_adv` with honest `c = 1`.
    pub noise_tolerance: f64,
    pub forge_prob_bound: f64,
}

pub fn security_bounds(params: &SchemeParams) -> Result<SecurityBounds> {
    let e = e_min(params)?;
    Ok(SecurityBounds {
        e_min: e,
        c_adv: 1.0 - e,
        noise_tolerance: e,
        forge_prob_bound: forge_probability_bound(params),
    })
}

/// Default Bank cut-off `(c - c_adv) / 2`.
pub fn default_delta(params: &SchemeParams) -> Result<f64> {
    Ok(security_bounds(params)?.noise_tolerance / 2.0)
}
