//! Sampling Matching: tuples, click classification and single-shot runs.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    check_mode_count, interfere_mixed, interfere_pure, local_reference_state, BitString,
    DetectorEvent, OutcomeDistribution, SinglePhotonMixedState, SinglePhotonState,
};

/// A 1-based mode pair `(k, l)` with `k < l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Tuple {
    k: usize,
    l: usize,
}

impl Tuple {
    pub fn new(k: usize, l: usize) -> Result<Self> {
        if k == 0 || k >= l {
            return Err(Error::ProtocolViolation("tuple needs 1-based modes k < l"));
        }
        Ok(Self { k, l })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn fits(&self, n: usize) -> bool {
        self.l <= n
    }

    /// `x_k XOR x_l`.
    pub fn parity_of(&self, x: &BitString) -> u8 {
        x.mode_parity(self.k, self.l)
    }
}

impl TryFrom<[usize; 2]> for Tuple {
    type Error = Error;

    fn try_from([k, l]: [usize; 2]) -> Result<Self> {
        Tuple::new(k, l)
    }
}

impl From<Tuple> for [usize; 2] {
    fn from(t: Tuple) -> Self {
        [t.k, t.l]
    }
}

/// All `n(n-1)/2` tuples on `n` modes, lexicographically sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleSet {
    n: usize,
    tuples: Vec<Tuple>,
}

impl TupleSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn as_slice(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        t.fits(self.n)
    }

    /// Lexicographic position of `t`.
    pub fn index_of(&self, t: &Tuple) -> Option<usize> {
        self.contains(t)
            .then(|| crate::fock::tuple_index(self.n, t.k, t.l))
    }
}

pub fn tuple_set(n: usize) -> Result<TupleSet> {
    check_mode_count(n)?;
    let tuples = (1..=n)
        .flat_map(|k| (k + 1..=n).map(move |l| Tuple { k, l }))
        .collect();
    Ok(TupleSet { n, tuples })
}

/// Verifier's answer for one copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SmOutcome {
    Conclusive { tuple: Tuple, parity: u8 },
    Inconclusive,
}

impl SmOutcome {
    pub fn is_conclusive(&self) -> bool {
        matches!(self, SmOutcome::Conclusive { .. })
    }

    pub fn tuple(&self) -> Option<Tuple> {
        match self {
            SmOutcome::Conclusive { tuple, .. } => Some(*tuple),
            SmOutcome::Inconclusive => None,
        }
    }

    pub fn parity(&self) -> Option<u8> {
        match self {
            SmOutcome::Conclusive { parity, .. } => Some(*parity),
            SmOutcome::Inconclusive => None,
        }
    }

    /// `Some(true)` if the reported parity disagrees with `x`.
    pub fn is_wrong_for(&self, x: &BitString) -> Option<bool> {
        match self {
            SmOutcome::Conclusive { tuple, parity } => Some(tuple.parity_of(x) != *parity),
            SmOutcome::Inconclusive => None,
        }
    }

    /// The verifier-to-Bank record for copy `copy_index`.
    pub fn record(&self, copy_index: usize) -> OutcomeRecord {
        OutcomeRecord {
            copy_index,
            tuple: self.tuple(),
            parity: self.parity(),
        }
    }
}

/// Wire form `{copy_index, tuple: [k, l] | null, parity: 0 | 1 | null}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub copy_index: usize,
    pub tuple: Option<Tuple>,
    pub parity: Option<u8>,
}

impl OutcomeRecord {
    pub fn outcome(&self) -> Result<SmOutcome> {
        match (self.tuple, self.parity) {
            (Some(tuple), Some(parity @ (0 | 1))) => Ok(SmOutcome::Conclusive { tuple, parity }),
            (None, None) => Ok(SmOutcome::Inconclusive),
            _ => Err(Error::ProtocolViolation("record must carry both tuple and parity, or neither")),
        }
    }
}

/// Same-port clicks on two modes give parity 0, cross-port clicks parity 1,
/// two photons in one mode are inconclusive.
pub fn classify(event: &DetectorEvent) -> SmOutcome {
    match *event {
        DetectorEvent::TwoSameMode { .. } => SmOutcome::Inconclusive,
        DetectorEvent::TwoDistinctModes {
            first_mode,
            first_port,
            second_mode,
            second_port,
        } => SmOutcome::Conclusive {
            tuple: Tuple {
                k: first_mode,
                l: second_mode,
            },
            parity: (first_port != second_port) as u8,
        },
    }
}

/// Distribution mass that classifies to the wrong parity for `x`.
pub fn wrong_parity_mass(dist: &OutcomeDistribution, x: &BitString) -> Result<f64> {
    if dist.n() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: dist.n(),
            actual: x.len(),
        });
    }
    Ok(dist
        .iter()
        .filter(|(e, _)| classify(e).is_wrong_for(x) == Some(true))
        .map(|(_, p)| p)
        .sum())
}

/// The state a holder presents for one copy.
#[derive(Clone, Copy, Debug)]
pub enum HolderState<'a> {
    Pure(&'a SinglePhotonState),
    Mixed(&'a SinglePhotonMixedState),
}

impl HolderState<'_> {
    pub fn n(&self) -> usize {
        match self {
            HolderState::Pure(s) => s.n(),
            HolderState::Mixed(s) => s.n(),
        }
    }

    /// Exact click distribution against the uniform reference.
    pub fn distribution(&self) -> Result<OutcomeDistribution> {
        let reference = local_reference_state(self.n())?;
        match self {
            HolderState::Pure(s) => interfere_pure(s, &reference),
            HolderState::Mixed(s) => interfere_mixed(s, &reference),
        }
    }
}

impl<'a> From<&'a SinglePhotonState> for HolderState<'a> {
    fn from(s: &'a SinglePhotonState) -> Self {
        HolderState::Pure(s)
    }
}

impl<'a> From<&'a SinglePhotonMixedState> for HolderState<'a> {
    fn from(s: &'a SinglePhotonMixedState) -> Self {
        HolderState::Mixed(s)
    }
}

/// One Sampling Matching run: interfere, sample a click event, classify.
pub fn run_sm<'a, R: Rng + ?Sized>(holder: impl Into<HolderState<'a>>, rng: &mut R) -> Result<SmOutcome> {
    let dist = holder.into().distribution()?;
    Ok(classify(&dist.sample(rng)))
}
