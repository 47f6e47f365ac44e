//! Exact two-photon linear optics over `n` spatial modes.
//!
//! A holder photon in modes `a_1..a_n` meets the verifier's reference photon
//! in modes `b_1..b_n`; mode `k` of each passes through its own 50/50 beam
//! splitter with outputs `c_k`, `d_k`:
//!
//! ```text
//! a_k -> (c_k + d_k) / sqrt(2)        b_k -> (c_k - d_k) / sqrt(2)
//! ```
//!
//! Only click statistics are needed downstream, so distributions are stored
//! over the `2 n^2` two-photon detector events rather than a Fock vector.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance used for every normalization / Hermiticity / positivity check.
pub const TOLERANCE: f64 = 1e-9;

/// A classical `n`-bit string, `2 <= n <= 64`. Bit `i` (0-based) belongs to mode `i + 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: u64,
    len: u8,
}

impl BitString {
    pub const MIN_LEN: usize = 2;
    pub const MAX_LEN: usize = 64;

    pub fn from_bits(bits: u64, len: usize) -> Result<Self> {
        check_mode_count(len)?;
        if len < 64 && bits >> len != 0 {
            return Err(Error::BitString("bits set beyond the string length"));
        }
        Ok(Self { bits, len: len as u8 })
    }

    pub fn from_slice(bits: &[bool]) -> Result<Self> {
        check_mode_count(bits.len())?;
        let packed = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        Ok(Self {
            bits: packed,
            len: bits.len() as u8,
        })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::from_bits(0, len)
    }

    /// Uniformly random string of the given length.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        check_mode_count(len)?;
        let raw: u64 = rng.random();
        let bits = if len == 64 { raw } else { raw & ((1u64 << len) - 1) };
        Ok(Self { bits, len: len as u8 })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed representation, bit `i` is mode `i + 1`.
    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn bit(&self, index: usize) -> bool {
        debug_assert!(index < self.len());
        (self.bits >> index) & 1 == 1
    }

    /// `(-1)^{x_i}` for the 0-based index `i`.
    #[inline]
    pub fn sign(&self, index: usize) -> f64 {
        if self.bit(index) {
            -1.0
        } else {
            1.0
        }
    }

    /// Parity `x_k XOR x_l` for 1-based modes `k`, `l`.
    #[inline]
    pub fn mode_parity(&self, k: usize, l: usize) -> u8 {
        (self.bit(k - 1) ^ self.bit(l - 1)) as u8
    }

    pub fn with_bit(mut self, index: usize, value: bool) -> Self {
        debug_assert!(index < self.len());
        if value {
            self.bits |= 1 << index;
        } else {
            self.bits &= !(1 << index);
        }
        self
    }

    pub fn hamming_distance(&self, other: &Self) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    /// Iterates over all `2^n` strings of length `n` in counting order.
    pub fn all(len: usize) -> Result<impl Iterator<Item = BitString>> {
        check_mode_count(len)?;
        if len > 24 {
            return Err(Error::ModeCount {
                n: len,
                min: Self::MIN_LEN,
                max: 24,
            });
        }
        Ok((0..1u64 << len).map(move |bits| BitString {
            bits,
            len: len as u8,
        }))
    }

    fn write_ascii(&self, buf: &mut [u8; 64]) -> usize {
        for (i, slot) in buf.iter_mut().take(self.len()).enumerate() {
            *slot = if self.bit(i) { b'1' } else { b'0' };
        }
        self.len()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = [0u8; 64];
        let len = self.write_ascii(&mut buf);
        // ASCII only
        f.write_str(core::str::from_utf8(&buf[..len]).map_err(|_| fmt::Error)?)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl core::str::FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        check_mode_count(s.len())?;
        let mut bits = 0u64;
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => bits |= 1 << i,
                _ => return Err(Error::BitString("expected only '0' and '1'")),
            }
        }
        Ok(Self {
            bits,
            len: s.len() as u8,
        })
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let mut buf = [0u8; 64];
        let len = self.write_ascii(&mut buf);
        serializer.serialize_str(core::str::from_utf8(&buf[..len]).expect("ascii"))
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = BitString;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a string of '0'/'1' characters")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<BitString, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_str(Visitor)
    }
}

pub(crate) fn check_mode_count(n: usize) -> Result<()> {
    if (BitString::MIN_LEN..=BitString::MAX_LEN).contains(&n) {
        Ok(())
    } else {
        Err(Error::ModeCount {
            n,
            min: BitString::MIN_LEN,
            max: BitString::MAX_LEN,
        })
    }
}

/// Pure single-photon state `sum_k amp_k a_k^dag |0>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct SinglePhotonState {
    amplitudes: Vec<Complex64>,
}

impl SinglePhotonState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_mode_count(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        check_mode_count(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm_sqr > 0.0 && norm_sqr.is_finite()) {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let scale = 1.0 / libm::sqrt(norm_sqr);
        for a in &mut amplitudes {
            *a *= scale;
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

impl TryFrom<Vec<Complex64>> for SinglePhotonState {
    type Error = Error;

    fn try_from(value: Vec<Complex64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SinglePhotonState> for Vec<Complex64> {
    fn from(value: SinglePhotonState) -> Self {
        value.amplitudes
    }
}

/// Mixed single-photon state `sum_{k,l} A_kl a_k^dag |0><0| a_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixedState", into = "RawMixedState")]
pub struct SinglePhotonMixedState {
    n: usize,
    /// Row-major `A_kl`.
    entries: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawMixedState {
    n: usize,
    entries: Vec<Complex64>,
}

impl TryFrom<RawMixedState> for SinglePhotonMixedState {
    type Error = Error;

    fn try_from(raw: RawMixedState) -> Result<Self> {
        Self::new(raw.n, raw.entries)
    }
}

impl From<SinglePhotonMixedState> for RawMixedState {
    fn from(s: SinglePhotonMixedState) -> Self {
        Self {
            n: s.n,
            entries: s.entries,
        }
    }
}

impl SinglePhotonMixedState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        check_mode_count(n)?;
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: entries.len(),
            });
        }
        let state = Self { n, entries };
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn new_unchecked(n: usize, entries: Vec<Complex64>) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        Self { n, entries }
    }

    pub fn from_pure(state: &SinglePhotonState) -> Self {
        let a = state.amplitudes();
        let n = a.len();
        let mut entries = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                entries.push(a[k] * a[l].conj());
            }
        }
        Self { n, entries }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_mode_count(n)?;
        let mut entries = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        for k in 0..n {
            entries[k * n + k] = Complex64::new(1.0 / n as f64, 0.0);
        }
        Ok(Self { n, entries })
    }

    /// Convex combination `sum_i p_i |psi_i><psi_i|`; weights must be
    /// non-negative and sum to one.
    pub fn mixture(components: &[(f64, SinglePhotonState)]) -> Result<Self> {
        let n = components
            .first()
            .map(|(_, s)| s.n())
            .ok_or(Error::BitString("empty mixture"))?;
        let total: f64 = components.iter().map(|(p, _)| *p).sum();
        if components.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > TOLERANCE {
            return Err(Error::BadTrace { trace: total });
        }
        let mut entries = alloc::vec![Complex64::new(0.0, 0.0); n * n];
        for (p, s) in components {
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: s.n(),
                });
            }
            let a = s.amplitudes();
            for k in 0..n {
                for l in 0..n {
                    entries[k * n + l] += a[k] * a[l].conj() * *p;
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// `p * self + (1 - p) * other`.
    pub fn blend(&self, p: f64, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadTrace { trace: p });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * p + b * (1.0 - p))
            .collect();
        Ok(Self { n: self.n, entries })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// `A_kl` for 0-based `k`, `l`.
    #[inline]
    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        self.entries[k * self.n + l]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|k| self.entry(k, k)).sum()
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.to_matrix()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let mut deviation = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                deviation = deviation.max((self.entry(k, l) - self.entry(l, k).conj()).norm());
            }
        }
        if deviation > TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = self.trace();
        if (trace.re - 1.0).abs() > TOLERANCE || trace.im.abs() > TOLERANCE {
            return Err(Error::BadTrace { trace: trace.re });
        }
        let min_eigenvalue = self.min_eigenvalue();
        if min_eigenvalue < -TOLERANCE {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(())
    }
}

/// Output port of a mode's beam splitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Port {
    C,
    D,
}

impl Port {
    #[inline]
    fn index(self) -> usize {
        match self {
            Port::C => 0,
            Port::D => 1,
        }
    }

    const BOTH: [Port; 2] = [Port::C, Port::D];
}

/// A two-photon detection event. Modes are 1-based; for distinct modes the
/// smaller mode comes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorEvent {
    TwoSameMode { port: Port, mode: usize },
    TwoDistinctModes {
        first_mode: usize,
        first_port: Port,
        second_mode: usize,
        second_port: Port,
    },
}

impl DetectorEvent {
    /// Builds a distinct-mode event, canonicalizing the mode order.
    pub fn distinct(mode_a: usize, port_a: Port, mode_b: usize, port_b: Port) -> Result<Self> {
        if mode_a == mode_b || mode_a == 0 || mode_b == 0 {
            return Err(Error::ProtocolViolation("distinct-mode event needs two different 1-based modes"));
        }
        let ((first_mode, first_port), (second_mode, second_port)) = if mode_a < mode_b {
            ((mode_a, port_a), (mode_b, port_b))
        } else {
            ((mode_b, port_b), (mode_a, port_a))
        };
        Ok(DetectorEvent::TwoDistinctModes {
            first_mode,
            first_port,
            second_mode,
            second_port,
        })
    }

    /// Position in the canonical event ordering for `n` modes.
    pub fn canonical_index(&self, n: usize) -> Option<usize> {
        match *self {
            DetectorEvent::TwoSameMode { port, mode } => {
                (1..=n).contains(&mode).then(|| 2 * (mode - 1) + port.index())
            }
            DetectorEvent::TwoDistinctModes {
                first_mode,
                first_port,
                second_mode,
                second_port,
            } => {
                if !(1 <= first_mode && first_mode < second_mode && second_mode <= n) {
                    return None;
                }
                Some(
                    2 * n
                        + 4 * tuple_index(n, first_mode, second_mode)
                        + 2 * first_port.index()
                        + second_port.index(),
                )
            }
        }
    }

    /// Inverse of [`DetectorEvent::canonical_index`].
    pub fn from_canonical_index(n: usize, index: usize) -> Option<Self> {
        if index < 2 * n {
            return Some(DetectorEvent::TwoSameMode {
                port: Port::BOTH[index % 2],
                mode: index / 2 + 1,
            });
        }
        let rest = index - 2 * n;
        let (t, ports) = (rest / 4, rest % 4);
        let (k, l) = tuple_from_index(n, t)?;
        Some(DetectorEvent::TwoDistinctModes {
            first_mode: k,
            first_port: Port::BOTH[ports / 2],
            second_mode: l,
            second_port: Port::BOTH[ports % 2],
        })
    }
}

/// Number of detector events for `n` modes: `2n` same-mode plus four port
/// pairs for each of the `n(n-1)/2` tuples.
#[inline]
pub const fn event_count(n: usize) -> usize {
    2 * n * n
}

/// Lexicographic position of the 1-based tuple `(k, l)`, `k < l`.
#[inline]
pub(crate) fn tuple_index(n: usize, k: usize, l: usize) -> usize {
    (k - 1) * (2 * n - k) / 2 + (l - k - 1)
}

pub(crate) fn tuple_from_index(n: usize, mut index: usize) -> Option<(usize, usize)> {
    for k in 1..n {
        let row = n - k;
        if index < row {
            return Some((k, k + 1 + index));
        }
        index -= row;
    }
    None
}

/// Exact probability distribution over [`DetectorEvent`]s, stored in
/// canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    n: usize,
    probabilities: Vec<f64>,
}

/// One `{event, probability}` record of a serialized distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventProbability {
    pub event: DetectorEvent,
    pub probability: f64,
}

impl OutcomeDistribution {
    pub(crate) fn from_canonical(n: usize, probabilities: Vec<f64>) -> Self {
        debug_assert_eq!(probabilities.len(), event_count(n));
        Self { n, probabilities }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Probabilities in canonical event order.
    pub fn as_slice(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, event: &DetectorEvent) -> f64 {
        event
            .canonical_index(self.n)
            .map_or(0.0, |i| self.probabilities[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (DetectorEvent, f64)> + '_ {
        self.probabilities.iter().enumerate().map(move |(i, &p)| {
            (
                DetectorEvent::from_canonical_index(self.n, i).expect("canonical index in range"),
                p,
            )
        })
    }

    pub fn records(&self) -> Vec<EventProbability> {
        self.iter()
            .map(|(event, probability)| EventProbability { event, probability })
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Total probability of two photons in one output mode.
    pub fn same_mode_mass(&self) -> f64 {
        self.probabilities[..2 * self.n].iter().sum()
    }

    /// Probability that the tuple `(k, l)` (1-based) is reported, any parity.
    pub fn tuple_mass(&self, k: usize, l: usize) -> f64 {
        let base = 2 * self.n + 4 * tuple_index(self.n, k, l);
        self.probabilities[base..base + 4].iter().sum()
    }

    /// Convex combination `p * self + (1 - p) * other`.
    pub fn blend(&self, p: f64, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(Self {
            n: self.n,
            probabilities: self
                .probabilities
                .iter()
                .zip(&other.probabilities)
                .map(|(a, b)| p * a + (1.0 - p) * b)
                .collect(),
        })
    }

    /// Inverse-CDF sampling over the canonical event ordering.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DetectorEvent {
        let u: f64 = rng.random::<f64>() * self.total();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > 0.0 {
                last_nonzero = i;
                acc += p;
                if u < acc {
                    return DetectorEvent::from_canonical_index(self.n, i).expect("index in range");
                }
            }
        }
        // rounding can leave u at the very top of the range
        DetectorEvent::from_canonical_index(self.n, last_nonzero).expect("index in range")
    }
}

impl Serialize for OutcomeDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.probabilities.len()))?;
        for (event, probability) in self.iter() {
            seq.serialize_element(&EventProbability { event, probability })?;
        }
        seq.end()
    }
}

/// `|x> = n^{-1/2} sum_k (-1)^{x_k} a_k^dag |0>`.
pub fn encode_note_state(x: &BitString) -> SinglePhotonState {
    let scale = 1.0 / libm::sqrt(x.len() as f64);
    SinglePhotonState {
        amplitudes: (0..x.len())
            .map(|k| Complex64::new(x.sign(k) * scale, 0.0))
            .collect(),
    }
}

/// The verifier's uniform reference state `|beta>`.
pub fn local_reference_state(n: usize) -> Result<SinglePhotonState> {
    Ok(encode_note_state(&BitString::zeros(n)?))
}

/// Amplitude weights of the four port pairs of tuple `(k, l)` (0-based,
/// `k < l`) as linear functionals of the holder amplitudes:
/// `amp = w_k * a_k + w_l * a_l`. Order: CC, CD, DC, DD.
#[inline]
fn pair_weights(b: &[Complex64], k: usize, l: usize) -> [(Complex64, Complex64); 4] {
    let (bk, bl) = (b[k] * 0.5, b[l] * 0.5);
    [
        (bl, bk),   // c_k c_l:  (a_k b_l + a_l b_k) / 2
        (-bl, bk),  // c_k d_l:  (a_l b_k - a_k b_l) / 2
        (bl, -bk),  // d_k c_l:  (a_k b_l - a_l b_k) / 2
        (-bl, -bk), // d_k d_l: -(a_k b_l + a_l b_k) / 2
    ]
}

fn check_same_n(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Click distribution for a pure holder photon interfered with `reference`.
pub fn interfere_pure(
    holder: &SinglePhotonState,
    reference: &SinglePhotonState,
) -> Result<OutcomeDistribution> {
    let n = reference.n();
    check_same_n(n, holder.n())?;
    let (a, b) = (holder.amplitudes(), reference.amplitudes());
    let mut probs = Vec::with_capacity(event_count(n));
    for k in 0..n {
        // c_k^dag^2 |0> = sqrt(2) |2>, amplitude (a_k b_k / 2) * sqrt(2)
        let same = (a[k] * b[k]).norm_sqr() * 0.5;
        probs.push(same);
        probs.push(same);
    }
    for k in 0..n {
        for l in k + 1..n {
            for (wk, wl) in pair_weights(b, k, l) {
                probs.push((wk * a[k] + wl * a[l]).norm_sqr());
            }
        }
    }
    Ok(OutcomeDistribution::from_canonical(n, probs))
}

/// Click distribution for a mixed holder photon; linear in `A`.
pub fn interfere_mixed(
    holder: &SinglePhotonMixedState,
    reference: &SinglePhotonState,
) -> Result<OutcomeDistribution> {
    let n = reference.n();
    check_same_n(n, holder.n())?;
    let b = reference.amplitudes();
    let mut probs = Vec::with_capacity(event_count(n));
    for k in 0..n {
        let same = b[k].norm_sqr() * holder.entry(k, k).re * 0.5;
        probs.push(same);
        probs.push(same);
    }
    for k in 0..n {
        for l in k + 1..n {
            let (akk, all, akl) = (holder.entry(k, k).re, holder.entry(l, l).re, holder.entry(k, l));
            for (wk, wl) in pair_weights(b, k, l) {
                // sum_{m,m'} w_m A_{m m'} conj(w_m')
                let p = wk.norm_sqr() * akk + wl.norm_sqr() * all + 2.0 * (wk * akl * wl.conj()).re;
                probs.push(p.max(0.0));
            }
        }
    }
    Ok(OutcomeDistribution::from_canonical(n, probs))
}

fn check_string(holder_n: usize, x: &BitString) -> Result<()> {
    check_same_n(holder_n, x.len())
}

/// `F_x = <x| A |x> = (1/n) sum_{e,f} (-1)^{x_e + x_f} A_ef`.
pub fn fidelity_with_note(holder: &SinglePhotonMixedState, x: &BitString) -> Result<f64> {
    let n = holder.n();
    check_string(n, x)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for e in 0..n {
        for f in 0..n {
            acc += holder.entry(e, f) * (x.sign(e) * x.sign(f));
        }
    }
    Ok((acc.re / n as f64).clamp(0.0, 1.0))
}

/// Total probability of a conclusive outcome with the wrong parity for `x`,
/// in closed form: `(1 - F_x) / 2`.
pub fn incorrect_parity_probability(holder: &SinglePhotonMixedState, x: &BitString) -> Result<f64> {
    Ok(0.5 * (1.0 - fidelity_with_note(holder, x)?))
}
