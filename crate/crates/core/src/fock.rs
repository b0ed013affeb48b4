//! Truncated four-mode bosonic Fock space.
//!
//! Kets are labelled `|aH, aV; bH, bV⟩`: horizontal and vertical photon numbers
//! in spatial mode `a`, followed by the same for mode `b`. A [`StateVector`] is a
//! sparse map from such occupations to complex amplitudes together with a
//! cutoff counted in photon *pairs*: every slot holds at most `cutoff` photons
//! and the total photon number is at most `2 * cutoff`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One of the four single-photon modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    AH,
    AV,
    BH,
    BV,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::AH, Slot::AV, Slot::BH, Slot::BV];

    pub fn spatial(self) -> SpatialMode {
        match self {
            Slot::AH | Slot::AV => SpatialMode::A,
            Slot::BH | Slot::BV => SpatialMode::B,
        }
    }

    pub fn polarization(self) -> Polarization {
        match self {
            Slot::AH | Slot::BH => Polarization::H,
            Slot::AV | Slot::BV => Polarization::V,
        }
    }

    pub fn from_parts(mode: SpatialMode, pol: Polarization) -> Self {
        match (mode, pol) {
            (SpatialMode::A, Polarization::H) => Slot::AH,
            (SpatialMode::A, Polarization::V) => Slot::AV,
            (SpatialMode::B, Polarization::H) => Slot::BH,
            (SpatialMode::B, Polarization::V) => Slot::BV,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Slot::AH => "aH",
            Slot::AV => "aV",
            Slot::BH => "bH",
            Slot::BV => "bV",
        };
        f.write_str(s)
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aH" => Ok(Slot::AH),
            "aV" => Ok(Slot::AV),
            "bH" => Ok(Slot::BH),
            "bV" => Ok(Slot::BV),
            _ => Err(Error::InvalidParameter(format!("unknown slot `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpatialMode {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

/// Ladder direction for [`StateVector::apply_ladder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// Photon numbers in the slots `(aH, aV, bH, bV)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModeOccupation {
    pub a_h: u32,
    pub a_v: u32,
    pub b_h: u32,
    pub b_v: u32,
}

impl ModeOccupation {
    pub const VACUUM: ModeOccupation = ModeOccupation::new(0, 0, 0, 0);

    pub const fn new(a_h: u32, a_v: u32, b_h: u32, b_v: u32) -> Self {
        ModeOccupation { a_h, a_v, b_h, b_v }
    }

    pub fn get(&self, slot: Slot) -> u32 {
        match slot {
            Slot::AH => self.a_h,
            Slot::AV => self.a_v,
            Slot::BH => self.b_h,
            Slot::BV => self.b_v,
        }
    }

    pub fn with(mut self, slot: Slot, count: u32) -> Self {
        match slot {
            Slot::AH => self.a_h = count,
            Slot::AV => self.a_v = count,
            Slot::BH => self.b_h = count,
            Slot::BV => self.b_v = count,
        }
        self
    }

    pub fn total(&self) -> u32 {
        self.a_h + self.a_v + self.b_h + self.b_v
    }

    pub fn mode_total(&self, mode: SpatialMode) -> u32 {
        match mode {
            SpatialMode::A => self.a_h + self.a_v,
            SpatialMode::B => self.b_h + self.b_v,
        }
    }

    /// First slot violating `cutoff`, if any.
    fn check_cutoff(&self, cutoff: u32) -> Result<()> {
        for slot in Slot::ALL {
            let count = self.get(slot);
            if count > cutoff {
                return Err(Error::CutoffExceeded { slot, count, cutoff });
            }
        }
        if self.total() > 2 * cutoff {
            // All four slots are within range but the pair budget is not.
            let slot = Slot::ALL.into_iter().max_by_key(|s| self.get(*s)).unwrap_or(Slot::AH);
            return Err(Error::CutoffExceeded { slot, count: self.get(slot), cutoff });
        }
        Ok(())
    }

    pub fn fits(&self, cutoff: u32) -> bool {
        self.check_cutoff(cutoff).is_ok()
    }

    /// Pair structure `|n−m, m; m, n−m⟩` produced by `K†` on the vacuum.
    pub fn is_pair_ket(&self) -> bool {
        self.a_h == self.b_v && self.a_v == self.b_h
    }
}

impl fmt::Display for ModeOccupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{};{},{}>", self.a_h, self.a_v, self.b_h, self.b_v)
    }
}

impl FromStr for ModeOccupation {
    type Err = Error;

    /// Accepts `1,0;0,1`, `|1,0;0,1>` or `1,0,0,1`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('|').trim_end_matches(['>', '⟩']);
        let counts = trimmed
            .split([',', ';'])
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse ket `{s}`")))?;
        match counts.as_slice() {
            [a_h, a_v, b_h, b_v] => Ok(ModeOccupation::new(*a_h, *a_v, *b_h, *b_v)),
            _ => Err(Error::InvalidParameter(format!("ket `{s}` needs four counts"))),
        }
    }
}

/// Sparse pure state on the truncated four-mode Fock space.
///
/// Operations never mutate their input; each returns a new state. Entries whose
/// amplitude is exactly zero are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    cutoff: u32,
    amplitudes: BTreeMap<ModeOccupation, Complex64>,
}

impl StateVector {
    /// The empty (zero) vector.
    pub fn zero(cutoff: u32) -> Self {
        StateVector { cutoff, amplitudes: BTreeMap::new() }
    }

    pub fn vacuum(cutoff: u32) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(ModeOccupation::VACUUM, Complex64::new(1.0, 0.0));
        StateVector { cutoff, amplitudes }
    }

    /// Builds a state from `(ket, amplitude)` pairs. Repeated kets accumulate.
    pub fn from_amplitudes<I>(cutoff: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeOccupation, Complex64)>,
    {
        let mut state = StateVector::zero(cutoff);
        for (ket, amp) in terms {
            ket.check_cutoff(cutoff)?;
            *state.amplitudes.entry(ket).or_default() += amp;
        }
        state.prune();
        Ok(state)
    }

    /// Single basis ket with unit amplitude.
    pub fn basis(cutoff: u32, ket: ModeOccupation) -> Result<Self> {
        StateVector::from_amplitudes(cutoff, [(ket, Complex64::new(1.0, 0.0))])
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn amplitude(&self, ket: &ModeOccupation) -> Complex64 {
        self.amplitudes.get(ket).copied().unwrap_or_default()
    }

    /// Nonzero entries in ascending ket order.
    pub fn iter(&self) -> impl Iterator<Item = (&ModeOccupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns the state divided by its norm, or an error for the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = StateVector {
            cutoff: self.cutoff,
            amplitudes: self.amplitudes.iter().map(|(k, a)| (*k, a * factor)).collect(),
        };
        out.prune();
        out
    }

    /// `self + factor * other`. Both states must share the cutoff.
    pub fn add_scaled(&self, other: &StateVector, factor: Complex64) -> Self {
        debug_assert_eq!(self.cutoff, other.cutoff);
        let mut out = self.clone();
        for (ket, amp) in &other.amplitudes {
            *out.amplitudes.entry(*ket).or_default() += amp * factor;
        }
        out.prune();
        out
    }

    /// Same amplitudes in a space with a different cutoff.
    pub fn with_cutoff(&self, cutoff: u32) -> Result<Self> {
        StateVector::from_amplitudes(cutoff, self.amplitudes.iter().map(|(k, a)| (*k, *a)))
    }

    /// Keeps only the kets accepted by `keep`.
    pub fn filtered<F>(&self, mut keep: F) -> Self
    where
        F: FnMut(&ModeOccupation) -> bool,
    {
        StateVector {
            cutoff: self.cutoff,
            amplitudes: self.amplitudes.iter().filter(|(k, _)| keep(k)).map(|(k, a)| (*k, *a)).collect(),
        }
    }

    /// Projection onto the kets carrying exactly `n` photon pairs (2n photons).
    pub fn pair_block(&self, n: u32) -> Self {
        self.filtered(|k| k.total() == 2 * n)
    }

    /// Applies `f` to every ket, accumulating the produced `(ket, amplitude)`
    /// contributions. Results must lie inside the cutoff.
    pub(crate) fn map_kets<F, I>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&ModeOccupation, Complex64) -> I,
        I: IntoIterator<Item = (ModeOccupation, Complex64)>,
    {
        let mut out: BTreeMap<ModeOccupation, Complex64> = BTreeMap::new();
        for (ket, amp) in &self.amplitudes {
            for (k, a) in f(ket, *amp) {
                k.check_cutoff(self.cutoff)?;
                *out.entry(k).or_default() += a;
            }
        }
        let mut state = StateVector { cutoff: self.cutoff, amplitudes: out };
        state.prune();
        Ok(state)
    }

    /// Single-slot creation (`Raise`) or annihilation (`Lower`) operator.
    ///
    /// Raising past the truncation is an error; nothing is dropped silently.
    pub fn apply_ladder(&self, slot: Slot, direction: Ladder) -> Result<Self> {
        self.map_kets(|ket, amp| {
            let n = ket.get(slot);
            match direction {
                Ladder::Raise => Some((ket.with(slot, n + 1), amp * f64::from(n + 1).sqrt())),
                Ladder::Lower if n > 0 => Some((ket.with(slot, n - 1), amp * f64::from(n).sqrt())),
                Ladder::Lower => None,
            }
        })
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Complex64 {
        // iterate the smaller map
        let (small, large, conj_small) =
            if self.len() <= other.len() { (self, other, true) } else { (other, self, false) };
        small
            .amplitudes
            .iter()
            .filter_map(|(k, a)| large.amplitudes.get(k).map(|b| (a, b)))
            .map(|(a, b)| if conj_small { a.conj() * b } else { b.conj() * a })
            .sum()
    }

    /// `|⟨self|other⟩|²` for normalized inputs.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner_product(other).norm_sqr()
    }

    fn prune(&mut self) {
        self.amplitudes.retain(|_, a| *a != Complex64::new(0.0, 0.0));
    }
}

pub fn vacuum(cutoff: u32) -> StateVector {
    StateVector::vacuum(cutoff)
}

pub fn inner_product(s1: &StateVector, s2: &StateVector) -> Complex64 {
    s1.inner_product(s2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_has_unit_norm() {
        for k in 0..6 {
            let v = vacuum(k);
            assert_eq!(v.amplitude(&ModeOccupation::VACUUM), c(1.0));
            assert_eq!(v.len(), 1);
            assert_eq!(v.norm(), 1.0);
        }
    }

    #[test]
    fn raise_twice_gives_sqrt_two() {
        let v = vacuum(5);
        let once = v.apply_ladder(Slot::AH, Ladder::Raise).unwrap();
        assert_eq!(once.amplitude(&ModeOccupation::new(1, 0, 0, 0)), c(1.0));
        let twice = once.apply_ladder(Slot::AH, Ladder::Raise).unwrap();
        let amp = twice.amplitude(&ModeOccupation::new(2, 0, 0, 0));
        assert!((amp - c(2f64.sqrt())).norm() < 1e-15);
        assert_eq!(twice.len(), 1);
    }

    #[test]
    fn lower_on_vacuum_is_zero() {
        let out = vacuum(3).apply_ladder(Slot::AH, Ladder::Lower).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.norm_sqr(), 0.0);
    }

    #[test]
    fn raising_past_cutoff_is_an_error() {
        let s = StateVector::basis(1, ModeOccupation::new(1, 0, 0, 1)).unwrap();
        let err = s.apply_ladder(Slot::AH, Ladder::Raise).unwrap_err();
        assert_eq!(err, Error::CutoffExceeded { slot: Slot::AH, count: 2, cutoff: 1 });
        // total photon budget 2·cutoff
        let s = StateVector::basis(1, ModeOccupation::new(1, 0, 0, 1)).unwrap();
        assert!(s.apply_ladder(Slot::AV, Ladder::Raise).is_err());
    }

    #[test]
    fn construction_rejects_out_of_range_kets() {
        assert!(StateVector::basis(1, ModeOccupation::new(2, 0, 0, 0)).is_err());
        assert!(StateVector::basis(2, ModeOccupation::new(1, 1, 1, 2)).is_err());
        assert!(StateVector::basis(2, ModeOccupation::new(1, 1, 1, 1)).is_ok());
    }

    #[test]
    fn orthogonal_kets_and_bell_norm() {
        let k1 = StateVector::basis(1, ModeOccupation::new(1, 0, 0, 1)).unwrap();
        let k2 = StateVector::basis(1, ModeOccupation::new(0, 1, 1, 0)).unwrap();
        assert_eq!(inner_product(&k1, &k2), c(0.0));
        assert_eq!(inner_product(&vacuum(1), &vacuum(1)), c(1.0));

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_amplitudes(
            1,
            [(ModeOccupation::new(1, 0, 0, 1), c(r)), (ModeOccupation::new(0, 1, 1, 0), c(-r))],
        )
        .unwrap();
        assert!((inner_product(&bell, &bell) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_argument() {
        let i = Complex64::new(0.0, 1.0);
        let k = ModeOccupation::new(1, 0, 0, 1);
        let a = StateVector::from_amplitudes(1, [(k, i)]).unwrap();
        let b = StateVector::basis(1, k).unwrap();
        assert_eq!(a.inner_product(&b), -i);
        assert_eq!(b.inner_product(&a), i);
    }

    #[test]
    fn zero_amplitudes_are_pruned() {
        let k = ModeOccupation::new(1, 0, 0, 1);
        let s = StateVector::from_amplitudes(1, [(k, c(1.0)), (k, c(-1.0))]).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn ket_parsing_and_display() {
        let k: ModeOccupation = "|2,0;0,2>".parse().unwrap();
        assert_eq!(k, ModeOccupation::new(2, 0, 0, 2));
        assert_eq!("1,1,1,1".parse::<ModeOccupation>().unwrap(), ModeOccupation::new(1, 1, 1, 1));
        assert_eq!(k.to_string(), "|2,0;0,2>");
        assert!("1,2,3".parse::<ModeOccupation>().is_err());
    }
}
