//! Post-selection: what the detectors behind polarizers, polarizing beam
//! splitters and 50/50 splitters see.
//!
//! Each slot (after the per-mode analysis basis is applied) feeds either one
//! detector or, when listed in [`DetectionConfig::splitter_slots`], a 50/50
//! splitter with two detectors `<slot>0` and `<slot>1`. Detectors respond to
//! photons independently with probability `efficiency`; by default they only
//! report whether at least one photon arrived.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, Polarization, Slot, SpatialMode, StateVector};
use crate::polarization::{rotate, ModeSelection, PolarizationUnitary};

/// A single-photon detector: the slot it watches and, behind a splitter, the
/// output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Detector {
    pub slot: Slot,
    pub port: Option<u8>,
}

impl Detector {
    pub fn direct(slot: Slot) -> Self {
        Detector { slot, port: None }
    }

    pub fn split(slot: Slot, port: u8) -> Self {
        Detector { slot, port: Some(port) }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.port {
            None => write!(f, "{}", self.slot),
            Some(p) => write!(f, "{}{}", self.slot, p),
        }
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidPattern(format!("unknown detector `{s}`"));
        let slot: Slot = s.get(..2).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        match &s[2..] {
            "" => Ok(Detector::direct(slot)),
            "0" => Ok(Detector::split(slot, 0)),
            "1" => Ok(Detector::split(slot, 1)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub basis_a: PolarizationUnitary,
    pub basis_b: PolarizationUnitary,
    pub splitter_slots: BTreeSet<Slot>,
    pub efficiency: f64,
    pub number_resolving: bool,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            basis_a: PolarizationUnitary::identity(),
            basis_b: PolarizationUnitary::identity(),
            splitter_slots: BTreeSet::new(),
            efficiency: 1.0,
            number_resolving: false,
        }
    }
}

impl DetectionConfig {
    /// Same analysis basis on both spatial modes.
    pub fn in_basis(basis: PolarizationUnitary) -> Self {
        DetectionConfig { basis_a: basis, basis_b: basis, ..Default::default() }
    }

    pub fn with_splitters<I: IntoIterator<Item = Slot>>(mut self, slots: I) -> Self {
        self.splitter_slots = slots.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidParameter(format!("efficiency {} outside [0, 1]", self.efficiency)));
        }
        for u in [&self.basis_a, &self.basis_b] {
            let [a, b, c, d] = u.entries();
            PolarizationUnitary::new(a, b, c, d)?;
        }
        Ok(())
    }

    pub fn detectors(&self) -> Vec<Detector> {
        Slot::ALL
            .into_iter()
            .flat_map(|slot| {
                if self.splitter_slots.contains(&slot) {
                    vec![Detector::split(slot, 0), Detector::split(slot, 1)]
                } else {
                    vec![Detector::direct(slot)]
                }
            })
            .collect()
    }
}

/// Which detectors must click, which must stay dark, and (number-resolving
/// detectors only) exact photon counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct CoincidencePattern {
    required: BTreeSet<Detector>,
    forbidden: BTreeSet<Detector>,
    counts: BTreeMap<Detector, u32>,
}

impl CoincidencePattern {
    pub fn new<R, F>(required: R, forbidden: F) -> Result<Self>
    where
        R: IntoIterator<Item = Detector>,
        F: IntoIterator<Item = Detector>,
    {
        let required: BTreeSet<_> = required.into_iter().collect();
        let forbidden: BTreeSet<_> = forbidden.into_iter().collect();
        if let Some(d) = required.intersection(&forbidden).next() {
            return Err(Error::InvalidPattern(format!("detector {d} is both required and forbidden")));
        }
        Ok(CoincidencePattern { required, forbidden, counts: BTreeMap::new() })
    }

    /// Pattern requiring clicks on the given detectors only.
    pub fn clicks<R: IntoIterator<Item = Detector>>(required: R) -> Self {
        CoincidencePattern::new(required, []).expect("no forbidden detectors")
    }

    /// Adds an exact-count condition.
    pub fn with_count(mut self, detector: Detector, count: u32) -> Result<Self> {
        if self.required.contains(&detector) || self.forbidden.contains(&detector) {
            return Err(Error::InvalidPattern(format!("detector {detector} already constrained")));
        }
        self.counts.insert(detector, count);
        Ok(self)
    }

    pub fn required(&self) -> &BTreeSet<Detector> {
        &self.required
    }

    pub fn forbidden(&self) -> &BTreeSet<Detector> {
        &self.forbidden
    }

    fn condition(&self, detector: &Detector) -> Condition {
        if self.required.contains(detector) {
            Condition::Click
        } else if self.forbidden.contains(detector) {
            Condition::Dark
        } else if let Some(n) = self.counts.get(detector) {
            Condition::Exactly(*n)
        } else {
            Condition::Any
        }
    }

    fn referenced(&self) -> impl Iterator<Item = &Detector> {
        self.required.iter().chain(&self.forbidden).chain(self.counts.keys())
    }
}

impl fmt::Display for CoincidencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.required.iter().map(|d| d.to_string()).collect();
        parts.extend(self.forbidden.iter().map(|d| format!("!{d}")));
        parts.extend(self.counts.iter().map(|(d, n)| format!("{d}={n}")));
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for CoincidencePattern {
    type Err = Error;

    /// `aH+bV` requires clicks, `!aV` forbids one, `aH=2` pins a count.
    fn from_str(s: &str) -> Result<Self> {
        let mut required = Vec::new();
        let mut forbidden = Vec::new();
        let mut counts = Vec::new();
        for token in s.split(['+', ' ']).map(str::trim).filter(|t| !t.is_empty()) {
            if let Some(rest) = token.strip_prefix('!') {
                forbidden.push(rest.parse()?);
            } else if let Some((det, n)) = token.split_once('=') {
                let n = n.parse().map_err(|_| Error::InvalidPattern(format!("bad count in `{token}`")))?;
                counts.push((det.parse()?, n));
            } else {
                required.push(token.parse()?);
            }
        }
        counts.into_iter().try_fold(CoincidencePattern::new(required, forbidden)?, |p, (d, n)| p.with_count(d, n))
    }
}

#[derive(Debug, Clone, Copy)]
enum Condition {
    Click,
    Dark,
    Exactly(u32),
    Any,
}

impl Condition {
    /// Probability that a detector hit by `photons` photons satisfies the
    /// condition when each photon registers with probability `eta`.
    fn probability(self, photons: u32, eta: f64) -> f64 {
        let miss = (1.0 - eta).powi(photons as i32);
        match self {
            Condition::Click => 1.0 - miss,
            Condition::Dark => miss,
            Condition::Exactly(k) if k > photons => 0.0,
            Condition::Exactly(k) => binomial(photons, k) * eta.powi(k as i32) * (1.0 - eta).powi((photons - k) as i32),
            Condition::Any => 1.0,
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Output of a lossless 50/50 splitter `c† → (c† + d†)/√2, d† → (c† − d†)/√2`
/// for input `|n1, n2⟩`, as `(out1, out2, amplitude)`.
pub fn beam_splitter_output(n1: u32, n2: u32) -> Vec<(u32, u32, Complex64)> {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PolarizationUnitary::new(r, r, r, -r).expect("50/50 splitter is unitary").transport(n1, n2)
}

/// The state expressed in the analysis bases of modes a and b.
pub fn analysis_state(
    state: &StateVector,
    basis_a: &PolarizationUnitary,
    basis_b: &PolarizationUnitary,
) -> Result<StateVector> {
    let rotated = rotate(state, ModeSelection::A, basis_a)?;
    rotate(&rotated, ModeSelection::B, basis_b)
}

/// `|⟨ket|ψ⟩|²` with `ψ` expressed in the given analysis bases.
pub fn term_probability(
    state: &StateVector,
    ket: &ModeOccupation,
    basis_a: &PolarizationUnitary,
    basis_b: &PolarizationUnitary,
) -> Result<f64> {
    Ok(analysis_state(state, basis_a, basis_b)?.amplitude(ket).norm_sqr())
}

/// Probability that `pattern` is observed on `state`.
///
/// Distinct Fock kets of the analysis state lead to orthogonal detector
/// outputs, so the result is `Σ_k |ψ_k|² · Π_slots P(slot | n_slot)`, with the
/// splitter branch computed from [`beam_splitter_output`] amplitudes.
pub fn click_pattern_probability(
    state: &StateVector,
    cfg: &DetectionConfig,
    pattern: &CoincidencePattern,
) -> Result<f64> {
    cfg.validate()?;
    let detectors: BTreeSet<Detector> = cfg.detectors().into_iter().collect();
    for d in pattern.referenced() {
        if !detectors.contains(d) {
            return Err(Error::InvalidPattern(format!("detector {d} is not part of this setup")));
        }
    }
    if !cfg.number_resolving && !pattern.counts.is_empty() {
        return Err(Error::InvalidPattern("exact counts need number-resolving detectors".into()));
    }

    let analysed = analysis_state(state, &cfg.basis_a, &cfg.basis_b)?;
    let mut cache: BTreeMap<(Slot, u32), f64> = BTreeMap::new();
    let mut total = 0.0;
    for (ket, amp) in analysed.iter() {
        let mut p = amp.norm_sqr();
        for slot in Slot::ALL {
            let n = ket.get(slot);
            let factor = *cache.entry((slot, n)).or_insert_with(|| slot_probability(slot, n, cfg, pattern));
            p *= factor;
            if p == 0.0 {
                break;
            }
        }
        total += p;
    }
    Ok(total)
}

fn slot_probability(slot: Slot, photons: u32, cfg: &DetectionConfig, pattern: &CoincidencePattern) -> f64 {
    let eta = cfg.efficiency;
    if cfg.splitter_slots.contains(&slot) {
        let c0 = pattern.condition(&Detector::split(slot, 0));
        let c1 = pattern.condition(&Detector::split(slot, 1));
        beam_splitter_output(photons, 0)
            .into_iter()
            .map(|(j, k, amp)| amp.norm_sqr() * c0.probability(j, eta) * c1.probability(k, eta))
            .sum()
    } else {
        pattern.condition(&Detector::direct(slot)).probability(photons, eta)
    }
}

/// Number-blind subtraction of one photon from `(mode, outcome)` in `basis`.
///
/// The detection acts as `Σ_n |n−1⟩⟨n|` on the analysed slot: every component
/// holding at least one such photon loses one, with its amplitude unchanged.
/// Returns the outcome probability `P(n ≥ 1)` and the renormalized remainder,
/// transformed back to the H/V frame.
pub fn project_and_renormalize(
    state: &StateVector,
    mode: SpatialMode,
    outcome: Polarization,
    basis: &PolarizationUnitary,
) -> Result<(f64, StateVector)> {
    let selection = ModeSelection::from(mode);
    let slot = Slot::from_parts(mode, outcome);
    let analysed = rotate(state, selection, basis)?;
    let subtracted = analysed.map_kets(|ket, amp| {
        let n = ket.get(slot);
        (n > 0).then(|| (ket.with(slot, n - 1), amp))
    })?;
    let probability = subtracted.norm_sqr();
    if probability == 0.0 {
        return Err(Error::ZeroProbabilityOutcome);
    }
    let remainder = rotate(&subtracted, selection, &basis.adjoint())?.normalized()?;
    Ok((probability, remainder))
}

/// Schmidt coefficients across the (mode a | mode b) bipartition, descending.
pub fn schmidt_coefficients(state: &StateVector) -> Vec<f64> {
    let mut rows: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut cols: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (ket, _) in state.iter() {
        let r = rows.len();
        rows.entry((ket.a_h, ket.a_v)).or_insert(r);
        let c = cols.len();
        cols.entry((ket.b_h, ket.b_v)).or_insert(c);
    }
    if rows.is_empty() {
        return Vec::new();
    }
    let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
    for (ket, amp) in state.iter() {
        m[(rows[&(ket.a_h, ket.a_v)], cols[&(ket.b_h, ket.b_v)])] = *amp;
    }
    let mut values: Vec<f64> = m.singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let largest = values[0];
    values.retain(|v| *v > largest * 1e-14);
    values
}

/// Von Neumann entropy (bits) of the reduced state with the given Schmidt
/// coefficients.
pub fn entanglement_entropy(coefficients: &[f64]) -> f64 {
    coefficients.iter().map(|c| c * c).filter(|p| *p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Simulated pulsed counting: on each pulse every pattern fires independently
/// with its probability. Deterministic for a given seed.
pub fn monte_carlo_counts(
    probabilities: &BTreeMap<String, f64>,
    pulses: u64,
    seed: u64,
) -> Result<BTreeMap<String, u64>> {
    if let Some((name, p)) = probabilities.iter().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("probability {p} of `{name}` outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<(&String, f64)> = probabilities.iter().map(|(k, p)| (k, *p)).collect();
    let mut counts = vec![0u64; entries.len()];
    for _ in 0..pulses {
        for (count, (_, p)) in counts.iter_mut().zip(&entries) {
            if rng.random::<f64>() < *p {
                *count += 1;
            }
        }
    }
    Ok(entries.into_iter().map(|(k, _)| k.clone()).zip(counts).collect())
}
