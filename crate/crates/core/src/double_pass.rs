//! Two passes of the pump through the crystal with the first-pass pairs fed
//! back in.
//!
//! To second order in the pair operators the two passes give
//!
//! ```text
//! U₂U₁|0⟩ ≈ |0⟩ + (τ₁K₁† + e^{iθ}τ₂K₂†)|0⟩ + ½(τ₁K₁† + e^{iθ}τ₂K₂†)²|0⟩
//! ```
//!
//! Partial distinguishability is a scalar overlap λ: the second pass emits into
//! `K₂† = λK₁† + √(1−λ²)K⊥†`, where `K⊥†` creates a pair in modes orthogonal to
//! the first pass that reach the same detectors. λ = 1 is fully stimulated
//! emission, λ = 0 two independent passes whose pairs can still combine into
//! spurious fourfold coincidences.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::detection::{analysis_state, click_pattern_probability, CoincidencePattern, DetectionConfig, Detector};
use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, Slot, StateVector};
use crate::pdc::{apply_k_dagger, evolve_state, PdcParams};
use crate::polarization::PolarizationUnitary;

pub const PUMP_WAVELENGTH_UM: f64 = 0.390;
pub const DOWN_CONVERTED_WAVELENGTH_UM: f64 = 0.780;
pub const FILTER_BANDWIDTH_UM: f64 = 0.005;

/// Largest per-pass τ accepted by the perturbative model.
pub const PERTURBATIVE_TAU_LIMIT: f64 = 0.3;

pub const TWO_PHOTON_TERMS: [ModeOccupation; 2] = [ModeOccupation::new(1, 0, 0, 1), ModeOccupation::new(0, 1, 1, 0)];
pub const FOUR_PHOTON_TERMS: [ModeOccupation; 3] =
    [ModeOccupation::new(2, 0, 0, 2), ModeOccupation::new(1, 1, 1, 1), ModeOccupation::new(0, 2, 2, 0)];

/// A measured value with its quoted uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub error: f64,
}

impl Measured {
    pub const fn new(value: f64, error: f64) -> Self {
        Measured { value, error }
    }

    /// `|x − value| / error`.
    pub fn sigmas(&self, x: f64) -> f64 {
        (x - self.value).abs() / self.error
    }

    pub fn contains(&self, x: f64) -> bool {
        self.sigmas(x) <= 1.0
    }
}

/// Experimental enhancement at zero delay for the `|1,0;0,1⟩` term.
pub const MEASURED_RATIO_TWO_PHOTON: Measured = Measured::new(1.95, 0.10);
/// Experimental enhancement at zero delay for the `|2,0;0,2⟩` term.
pub const MEASURED_RATIO_2002: Measured = Measured::new(5.3, 0.6);
/// Experimental enhancement at zero delay for the `|1,1;1,1⟩` term.
pub const MEASURED_RATIO_1111: Measured = Measured::new(4.1, 0.3);
/// Experimental second-pass amplification of twofold coincidences.
pub const MEASURED_SECOND_PASS_TWO: Measured = Measured::new(3.95, 0.10);
/// Experimental second-pass amplification of fourfold coincidences.
pub const MEASURED_SECOND_PASS_FOUR: Measured = Measured::new(17.0, 2.0);
/// Lower bound on the experimental fringe visibility.
pub const MEASURED_MIN_VISIBILITY: f64 = 0.97;

/// Measured zero-delay enhancement for `term`, where one was reported.
pub fn measured_ratio(term: &ModeOccupation) -> Option<Measured> {
    match (term.a_h, term.a_v, term.b_h, term.b_v) {
        (1, 0, 0, 1) => Some(MEASURED_RATIO_TWO_PHOTON),
        (2, 0, 0, 2) => Some(MEASURED_RATIO_2002),
        (1, 1, 1, 1) => Some(MEASURED_RATIO_1111),
        _ => None,
    }
}

/// Coherence length `λ²/Δλ` of filtered light.
pub fn coherence_length_um(center_um: f64, bandwidth_um: f64) -> f64 {
    center_um * center_um / bandwidth_um
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePassConfig {
    pub tau1: f64,
    pub tau2: f64,
    /// Relative pump phase between the passes, radians.
    pub theta: f64,
    /// Overlap λ ∈ [0, 1] between first-pass pairs and second-pass emission.
    pub overlap: f64,
    pub pump_wavelength_um: f64,
    pub coherence_length_um: f64,
    pub cutoff: u32,
}

impl Default for DoublePassConfig {
    fn default() -> Self {
        DoublePassConfig {
            tau1: 0.05,
            tau2: 0.05,
            theta: 0.0,
            overlap: 1.0,
            pump_wavelength_um: PUMP_WAVELENGTH_UM,
            coherence_length_um: coherence_length_um(DOWN_CONVERTED_WAVELENGTH_UM, FILTER_BANDWIDTH_UM),
            cutoff: 8,
        }
    }
}

impl DoublePassConfig {
    /// Equal passes of strength `tau`, otherwise defaults.
    pub fn symmetric(tau: f64) -> Self {
        DoublePassConfig { tau1: tau, tau2: tau, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tau) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {tau}")));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter("theta must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::InvalidParameter(format!("overlap {} outside [0, 1]", self.overlap)));
        }
        for (name, len) in
            [("pump_wavelength_um", self.pump_wavelength_um), ("coherence_length_um", self.coherence_length_um)]
        {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {len}")));
            }
        }
        Ok(())
    }

    fn check_perturbative(&self) -> Result<()> {
        self.validate()?;
        if self.tau1 > PERTURBATIVE_TAU_LIMIT || self.tau2 > PERTURBATIVE_TAU_LIMIT {
            return Err(Error::OutOfValidity(format!(
                "perturbative model needs tau <= {PERTURBATIVE_TAU_LIMIT}, got ({}, {})",
                self.tau1, self.tau2
            )));
        }
        Ok(())
    }

    fn check_symmetric(&self) -> Result<()> {
        if (self.tau1 - self.tau2).abs() > 1e-15 * self.tau1.max(self.tau2) || self.tau1 == 0.0 {
            return Err(Error::OutOfValidity(format!("needs tau1 = tau2 > 0, got ({}, {})", self.tau1, self.tau2)));
        }
        Ok(())
    }
}

/// First-order amplitudes of the first-pass pair mode and of the orthogonal
/// second-pass pair mode.
fn pair_mode_amplitudes(cfg: &DoublePassConfig) -> (Complex64, Complex64) {
    let second = Complex64::from_polar(cfg.tau2, cfg.theta);
    let coherent = cfg.tau1 + second * cfg.overlap;
    let orthogonal = second * (1.0 - cfg.overlap * cfg.overlap).max(0.0).sqrt();
    (coherent, orthogonal)
}

/// `K†|0⟩` and `(K†)²|0⟩` in the analysis bases.
struct PairStates {
    one: StateVector,
    two: StateVector,
}

impl PairStates {
    fn new(basis_a: &PolarizationUnitary, basis_b: &PolarizationUnitary) -> Result<Self> {
        let one = apply_k_dagger(&StateVector::vacuum(2))?;
        let two = apply_k_dagger(&one)?;
        Ok(PairStates { one: analysis_state(&one, basis_a, basis_b)?, two: analysis_state(&two, basis_a, basis_b)? })
    }

    /// `Σ |⟨k₁|K†|0⟩⟨k₂|K†|0⟩|²` over ordered splits `k = k₁ + k₂`.
    fn split_weight(&self, ket: &ModeOccupation) -> f64 {
        self.one
            .iter()
            .filter_map(|(k1, a1)| {
                let k2 = ModeOccupation::new(
                    ket.a_h.checked_sub(k1.a_h)?,
                    ket.a_v.checked_sub(k1.a_v)?,
                    ket.b_h.checked_sub(k1.b_h)?,
                    ket.b_v.checked_sub(k1.b_v)?,
                );
                Some((a1 * self.one.amplitude(&k2)).norm_sqr())
            })
            .sum()
    }

    fn probability(&self, cfg: &DoublePassConfig, ket: &ModeOccupation) -> Result<f64> {
        let (a, b) = pair_mode_amplitudes(cfg);
        match ket.total() {
            2 => Ok((a.norm_sqr() + b.norm_sqr()) * self.one.amplitude(ket).norm_sqr()),
            4 => {
                let direct = self.two.amplitude(ket);
                let both_first = (a * a * 0.5 * direct).norm_sqr();
                let both_second = (b * b * 0.5 * direct).norm_sqr();
                let mixed = (a * b).norm_sqr() * self.split_weight(ket);
                Ok(both_first + mixed + both_second)
            }
            n => Err(Error::InvalidParameter(format!(
                "leading-order model covers 2- and 4-photon terms, got {n} photons in {ket}"
            ))),
        }
    }
}

/// Leading-order detection probability of a 2- or 4-photon ket measured in
/// the given analysis bases.
pub fn perturbative_term_probability(
    cfg: &DoublePassConfig,
    ket: &ModeOccupation,
    basis_a: &PolarizationUnitary,
    basis_b: &PolarizationUnitary,
) -> Result<f64> {
    cfg.check_perturbative()?;
    PairStates::new(basis_a, basis_b)?.probability(cfg, ket)
}

/// Leading-order probabilities of the five pair terms, in common analysis
/// bases per mode.
pub fn perturbative_probabilities_in_basis(
    cfg: &DoublePassConfig,
    basis_a: &PolarizationUnitary,
    basis_b: &PolarizationUnitary,
) -> Result<BTreeMap<ModeOccupation, f64>> {
    cfg.check_perturbative()?;
    let pairs = PairStates::new(basis_a, basis_b)?;
    TWO_PHOTON_TERMS.iter().chain(&FOUR_PHOTON_TERMS).map(|ket| Ok((*ket, pairs.probability(cfg, ket)?))).collect()
}

/// Leading-order probabilities of the five pair terms in the H/V basis.
pub fn perturbative_probabilities(cfg: &DoublePassConfig) -> Result<BTreeMap<ModeOccupation, f64>> {
    let hv = PolarizationUnitary::identity();
    perturbative_probabilities_in_basis(cfg, &hv, &hv)
}

/// Per-term enhancement of fully overlapping, in-phase passes over
/// distinguishable passes, in the given analysis bases.
pub fn amplification_ratios_in_basis(
    cfg: &DoublePassConfig,
    basis_a: &PolarizationUnitary,
    basis_b: &PolarizationUnitary,
) -> Result<BTreeMap<ModeOccupation, f64>> {
    cfg.check_symmetric()?;
    let stimulated = DoublePassConfig { overlap: 1.0, theta: 0.0, ..*cfg };
    let independent = DoublePassConfig { overlap: 0.0, ..*cfg };
    let num = perturbative_probabilities_in_basis(&stimulated, basis_a, basis_b)?;
    let den = perturbative_probabilities_in_basis(&independent, basis_a, basis_b)?;
    Ok(num.into_iter().map(|(k, p)| (k, p / den[&k])).collect())
}

/// Per-term zero-delay enhancement in the H/V basis: 2 for the 2-photon
/// terms, 4 for `|1,1;1,1⟩` and 16/3 for `|2,0;0,2⟩`, `|0,2;2,0⟩`.
pub fn amplification_ratios(cfg: &DoublePassConfig) -> Result<BTreeMap<ModeOccupation, f64>> {
    let hv = PolarizationUnitary::identity();
    amplification_ratios_in_basis(cfg, &hv, &hv)
}

/// Twofold and fourfold gains of a configuration over the first pass alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub two_photon: f64,
    pub four_photon: f64,
}

/// Leading-order gain of `cfg` over its first pass alone, summed over the
/// 2-photon and over the 4-photon terms. In-phase, fully overlapping equal
/// passes give `(4, 16)`.
pub fn second_pass_gain(cfg: &DoublePassConfig) -> Result<Gains> {
    let both = perturbative_probabilities(cfg)?;
    let single = perturbative_probabilities(&DoublePassConfig { tau2: 0.0, ..*cfg })?;
    let ratio = |terms: &[ModeOccupation]| {
        let num: f64 = terms.iter().map(|k| both[k]).sum();
        let den: f64 = terms.iter().map(|k| single[k]).sum();
        num / den
    };
    Ok(Gains { two_photon: ratio(&TWO_PHOTON_TERMS), four_photon: ratio(&FOUR_PHOTON_TERMS) })
}

/// Sequential exact evolution: first pass with τ₁ at pump phase 0, second
/// pass with τ₂ at pump phase θ, feedback loop acting as the identity on the
/// pair modes. Only the fully overlapping case has a single-mode description.
pub fn exact_double_pass(cfg: &DoublePassConfig) -> Result<StateVector> {
    cfg.validate()?;
    if cfg.overlap != 1.0 {
        return Err(Error::OutOfValidity(format!("exact evolution models overlap = 1 only, got {}", cfg.overlap)));
    }
    PdcParams::new(cfg.tau1 + cfg.tau2, 0.0, cfg.cutoff)?;
    let first = evolve_state(&StateVector::vacuum(cfg.cutoff), cfg.tau1, 0.0)?;
    evolve_state(&first, cfg.tau2, cfg.theta)?.normalized()
}

/// First pass alone, exact.
pub fn exact_single_pass(cfg: &DoublePassConfig) -> Result<StateVector> {
    exact_double_pass(&DoublePassConfig { tau2: 0.0, ..*cfg })
}

/// Twofold (`aH`, `bV` behind polarizers) and fourfold (`aH, aV, bH, bV`
/// behind polarizing beam splitters) coincidence patterns.
pub fn twofold_pattern() -> CoincidencePattern {
    CoincidencePattern::clicks([Detector::direct(Slot::AH), Detector::direct(Slot::BV)])
}

pub fn fourfold_pattern() -> CoincidencePattern {
    CoincidencePattern::clicks(Slot::ALL.map(Detector::direct))
}

/// Gains of the exact double pass over the exact first pass, measured as
/// twofold and fourfold coincidence probabilities with `detection`.
pub fn exact_coincidence_gain(cfg: &DoublePassConfig, detection: &DetectionConfig) -> Result<Gains> {
    let both = exact_double_pass(cfg)?;
    let single = exact_single_pass(cfg)?;
    let ratio = |pattern: &CoincidencePattern| -> Result<f64> {
        Ok(click_pattern_probability(&both, detection, pattern)?
            / click_pattern_probability(&single, detection, pattern)?)
    };
    Ok(Gains { two_photon: ratio(&twofold_pattern())?, four_photon: ratio(&fourfold_pattern())? })
}

/// Gains of the exact double pass over the exact first pass, measured as
/// total 2-photon and 4-photon term probabilities.
pub fn exact_term_gain(cfg: &DoublePassConfig) -> Result<Gains> {
    let both = exact_double_pass(cfg)?;
    let single = exact_single_pass(cfg)?;
    let weight = |s: &StateVector, n| s.pair_block(n).norm_sqr();
    Ok(Gains { two_photon: weight(&both, 1) / weight(&single, 1), four_photon: weight(&both, 2) / weight(&single, 2) })
}

/// Interference order of a fringe: pair number of the detected term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FringeOrder {
    Two,
    Four,
}

impl FringeOrder {
    pub fn exponent(self) -> i32 {
        match self {
            FringeOrder::Two => 1,
            FringeOrder::Four => 2,
        }
    }

    /// Term and analysis basis used for the scan.
    pub fn term(self) -> (ModeOccupation, PolarizationUnitary, &'static str) {
        match self {
            FringeOrder::Two => (TWO_PHOTON_TERMS[0], PolarizationUnitary::diagonal(), "+45/-45"),
            FringeOrder::Four => (FOUR_PHOTON_TERMS[1], PolarizationUnitary::identity(), "H/V"),
        }
    }
}

impl TryFrom<u32> for FringeOrder {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            2 => Ok(FringeOrder::Two),
            4 => Ok(FringeOrder::Four),
            _ => Err(Error::InvalidParameter(format!("fringe order must be 2 or 4, got {n}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub term: ModeOccupation,
    pub basis: String,
    pub rows: Vec<ScanPoint>,
}

impl ScanResult {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }
}

fn check_increasing(xs: &[f64], name: &str) -> Result<()> {
    if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("{name} must be finite, non-empty and strictly increasing")));
    }
    Ok(())
}

/// Term probability as the relative pump phase is varied, for overlapping
/// passes. Equal passes give `∝ (1 + cos θ)` for order two and
/// `∝ (1 + cos θ)²` for order four.
pub fn fringe_scan(cfg: &DoublePassConfig, thetas: &[f64], order: FringeOrder) -> Result<ScanResult> {
    if cfg.overlap != 1.0 {
        return Err(Error::OutOfValidity(format!("fringes need overlap = 1, got {}", cfg.overlap)));
    }
    check_increasing(thetas, "thetas")?;
    cfg.check_perturbative()?;
    let (term, basis, label) = order.term();
    let pairs = PairStates::new(&basis, &basis)?;
    let rows = thetas
        .iter()
        .map(|&theta| {
            let value = pairs.probability(&DoublePassConfig { theta, ..*cfg }, &term)?;
            Ok(ScanPoint { x: theta, value })
        })
        .collect::<Result<_>>()?;
    Ok(ScanResult { term, basis: label.to_string(), rows })
}

/// Least-squares fit of `value = scale·(1 + V cos θ)^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub scale: f64,
    pub visibility: f64,
    /// `‖value − model‖ / ‖value‖`.
    pub relative_residual: f64,
}

/// Fits `scan` with exponent `k` of `order` by linear least squares on
/// `value^{1/k} = a + b cos θ`.
pub fn fit_fringe(scan: &ScanResult, order: FringeOrder) -> FringeFit {
    let k = order.exponent();
    let pts: Vec<(f64, f64)> =
        scan.rows.iter().map(|r| (r.x.cos(), r.value.max(0.0).powf(1.0 / f64::from(k)))).collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
    let det = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / det;
    let a = (sy - b * sx) / n;
    let (mut res, mut norm) = (0.0, 0.0);
    for r in &scan.rows {
        let model = (a + b * r.x.cos()).powi(k);
        res += (r.value - model).powi(2);
        norm += r.value.powi(2);
    }
    FringeFit { scale: a.powi(k), visibility: b / a, relative_residual: (res / norm).sqrt() }
}

/// `(max − min)/(max + min)`.
pub fn visibility(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / (max + min)
}

/// Gaussian coherence envelope `exp(−d²/2ℓ²)` used as the overlap at optical
/// delay `d`.
pub fn coherence_envelope(cfg: &DoublePassConfig, delay_um: f64) -> f64 {
    (-delay_um * delay_um / (2.0 * cfg.coherence_length_um * cfg.coherence_length_um)).exp()
}

/// Pump phase at optical delay `d`: `θ + 2π d/λ_pump`.
pub fn phase_at_delay(cfg: &DoublePassConfig, delay_um: f64) -> f64 {
    cfg.theta + 2.0 * PI * delay_um / cfg.pump_wavelength_um
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayPoint {
    pub delay_um: f64,
    /// Upper envelope (in-phase passes).
    pub rate_max: f64,
    /// Lower envelope (passes in antiphase).
    pub rate_min: f64,
    pub rate_at_theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayScan {
    pub term: ModeOccupation,
    pub rows: Vec<DelayPoint>,
}

/// Term probability versus optical delay between the returning pump and the
/// fed-back pairs. Every term probability grows with `|τ₁ + λe^{iθ}τ₂|`, so
/// the envelopes are the values at θ = 0 and θ = π.
pub fn delay_scan(cfg: &DoublePassConfig, delays_um: &[f64], term: &ModeOccupation) -> Result<DelayScan> {
    check_increasing(delays_um, "delays")?;
    cfg.check_perturbative()?;
    let hv = PolarizationUnitary::identity();
    let pairs = PairStates::new(&hv, &hv)?;
    let rows = delays_um
        .iter()
        .map(|&delay_um| {
            let overlap = coherence_envelope(cfg, delay_um);
            let at = |theta| pairs.probability(&DoublePassConfig { overlap, theta, ..*cfg }, term);
            Ok(DelayPoint {
                delay_um,
                rate_max: at(0.0)?,
                rate_min: at(PI)?,
                rate_at_theta: at(phase_at_delay(cfg, delay_um))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DelayScan { term: *term, rows })
}

/// Evenly spaced grid of `steps ≥ 2` points from `start` to `stop`.
pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..steps).map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64).collect(),
    }
}
