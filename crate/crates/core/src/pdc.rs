//! Pair creation `K† = a_H† b_V† − a_V† b_H†`, its adjoint, and the down-converted
//! state produced from the vacuum.
//!
//! The interaction `H = e^{iφ}K† + e^{−iφ}K` (coupling absorbed into the
//! dimensionless interaction parameter τ) is evolved with `exp(+iτH)`. Starting
//! from the vacuum this gives
//!
//! ```text
//! |ψ⟩ = (1 − tanh²τ) Σ_n (i e^{iφ} tanh τ)^n Σ_m (−1)^m |n−m, m; m, n−m⟩
//! ```
//!
//! so every n-pair block is an equally weighted singlet with a block phase
//! `(i e^{iφ})^n`. For `φ = −π/2` the amplitudes are real.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Ladder, ModeOccupation, Slot, StateVector};

/// Default bound on `tanh(τ)^(cutoff+1)·(cutoff+2)`.
pub const DEFAULT_TRUNCATION_TOLERANCE: f64 = 1e-4;

const SERIES_TERM_CAP: usize = 200;
const SERIES_RESIDUAL_LIMIT: f64 = 1e-12;
const SERIES_TERM_FLOOR: f64 = 1e-18;

/// Single-pass down-conversion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdcParams {
    tau: f64,
    pump_phase: f64,
    cutoff: u32,
    tolerance: f64,
}

impl PdcParams {
    pub fn new(tau: f64, pump_phase: f64, cutoff: u32) -> Result<Self> {
        Self::with_tolerance(tau, pump_phase, cutoff, DEFAULT_TRUNCATION_TOLERANCE)
    }

    /// Like [`PdcParams::new`] with an explicit truncation tolerance.
    pub fn with_tolerance(tau: f64, pump_phase: f64, cutoff: u32, tolerance: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be finite and >= 0, got {tau}")));
        }
        if !pump_phase.is_finite() {
            return Err(Error::InvalidParameter("pump_phase must be finite".into()));
        }
        if tau > 0.0 && cutoff == 0 {
            return Err(Error::InvalidParameter("cutoff must be >= 1 when tau > 0".into()));
        }
        let bound = truncation_bound(tau, cutoff);
        if bound > tolerance {
            return Err(Error::OutOfValidity(format!(
                "cutoff {cutoff} too small for tau {tau}: tanh^(cutoff+1)·(cutoff+2) = {bound:e} > {tolerance:e}"
            )));
        }
        Ok(PdcParams { tau, pump_phase, cutoff, tolerance })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pump_phase(&self) -> f64 {
        self.pump_phase
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// `tanh(τ)^(cutoff+1)·(cutoff+2)`, the truncation adequacy measure.
pub fn truncation_bound(tau: f64, cutoff: u32) -> f64 {
    tau.tanh().powi(cutoff as i32 + 1) * f64::from(cutoff + 2)
}

/// Smallest cutoff meeting `tolerance` for the given τ.
pub fn minimal_cutoff(tau: f64, tolerance: f64) -> u32 {
    (1..10_000).find(|&c| truncation_bound(tau, c) <= tolerance).unwrap_or(10_000)
}

fn raise_pair(state: &StateVector, first: Slot, second: Slot) -> Result<StateVector> {
    state.apply_ladder(second, Ladder::Raise)?.apply_ladder(first, Ladder::Raise)
}

fn lower_pair(state: &StateVector, first: Slot, second: Slot) -> Result<StateVector> {
    state.apply_ladder(second, Ladder::Lower)?.apply_ladder(first, Ladder::Lower)
}

/// `K† = a_H† b_V† − a_V† b_H†`.
pub fn apply_k_dagger(state: &StateVector) -> Result<StateVector> {
    let hv = raise_pair(state, Slot::AH, Slot::BV)?;
    let vh = raise_pair(state, Slot::AV, Slot::BH)?;
    Ok(hv.add_scaled(&vh, Complex64::new(-1.0, 0.0)))
}

/// `K = a_H b_V − a_V b_H`.
pub fn apply_k(state: &StateVector) -> Result<StateVector> {
    let hv = lower_pair(state, Slot::AH, Slot::BV)?;
    let vh = lower_pair(state, Slot::AV, Slot::BH)?;
    Ok(hv.add_scaled(&vh, Complex64::new(-1.0, 0.0)))
}

/// `K†` projected onto the truncated space: contributions that would leave it
/// are discarded. Used only as the generator of the truncated evolution.
fn apply_k_dagger_projected(state: &StateVector) -> StateVector {
    let cutoff = state.cutoff();
    state
        .map_kets(|ket, amp| {
            let hv = ket.with(Slot::AH, ket.a_h + 1).with(Slot::BV, ket.b_v + 1);
            let vh = ket.with(Slot::AV, ket.a_v + 1).with(Slot::BH, ket.b_h + 1);
            let c_hv = f64::from((ket.a_h + 1) * (ket.b_v + 1)).sqrt();
            let c_vh = -f64::from((ket.a_v + 1) * (ket.b_h + 1)).sqrt();
            [(hv, amp * c_hv), (vh, amp * c_vh)].into_iter().filter(move |(k, _)| k.fits(cutoff))
        })
        .expect("projected kets fit the cutoff")
}

/// `(e^{iφ}K† + e^{−iφ}K)` on the truncated space.
fn apply_hamiltonian(state: &StateVector, phase: f64) -> Result<StateVector> {
    let up = apply_k_dagger_projected(state);
    let down = apply_k(state)?;
    Ok(up.scaled(Complex64::from_polar(1.0, phase)).add_scaled(&down, Complex64::from_polar(1.0, -phase)))
}

/// Upper bound on the operator norm of the truncated Hamiltonian.
fn hamiltonian_norm_bound(cutoff: u32) -> f64 {
    4.0 * f64::from(cutoff + 1)
}

/// `exp(iτ(e^{iφ}K† + e^{−iφ}K))` applied to `state`, on its truncated space.
///
/// τ is split into steps with `τ_step·‖H‖ ≤ 1`; on each step the Taylor series is
/// summed until the term norm drops below machine precision. A step whose last
/// term still exceeds `1e−12` at the iteration cap is a convergence failure.
pub fn evolve_state(state: &StateVector, tau: f64, phase: f64) -> Result<StateVector> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be finite and >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(state.clone());
    }
    let steps = (tau * hamiltonian_norm_bound(state.cutoff())).ceil().max(1.0) as usize;
    let dt = tau / steps as f64;
    let mut current = state.clone();
    for _ in 0..steps {
        current = series_step(&current, dt, phase)?;
    }
    Ok(current)
}

fn series_step(state: &StateVector, dt: f64, phase: f64) -> Result<StateVector> {
    let mut sum = state.clone();
    let mut term = state.clone();
    let mut residual = term.norm();
    for k in 1..=SERIES_TERM_CAP {
        term = apply_hamiltonian(&term, phase)?.scaled(Complex64::new(0.0, dt / k as f64));
        residual = term.norm();
        sum = sum.add_scaled(&term, Complex64::new(1.0, 0.0));
        if residual <= SERIES_TERM_FLOOR * sum.norm().max(1.0) {
            return Ok(sum);
        }
    }
    if residual > SERIES_RESIDUAL_LIMIT {
        return Err(Error::ConvergenceFailure { residual, iterations: SERIES_TERM_CAP });
    }
    Ok(sum)
}

/// Exact single-pass output from the vacuum, normalized.
pub fn evolve_exact(params: &PdcParams) -> Result<StateVector> {
    evolve_state(&StateVector::vacuum(params.cutoff), params.tau, params.pump_phase)?.normalized()
}

/// Closed-form down-conversion state truncated at `params.cutoff` pairs and
/// normalized numerically.
pub fn state_analytic(params: &PdcParams) -> StateVector {
    let t = params.tau.tanh();
    let pair_phase = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, params.pump_phase);
    let mut terms = Vec::new();
    let mut block = Complex64::new(1.0, 0.0);
    for n in 0..=params.cutoff {
        if n > 0 {
            block *= pair_phase * t;
        }
        if block == Complex64::new(0.0, 0.0) {
            break;
        }
        for m in 0..=n {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            terms.push((ModeOccupation::new(n - m, m, m, n - m), block * sign));
        }
    }
    StateVector::from_amplitudes(params.cutoff, terms)
        .and_then(|s| s.normalized())
        .expect("pair kets lie within the cutoff")
}

/// Photon-pair number distribution `[(n, P(n))]` for `n = 0..=cutoff`.
pub fn pair_distribution(state: &StateVector) -> Result<Vec<(u32, f64)>> {
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-10 {
        return Err(Error::UnsupportedState(format!("state is not normalized (norm² = {norm_sqr})")));
    }
    let mut probs = vec![0.0; state.cutoff() as usize + 1];
    for (ket, amp) in state.iter() {
        if !ket.is_pair_ket() {
            return Err(Error::UnsupportedState(format!("ket {ket} is not of the form |n−m,m;m,n−m>")));
        }
        probs[(ket.a_h + ket.a_v) as usize] += amp.norm_sqr();
    }
    Ok(probs.into_iter().enumerate().map(|(n, p)| (n as u32, p)).collect())
}

/// `Σ n·P(n)`.
pub fn mean_pair_number(distribution: &[(u32, f64)]) -> f64 {
    distribution.iter().map(|(n, p)| f64::from(*n) * p).sum()
}

/// Index of the most probable pair number (first one on ties).
pub fn distribution_peak(distribution: &[(u32, f64)]) -> u32 {
    distribution.iter().fold((0, f64::NEG_INFINITY), |best, &(n, p)| if p > best.1 { (n, p) } else { best }).0
}

/// The normalized n-pair singlet `(n+1)^{-1/2} Σ_m (−1)^m |n−m, m; m, n−m⟩`.
pub fn singlet_term(n: u32, cutoff: u32) -> Result<StateVector> {
    if n > cutoff {
        return Err(Error::InvalidParameter(format!("singlet order {n} exceeds cutoff {cutoff}")));
    }
    let weight = 1.0 / f64::from(n + 1).sqrt();
    StateVector::from_amplitudes(
        cutoff,
        (0..=n).map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            (ModeOccupation::new(n - m, m, m, n - m), Complex64::new(sign * weight, 0.0))
        }),
    )
}
