//! Polarization transformations on the `(H, V)` pair of each spatial mode.
//!
//! A [`PolarizationUnitary`] acts by transporting creation operators,
//! `h† → u_hh·h† + u_vh·v†` and `v† → u_hv·h† + u_vv·v†`, so that applying `U1`
//! and then `U2` equals applying the product `U2·U1`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, SpatialMode, StateVector};

const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Which spatial modes a transformation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    A,
    B,
    Both,
}

impl ModeSelection {
    fn includes(self, mode: SpatialMode) -> bool {
        matches!(
            (self, mode),
            (ModeSelection::Both, _) | (ModeSelection::A, SpatialMode::A) | (ModeSelection::B, SpatialMode::B)
        )
    }
}

impl From<SpatialMode> for ModeSelection {
    fn from(mode: SpatialMode) -> Self {
        match mode {
            SpatialMode::A => ModeSelection::A,
            SpatialMode::B => ModeSelection::B,
        }
    }
}

/// A 2×2 unitary on the `(H, V)` modes of one spatial mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationUnitary {
    u_hh: Complex64,
    u_hv: Complex64,
    u_vh: Complex64,
    u_vv: Complex64,
}

impl PolarizationUnitary {
    /// Checks unitarity to `1e−12` per entry of `U·U†`.
    pub fn new(u_hh: Complex64, u_hv: Complex64, u_vh: Complex64, u_vv: Complex64) -> Result<Self> {
        let u = PolarizationUnitary { u_hh, u_hv, u_vh, u_vv };
        let deviation = u.unitarity_deviation();
        if deviation.is_nan() || deviation > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn identity() -> Self {
        Self::real_rotation(0.0)
    }

    /// Real rotation with rows `(cos α, sin α; −sin α, cos α)`.
    pub fn real_rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        PolarizationUnitary {
            u_hh: Complex64::new(c, 0.0),
            u_hv: Complex64::new(s, 0.0),
            u_vh: Complex64::new(-s, 0.0),
            u_vv: Complex64::new(c, 0.0),
        }
    }

    /// The ±45° analysis basis.
    pub fn diagonal() -> Self {
        Self::real_rotation(FRAC_PI_4)
    }

    /// General U(2) element `e^{iδ}·[[e^{iα}cos θ, e^{iβ}sin θ], [−e^{−iβ}sin θ, e^{−iα}cos θ]]`.
    pub fn from_angles(theta: f64, alpha: f64, beta: f64, delta: f64) -> Self {
        let g = Complex64::from_polar(1.0, delta);
        let (s, c) = theta.sin_cos();
        PolarizationUnitary {
            u_hh: g * Complex64::from_polar(c, alpha),
            u_hv: g * Complex64::from_polar(s, beta),
            u_vh: -g * Complex64::from_polar(s, -beta),
            u_vv: g * Complex64::from_polar(c, -alpha),
        }
    }

    /// Row-major entries `[u_hh, u_hv, u_vh, u_vv]`.
    pub fn entries(&self) -> [Complex64; 4] {
        [self.u_hh, self.u_hv, self.u_vh, self.u_vv]
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &PolarizationUnitary) -> Self {
        PolarizationUnitary {
            u_hh: self.u_hh * rhs.u_hh + self.u_hv * rhs.u_vh,
            u_hv: self.u_hh * rhs.u_hv + self.u_hv * rhs.u_vv,
            u_vh: self.u_vh * rhs.u_hh + self.u_vv * rhs.u_vh,
            u_vv: self.u_vh * rhs.u_hv + self.u_vv * rhs.u_vv,
        }
    }

    pub fn adjoint(&self) -> Self {
        PolarizationUnitary {
            u_hh: self.u_hh.conj(),
            u_hv: self.u_vh.conj(),
            u_vh: self.u_hv.conj(),
            u_vv: self.u_vv.conj(),
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.u_hh * self.u_vv - self.u_hv * self.u_vh
    }

    fn unitarity_deviation(&self) -> f64 {
        let p = self.compose(&self.adjoint());
        let one = Complex64::new(1.0, 0.0);
        [(p.u_hh - one).norm(), p.u_hv.norm(), p.u_vh.norm(), (p.u_vv - one).norm()].into_iter().fold(0.0, f64::max)
    }

    /// Expansion of `(h†)^n_h (v†)^n_v |0⟩ / √(n_h! n_v!)` after transport, as
    /// `(new n_h, new n_v, amplitude)`.
    pub(crate) fn transport(&self, n_h: u32, n_v: u32) -> Vec<(u32, u32, Complex64)> {
        let total = n_h + n_v;
        let mut out = vec![Complex64::new(0.0, 0.0); total as usize + 1];
        for j in 0..=n_h {
            // j photons of the h† factors end up in H
            let a = self.u_hh.powu(j) * self.u_vh.powu(n_h - j) * binomial(n_h, j);
            for k in 0..=n_v {
                let b = self.u_hv.powu(k) * self.u_vv.powu(n_v - k) * binomial(n_v, k);
                out[(j + k) as usize] += a * b;
            }
        }
        let norm_in = ln_factorial(n_h) + ln_factorial(n_v);
        out.into_iter()
            .enumerate()
            .filter(|(_, amp)| *amp != Complex64::new(0.0, 0.0))
            .map(|(h, amp)| {
                let h = h as u32;
                let v = total - h;
                let scale = (0.5 * (ln_factorial(h) + ln_factorial(v) - norm_in)).exp();
                (h, v, amp * scale)
            })
            .collect()
    }
}

impl fmt::Display for PolarizationUnitary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.u_hh, self.u_hv, self.u_vh, self.u_vv)
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp().round()
}

/// Applies `unitary` to the selected spatial mode(s). Norm is preserved.
pub fn rotate(state: &StateVector, modes: ModeSelection, unitary: &PolarizationUnitary) -> Result<StateVector> {
    let unitary = PolarizationUnitary::new(unitary.u_hh, unitary.u_hv, unitary.u_vh, unitary.u_vv)?;
    let one = Complex64::new(1.0, 0.0);
    state.map_kets(|ket, amp| {
        let a_terms = if modes.includes(SpatialMode::A) {
            unitary.transport(ket.a_h, ket.a_v)
        } else {
            vec![(ket.a_h, ket.a_v, one)]
        };
        let b_terms = if modes.includes(SpatialMode::B) {
            unitary.transport(ket.b_h, ket.b_v)
        } else {
            vec![(ket.b_h, ket.b_v, one)]
        };
        let mut out = Vec::with_capacity(a_terms.len() * b_terms.len());
        for &(ah, av, ca) in &a_terms {
            for &(bh, bv, cb) in &b_terms {
                out.push((ModeOccupation::new(ah, av, bh, bv), amp * ca * cb));
            }
        }
        out
    })
}

/// Exchanges the H and V occupations of the selected spatial mode(s).
pub fn half_wave_swap(state: &StateVector, modes: ModeSelection) -> StateVector {
    state
        .map_kets(|ket, amp| {
            let mut k = *ket;
            if modes.includes(SpatialMode::A) {
                std::mem::swap(&mut k.a_h, &mut k.a_v);
            }
            if modes.includes(SpatialMode::B) {
                std::mem::swap(&mut k.b_h, &mut k.b_v);
            }
            [(k, amp)]
        })
        .expect("slot exchange preserves the cutoff")
}
