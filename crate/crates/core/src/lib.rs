//! Numerical model of stimulated emission of polarization-entangled photon
//! pairs in type-II parametric down-conversion.
//!
//! The crate is organised bottom-up:
//!
//! - [`fock`]: truncated four-mode Fock space (modes `aH, aV, bH, bV`), sparse
//!   state vectors and single-mode ladder operators.
//! - [`pdc`]: the pair operators `K†`/`K`, exact Hamiltonian evolution, the
//!   closed-form down-conversion state and its pair-number distribution.
//! - [`polarization`]: per-spatial-mode polarization unitaries and the
//!   half-wave H↔V exchange.
//! - [`double_pass`]: two passes through the crystal, with relative pump phase
//!   and partial distinguishability, plus delay and phase scans.
//! - [`detection`]: post-selected term probabilities, click patterns behind
//!   polarizers, PBSs and 50/50 splitters, single-photon subtraction, Schmidt
//!   analysis and Monte-Carlo counting.
//! - [`runner`]: scenario configuration and CSV/JSON output used by the
//!   `easer-sim` binary.

pub mod detection;
pub mod double_pass;
mod error;
pub mod fock;
pub mod pdc;
pub mod polarization;
pub mod runner;

pub use error::{Error, Result};
pub use fock::{ModeOccupation, Slot, StateVector};
