use crate::fock::Slot;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("occupation {count} in slot {slot} exceeds the truncation (cutoff {cutoff} pairs)")]
    CutoffExceeded { slot: Slot, count: u32, cutoff: u32 },

    #[error("power series did not converge: residual {residual:e} after {iterations} terms")]
    ConvergenceFailure { residual: f64, iterations: usize },

    #[error("state is not supported on the pair structure: {0}")]
    UnsupportedState(String),

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("outside the validity range: {0}")]
    OutOfValidity(String),

    #[error("invalid coincidence pattern: {0}")]
    InvalidPattern(String),

    #[error("measurement outcome has zero probability")]
    ZeroProbabilityOutcome,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
