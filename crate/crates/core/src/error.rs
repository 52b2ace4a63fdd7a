use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical input violates its invariant (negative temperature, N = 0, ...).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bath with vanishing reorganization energy, or W = T_S xi_S + T_D xi_D = 0.
    #[error("singular bath: {0}")]
    SingularBath(String),

    /// A transition rate underflowed to zero or below the normal range, splitting the ladder in two.
    #[error("disconnected ladder: rate across the gap at m = {m} underflowed")]
    DisconnectedLadder { m: f64 },

    /// Link rates span more than double precision: κ⁺κ⁻ underflows on some link.
    #[error("rate range underflow: product of link rates at m = {m} is below double precision")]
    RateRangeUnderflow { m: f64 },

    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    /// Finite-difference stencil did not settle; both estimates are reported.
    #[error("finite-difference stencil not converged: estimates {coarse:e} and {fine:e}")]
    StencilNotConverged { coarse: f64, fine: f64 },

    /// The exact bath kernel would need an unreasonably long time grid.
    #[error("outside NIBA validity: {0}")]
    OutsideValidity(String),

    #[error("time grid too short: e^-Re Q(t_max) = {remainder:e} exceeds {threshold:e}; increase t_max")]
    Truncation { remainder: f64, threshold: f64 },

    /// The objective has no interior maximum on the coarse grid.
    #[error("monotone objective: maximum at grid boundary alpha = {alpha} (value {value:e})")]
    MonotoneObjective { alpha: f64, value: f64 },

    #[error("objective is not unimodal on the coarse grid ({sign_changes} slope sign changes)")]
    NotUnimodal { sign_changes: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. } | Error::Domain(_))
    }
}
