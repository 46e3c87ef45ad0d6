use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Hermite fields are built on different velocity bases")]
    BasisMismatch,

    #[error("field has {found} samples, grid expects {expected}")]
    GridMismatch { expected: usize, found: usize },

    #[error("pressure iteration did not converge after {} iterations (last relative residual {:.3e})", residuals.len(), residuals.last().copied().unwrap_or(f64::NAN))]
    PressureNotConverged { residuals: Vec<f64> },

    #[error("density degenerated at t = {t}: min(1 + rho) = {min}")]
    DegenerateDensity { t: f64, min: f64 },

    #[error("non-finite value in {what} at t = {t}")]
    NonFinite { t: f64, what: &'static str },

    #[error("time step underflow at t = {t}: dt = {dt:.3e}")]
    TimeStepUnderflow { t: f64, dt: f64 },

    #[error("initial amplitude infeasible: {0}")]
    InfeasibleAmplitude(String),

    #[error("audit checks failed: {0}")]
    AuditFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PressureNotConverged { .. }
                | Error::DegenerateDensity { .. }
                | Error::NonFinite { .. }
                | Error::TimeStepUnderflow { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::BasisMismatch => "basis_mismatch",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::PressureNotConverged { .. } => "pressure_not_converged",
            Error::DegenerateDensity { .. } => "degenerate_density",
            Error::NonFinite { .. } => "non_finite",
            Error::TimeStepUnderflow { .. } => "time_step_underflow",
            Error::InfeasibleAmplitude(_) => "infeasible_amplitude",
            Error::AuditFailed(_) => "audit_failed",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
