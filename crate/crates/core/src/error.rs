use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("equal damping required (gamma1 = gamma2 = gamma3), got {0:?}")]
    UnequalDamping([f64; 3]),

    #[error("non-finite state at step {step} (path {path}, seed {seed})")]
    NonFinite { step: usize, path: u64, seed: u64 },

    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("integration window [0, {tau_f}] not covered by grid [{t_start}, {t_end}]")]
    WindowOutOfRange { tau_f: f64, t_start: f64, t_end: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
