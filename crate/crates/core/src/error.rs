use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatError {
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("mode `{label}` is {found}, expected {expected}")]
    WrongModeKind { label: String, expected: &'static str, found: &'static str },
    #[error("invalid dimension {dim} for mode `{label}`: {reason}")]
    InvalidDimension { label: String, dim: usize, reason: &'static str },
    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),
    #[error("operands act on different Hilbert spaces")]
    SpaceMismatch,
    #[error("truncation too small: norm defect {defect:.3e} exceeds {limit:.1e}")]
    Truncation { defect: f64, limit: f64 },
    #[error("ill-conditioned {what}: condition number {cond:.3e}")]
    IllConditioned { what: &'static str, cond: f64 },
    #[error("operator is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("trace drift {drift:.3e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },
    #[error("fit rejected: {0}")]
    Fit(String),
    #[error("rejected: {0}")]
    Rejected(String),
}

pub type Result<T> = std::result::Result<T, CatError>;
