use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("direction {mu} out of range (basis has {directions} directions)")]
    DirectionOutOfRange { mu: usize, directions: usize },
    #[error("mode number {n} exceeds level cutoff {cutoff}")]
    ModeAboveCutoff { n: i64, cutoff: usize },
    #[error("mass level r = {0} is not in the spectrum of the truncated mass operator")]
    NotInSpectrum(String),
    #[error("momentum is off shell: p^2 + r = {0}")]
    OffShell(String),
    #[error("invalid momentum: {0}")]
    InvalidMomentum(String),
    #[error("gauge mismatch: {0}")]
    GaugeMismatch(String),
    #[error("CFL condition violated: dt = {dt}, limit = {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("support touches the grid boundary: {0}")]
    SupportAtBoundary(String),
    #[error("numerical instability detected at t = {t}: norm {norm:e} exceeds bound {bound:e}")]
    Unstable { t: f64, norm: f64, bound: f64 },
    #[error("quadrature did not converge (estimated error {estimate:e})")]
    Quadrature { estimate: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
