use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Assumption,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("jet anchors differ: {left} vs {right}")]
    AnchorMismatch { left: f64, right: f64 },
    #[error("division by a jet with zero constant term at x = {anchor}")]
    ZeroDivisor { anchor: f64 },
    #[error("square root requested on the branch cut at {re} + {im}i")]
    BranchCut { re: f64, im: f64 },
    #[error("jet order {needed} needed, only {have} available")]
    InsufficientOrder { needed: usize, have: usize },
    #[error("unknown potential '{0}'")]
    UnknownPotential(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("grid does not reach the asymptotic region: {0}")]
    GridTooSmall(String),
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },
    #[error("guard condition fails at x = {x} (product {value:e})")]
    Guard { x: f64, value: f64 },
    #[error("no root below the search ceiling {ceiling:e}")]
    NoRoot { ceiling: f64 },
    #[error("lambda {lambda} does not exceed g(0) = {g0}")]
    LambdaBelowGauge { lambda: f64, g0: f64 },
    #[error("cutoff transition width {width} is not smaller than the support radius {delta}")]
    DegenerateCutoff { delta: f64, width: f64 },
    #[error("function is not monotone near x = {x}")]
    NonMonotone { x: f64 },
    #[error("beta = {beta} is below the range of the potential on its domain")]
    BetaBelowRange { beta: f64 },
    #[error("eta = {eta} violates the smallness condition: {reason}")]
    Eta { eta: f64, reason: String },
    #[error("grid under-resolves the phase: h*|rate| = {value:.3} > 0.1")]
    UnderResolved { value: f64 },
    #[error("assumption check failed: {0}")]
    Assumption(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnknownPotential(_)
            | Error::InvalidParam { .. }
            | Error::GridTooSmall(_)
            | Error::Io(_) => ErrorKind::Config,
            Error::Guard { .. }
            | Error::Assumption(_)
            | Error::Eta { .. }
            | Error::LambdaBelowGauge { .. }
            | Error::BetaBelowRange { .. }
            | Error::NonMonotone { .. }
            | Error::DegenerateCutoff { .. } => ErrorKind::Assumption,
            _ => ErrorKind::Numerical,
        }
    }
}
