use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("jets disagree on base point: {left} vs {right}")]
    BasePointMismatch { left: f64, right: f64 },

    #[error("outer derivative sequence has {got} entries, composition of order {order} needs {need}")]
    OuterTooShort { got: usize, order: usize, need: usize },

    #[error("zero denominator in '{expr}' at {point}")]
    ZeroDenominator { expr: String, point: f64 },

    #[error("unknown variable '{name}' during evaluation")]
    UnknownVariable { name: String },

    #[error("function of declared period 1 drifts by {max_dev:.3e} across one period")]
    NotPeriodic { max_dev: f64 },

    #[error("probe function has zero seminorm, lower bound undefined")]
    ZeroProbe,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("claim fields inconsistent: output index {i} must equal i0 + 1 = {expected}")]
    InconsistentClaim { i: usize, expected: usize },

    #[error("second derivative vanishes at the base point (|A| = {a:.3e}); no witness frequency exists, rerun the nonaffinity scan")]
    NoWitness { a: f64 },

    #[error("witness support [{lo:.3}, {hi:.3}] does not fit inside the unit time interval")]
    SupportOverflow { lo: f64, hi: f64 },

    #[error("quadrature failed to reach tolerance {tol:.1e} after {levels} halvings")]
    QuadratureDiverged { tol: f64, levels: usize },

    #[error("bound certificate failed spot validation: {0}")]
    CertificateInvalid(String),
}
