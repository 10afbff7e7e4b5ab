use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("site {site} out of range for a lattice of {total} sites")]
    SiteOutOfRange { site: usize, total: usize },

    #[error("zero vector has no participation ratio")]
    ZeroVector,

    #[error("singular parameters: {0}")]
    SingularParameter(String),

    #[error("bound-mode precondition violated: {coupling} = {value} (must be 0)")]
    BoundModePrecondition { coupling: &'static str, value: f64 },

    #[error("zero bond between sites {0} and {1}; similarity transform is singular")]
    ZeroBond(usize, usize),

    #[error("eigensolver did not converge for a {dim}x{dim} matrix after {iterations} QR sweeps")]
    NoConvergence { dim: usize, iterations: usize },

    #[error("at t2 = {t2}: {source}")]
    AtCoupling { t2: f64, source: Box<Error> },

    #[error("at omega = {omega}: {source}")]
    AtFrequency { omega: f64, source: Box<Error> },

    #[error("singular linear system (reciprocal condition {rcond:e})")]
    SingularMatrix { rcond: f64 },

    #[error(
        "drive frequency is resonant: condition {condition:e} exceeds limit, \
         closest eigenvalue {closest}"
    )]
    ResonanceSingularity { condition: f64, closest: Complex64 },

    #[error("integrator failed at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("propagation failed: spectral route: {spectral}; integrator route: {integrator}")]
    Propagation {
        spectral: String,
        integrator: String,
    },

    #[error(
        "non-finite amplitudes at t = {t}; shorten the horizon or checkpoint the norm more often"
    )]
    Overflow { t: f64 },

    #[error("empty time window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
