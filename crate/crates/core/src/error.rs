use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("species index {index} out of range for a mixture of {count} species")]
    SpeciesIndex { index: usize, count: usize },

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("scattering direction is not a unit vector (|sigma| = {norm})")]
    NonUnitSigma { norm: f64 },

    #[error("angular kernel has zero mass")]
    DegenerateKernel,

    #[error("no k* found on the grid below the cap {cap} for r = {r}")]
    KStarNotFound { r: f64, cap: f64 },

    #[error("moment order {k} is below k* = {k_star}; A_k would not be positive")]
    BelowKStar { k: f64, k_star: f64 },

    #[error("exp moment overflow: alpha * <v>^s = {exponent} for particle {particle} of species {species}")]
    ExpOverflow {
        species: usize,
        particle: usize,
        exponent: f64,
    },

    #[error("ensemble has no particles")]
    EmptyEnsemble,

    #[error("invalid simulation config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
