use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distribution has no atoms")]
    EmptyDistribution,
    #[error("negative or non-finite location {0}")]
    NegativeLocation(f64),
    #[error("non-positive or non-finite probability {0}")]
    NonpositiveProbability(f64),
    #[error("probabilities sum to {0}, expected 1")]
    ProbabilitySumMismatch(f64),
    #[error("mixing weight {0} outside [0, 1]")]
    InvalidMixingWeight(f64),
    #[error("ceiling {0} must be positive")]
    InvalidCeiling(f64),
    #[error("channel gain {0} must be positive and finite")]
    InvalidGain(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge within {subdivisions} subdivisions (error estimate {err_estimate:e})")]
    MaxSubdivisionsExceeded {
        subdivisions: usize,
        err_estimate: f64,
    },
    #[error("integrand returned a non-finite value at t = {0}")]
    NonFiniteIntegrand(f64),

    #[error("support maximum {0} is not below 1")]
    SupportNotBelowOne(f64),
    #[error("two-point asymptotic is undefined at a = 1")]
    AEqualsOne,
    #[error("mixture-to-base ratio {0} at the cutoff is below e")]
    PreconditionRatioBelowE(f64),
    #[error("divergence {0} too large: need 2*sqrt(D) + D < 1/2")]
    PreconditionDivergenceTooLarge(f64),
    #[error("s = {s} outside the safe range [0, {s_max}]")]
    SExceedsSafeRange { s: f64, s_max: f64 },
    #[error("mutual information formulas disagree: {first} vs {second}")]
    ConsistencyFailure { first: f64, second: f64 },
    #[error("denominator vanishes: distribution has no mass off zero")]
    ZeroDenominator,
    #[error("mixing weight {0} exceeds 1; blocklength too small")]
    AlphaExceedsOne(f64),
    #[error("constrained optimum has no mass off zero")]
    DegenerateSolution,
    #[error("atom index {index} out of range for {len} atoms")]
    AtomIndexOutOfRange { index: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::MaxSubdivisionsExceeded { .. }
                | Error::NonFiniteIntegrand(_)
                | Error::ConsistencyFailure { .. }
                | Error::DegenerateSolution
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDistribution => "EmptyDistribution",
            Error::NegativeLocation(_) => "NegativeLocation",
            Error::NonpositiveProbability(_) => "NonpositiveProbability",
            Error::ProbabilitySumMismatch(_) => "ProbabilitySumMismatch",
            Error::InvalidMixingWeight(_) => "InvalidMixingWeight",
            Error::InvalidCeiling(_) => "InvalidCeiling",
            Error::InvalidGain(_) => "InvalidGain",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::MaxSubdivisionsExceeded { .. } => "MaxSubdivisionsExceeded",
            Error::NonFiniteIntegrand(_) => "NonFiniteIntegrand",
            Error::SupportNotBelowOne(_) => "SupportNotBelowOne",
            Error::AEqualsOne => "AEqualsOne",
            Error::PreconditionRatioBelowE(_) => "PreconditionRatioBelowE",
            Error::PreconditionDivergenceTooLarge(_) => "PreconditionDivergenceTooLarge",
            Error::SExceedsSafeRange { .. } => "SExceedsSafeRange",
            Error::ConsistencyFailure { .. } => "ConsistencyFailure",
            Error::ZeroDenominator => "ZeroDenominator",
            Error::AlphaExceedsOne(_) => "AlphaExceedsOne",
            Error::DegenerateSolution => "DegenerateSolution",
            Error::AtomIndexOutOfRange { .. } => "AtomIndexOutOfRange",
        }
    }
}
