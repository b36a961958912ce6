use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid fading model: {0}")]
    InvalidModel(String),

    #[error("shift must be nonnegative, got {0}")]
    NegativeShift(f64),

    #[error("no closed form for {0}")]
    NoClosedForm(String),

    /// `E[ln W]` diverges, which happens for any law with a point mass at 0.
    #[error("infinite logarithmic Jensen's gap: distribution has a point mass at 0 (P[W=0] = {zero_mass})")]
    InfiniteJensenGap { zero_mass: f64 },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {error:e} exceeds {tolerance:e}")]
    Quadrature { error: f64, tolerance: f64 },

    #[error("expected between 1 and 4 gain samplers, got {0}")]
    SamplerCount(usize),

    #[error("non-finite integrand value {value} at draw {index} (partition {partition}): {draw}")]
    NonFinite {
        value: f64,
        index: u64,
        partition: u32,
        draw: String,
    },

    #[error("invalid split parameters: {0}")]
    InvalidSplit(String),

    #[error("|rho| must be at most 1, got {0}")]
    RhoOutOfRange(f64),

    #[error("cannot compare regions: {0}")]
    IncompatibleRegions(String),

    #[error("non-positive determinant at step {step}: ratio {ratio}")]
    NonPositiveDeterminant { step: usize, ratio: f64 },

    #[error("recursion requires a^2 > 4 b^2, got a = {a}, b = {b}")]
    NotDominant { a: f64, b: f64 },
}
