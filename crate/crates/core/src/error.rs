use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // -- input ----------------------------------------------------------
    #[error("line {line}: malformed term ({reason})")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: term of degree {found} in a polynomial of degree {expected}")]
    MixedDegree {
        line: usize,
        expected: u32,
        found: u32,
    },
    #[error("polynomial has no nonzero terms")]
    EmptyPolynomial,
    #[error("malformed variety file: {0}")]
    MalformedVariety(String),
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("vector field weights must sum to zero (sum = {0})")]
    TraceNotZero(String),
    #[error(
        "{context}not an eigenvector: monomial {first_monomial:?} has weight {first_weight}, \
         monomial {second_monomial:?} has weight {second_weight}"
    )]
    NotEigenvector {
        context: String,
        first_monomial: Vec<u32>,
        first_weight: String,
        second_monomial: Vec<u32>,
        second_weight: String,
    },
    #[error("zero vector has no projective class")]
    ZeroVector,
    #[error("matrix is singular or too ill-conditioned (reciprocal condition {0:e})")]
    SingularMatrix(f64),
    #[error("det(sigma) = {0} is not 1; the K-energy identity holds on SL(N+1) only")]
    NotSpecialLinear(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // -- numerics -------------------------------------------------------
    #[error("no generic chart frame found after {0} attempts")]
    FrameSearchExhausted(usize),
    #[error("homotopy path failure: {0}")]
    PathFailure(String),
    #[error("fiber has {found} finite roots, expected {expected}")]
    DegreeDeficit { found: usize, expected: usize },
    #[error("branch point ill-conditioned (condition {0:e})")]
    IllConditioned(f64),
    #[error("finite-difference stencil jumped to another branch")]
    BranchJump,
    #[error("finite-difference stencil ill-conditioned: {0}")]
    StencilIllConditioned(String),
    #[error("non-positive volume density at a sample")]
    NonPositiveDensity,
    #[error("zero gradient on the variety (singular point)")]
    ZeroGradientOnVariety,
    #[error("sample landed on the zero set of the integrand's polynomial")]
    ExactZero,
    #[error("{rejected} rejected draws for {samples} samples exceeds the rejection limit")]
    TooManyRejections { rejected: u64, samples: usize },
    #[error("variety is not Fano (m = {0}); the admissible class degenerates")]
    NonFano(i64),
    #[error(
        "level {0}: the printed domain X_k makes log|F_k| identically -inf; \
         this weight variant is not integrable"
    )]
    LiteralDomainDegenerate(usize),

    // -- calibration ----------------------------------------------------
    #[error("calibration ambiguous: {0}")]
    CalibrationAmbiguous(String),
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
}

impl Error {
    /// True for failures that only invalidate one Monte-Carlo draw.
    pub fn is_sample_rejection(&self) -> bool {
        matches!(
            self,
            Error::PathFailure(_)
                | Error::DegreeDeficit { .. }
                | Error::IllConditioned(_)
                | Error::BranchJump
                | Error::StencilIllConditioned(_)
                | Error::NonPositiveDensity
                | Error::ZeroGradientOnVariety
                | Error::ExactZero
        )
    }
}
