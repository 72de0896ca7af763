use thiserror::Error;

/// Errors produced by the analysis pipeline.
///
/// `TheoremViolation`, `NotRootOfUnity` and `InternalInconsistency` are the
/// "loud" variants: on valid lattice-homomorphism input they indicate either a
/// bug or a genuine counterexample, and the CLI maps them to a distinct exit
/// code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("singular resolvent: {0}")]
    SingularResolvent(String),

    #[error("eigenvalue on or near the contour: {0}")]
    BadRadius(String),

    #[error("contour quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("no spectral gap: {0}")]
    NoSpectralGap(String),

    #[error("hypothesis not satisfied: {0}")]
    InvalidHypothesis(String),

    #[error("not a lattice homomorphism: {0}")]
    NotLatticeHomomorphism(String),

    #[error("peripheral value is not a root of unity: {0}")]
    NotRootOfUnity(String),

    #[error("internal inconsistency (structural and sampled checks disagree): {0}")]
    InternalInconsistency(String),

    #[error("theorem violation: {0}")]
    TheoremViolation(String),

    #[error("unknown gallery instance: {0}")]
    UnknownGallery(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),
}

impl Error {
    /// True for verdicts that contradict the theory on valid input, as
    /// opposed to bad input or environmental failures.
    pub fn is_violation(&self) -> bool {
        matches!(
            self,
            Error::TheoremViolation(_) | Error::NotRootOfUnity(_) | Error::InternalInconsistency(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
