use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed representation document: {0}")]
    MalformedRep(String),

    #[error("non-positive frequency {0}")]
    NonPositiveFrequency(f64),

    #[error("multiplicity must be at least 1")]
    ZeroMultiplicity,

    #[error("representation has zero total dimension")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Fock space of total dimension {required} exceeds budget ({budget})")]
    BudgetExceeded { required: String, budget: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vectors are not orthonormal (defect {0:.3e})")]
    NotOrthonormal(f64),

    #[error("operator is not self-adjoint (defect {0:.3e})")]
    NotSelfAdjoint(f64),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("letter `{0}` is not attached to any factor")]
    UntaggedLetter(String),

    #[error("word degree {degree} exceeds limit {limit}")]
    DegreeTooHigh { degree: usize, limit: usize },

    #[error("combinatorial budget exceeded: {0}")]
    CombinatorialBudget(String),

    #[error("no spectral value of A within {window} of {target}")]
    NoSpectralVector { target: f64, window: f64 },

    #[error("density matrix is singular or not positive definite")]
    SingularDensity,

    #[error("automorphism does not preserve the state (defect {0:.3e})")]
    StateNotPreserved(f64),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unsupported order {order} (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier, surfaced by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedRep(_) => "malformed_rep",
            Error::NonPositiveFrequency(_) => "non_positive_frequency",
            Error::ZeroMultiplicity => "zero_multiplicity",
            Error::ZeroDimension => "zero_dimension",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NotOrthonormal(_) => "not_orthonormal",
            Error::NotSelfAdjoint(_) => "not_self_adjoint",
            Error::UnknownGenerator(_) => "unknown_generator",
            Error::UntaggedLetter(_) => "untagged_letter",
            Error::DegreeTooHigh { .. } => "degree_too_high",
            Error::CombinatorialBudget(_) => "combinatorial_budget",
            Error::NoSpectralVector { .. } => "no_spectral_vector",
            Error::SingularDensity => "singular_density",
            Error::StateNotPreserved(_) => "state_not_preserved",
            Error::Decomposition(_) => "decomposition_failed",
            Error::Parse { .. } => "parse_error",
            Error::UnsupportedOrder { .. } => "unsupported_order",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
