use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Each variant maps onto one of the CLI exit-code classes through
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("series mismatch: {0}")]
    SeriesMismatch(String),

    #[error("singular division: denominator constant term {0:e} is below 1e-14")]
    SingularDivision(f64),

    #[error("composition requires an inner series with zero constant term (found {0:e})")]
    NonzeroInnerConstant(f64),

    #[error("point is not interior to the domain: {0}")]
    BoundaryPoint(String),

    #[error("symbol does not fix the origin (|phi(0)| = {0:e}); conjugate it first")]
    FixedPointRequired(f64),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("symbol does not induce a bounded composition operator: {0}")]
    UnboundedSymbol(String),

    #[error("basis size {size} exceeds the memory guard of {limit} elements")]
    MemoryGuard { size: u64, limit: u64 },

    #[error("zero eigenvalue in phi'(0): the symbol is not truly d-dimensional")]
    ZeroEigenvalue,

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("ill-conditioned Gram matrix (condition {0:e} > 1e12); spread the points apart")]
    IllConditioned(f64),

    #[error("tail certificate inapplicable; symbol does not satisfy sup-norm < 1 (r = {0})")]
    TailInapplicable(f64),

    #[error("decomposition failed to converge: {0}")]
    NonConvergence(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("input not sorted non-increasingly at index {0}")]
    NotMonotone(usize),

    #[error("soundness violation: {0}")]
    Soundness(String),

    #[error("invalid symbol specification: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// 1 for usage/config errors, 2 for soundness violations, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Soundness(_) => 2,
            Error::Overflow(_)
            | Error::SingularDivision(_)
            | Error::NonConvergence(_)
            | Error::Numeric(_)
            | Error::IllConditioned(_) => 3,
            _ => 1,
        }
    }

    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Overflow(_) => "overflow",
            Error::SeriesMismatch(_) => "series_mismatch",
            Error::SingularDivision(_) => "singular_division",
            Error::NonzeroInnerConstant(_) => "nonzero_inner_constant",
            Error::BoundaryPoint(_) => "boundary_point",
            Error::FixedPointRequired(_) => "fixed_point_required",
            Error::UnsupportedDomain(_) => "unsupported_domain",
            Error::UnboundedSymbol(_) => "unbounded_symbol",
            Error::MemoryGuard { .. } => "memory_guard",
            Error::ZeroEigenvalue => "zero_eigenvalue",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::TailInapplicable(_) => "tail_inapplicable",
            Error::NonConvergence(_) => "non_convergence",
            Error::Numeric(_) => "numeric",
            Error::NotMonotone(_) => "not_monotone",
            Error::Soundness(_) => "soundness",
            Error::Spec(_) => "spec",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
