use alloc::string::String;

/// Everything that can go wrong while building jets, parsing expressions or
/// evaluating geometric objects.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("jet order {0} outside the supported range 1..=4")]
    OrderOutOfRange(usize),
    #[error("{0} seed directions exceed the supported maximum of {1}")]
    TooManySeeds(usize, usize),
    #[error("seed directions are linearly dependent")]
    DependentSeeds,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("structural metric block is degenerate")]
    DegenerateMetric,
    #[error("transversal metric is degenerate")]
    DegenerateTransversalMetric,
    #[error("full metric is degenerate")]
    DegenerateFullMetric,
    #[error("fiber hessian of F^2/2 is not positive definite")]
    NotPositiveDefinite,
    #[error("point lies on the zero section (|y| = {0:e})")]
    OnZeroSection(f64),
    #[error("fundamental function is not Riemannian (fiber hessian depends on y)")]
    NotRiemannianBase,
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("suite `{suite}` does not apply: {reason}")]
    SuiteInapplicable { suite: String, reason: String },
    #[error("sampling domain is empty")]
    EmptyDomain,
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Stable error name used by the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::OrderOutOfRange(_) => "OrderOutOfRange",
            Error::TooManySeeds(..) => "TooManySeeds",
            Error::DependentSeeds => "DependentSeeds",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Domain(_) => "DomainError",
            Error::Syntax { .. } => "SyntaxError",
            Error::UnknownSymbol(_) => "UnknownSymbol",
            Error::DegenerateMetric => "DegenerateMetric",
            Error::DegenerateTransversalMetric => "DegenerateTransversalMetric",
            Error::DegenerateFullMetric => "DegenerateFullMetric",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::OnZeroSection(_) => "OnZeroSection",
            Error::NotRiemannianBase => "NotRiemannianBase",
            Error::UnknownSuite(_) => "UnknownSuite",
            Error::SuiteInapplicable { .. } => "SuiteInapplicable",
            Error::EmptyDomain => "EmptyDomain",
            Error::InvalidSpec(_) => "InvalidSpec",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
