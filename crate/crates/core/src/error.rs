use thiserror::Error;

/// Everything that can go wrong across the toolkit.
///
/// Variants carry the name of the violated rule so that callers (the CLI in
/// particular) can report it without re-deriving context.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("supply total {supply} differs from demand total {demand}")]
    Balance { supply: f64, demand: f64 },
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cost matrix is identically zero")]
    DegenerateCosts,
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("free variables give a negative basic variable {cell} = {value}")]
    InfeasibleFreeVars { cell: String, value: f64 },
    #[error("the feasible region is empty")]
    EmptyRegion,
    #[error("the linear program is unbounded")]
    Unbounded,
    #[error("objective vector is zero")]
    DegenerateObjective,
    #[error("vertex has fewer than two tight constraints")]
    DegenerateVertex,
    #[error("constraints {0} and {1} are parallel")]
    ParallelPair(usize, usize),
    #[error("feasible region is a segment or a point")]
    DegenerateRegion,
    #[error("unsupported dimensions {m}x{n}: {what}")]
    UnsupportedDimension { m: usize, n: usize, what: &'static str },
    #[error("chosen point is not a vertex of the feasible region")]
    NotAVertex,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no observations ingested yet")]
    NoObservations,
    #[error("weighted observation sum cancelled to zero")]
    ZeroSum,
    #[error("could not generate a valid situation after {0} attempts")]
    Generation(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable, machine-friendly name of the error kind.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Balance { .. } => "BalanceError",
            Error::Domain(_) => "DomainError",
            Error::Shape(_) => "ShapeError",
            Error::DegenerateCosts => "DegenerateCosts",
            Error::ZeroVector => "ZeroVector",
            Error::InfeasibleFreeVars { .. } => "InfeasibleFreeVars",
            Error::EmptyRegion => "EmptyRegion",
            Error::Unbounded => "Unbounded",
            Error::DegenerateObjective => "DegenerateObjective",
            Error::DegenerateVertex => "DegenerateVertex",
            Error::ParallelPair(..) => "ParallelPair",
            Error::DegenerateRegion => "DegenerateRegion",
            Error::UnsupportedDimension { .. } => "UnsupportedDimension",
            Error::NotAVertex => "NotAVertex",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NoObservations => "NoObservations",
            Error::ZeroSum => "ZeroSum",
            Error::Generation(_) => "GenerationError",
            Error::Parse(_) => "ParseError",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
