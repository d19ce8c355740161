use thiserror::Error;

pub type Result<T> = std::result::Result<T, UsdError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UsdError {
    #[error("invalid dimension {0}: at least 2 states are required")]
    InvalidDimension(usize),

    #[error("{what} = {value} is outside the admissible interval [{min}, {max}]")]
    Domain {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("degenerate state family: {0}")]
    DegenerateFamily(String),

    #[error(
        "complements overlap {overlap:e} > 0: states cannot be lifted with a single ancilla dimension"
    )]
    NotLiftable { overlap: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: zero singles at cell ({row}, {col})")]
    InsufficientData { row: usize, col: usize },

    #[error("row {row} has non-positive contrast sum {denominator:e}: no correlated signal")]
    DegenerateRow { row: usize, denominator: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

impl UsdError {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            UsdError::InvalidDimension(_) => "invalid_dimension",
            UsdError::Domain { .. } => "domain",
            UsdError::DegenerateFamily(_) => "degenerate_family",
            UsdError::NotLiftable { .. } => "not_liftable",
            UsdError::Shape(_) => "shape",
            UsdError::Config(_) => "config",
            UsdError::InsufficientData { .. } => "insufficient_data",
            UsdError::DegenerateRow { .. } => "degenerate_row",
            UsdError::Unsupported(_) => "unsupported",
        }
    }
}
