use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("correlation entry rho[{row}][{column}] = {value} is outside (-1, 1)")]
    CorrelationOutOfRange { row: usize, column: usize, value: f64 },
    #[error("correlation column {column} has squared norm {norm_sq} > 1")]
    ColumnNormViolation { column: usize, norm_sq: f64 },
    #[error("correlation columns {first} and {second} are not orthogonal (inner product {inner})")]
    OrthogonalityViolation { first: usize, second: usize, inner: f64 },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("fast substep {substep} exceeds the policy limit eps/nu = {limit}")]
    StepTooCoarse { substep: f64, limit: f64 },
    #[error("path {path} left the overflow guard at t = {time}")]
    NumericalBlowup { path: usize, time: f64 },
    #[error("epsilon = {0} must lie strictly inside (0, 1)")]
    DegenerateEpsilon(f64),
    #[error("dissipativity violated at t = {t}, x = {x:?}, y1 = {y1:?}, y2 = {y2:?} (ratio {ratio})")]
    DissipativityViolated { t: f64, x: Vec<f64>, y1: Vec<f64>, y2: Vec<f64>, ratio: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coefficient `{field}` has no declared {constant}")]
    MissingConstant { field: String, constant: &'static str },
    #[error("averaging failed at node t = {t}, x = {x:?}: {source}")]
    NodeFailure { t: f64, x: Vec<f64>, source: Box<Error> },
    #[error("payoff has no declared cap")]
    UnboundedPayoff,
    #[error("functional `{name}` produced {value}, beyond its bound {bound}")]
    UnboundedFunctional { name: String, value: f64, bound: f64 },
    #[error("volatility {value} below the floor {floor} at t = {t}, x = {x}, y = {y}")]
    DegenerateVolatility { value: f64, floor: f64, t: f64, x: f64, y: f64 },
    #[error("unknown {kind} `{name}`; available: {available}")]
    UnknownCatalogEntry { kind: &'static str, name: String, available: String },
    #[error("averaged model is closed-form and has no node table")]
    NotTabulated,
    #[error("table error: {0}")]
    Table(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Table(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal conditions attached to estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// First- and second-half time averages disagree by more than five
    /// standard errors of their difference.
    NonStationary { component: usize, first_half: f64, second_half: f64, threshold: f64 },
    /// An averaged-model query fell outside the node hull and was clamped.
    Extrapolation { paths: usize, queries: u64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NonStationary { component, first_half, second_half, threshold } => write!(
                f,
                "component {component}: half-sample means {first_half} and {second_half} differ by more than {threshold}"
            ),
            Warning::Extrapolation { paths, queries } => {
                write!(f, "{queries} averaged-model queries on {paths} paths were extrapolated")
            }
        }
    }
}
