use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    #[error("level {level} outside the materialized range [{n_min}, {n_max}]")]
    LevelOutOfRange { level: i32, n_min: i32, n_max: i32 },

    #[error("field must be nonnegative, found {value} at cell {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("threshold must be positive and finite, got {0}")]
    NonPositiveThreshold(f64),

    #[error("operands are defined on different filtrations or grids")]
    DomainMismatch,

    #[error("invalid stopping time: {0}")]
    InvalidStoppingTime(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a weight: {0}")]
    NotAWeight(String),

    #[error("grid: {0}")]
    Grid(String),

    #[error("coefficient leaves S_delta at {point:?}: eigenvalue {eigenvalue} outside [{lo}, {hi}]")]
    Ellipticity {
        point: Vec<f64>,
        eigenvalue: f64,
        lo: f64,
        hi: f64,
    },

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("expression: {0}")]
    Expression(String),

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("config: {0}")]
    Config(String),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
