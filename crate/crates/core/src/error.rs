use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-positive price {price} on {date}")]
    NonPositivePrice { date: NaiveDate, price: f64 },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid proposal: {0}")]
    InvalidProposal(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("chain has no post-burn-in draws")]
    EmptyChain,

    #[error("no implied volatility for price {price}: outside [{lower}, {upper}]")]
    NoSolution { price: f64, lower: f64, upper: f64 },

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("no common dates between series")]
    EmptyIntersection,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
