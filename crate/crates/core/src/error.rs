use crate::ratings::{ItemId, UserId};
use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: rating {rating} outside scale [{min}, {max}]")]
    RatingOutOfScale {
        line: usize,
        rating: f64,
        min: f64,
        max: f64,
    },

    #[error("rating file contains no ratings")]
    EmptyFile,

    #[error("rating matrix is empty")]
    EmptyMatrix,

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("unknown item {0}")]
    UnknownItem(ItemId),

    #[error("similarity of user {0} with itself is never consumed")]
    SelfSimilarity(UserId),

    #[error("{what} must lie in {range}, got {value}")]
    OutOfRange {
        what: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("weight vector has {weights} entries but the neighbor set has {neighbors}")]
    WeightMismatch { weights: usize, neighbors: usize },

    #[error("fitness item set for user {0} is empty")]
    EmptyFitnessSet(UserId),

    #[error("user {user} has {ratings} rating(s); at least {required} required")]
    TooFewRatings {
        user: UserId,
        ratings: usize,
        required: usize,
    },

    #[error("objective returned non-finite value {value} at {position:?}")]
    NonFiniteObjective { value: f64, position: Vec<f64> },

    #[error("residual list is empty")]
    EmptyResiduals,

    #[error("cannot sample {requested} users from a matrix with {available}")]
    BadSampleSize { requested: usize, available: usize },

    #[error("model record: {0}")]
    ModelRecord(String),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
