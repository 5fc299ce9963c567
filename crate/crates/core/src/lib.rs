//! Neighborhood-based collaborative filtering with confidence-fused user
//! similarity and invasive weed optimization (IWO) for learning neighbor
//! importance weights.
//!
//! The pipeline has three phases:
//!
//! 1. [`similarity`]: filter a target user's *important users* by fusing
//!    Pearson correlation with a rating-overlap confidence factor and
//!    keeping everyone above a threshold.
//! 2. [`iwo`] + [`predictor`]: learn one importance weight per important
//!    user by minimizing held-out mean absolute error with the IWO
//!    metaheuristic.
//! 3. [`predictor`]: estimate unknown ratings as the importance-weighted
//!    average of neighbor ratings, with a tiered mean fallback when no
//!    neighbor rated the item.
//!
//! [`eval`] runs the pipeline against seeded train/test splits and reports
//! MAE, RMSE and coverage next to baselines; [`ratings`] loads and splits
//! the sparse rating data; [`synth`] generates shape-matched synthetic
//! datasets for tests and demos. Everything is deterministic for a fixed
//! seed, including under parallel execution.

pub mod error;
pub mod eval;
pub mod iwo;
pub mod predictor;
pub mod ratings;
pub mod similarity;
pub mod synth;

pub use error::{Error, Result};
pub use ratings::{ItemId, RatingFormat, RatingMatrix, RatingSplit, UserId};
