//! Standard clustering machinery: seeded k-means, the silhouette
//! coefficient and cluster purity.

mod kmeans;
mod purity;
mod silhouette;

use thiserror::Error;

pub use kmeans::{kmeans, ClusterAssignment, KMeansParams, DEFAULT_SEED, PRNG};
pub use purity::purity;
pub use silhouette::{silhouette, silhouette_samples};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 distinct classes, found {found}")]
    TooFewClasses { found: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("invalid k-means parameters: {0}")]
    InvalidParams(String),
}
