//! Structure and interpretability metrics for labeled latent embedding
//! spaces of timbre models.

pub mod cli;
pub mod clustering;
pub mod dataset;
pub mod geometry;
pub mod grouping;
pub mod io;
pub mod schema;
pub mod metrics;
pub mod synth;
pub mod report;
pub mod selftest;
