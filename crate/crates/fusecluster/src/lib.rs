//! Fuzzy c-means clustering with a pairwise centroid-fusion penalty.
//!
//! The solver alternates a closed-form membership update with an ADMM solve
//! for the centroids; as the fusion weight gamma grows along a path,
//! centroids merge and the cluster count shrinks, yielding a hierarchy. The
//! cluster count whose gamma-plateau is widest is reported as optimal.

pub mod admm;
pub mod dataset;
pub mod error;
pub mod fuzzy;
pub mod hierarchy;
pub mod metrics;

pub use error::{Error, Result};

/// Render a float with 17 significant digits so values round-trip exactly
/// and output files are byte-identical across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
