//! Profiling of mixed-type records.
//!
//! The crate implements a five-stage knowledge-discovery pipeline:
//!
//! 1. [`ingest`]: load delimited records, clean them, turn amounts into
//!    per-income ratios and bin those ratios into ordinal categories.
//! 2. [`scaling`]: homogeneity analysis (multiple correspondence analysis)
//!    with single ordinal quantifications, fitted by alternating least squares.
//! 3. [`clustering`]: k-means, PAM, CLARA and FANNY on the object scores.
//! 4. [`validation`]: silhouette widths and (method, k) model selection.
//! 5. [`profiling`]: cluster shares, means, relative frequencies and lift.
//!
//! [`pipeline`] glues the stages together and owns the on-disk artifact
//! formats used by the `segprof` command line tool.

pub mod clustering;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod profiling;
pub mod scaling;
mod seed;
pub mod validation;

pub use error::{Error, Result};
pub use seed::derive_seed;
