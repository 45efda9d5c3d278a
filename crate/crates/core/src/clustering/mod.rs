//! Partitioning of object scores: k-means, PAM, CLARA and FANNY.
//!
//! Every method returns a [`PartitionResult`] whose clusters are numbered
//! `1..=k` by descending size (ties by smallest member index).

mod clara;
mod dissimilarity;
mod fanny;
mod kmeans;
mod pam;
mod partition;

pub use clara::{clara, ClaraOptions};
pub use dissimilarity::{dissimilarity, DissimilarityMatrix};
pub use fanny::{fanny, FannyOptions};
pub use kmeans::{kmeans, KmeansOptions};
pub use pam::{pam, PamOptions};
pub use partition::{Method, PartitionResult};
