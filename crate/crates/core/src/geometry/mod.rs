//! Jaccard distances between entities and the Ward clustering built on them.

mod distance;
mod embedding;
mod icd;
mod tree;
mod ward;

pub use distance::{affinity, jaccard_distance, DistanceMatrix};
pub use embedding::{euclidean_embedding, Embedding};
pub use icd::{icd, icd_from_heights, H0Mode, IcdResult};
pub use tree::{cut_clusters, ClusterCut, Dendrogram, Merge};
pub use ward::ward_cluster;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("empty union: both entities have no works")]
    EmptyUnion,
    #[error("inconsistent counts: n_xy={n_xy} exceeds min(n_x={n_x}, n_y={n_y})")]
    InconsistentCounts { n_x: u64, n_y: u64, n_xy: u64 },
    #[error("entity {0:?} missing from count table")]
    MissingEntity(String),
    #[error("duplicate entity {0:?}")]
    DuplicateEntity(String),
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid dendrogram: {0}")]
    InvalidDendrogram(String),
    #[error("h0 = {h0} must exceed the largest coupling height {h_max}")]
    InvalidH0 { h0: f64, h_max: f64 },
    #[error("dendrogram has no merges")]
    NoMerges,
}
