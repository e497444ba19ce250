//! Country- and institution-level co-production analytics: counting rules,
//! Jaccard distance geometry, Ward clustering, coupling-distance indicators
//! and plot-ready exports.

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod corpus;
pub mod format;
pub mod geometry;
pub mod metrics;
pub mod report;
