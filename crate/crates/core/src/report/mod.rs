//! Plot-ready artifacts: chord matrices, circular dendrogram SVGs and
//! deterministic CSV/JSON series exports.

mod chord;
mod export;
mod svg;

pub use chord::{chord_data, ChordData};
pub use export::{
    export_series, write_atomic, write_icd_csv, write_icd_json, write_kde_csv, write_series_csv, write_series_json,
    IcdRow, SeriesFormat,
};
pub use svg::{cluster_color, render_circular_dendrogram, SvgLayout, NEUTRAL_COLOR};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("nothing to export")]
    EmptySeries,
}
