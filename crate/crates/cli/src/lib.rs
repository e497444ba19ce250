//! Staged pipeline behind the `collab` binary: harvest works, count,
//! cluster, index and write the report tree with a reproducibility manifest.

pub mod config;
pub mod manifest;
pub mod pipeline;

pub use config::{AnalysisConfig, Diagnostic, H0Setting, IcdEntities, PeriodPreset, PeriodSpec};
pub use manifest::Manifest;
pub use pipeline::{analyze, harvest_records, load_harvest, render_figures, run_all, run_stage, Harvested, Stage};

use collab_core::corpus::CorpusError;
use collab_core::geometry::GeometryError;
use collab_core::metrics::MetricsError;
use collab_core::report::ReportError;
use collab_ingest::IngestError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {}", join(.0))]
    Config(Vec<Diagnostic>),
    /// Offline run with nothing in the cache.
    #[error("no cached responses in {0}; run `collab harvest` online first")]
    MissingFixtures(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{context}: {message}")]
    Analysis { context: String, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

fn join(diagnostics: &[Diagnostic]) -> String {
    diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

/// Machine-readable failure written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

impl CliError {
    pub fn analysis(context: impl Into<String>, message: impl ToString) -> Self {
        CliError::Analysis {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 1 configuration, 2 transport and cache, 3 analysis and output.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Ingest(IngestError::UnknownConcept(_) | IngestError::WrongLevel { .. }) => 1,
            CliError::Ingest(IngestError::InvalidQuery(_)) => 1,
            CliError::MissingFixtures(_) | CliError::Ingest(_) => 2,
            CliError::Analysis { .. } | CliError::Io { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::MissingFixtures(_) => "missing-fixtures",
            CliError::Ingest(IngestError::MissingFixture { .. }) => "missing-fixtures",
            CliError::Ingest(IngestError::RateLimited(_)) => "rate-limited",
            CliError::Ingest(IngestError::Parse(_)) => "parse",
            CliError::Ingest(IngestError::UnknownConcept(_) | IngestError::WrongLevel { .. }) => "config",
            CliError::Ingest(IngestError::InvalidQuery(_)) => "config",
            CliError::Ingest(_) => "transport",
            CliError::Analysis { .. } => "analysis",
            CliError::Io { .. } => "io",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            diagnostics: match self {
                CliError::Config(d) => d.clone(),
                _ => Vec::new(),
            },
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::analysis("counting", e)
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::analysis("geometry", e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::analysis("metrics", e)
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::analysis("report", e)
    }
}
