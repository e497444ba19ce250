//! OpenAlex ingestion: concept expansion, cursor-paginated work queries,
//! a fingerprinted on-disk response cache and a polite rate-limited client.

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod cache;
pub mod catalog;
pub mod client;
pub mod query;
pub mod rate;
pub mod transport;

pub use cache::{CachedPage, PageCache};
pub use catalog::{expand_concept, ConceptCatalog, ConceptEntry, Expansion};
pub use client::{harvest, ClientConfig, FetchMode, GroupCount, Harvest, OpenAlexClient, Page};
pub use query::{GroupBy, WorksQuery};
pub use rate::RateLimiter;
pub use transport::{FixtureTransport, HttpResponse, HttpTransport, OfflineTransport, UreqTransport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("concept {id} has level {level}, expected 1")]
    WrongLevel { id: String, level: u8 },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited by server (HTTP 429) for {0}")]
    RateLimited(String),
    #[error("malformed payload: {0}")]
    Parse(String),
    #[error("no cached response for {canonical} (fingerprint {fingerprint})")]
    MissingFixture { fingerprint: String, canonical: String },
    #[error("cache io: {0}")]
    Cache(#[from] std::io::Error),
}
