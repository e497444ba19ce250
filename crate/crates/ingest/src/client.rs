use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use collab_core::corpus::{RawWork, WorkRecord};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::cache::PageCache;
use crate::catalog::{normalize_concept_id, ConceptCatalog, ConceptEntry, Expansion};
use crate::query::{fingerprint, WorksQuery, OPENALEX_BASE};
use crate::rate::RateLimiter;
use crate::transport::HttpTransport;
use crate::IngestError;

/// Environment variable holding a contact address for the polite pool.
pub const MAILTO_ENV: &str = "OPENALEX_MAILTO";

/// Concept ids per OR-filter; larger disciplines are queried in chunks.
pub const CONCEPTS_PER_QUERY: usize = 50;

/// A concept, its catalog entry and the entries of its related concepts.
pub type FetchedConcept = (String, ConceptEntry, Vec<(String, ConceptEntry)>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchMode {
    Online,
    /// Serve only from the cache; a miss is an error and the transport is never used.
    Offline,
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    pub mailto: Option<String>,
    pub retries: u32,
    pub backoff: Duration,
    pub requests_per_second: f64,
    pub mode: FetchMode,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            base_url: OPENALEX_BASE.to_string(),
            mailto: std::env::var(MAILTO_ENV).ok().filter(|s| !s.is_empty()),
            retries: 3,
            backoff: Duration::from_millis(500),
            requests_per_second: crate::rate::DEFAULT_REQUESTS_PER_SECOND,
            mode: FetchMode::Online,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCount {
    pub key: String,
    #[serde(default)]
    pub key_display_name: Option<String>,
    pub count: u64,
}

/// One parsed response page.
#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub works: Vec<RawWork>,
    pub groups: Vec<GroupCount>,
    pub total: Option<u64>,
    /// `None` marks the last page.
    pub next_cursor: Option<String>,
}

#[derive(Deserialize)]
struct PageDoc {
    #[serde(default)]
    meta: Option<MetaDoc>,
    #[serde(default)]
    results: Vec<RawWork>,
    #[serde(default)]
    group_by: Vec<GroupCount>,
}

#[derive(Deserialize)]
struct MetaDoc {
    #[serde(default)]
    count: Option<u64>,
    #[serde(default)]
    next_cursor: Option<String>,
}

pub fn parse_page(payload: &str) -> Result<Page, IngestError> {
    let doc: PageDoc = serde_json::from_str(payload).map_err(|e| IngestError::Parse(e.to_string()))?;
    let (total, next_cursor) = doc.meta.map(|m| (m.count, m.next_cursor)).unwrap_or((None, None));
    let next_cursor = if doc.results.is_empty() { None } else { next_cursor };
    Ok(Page {
        works: doc.results,
        groups: doc.group_by,
        total,
        next_cursor,
    })
}

#[derive(Deserialize)]
struct ConceptDoc {
    id: String,
    display_name: String,
    level: u8,
    #[serde(default)]
    related_concepts: Vec<RelatedDoc>,
}

#[derive(Deserialize)]
struct RelatedDoc {
    id: String,
    #[serde(default)]
    display_name: String,
    level: u8,
}

pub struct OpenAlexClient {
    transport: Arc<dyn HttpTransport>,
    cache: PageCache,
    limiter: RateLimiter,
    config: ClientConfig,
    touched: Mutex<BTreeSet<String>>,
}

impl OpenAlexClient {
    pub fn new(transport: Arc<dyn HttpTransport>, cache: PageCache, config: ClientConfig) -> Self {
        OpenAlexClient {
            transport,
            cache,
            limiter: RateLimiter::per_second(config.requests_per_second),
            config,
            touched: Mutex::new(BTreeSet::new()),
        }
    }

    pub fn cache(&self) -> &PageCache {
        &self.cache
    }

    pub fn mode(&self) -> FetchMode {
        self.config.mode
    }

    /// Fingerprints of every payload served so far, from cache or network.
    pub fn touched(&self) -> BTreeSet<String> {
        self.touched.lock().expect("touched lock").clone()
    }

    fn headers(&self) -> Vec<(String, String)> {
        let agent = match &self.config.mailto {
            Some(mail) => format!("collab/{} (mailto:{mail})", env!("CARGO_PKG_VERSION")),
            None => format!("collab/{}", env!("CARGO_PKG_VERSION")),
        };
        vec![("User-Agent".to_string(), agent)]
    }

    /// Cached payload for `canonical`, or a fresh download that is cached only
    /// once `validate` accepts it.
    fn fetch_payload<T>(
        &self,
        canonical: &str,
        url: &str,
        validate: impl Fn(&str) -> Result<T, IngestError>,
    ) -> Result<T, IngestError> {
        let fp = fingerprint(canonical);
        self.touched.lock().expect("touched lock").insert(fp.clone());
        if let Some(page) = self.cache.get(&fp)? {
            debug!("cache hit {canonical}");
            return validate(&page.payload);
        }
        if self.config.mode == FetchMode::Offline {
            return Err(IngestError::MissingFixture {
                fingerprint: fp,
                canonical: canonical.to_string(),
            });
        }
        let body = self.download(url)?;
        let parsed = validate(&body)?;
        self.cache.put(&fp, canonical, &body)?;
        Ok(parsed)
    }

    fn download(&self, url: &str) -> Result<String, IngestError> {
        let headers = self.headers();
        let mut attempt = 0;
        loop {
            self.limiter.acquire();
            let failure = match self.transport.get(url, &headers) {
                Ok(r) if r.status == 200 => return Ok(r.body),
                Ok(r) if r.status == 429 => return Err(IngestError::RateLimited(url.to_string())),
                Ok(r) if r.status >= 500 => format!("HTTP {} from {url}", r.status),
                Ok(r) => return Err(IngestError::Transport(format!("HTTP {} from {url}", r.status))),
                Err(IngestError::Transport(msg)) => msg,
                Err(other) => return Err(other),
            };
            if attempt >= self.config.retries {
                return Err(IngestError::Transport(failure));
            }
            let wait = self.config.backoff * 2u32.pow(attempt);
            warn!("{failure}; retrying in {wait:?}");
            std::thread::sleep(wait);
            attempt += 1;
        }
    }

    pub fn fetch_page(&self, query: &WorksQuery) -> Result<Page, IngestError> {
        query.validate()?;
        self.fetch_payload(&query.canonical(), &query.url(&self.config.base_url), parse_page)
    }

    pub fn fetch_concept(&self, id: &str) -> Result<FetchedConcept, IngestError> {
        let id = normalize_concept_id(id);
        let canonical = format!("concepts/{id}");
        let url = format!("{}/concepts/{id}", self.config.base_url);
        let doc: ConceptDoc = self.fetch_payload(&canonical, &url, |body| {
            serde_json::from_str(body).map_err(|e| IngestError::Parse(e.to_string()))
        })?;
        let related: Vec<(String, ConceptEntry)> = doc
            .related_concepts
            .iter()
            .map(|r| {
                (
                    normalize_concept_id(&r.id),
                    ConceptEntry {
                        display_name: r.display_name.clone(),
                        level: r.level,
                        related: Vec::new(),
                    },
                )
            })
            .collect();
        let entry = ConceptEntry {
            display_name: doc.display_name,
            level: doc.level,
            related: related.iter().map(|(id, _)| id.clone()).collect(),
        };
        Ok((normalize_concept_id(&doc.id), entry, related))
    }

    /// Catalog covering the expansion of `roots`, fetching at most `max_concepts` concept records.
    pub fn build_catalog(
        &self,
        roots: &[String],
        expansion: Expansion,
        max_concepts: usize,
    ) -> Result<ConceptCatalog, IngestError> {
        let mut catalog = ConceptCatalog::default();
        let mut fetched = BTreeSet::new();
        let mut queue: VecDeque<(String, usize)> = roots.iter().map(|r| (normalize_concept_id(r), 0)).collect();
        while let Some((id, depth)) = queue.pop_front() {
            if !fetched.insert(id.clone()) {
                continue;
            }
            if fetched.len() > max_concepts {
                warn!("concept expansion capped at {max_concepts} records");
                break;
            }
            let (id, entry, related) = self.fetch_concept(&id)?;
            for (rid, rentry) in related {
                let descend = rentry.level >= 2 && (expansion == Expansion::Transitive || depth == 0);
                if descend && !fetched.contains(&rid) {
                    queue.push_back((rid.clone(), depth + 1));
                }
                catalog.entries.entry(rid).or_insert(rentry);
            }
            catalog.insert(&id, entry);
        }
        Ok(catalog)
    }
}

/// Ordered stream of distinct works for one discipline.
pub struct Harvest<'a> {
    client: &'a OpenAlexClient,
    discipline_id: String,
    journal_only: bool,
    pending: VecDeque<WorksQuery>,
    buffer: VecDeque<RawWork>,
    seen: HashSet<String>,
    failed: bool,
}

/// Streams every work tagged with any of `concepts` and published within
/// `years`, once per work id.
pub fn harvest<'a>(
    client: &'a OpenAlexClient,
    discipline_id: &str,
    concepts: &BTreeSet<String>,
    years: (i32, i32),
    journal_only: bool,
) -> Harvest<'a> {
    let ids: Vec<String> = concepts.iter().cloned().collect();
    let pending = if years.0 > years.1 || ids.is_empty() {
        VecDeque::new()
    } else {
        ids.chunks(CONCEPTS_PER_QUERY)
            .map(|chunk| WorksQuery {
                concept_ids: chunk.to_vec(),
                year_from: years.0,
                year_to: years.1,
                group_by: None,
                journal_only,
                cursor: None,
            })
            .collect()
    };
    Harvest {
        client,
        discipline_id: discipline_id.to_string(),
        journal_only,
        pending,
        buffer: VecDeque::new(),
        seen: HashSet::new(),
        failed: false,
    }
}

impl Iterator for Harvest<'_> {
    type Item = Result<WorkRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            while let Some(raw) = self.buffer.pop_front() {
                if self.journal_only && !raw.is_journal_article() {
                    continue;
                }
                if self.seen.insert(raw.id.clone()) {
                    return Some(Ok(WorkRecord::from_raw(&raw, &self.discipline_id)));
                }
            }
            let query = self.pending.pop_front()?;
            match self.client.fetch_page(&query) {
                Ok(page) => {
                    if let Some(cursor) = page.next_cursor {
                        self.pending.push_front(query.with_cursor(Some(cursor)));
                    }
                    self.buffer.extend(page.works);
                }
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}
