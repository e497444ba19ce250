use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::IngestError;

pub const OPENALEX_BASE: &str = "https://api.openalex.org";

/// Results per page; the API maximum.
pub const PER_PAGE: u32 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Country,
    Institution,
}

impl GroupBy {
    fn api_field(&self) -> &'static str {
        match self {
            GroupBy::Country => "authorships.institutions.country_code",
            GroupBy::Institution => "authorships.institutions.ror",
        }
    }
}

/// One page request against the works endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorksQuery {
    pub concept_ids: Vec<String>,
    pub year_from: i32,
    pub year_to: i32,
    pub group_by: Option<GroupBy>,
    pub journal_only: bool,
    /// `None` requests the first page.
    pub cursor: Option<String>,
}

impl WorksQuery {
    pub fn new(concept_ids: Vec<String>, year_from: i32, year_to: i32) -> Result<Self, IngestError> {
        let q = WorksQuery {
            concept_ids,
            year_from,
            year_to,
            group_by: None,
            journal_only: false,
            cursor: None,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.concept_ids.is_empty() {
            return Err(IngestError::InvalidQuery("no concept ids".into()));
        }
        if self.year_from > self.year_to {
            return Err(IngestError::InvalidQuery(format!(
                "year_from {} > year_to {}",
                self.year_from, self.year_to
            )));
        }
        Ok(())
    }

    pub fn with_cursor(&self, cursor: Option<String>) -> Self {
        WorksQuery { cursor, ..self.clone() }
    }

    fn filter(&self) -> String {
        let mut ids = self.concept_ids.clone();
        ids.sort();
        ids.dedup();
        let mut filter = format!(
            "concepts.id:{},publication_year:{}-{}",
            ids.join("|"),
            self.year_from,
            self.year_to
        );
        if self.journal_only {
            filter.push_str(",type:article");
        }
        filter
    }

    /// Order-insensitive description of the request; the cache key.
    pub fn canonical(&self) -> String {
        let mut parts = vec![format!("filter={}", self.filter())];
        match self.group_by {
            Some(g) => parts.push(format!("group_by={}", g.api_field())),
            None => {
                parts.push(format!("per-page={PER_PAGE}"));
                parts.push(format!("cursor={}", self.cursor.as_deref().unwrap_or("*")));
            }
        }
        format!("works?{}", parts.join("&"))
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.canonical())
    }

    pub fn url(&self, base: &str) -> String {
        let mut url = format!("{base}/works?filter={}", encode_component(&self.filter()));
        match self.group_by {
            Some(g) => url.push_str(&format!("&group_by={}", g.api_field())),
            None => {
                url.push_str(&format!("&per-page={PER_PAGE}"));
                let cursor = self.cursor.as_deref().unwrap_or("*");
                url.push_str(&format!("&cursor={}", encode_component(cursor)));
            }
        }
        url
    }
}

impl fmt::Display for WorksQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Hex SHA-256 of a canonical request string.
pub fn fingerprint(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Percent-encodes everything outside the URL-unreserved set, keeping `:`
/// and `,` which the filter syntax uses literally.
pub fn encode_component(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' | b':' | b',' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_ignores_concept_order() {
        let a = WorksQuery::new(vec!["C2".into(), "C1".into()], 2000, 2001).unwrap();
        let b = WorksQuery::new(vec!["C1".into(), "C2".into(), "C1".into()], 2000, 2001).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(
            a.canonical(),
            "works?filter=concepts.id:C1|C2,publication_year:2000-2001&per-page=200&cursor=*"
        );
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn cursor_and_filters_change_fingerprint() {
        let a = WorksQuery::new(vec!["C1".into()], 2000, 2001).unwrap();
        let b = a.with_cursor(Some("abc".into()));
        assert_ne!(a.fingerprint(), b.fingerprint());
        let mut c = a.clone();
        c.journal_only = true;
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn url_encoding() {
        let q = WorksQuery::new(vec!["C1".into(), "C2".into()], 2000, 2001)
            .unwrap()
            .with_cursor(Some("Ic3=+/".into()));
        assert_eq!(
            q.url(OPENALEX_BASE),
            "https://api.openalex.org/works?filter=concepts.id:C1%7CC2,publication_year:2000-2001&per-page=200&cursor=Ic3%3D%2B%2F"
        );
        let mut g = q.clone();
        g.group_by = Some(GroupBy::Country);
        assert!(g
            .url(OPENALEX_BASE)
            .ends_with("&group_by=authorships.institutions.country_code"));
    }

    #[test]
    fn invariants() {
        assert!(WorksQuery::new(vec![], 2000, 2001).is_err());
        assert!(WorksQuery::new(vec!["C1".into()], 2002, 2001).is_err());
    }
}
