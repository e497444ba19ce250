//! Concept catalog and discipline expansion.
//!
//! A discipline is a level-1 concept together with the related concepts of
//! level 2 or higher. Related-concept links in OpenAlex point both to coarser
//! and finer concepts, so only the level decides membership.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub display_name: String,
    pub level: u8,
    #[serde(default)]
    pub related: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptCatalog {
    pub entries: BTreeMap<String, ConceptEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    #[default]
    Transitive,
    OneHop,
}

/// `https://openalex.org/c1276947` and `C1276947` both become `C1276947`.
pub fn normalize_concept_id(id: &str) -> String {
    let tail = id.trim().rsplit('/').next().unwrap_or_default();
    let mut chars = tail.chars();
    match chars.next() {
        Some(c) => c.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

impl ConceptCatalog {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let raw: ConceptCatalog = serde_json::from_str(text).map_err(|e| IngestError::Parse(e.to_string()))?;
        let mut catalog = ConceptCatalog::default();
        for (id, mut entry) in raw.entries {
            if entry.level > 5 {
                return Err(IngestError::Parse(format!("concept {id} has level {}", entry.level)));
            }
            entry.related = entry.related.iter().map(|r| normalize_concept_id(r)).collect();
            catalog.entries.insert(normalize_concept_id(&id), entry);
        }
        Ok(catalog)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn get(&self, id: &str) -> Option<&ConceptEntry> {
        self.entries.get(&normalize_concept_id(id))
    }

    pub fn insert(&mut self, id: &str, entry: ConceptEntry) {
        self.entries.insert(normalize_concept_id(id), entry);
    }

    /// Related ids that have no entry of their own.
    pub fn unresolved(&self) -> BTreeSet<String> {
        self.entries
            .values()
            .flat_map(|e| e.related.iter())
            .filter(|r| !self.entries.contains_key(*r))
            .cloned()
            .collect()
    }
}

/// The root plus every related concept of level >= 2 reachable from it.
/// Transitive expansion walks only through level >= 2 concepts; unresolved
/// ids are skipped since their level is unknown.
pub fn expand_concept(
    root: &str,
    catalog: &ConceptCatalog,
    expansion: Expansion,
) -> Result<BTreeSet<String>, IngestError> {
    let root = normalize_concept_id(root);
    let entry = catalog
        .entries
        .get(&root)
        .ok_or_else(|| IngestError::UnknownConcept(root.clone()))?;
    if entry.level != 1 {
        return Err(IngestError::WrongLevel {
            id: root,
            level: entry.level,
        });
    }

    let mut members = BTreeSet::from([root.clone()]);
    let mut queue = VecDeque::from([(root, 0usize)]);
    while let Some((id, depth)) = queue.pop_front() {
        if expansion == Expansion::OneHop && depth >= 1 {
            continue;
        }
        for related in &catalog.entries[&id].related {
            let Some(e) = catalog.entries.get(related) else {
                continue;
            };
            if e.level >= 2 && members.insert(related.clone()) {
                queue.push_back((related.clone(), depth + 1));
            }
        }
    }
    Ok(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(name: &str, level: u8, related: &[&str]) -> ConceptEntry {
        ConceptEntry {
            display_name: name.into(),
            level,
            related: related.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn catalog(items: &[(&str, ConceptEntry)]) -> ConceptCatalog {
        let mut c = ConceptCatalog::default();
        for (id, e) in items {
            c.insert(id, e.clone());
        }
        c
    }

    #[test]
    fn artificial_intelligence_example() {
        let c = catalog(&[
            (
                "C154945302",
                entry("Artificial Intelligence", 1, &["C108583219", "C41008148"]),
            ),
            ("C108583219", entry("Deep Learning", 2, &[])),
            ("C41008148", entry("Computer Science", 0, &[])),
        ]);
        let got = expand_concept("C154945302", &c, Expansion::Transitive).unwrap();
        assert_eq!(
            got,
            BTreeSet::from(["C154945302".to_string(), "C108583219".to_string()])
        );
    }

    #[test]
    fn no_related_concepts() {
        let c = catalog(&[("C1", entry("root", 1, &[]))]);
        assert_eq!(expand_concept("C1", &c, Expansion::Transitive).unwrap().len(), 1);
    }

    #[test]
    fn chain_is_followed_transitively() {
        let c = catalog(&[
            ("C1", entry("l1", 1, &["C2"])),
            ("C2", entry("l2", 2, &["C3", "C1"])),
            ("C3", entry("l3", 3, &["C9"])),
        ]);
        assert_eq!(expand_concept("C1", &c, Expansion::Transitive).unwrap().len(), 3);
        assert_eq!(expand_concept("C1", &c, Expansion::OneHop).unwrap().len(), 2);
        assert_eq!(c.unresolved(), BTreeSet::from(["C9".to_string()]));
    }

    #[test]
    fn does_not_walk_through_coarse_concepts() {
        let c = catalog(&[
            ("C1", entry("l1", 1, &["C0"])),
            ("C0", entry("l0", 0, &["C5"])),
            ("C5", entry("l2", 2, &[])),
        ]);
        assert_eq!(expand_concept("C1", &c, Expansion::Transitive).unwrap().len(), 1);
    }

    #[test]
    fn errors() {
        let c = catalog(&[("C2", entry("l2", 2, &[]))]);
        assert!(matches!(
            expand_concept("C1", &c, Expansion::Transitive),
            Err(IngestError::UnknownConcept(_))
        ));
        assert!(matches!(
            expand_concept("C2", &c, Expansion::Transitive),
            Err(IngestError::WrongLevel { level: 2, .. })
        ));
    }

    #[test]
    fn id_normalization_and_json() {
        assert_eq!(normalize_concept_id("https://openalex.org/c1276947"), "C1276947");
        let text = r#"{"entries": {"c1": {"display_name": "x", "level": 1, "related": ["https://openalex.org/C2"]}}}"#;
        let c = ConceptCatalog::from_json(text).unwrap();
        assert_eq!(c.get("C1").unwrap().related, vec!["C2"]);
        assert!(ConceptCatalog::from_json(r#"{"entries": {"C1": {"display_name": "x", "level": 7}}}"#).is_err());
        assert_eq!(ConceptCatalog::from_json(&c.to_json()).unwrap(), c);
    }

    proptest! {
        #[test]
        fn expansion_never_contains_level_zero(
            levels in proptest::collection::vec(0u8..=5, 2..25),
            edges in proptest::collection::vec((0usize..25, 0usize..25), 0..80),
        ) {
            let n = levels.len();
            let mut c = ConceptCatalog::default();
            for (i, &level) in levels.iter().enumerate() {
                let related = edges
                    .iter()
                    .filter(|(a, b)| *a % n == i && *b % n != i)
                    .map(|(_, b)| format!("C{}", b % n))
                    .collect();
                let level = if i == 0 { 1 } else { level };
                c.insert(&format!("C{i}"), ConceptEntry { display_name: String::new(), level, related });
            }
            let got = expand_concept("C0", &c, Expansion::Transitive).unwrap();
            prop_assert!(got.contains("C0"));
            for id in &got {
                let level = c.get(id).unwrap().level;
                prop_assert!(level >= 2 || id == "C0");
            }
            let again = expand_concept("C0", &c, Expansion::Transitive).unwrap();
            prop_assert_eq!(got, again);
        }
    }
}
