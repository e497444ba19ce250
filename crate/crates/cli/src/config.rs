//! Declarative analysis configuration and its validation.

use std::fmt;
use std::path::{Path, PathBuf};

use collab_core::corpus::{find_overlap, AggregationKey, Period};
use collab_core::geometry::H0Mode;
use collab_ingest::catalog::normalize_concept_id;
use collab_ingest::{ConceptCatalog, Expansion};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// JSON Schema for the config file.
pub const CONFIG_SCHEMA: &str = include_str!("../schema/config.schema.json");

/// The fifteen level-1 disciplines studied by default.
pub const DEFAULT_DISCIPLINES: [&str; 15] = [
    "C154945302",
    "C62520636",
    "C150903083",
    "C171250308",
    "C88463610",
    "C109214941",
    "C146978453",
    "C116915560",
    "C199104240",
    "C169760540",
    "C26873012",
    "C87717796",
    "C1965285",
    "C1276947",
    "C202444582",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeriodPreset {
    #[serde(rename = "paper-4")]
    Four,
    #[serde(rename = "paper-10")]
    Ten,
}

impl std::str::FromStr for PeriodPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-4" => Ok(PeriodPreset::Four),
            "paper-10" => Ok(PeriodPreset::Ten),
            other => Err(format!(
                "unknown period preset {other:?} (expected paper-4 or paper-10)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub from: i32,
    pub to: i32,
}

/// A preset name or an explicit list of year ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PeriodSpec {
    Preset(PeriodPreset),
    List(Vec<PeriodDef>),
}

impl PeriodSpec {
    pub fn resolve(&self) -> Result<Vec<Period>, String> {
        match self {
            PeriodSpec::Preset(PeriodPreset::Four) => Ok(Period::paper_four()),
            PeriodSpec::Preset(PeriodPreset::Ten) => Ok(Period::paper_ten()),
            PeriodSpec::List(defs) => defs
                .iter()
                .map(|d| {
                    let label = d.label.clone().unwrap_or_else(|| format!("{}-{}", d.from, d.to));
                    Period::new(label, d.from, d.to).map_err(|e| e.to_string())
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum H0Setting {
    #[serde(rename = "auto")]
    Auto,
    #[serde(rename = "strict-1.0")]
    Strict,
}

impl H0Setting {
    pub fn mode(self) -> H0Mode {
        match self {
            H0Setting::Auto => H0Mode::Auto,
            H0Setting::Strict => H0Mode::Strict,
        }
    }
}

impl std::str::FromStr for H0Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(H0Setting::Auto),
            "1" | "1.0" | "strict-1.0" => Ok(H0Setting::Strict),
            other => Err(format!("unknown h0 mode {other:?} (expected auto or 1.0)")),
        }
    }
}

/// Entities clustered in each ICD window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcdEntities {
    /// Top N of the window itself.
    PerWindow,
    /// Top N of the analysis period enclosing the window.
    EnclosingPeriod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub disciplines: Vec<String>,
    pub periods: PeriodSpec,
    pub icd_periods: PeriodSpec,
    pub icd_entities: IcdEntities,
    pub key: AggregationKey,
    pub top_n: usize,
    pub h_star: f64,
    pub h0: H0Setting,
    pub min_volume: u64,
    pub journal_only: bool,
    pub expansion: Expansion,
    /// Concept catalog file; fetched from the API when absent.
    pub catalog: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub requests_per_second: f64,
    pub max_concepts: usize,
    /// Entities per period drawn in the collaboration-rate series.
    pub series_top: usize,
    /// Entities per period whose pairwise distance trends are exported.
    pub bilateral_top: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            disciplines: DEFAULT_DISCIPLINES.iter().map(|s| s.to_string()).collect(),
            periods: PeriodSpec::Preset(PeriodPreset::Four),
            icd_periods: PeriodSpec::Preset(PeriodPreset::Ten),
            icd_entities: IcdEntities::PerWindow,
            key: AggregationKey::Country,
            top_n: 30,
            h_star: 1.005,
            h0: H0Setting::Auto,
            min_volume: collab_core::metrics::DEFAULT_MIN_VOLUME,
            journal_only: false,
            expansion: Expansion::Transitive,
            catalog: None,
            cache_dir: PathBuf::from("cache"),
            out_dir: PathBuf::from("out"),
            workers: 4,
            requests_per_second: collab_ingest::rate::DEFAULT_REQUESTS_PER_SECOND,
            max_concepts: 2000,
            series_top: 10,
            bilateral_top: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl AnalysisConfig {
    /// Parses a config document. Relative paths are taken relative to `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut config: AnalysisConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(vec![Diagnostic::new("$", e.to_string())]))?;
        config.rebase(base);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(vec![Diagnostic::new(
                "$",
                format!("cannot read {}: {e}", path.display()),
            )])
        })?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.cache_dir);
        join(&mut self.out_dir);
        if let Some(c) = self.catalog.as_mut() {
            join(c);
        }
    }

    pub fn discipline_ids(&self) -> Vec<String> {
        self.disciplines.iter().map(|d| normalize_concept_id(d)).collect()
    }

    pub fn analysis_periods(&self) -> Vec<Period> {
        self.periods.resolve().unwrap_or_default()
    }

    pub fn icd_windows(&self) -> Vec<Period> {
        self.icd_periods.resolve().unwrap_or_default()
    }

    /// First and last year covered by any period or ICD window.
    pub fn year_span(&self) -> Option<(i32, i32)> {
        let all: Vec<Period> = self.analysis_periods().into_iter().chain(self.icd_windows()).collect();
        let from = all.iter().map(|p| p.year_from).min()?;
        let to = all.iter().map(|p| p.year_to).max()?;
        Some((from, to))
    }

    /// The settings that determine the outputs: file locations and the worker
    /// count are blanked.
    pub fn analysis_settings(&self) -> AnalysisConfig {
        AnalysisConfig {
            catalog: None,
            cache_dir: PathBuf::new(),
            out_dir: PathBuf::new(),
            workers: 0,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON form of [`Self::analysis_settings`].
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.analysis_settings()).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Everything that would stop a run from starting. An empty list means the
    /// run may proceed. The catalog named by the config, if any, is read to
    /// check the disciplines.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.disciplines.is_empty() {
            out.push(Diagnostic::new("disciplines", "at least one discipline is required"));
        }
        for (i, d) in self.disciplines.iter().enumerate() {
            let id = normalize_concept_id(d);
            let digits = id.strip_prefix('C').unwrap_or_default();
            if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
                out.push(Diagnostic::new(
                    format!("disciplines[{i}]"),
                    format!("{d:?} is not a concept id"),
                ));
            }
        }
        if let Some((i, _)) = self
            .discipline_ids()
            .iter()
            .enumerate()
            .find(|(i, id)| self.discipline_ids()[..*i].contains(id))
        {
            out.push(Diagnostic::new(format!("disciplines[{i}]"), "duplicate discipline"));
        }

        let periods = self.check_periods("periods", &self.periods, &mut out);
        let windows = self.check_periods("icd_periods", &self.icd_periods, &mut out);
        if self.icd_entities == IcdEntities::EnclosingPeriod {
            for (i, w) in windows.iter().enumerate() {
                if !periods
                    .iter()
                    .any(|p| p.year_from <= w.year_from && w.year_to <= p.year_to)
                {
                    out.push(Diagnostic::new(
                        format!("icd_periods[{i}]"),
                        format!(
                            "window {} lies in no analysis period, required by icd_entities = enclosing-period",
                            w.label
                        ),
                    ));
                }
            }
        }

        if self.top_n < 2 {
            out.push(Diagnostic::new("top_n", "must be at least 2"));
        }
        if !(self.h_star.is_finite() && self.h_star > 0.0) {
            out.push(Diagnostic::new(
                "h_star",
                format!("must be a positive number, got {}", self.h_star),
            ));
        }
        if self.workers == 0 {
            out.push(Diagnostic::new("workers", "must be at least 1"));
        }
        if !(self.requests_per_second.is_finite() && self.requests_per_second > 0.0) {
            out.push(Diagnostic::new("requests_per_second", "must be positive"));
        }
        if self.max_concepts == 0 {
            out.push(Diagnostic::new("max_concepts", "must be at least 1"));
        }
        if self.series_top == 0 {
            out.push(Diagnostic::new("series_top", "must be at least 1"));
        }
        if self.bilateral_top < 2 {
            out.push(Diagnostic::new("bilateral_top", "must be at least 2"));
        }

        if let Some(path) = &self.catalog {
            match ConceptCatalog::load(path) {
                Ok(catalog) => self.check_catalog(&catalog, &mut out),
                Err(e) => out.push(Diagnostic::new(
                    "catalog",
                    format!("cannot load {}: {e}", path.display()),
                )),
            }
        }
        out
    }

    fn check_periods(&self, field: &str, spec: &PeriodSpec, out: &mut Vec<Diagnostic>) -> Vec<Period> {
        let periods = match spec.resolve() {
            Ok(p) => p,
            Err(e) => {
                out.push(Diagnostic::new(field, e));
                return Vec::new();
            }
        };
        if periods.is_empty() {
            out.push(Diagnostic::new(field, "at least one period is required"));
        }
        if let Some((a, b)) = find_overlap(&periods) {
            let index = |p: &Period| periods.iter().position(|q| q == p).unwrap_or_default();
            out.push(Diagnostic::new(
                format!("{field}[{}]", index(b)),
                format!("period {} overlaps period {}", b.label, a.label),
            ));
        }
        periods
    }

    fn check_catalog(&self, catalog: &ConceptCatalog, out: &mut Vec<Diagnostic>) {
        for (i, id) in self.discipline_ids().iter().enumerate() {
            match catalog.get(id) {
                None => out.push(Diagnostic::new(
                    format!("disciplines[{i}]"),
                    format!("unknown concept {id}: not in the catalog"),
                )),
                Some(entry) if entry.level != 1 => out.push(Diagnostic::new(
                    format!("disciplines[{i}]"),
                    format!(
                        "concept {id} ({}) has level {}, expected 1",
                        entry.display_name, entry.level
                    ),
                )),
                Some(_) => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_matches_defaults() {
        let schema: serde_json::Value = serde_json::from_str(CONFIG_SCHEMA).unwrap();
        let properties = schema["properties"].as_object().unwrap();
        let defaults = serde_json::to_value(AnalysisConfig::default()).unwrap();
        let defaults = defaults.as_object().unwrap();
        assert_eq!(
            properties.keys().collect::<Vec<_>>(),
            defaults.keys().collect::<Vec<_>>()
        );
        for (field, spec) in properties {
            if let Some(default) = spec.get("default") {
                assert_eq!(default, &defaults[field], "{field}");
            }
        }
    }

    #[test]
    fn default_config_is_valid() {
        assert_eq!(AnalysisConfig::default().validate(), vec![]);
    }

    #[test]
    fn empty_document_means_defaults() {
        let c = AnalysisConfig::from_json("{}", Path::new("")).unwrap();
        assert_eq!(c, AnalysisConfig::default());
    }

    #[test]
    fn negative_threshold() {
        let c = AnalysisConfig {
            h_star: -1.0,
            ..Default::default()
        };
        let d = c.validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "h_star");
    }

    #[test]
    fn overlapping_periods_name_both() {
        let c = AnalysisConfig::from_json(
            r#"{"periods": [{"from": 1990, "to": 2000}, {"label": "late", "from": 1995, "to": 2005}]}"#,
            Path::new(""),
        )
        .unwrap();
        let d = c.validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "periods[1]");
        assert!(d[0].message.contains("1990-2000") && d[0].message.contains("late"));
    }

    #[test]
    fn reversed_period() {
        let c = AnalysisConfig::from_json(r#"{"periods": [{"from": 2000, "to": 1990}]}"#, Path::new("")).unwrap();
        assert_eq!(c.validate()[0].path, "periods");
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(matches!(
            AnalysisConfig::from_json(r#"{"topn": 3}"#, Path::new("")),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn catalog_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("catalog.json");
        std::fs::write(
            &path,
            r#"{"entries": {"C1": {"display_name": "One", "level": 1}, "C0": {"display_name": "Zero", "level": 0}}}"#,
        )
        .unwrap();
        let c = AnalysisConfig {
            disciplines: vec!["C1".into(), "C0".into(), "C9".into()],
            catalog: Some(path),
            ..Default::default()
        };
        let d = c.validate();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].path, "disciplines[1]");
        assert!(d[0].message.contains("level 0"));
        assert_eq!(d[1].path, "disciplines[2]");
        assert!(d[1].message.contains("unknown concept C9"));
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let c = AnalysisConfig::from_json(r#"{"cache_dir": "c", "catalog": "cat.json"}"#, Path::new("/x")).unwrap();
        assert_eq!(c.cache_dir, PathBuf::from("/x/c"));
        assert_eq!(c.catalog, Some(PathBuf::from("/x/cat.json")));
        assert_eq!(c.out_dir, PathBuf::from("/x/out"));
    }

    #[test]
    fn year_span_covers_windows() {
        assert_eq!(AnalysisConfig::default().year_span(), Some((1971, 2020)));
    }

    #[test]
    fn hash_changes_with_content() {
        let a = AnalysisConfig::default();
        let b = AnalysisConfig { top_n: 10, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
        let moved = AnalysisConfig {
            out_dir: PathBuf::from("/elsewhere"),
            workers: 9,
            ..a.clone()
        };
        assert_eq!(a.hash(), moved.hash());
    }
}
