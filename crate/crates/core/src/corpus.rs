//! Work records, analysis periods and co-production count tables.
//!
//! A work "has nationality X" when at least one of its contributors is
//! affiliated with an institution located in X. Works are counted whole:
//! a work with nationalities {US, CN} adds one to `n_US`, one to `n_CN` and
//! one to the co-count `n_{US,CN}`. Several contributors from the same
//! country still count once. Works with no resolvable country are
//! "unknown" and only enter `unknown_count` and `total_count`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const COUNT_TABLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("count table has no works")]
    EmptySlice,
    #[error("invalid period {label:?}: {year_from} > {year_to}")]
    InvalidPeriod {
        label: String,
        year_from: i32,
        year_to: i32,
    },
    #[error("unsupported count table schema version {0}")]
    SchemaVersion(u32),
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
}

/// Entity dimension a count table is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationKey {
    Country,
    Institution,
}

impl AggregationKey {
    pub fn keys_of<'a>(&self, record: &'a WorkRecord) -> &'a BTreeSet<String> {
        match self {
            AggregationKey::Country => &record.nationalities,
            AggregationKey::Institution => &record.institutions,
        }
    }
}

impl fmt::Display for AggregationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationKey::Country => f.write_str("country"),
            AggregationKey::Institution => f.write_str("institution"),
        }
    }
}

impl std::str::FromStr for AggregationKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "country" => Ok(AggregationKey::Country),
            "institution" => Ok(AggregationKey::Institution),
            other => Err(format!("unknown aggregation key {other:?}")),
        }
    }
}

/// One scholarly work as seen by the counting rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkRecord {
    pub work_id: String,
    pub year: i32,
    pub discipline_id: String,
    /// ISO 3166-1 alpha-2 codes. Empty means unknown nationality.
    pub nationalities: BTreeSet<String>,
    /// ROR identifiers.
    pub institutions: BTreeSet<String>,
    pub is_journal_article: bool,
}

impl WorkRecord {
    pub fn from_raw(raw: &RawWork, discipline_id: &str) -> Self {
        WorkRecord {
            work_id: raw.id.clone(),
            year: raw.publication_year.unwrap_or_default(),
            discipline_id: discipline_id.to_string(),
            nationalities: nationality_of(raw),
            institutions: institutions_of(raw),
            is_journal_article: raw.is_journal_article(),
        }
    }

    pub fn is_unknown_nationality(&self) -> bool {
        self.nationalities.is_empty()
    }
}

/// Subset of an OpenAlex work object needed by the counting rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawWork {
    pub id: String,
    #[serde(default)]
    pub publication_year: Option<i32>,
    #[serde(default, rename = "type")]
    pub work_type: Option<String>,
    #[serde(default)]
    pub primary_location: Option<RawLocation>,
    #[serde(default)]
    pub authorships: Vec<RawAuthorship>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawLocation {
    #[serde(default)]
    pub source: Option<RawSource>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawSource {
    #[serde(default, rename = "type")]
    pub source_type: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawAuthorship {
    #[serde(default)]
    pub institutions: Vec<RawInstitution>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawInstitution {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub ror: Option<String>,
    #[serde(default)]
    pub country_code: Option<String>,
}

impl RawWork {
    /// Journal article: an `article` whose primary source (when known) is a journal.
    pub fn is_journal_article(&self) -> bool {
        let article = matches!(self.work_type.as_deref(), Some("article") | Some("journal-article"));
        let source_type = self
            .primary_location
            .as_ref()
            .and_then(|l| l.source.as_ref())
            .and_then(|s| s.source_type.as_deref());
        article && source_type.is_none_or(|t| t == "journal")
    }
}

/// Union of the countries of every contributor's institutions.
pub fn nationality_of(raw: &RawWork) -> BTreeSet<String> {
    raw.authorships
        .iter()
        .flat_map(|a| a.institutions.iter())
        .filter_map(|inst| inst.country_code.as_deref())
        .map(str::trim)
        .filter(|code| !code.is_empty())
        .map(str::to_ascii_uppercase)
        .collect()
}

/// ROR identifiers of every contributor's institutions; institutions
/// without a ROR fall back to their OpenAlex id.
pub fn institutions_of(raw: &RawWork) -> BTreeSet<String> {
    raw.authorships
        .iter()
        .flat_map(|a| a.institutions.iter())
        .filter_map(|inst| inst.ror.as_deref().or(inst.id.as_deref()))
        .map(str::trim)
        .filter(|id| !id.is_empty())
        .map(str::to_string)
        .collect()
}

/// Inclusive range of publication years.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Period {
    pub label: String,
    pub year_from: i32,
    pub year_to: i32,
}

impl Period {
    pub fn new(label: impl Into<String>, year_from: i32, year_to: i32) -> Result<Self, CorpusError> {
        let label = label.into();
        if year_from > year_to {
            return Err(CorpusError::InvalidPeriod {
                label,
                year_from,
                year_to,
            });
        }
        Ok(Period {
            label,
            year_from,
            year_to,
        })
    }

    /// Period labelled `"<from>-<to>"`.
    pub fn span(year_from: i32, year_to: i32) -> Result<Self, CorpusError> {
        Self::new(format!("{year_from}-{year_to}"), year_from, year_to)
    }

    pub fn single_year(year: i32) -> Self {
        Period {
            label: year.to_string(),
            year_from: year,
            year_to: year,
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        self.year_from <= year && year <= self.year_to
    }

    pub fn overlaps(&self, other: &Period) -> bool {
        self.year_from <= other.year_to && other.year_from <= self.year_to
    }

    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.year_from..=self.year_to
    }

    /// 1971-1990, 1991-2000, 2001-2010, 2011-2020.
    pub fn paper_four() -> Vec<Period> {
        [(1971, 1990), (1991, 2000), (2001, 2010), (2011, 2020)]
            .into_iter()
            .map(|(a, b)| Period::span(a, b).expect("static period"))
            .collect()
    }

    /// Ten five-year windows 1971-1975 .. 2016-2020.
    pub fn paper_ten() -> Vec<Period> {
        (0..10)
            .map(|i| {
                let from = 1971 + 5 * i;
                Period::span(from, from + 4).expect("static period")
            })
            .collect()
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// First pair of overlapping periods, if any.
pub fn find_overlap(periods: &[Period]) -> Option<(&Period, &Period)> {
    for (i, a) in periods.iter().enumerate() {
        for b in &periods[i + 1..] {
            if a.overlaps(b) {
                return Some((a, b));
            }
        }
    }
    None
}

/// Unordered entity pair stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityPair {
    pub a: String,
    pub b: String,
}

impl EntityPair {
    /// Returns `None` for the diagonal.
    pub fn new(x: &str, y: &str) -> Option<Self> {
        match x.cmp(y) {
            std::cmp::Ordering::Less => Some(EntityPair {
                a: x.to_string(),
                b: y.to_string(),
            }),
            std::cmp::Ordering::Greater => Some(EntityPair {
                a: y.to_string(),
                b: x.to_string(),
            }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// Unary and pairwise work counts for one (discipline, period, key) slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub discipline_id: String,
    pub period: Period,
    pub key: AggregationKey,
    /// n_X.
    pub unary: BTreeMap<String, u64>,
    /// n_{X,Y}, X < Y. The diagonal is implicit.
    pub pairwise: BTreeMap<EntityPair, u64>,
    /// Works containing X whose nationality set has two or more countries.
    pub international: BTreeMap<String, u64>,
    /// Works whose key set is exactly {X}.
    pub solo: BTreeMap<String, u64>,
    pub unknown_count: u64,
    pub total_count: u64,
}

impl CountTable {
    pub fn empty(discipline_id: &str, period: Period, key: AggregationKey) -> Self {
        CountTable {
            discipline_id: discipline_id.to_string(),
            period,
            key,
            unary: BTreeMap::new(),
            pairwise: BTreeMap::new(),
            international: BTreeMap::new(),
            solo: BTreeMap::new(),
            unknown_count: 0,
            total_count: 0,
        }
    }

    /// Folds the records of `discipline_id` published within `period`.
    pub fn build<'a, I>(records: I, discipline_id: &str, period: &Period, key: AggregationKey) -> Self
    where
        I: IntoIterator<Item = &'a WorkRecord>,
    {
        let mut table = Self::empty(discipline_id, period.clone(), key);
        for record in records {
            if record.discipline_id == discipline_id && period.contains(record.year) {
                table.add(record);
            }
        }
        table
    }

    fn add(&mut self, record: &WorkRecord) {
        self.total_count += 1;
        let keys: Vec<&String> = self.key.keys_of(record).iter().collect();
        if keys.is_empty() {
            self.unknown_count += 1;
            return;
        }
        let multinational = record.nationalities.len() >= 2;
        for (i, x) in keys.iter().enumerate() {
            *self.unary.entry((*x).clone()).or_default() += 1;
            if multinational {
                *self.international.entry((*x).clone()).or_default() += 1;
            }
            // keys are sorted, so x < y for every later y
            for y in &keys[i + 1..] {
                let pair = EntityPair {
                    a: (*x).clone(),
                    b: (*y).clone(),
                };
                *self.pairwise.entry(pair).or_default() += 1;
            }
        }
        if keys.len() == 1 {
            *self.solo.entry(keys[0].clone()).or_default() += 1;
        }
    }

    /// Pointwise sum of two shards of the same slice.
    pub fn merge(&mut self, other: &CountTable) {
        fn sum_into<K: Ord + Clone>(dst: &mut BTreeMap<K, u64>, src: &BTreeMap<K, u64>) {
            for (k, v) in src {
                *dst.entry(k.clone()).or_default() += v;
            }
        }
        sum_into(&mut self.unary, &other.unary);
        sum_into(&mut self.pairwise, &other.pairwise);
        sum_into(&mut self.international, &other.international);
        sum_into(&mut self.solo, &other.solo);
        self.unknown_count += other.unknown_count;
        self.total_count += other.total_count;
    }

    pub fn unary_count(&self, x: &str) -> u64 {
        self.unary.get(x).copied().unwrap_or(0)
    }

    /// n_{X,Y}; n_{X,X} = n_X.
    pub fn pair_count(&self, x: &str, y: &str) -> u64 {
        match EntityPair::new(x, y) {
            Some(pair) => self.pairwise.get(&pair).copied().unwrap_or(0),
            None => self.unary_count(x),
        }
    }

    pub fn international_count(&self, x: &str) -> u64 {
        self.international.get(x).copied().unwrap_or(0)
    }

    pub fn solo_count(&self, x: &str) -> u64 {
        self.solo.get(x).copied().unwrap_or(0)
    }

    /// Works with at least one entity of this key.
    pub fn attributed_count(&self) -> u64 {
        self.total_count - self.unknown_count
    }

    /// Entities by descending count, ties by ascending code, truncated to `n`.
    pub fn top_entities(&self, n: usize) -> Vec<String> {
        let mut ranked: Vec<(&String, u64)> = self.unary.iter().map(|(k, v)| (k, *v)).collect();
        ranked.sort_by(|(ka, va), (kb, vb)| vb.cmp(va).then_with(|| ka.cmp(kb)));
        ranked.into_iter().take(n).map(|(k, _)| k.clone()).collect()
    }

    pub fn unknown_rate(&self) -> Result<f64, CorpusError> {
        if self.total_count == 0 {
            return Err(CorpusError::EmptySlice);
        }
        Ok(self.unknown_count as f64 / self.total_count as f64)
    }

    pub fn to_json(&self) -> String {
        let doc = CountTableDoc::from(self);
        serde_json::to_string_pretty(&doc).expect("count table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let doc: CountTableDoc = serde_json::from_str(text).map_err(|e| CorpusError::Json(e.to_string()))?;
        doc.try_into()
    }

    /// `entity,count`, sorted by entity.
    pub fn write_unary_csv<W: Write>(&self, out: W) -> Result<(), CorpusError> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CorpusError::Csv(e.to_string());
        w.write_record(["entity", "count"]).map_err(csv_err)?;
        for (entity, count) in &self.unary {
            w.write_record([entity.as_str(), &count.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CorpusError::Csv(e.to_string()))
    }

    /// `entity_a,entity_b,count` with `entity_a < entity_b`.
    pub fn write_pairwise_csv<W: Write>(&self, out: W) -> Result<(), CorpusError> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CorpusError::Csv(e.to_string());
        w.write_record(["entity_a", "entity_b", "count"]).map_err(csv_err)?;
        for (pair, count) in &self.pairwise {
            w.write_record([pair.a.as_str(), pair.b.as_str(), &count.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| CorpusError::Csv(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct PairCountDoc {
    entity_a: String,
    entity_b: String,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct CountTableDoc {
    schema_version: u32,
    discipline_id: String,
    period: Period,
    key: AggregationKey,
    total_count: u64,
    unknown_count: u64,
    unary: BTreeMap<String, u64>,
    pairwise: Vec<PairCountDoc>,
    international: BTreeMap<String, u64>,
    solo: BTreeMap<String, u64>,
}

impl From<&CountTable> for CountTableDoc {
    fn from(t: &CountTable) -> Self {
        CountTableDoc {
            schema_version: COUNT_TABLE_SCHEMA_VERSION,
            discipline_id: t.discipline_id.clone(),
            period: t.period.clone(),
            key: t.key,
            total_count: t.total_count,
            unknown_count: t.unknown_count,
            unary: t.unary.clone(),
            pairwise: t
                .pairwise
                .iter()
                .map(|(p, c)| PairCountDoc {
                    entity_a: p.a.clone(),
                    entity_b: p.b.clone(),
                    count: *c,
                })
                .collect(),
            international: t.international.clone(),
            solo: t.solo.clone(),
        }
    }
}

impl TryFrom<CountTableDoc> for CountTable {
    type Error = CorpusError;

    fn try_from(doc: CountTableDoc) -> Result<Self, CorpusError> {
        if doc.schema_version != COUNT_TABLE_SCHEMA_VERSION {
            return Err(CorpusError::SchemaVersion(doc.schema_version));
        }
        let mut pairwise = BTreeMap::new();
        for p in doc.pairwise {
            let pair = EntityPair::new(&p.entity_a, &p.entity_b)
                .ok_or_else(|| CorpusError::Json(format!("diagonal pair {}", p.entity_a)))?;
            pairwise.insert(pair, p.count);
        }
        Ok(CountTable {
            discipline_id: doc.discipline_id,
            period: doc.period,
            key: doc.key,
            unary: doc.unary,
            pairwise,
            international: doc.international,
            solo: doc.solo,
            unknown_count: doc.unknown_count,
            total_count: doc.total_count,
        })
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn inst(country: Option<&str>, ror: Option<&str>) -> RawInstitution {
        RawInstitution {
            id: None,
            ror: ror.map(str::to_string),
            country_code: country.map(str::to_string),
        }
    }

    fn raw_with(authors: Vec<Vec<RawInstitution>>) -> RawWork {
        RawWork {
            id: "W1".into(),
            publication_year: Some(2020),
            authorships: authors
                .into_iter()
                .map(|institutions| RawAuthorship { institutions })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn dual_nationality() {
        let raw = raw_with(vec![vec![inst(Some("US"), None)], vec![inst(Some("CN"), None)]]);
        let got: Vec<_> = nationality_of(&raw).into_iter().collect();
        assert_eq!(got, vec!["CN", "US"]);
    }

    #[test]
    fn same_country_counts_once() {
        let raw = raw_with(vec![vec![inst(Some("US"), None)], vec![inst(Some("us"), None)]]);
        assert_eq!(nationality_of(&raw).len(), 1);
    }

    #[test]
    fn unresolvable_institutions_give_unknown() {
        let raw = raw_with(vec![vec![inst(None, Some("https://ror.org/x"))], vec![]]);
        assert!(nationality_of(&raw).is_empty());
        let rec = WorkRecord::from_raw(&raw, "C1");
        assert!(rec.is_unknown_nationality());
        assert_eq!(rec.institutions.len(), 1);
    }

    #[test]
    fn three_work_table() {
        let t = table_of(&[
            work("a", 2000, &["US", "CN"]),
            work("b", 2000, &["US"]),
            work("c", 2000, &[]),
        ]);
        assert_eq!(t.unary_count("US"), 2);
        assert_eq!(t.unary_count("CN"), 1);
        assert_eq!(t.pair_count("US", "CN"), 1);
        assert_eq!(t.pair_count("CN", "US"), 1);
        assert_eq!(t.pair_count("US", "US"), 2);
        assert_eq!(t.unknown_count, 1);
        assert_eq!(t.total_count, 3);
        assert_eq!(t.solo_count("US"), 1);
        assert_eq!(t.international_count("US"), 1);
    }

    #[test]
    fn empty_stream_gives_zero_table() {
        let t = table_of(&[]);
        assert!(t.unary.is_empty() && t.pairwise.is_empty());
        assert_eq!((t.unknown_count, t.total_count), (0, 0));
        assert_eq!(t.unknown_rate(), Err(CorpusError::EmptySlice));
    }

    #[test]
    fn triple_nationality_work() {
        let t = table_of(&[work("a", 2000, &["X", "Y", "Z"])]);
        for e in ["X", "Y", "Z"] {
            assert_eq!(t.unary_count(e), 1);
        }
        assert_eq!(t.pairwise.len(), 3);
        assert!(t.pairwise.values().all(|&c| c == 1));
    }

    #[test]
    fn records_outside_slice_are_ignored() {
        let mut other = work("b", 2000, &["US"]);
        other.discipline_id = "C2".into();
        let t = CountTable::build(
            &[work("a", 1990, &["US"]), work("c", 2000, &["US"]), other],
            "C1",
            &Period::span(1995, 2005).unwrap(),
            AggregationKey::Country,
        );
        assert_eq!(t.total_count, 1);
    }

    #[test]
    fn top_entities_ordering() {
        let mut t = table_of(&[]);
        t.unary = [("A", 5), ("B", 3), ("C", 1)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        assert_eq!(t.top_entities(2), vec!["A", "B"]);
        assert_eq!(t.top_entities(10), vec!["A", "B", "C"]);
        t.unary = [("B", 5), ("A", 5)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        assert_eq!(t.top_entities(1), vec!["A"]);
    }

    #[test]
    fn unknown_rate_values() {
        let mut t = table_of(&[]);
        t.total_count = 4;
        t.unknown_count = 1;
        assert_eq!(t.unknown_rate().unwrap(), 0.25);
        t.unknown_count = 0;
        assert_eq!(t.unknown_rate().unwrap(), 0.0);
        t.unknown_count = 4;
        assert_eq!(t.unknown_rate().unwrap(), 1.0);
    }

    #[test]
    fn institution_key_uses_same_machinery() {
        let mut a = work("a", 2000, &["US"]);
        a.institutions = ["r1", "r2"].iter().map(|s| s.to_string()).collect();
        let t = CountTable::build(
            &[a],
            "C1",
            &Period::span(2000, 2000).unwrap(),
            AggregationKey::Institution,
        );
        assert_eq!(t.pair_count("r1", "r2"), 1);
        // one country only, so not international
        assert_eq!(t.international_count("r1"), 0);
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let t = table_of(&[work("a", 2000, &["US", "CN"]), work("b", 2001, &[])]);
        let back = CountTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        let bumped = t.to_json().replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert_eq!(CountTable::from_json(&bumped), Err(CorpusError::SchemaVersion(9)));
    }

    #[test]
    fn csv_exports() {
        let t = table_of(&[work("a", 2000, &["US", "CN"]), work("b", 2001, &["US"])]);
        let mut buf = Vec::new();
        t.write_unary_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "entity,count\nCN,1\nUS,2\n");
        let mut buf = Vec::new();
        t.write_pairwise_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "entity_a,entity_b,count\nCN,US,1\n");
    }

    #[test]
    fn period_presets() {
        let four = Period::paper_four();
        assert_eq!(four[0].label, "1971-1990");
        assert!(find_overlap(&four).is_none());
        let ten = Period::paper_ten();
        assert_eq!(ten.len(), 10);
        assert_eq!(ten[9].label, "2016-2020");
        assert!(find_overlap(&ten).is_none());
        assert!(Period::new("bad", 2000, 1999).is_err());
    }

    #[test]
    fn journal_article_detection() {
        let mut raw = RawWork {
            work_type: Some("article".into()),
            ..Default::default()
        };
        assert!(raw.is_journal_article());
        raw.primary_location = Some(RawLocation {
            source: Some(RawSource {
                source_type: Some("repository".into()),
            }),
        });
        assert!(!raw.is_journal_article());
        raw.work_type = Some("preprint".into());
        raw.primary_location = None;
        assert!(!raw.is_journal_article());
    }
}
