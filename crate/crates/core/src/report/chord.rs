use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::corpus::{CountTable, EntityPair, Period, WorkRecord};

/// Band widths for a chord diagram over the top entities of one slice.
///
/// For each displayed entity X, its works split exactly into:
/// `solo` (X is the only entity), `other` (every co-entity lies outside the
/// displayed set) and works shared with at least one displayed partner. The
/// last group is what `flows` draws; a work with three displayed entities
/// feeds three flows.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordData {
    pub period: Period,
    pub entities: Vec<String>,
    pub flows: BTreeMap<EntityPair, u64>,
    pub solo: BTreeMap<String, u64>,
    pub other: BTreeMap<String, u64>,
}

impl ChordData {
    pub fn flow(&self, x: &str, y: &str) -> u64 {
        EntityPair::new(x, y)
            .and_then(|p| self.flows.get(&p).copied())
            .unwrap_or(0)
    }

    /// `kind,entity_a,entity_b,count` with kind one of `flow`, `solo`, `other`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "entity_a", "entity_b", "count"])?;
        for (pair, count) in &self.flows {
            w.write_record(["flow", &pair.a, &pair.b, &count.to_string()])?;
        }
        for entity in &self.entities {
            let solo = self.solo.get(entity).copied().unwrap_or(0);
            w.write_record(["solo", entity, entity, &solo.to_string()])?;
        }
        for entity in &self.entities {
            let other = self.other.get(entity).copied().unwrap_or(0);
            w.write_record(["other", entity, "other", &other.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Chord data for the `n` largest entities of `table`. `records` supplies the
/// work-level detail needed to separate the "other" arc; only records inside
/// the table's slice are read.
pub fn chord_data(table: &CountTable, records: &[WorkRecord], n: usize) -> ChordData {
    let entities = table.top_entities(n);
    let shown: BTreeSet<&str> = entities.iter().map(String::as_str).collect();

    let mut flows = BTreeMap::new();
    for (i, x) in entities.iter().enumerate() {
        for y in &entities[i + 1..] {
            let count = table.pair_count(x, y);
            if count > 0 {
                flows.insert(EntityPair::new(x, y).expect("distinct entities"), count);
            }
        }
    }

    let mut solo: BTreeMap<String, u64> = entities.iter().map(|e| (e.clone(), 0)).collect();
    let mut other = solo.clone();
    let slice = records
        .iter()
        .filter(|r| r.discipline_id == table.discipline_id && table.period.contains(r.year));
    for record in slice {
        let keys = table.key.keys_of(record);
        let displayed: Vec<&str> = keys.iter().map(String::as_str).filter(|k| shown.contains(k)).collect();
        if let [only] = displayed[..] {
            let bucket = if keys.len() == 1 { &mut solo } else { &mut other };
            *bucket.get_mut(only).expect("displayed entity") += 1;
        }
    }

    ChordData {
        period: table.period.clone(),
        entities,
        flows,
        solo,
        other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::{table_of, work};

    #[test]
    fn three_work_example() {
        let works = [
            work("a", 2000, &["US", "CN"]),
            work("b", 2000, &["US"]),
            work("c", 2000, &[]),
        ];
        let c = chord_data(&table_of(&works), &works, 2);
        assert_eq!(c.entities, vec!["US", "CN"]);
        assert_eq!(c.flow("US", "CN"), 1);
        assert_eq!(c.solo["US"], 1);
        assert_eq!(c.solo["CN"], 0);
    }

    #[test]
    fn minimal_chord_and_truncation_noop() {
        let works: Vec<_> = (0..5).map(|i| work(&i.to_string(), 2000, &["A", "B"])).collect();
        let c = chord_data(&table_of(&works), &works, 10);
        assert_eq!(c.entities.len(), 2);
        assert_eq!(c.flows.len(), 1);
        assert_eq!(c.flow("B", "A"), 5);
    }

    #[test]
    fn other_arc_collects_partners_outside_top() {
        let works = [
            work("1", 2000, &["A"]),
            work("2", 2000, &["A"]),
            work("3", 2000, &["A", "B"]),
            work("4", 2000, &["B"]),
            work("5", 2000, &["A", "Z"]),
            work("6", 2000, &["A", "B", "Z"]),
        ];
        let c = chord_data(&table_of(&works), &works, 2);
        assert_eq!(c.entities, vec!["A", "B"]);
        assert_eq!(c.solo["A"], 2);
        assert_eq!(c.other["A"], 1);
        assert_eq!(c.flow("A", "B"), 2);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("flow,A,B,2\n"));
        assert!(text.contains("other,A,other,1\n"));
    }
}
