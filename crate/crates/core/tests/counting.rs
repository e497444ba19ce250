use std::collections::BTreeSet;

use collab_core::corpus::{AggregationKey, CountTable, Period, WorkRecord};
use collab_core::metrics::{intl_collab_rate, intl_collab_series, unknown_rate_series, YearTables};
use collab_testkit::{random_raw_corpus, random_records, rng, WorkSets, COUNTRIES};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn span() -> Period {
    Period::span(1900, 2100).unwrap()
}

fn records_from_raw(raw: &[collab_core::corpus::RawWork]) -> Vec<WorkRecord> {
    raw.iter().map(|w| WorkRecord::from_raw(w, "C1")).collect()
}

#[test]
fn raw_corpora_match_set_enumeration() {
    let mut r = rng(7);
    for _ in 0..100 {
        let raw = random_raw_corpus(&mut r, 12, &COUNTRIES[..4], (2000, 2003));
        let records = records_from_raw(&raw);
        let table = CountTable::build(&records, "C1", &span(), AggregationKey::Country);
        let sets = WorkSets::from_raw(&raw);

        assert_eq!(table.total_count, raw.len() as u64);
        assert_eq!(table.unknown_count, sets.unknown.len() as u64);
        assert_eq!(
            table.unary.keys().cloned().collect::<BTreeSet<_>>(),
            sets.by_entity.keys().cloned().collect()
        );
        for x in sets.by_entity.keys() {
            assert_eq!(table.unary_count(x), sets.count(x), "n_{x}");
            for y in sets.by_entity.keys() {
                assert_eq!(table.pair_count(x, y), sets.joint(x, y), "n_{x},{y}");
            }
        }
    }
}

#[test]
fn institution_key_counts_each_institution_once_per_work() {
    let mut r = rng(8);
    let raw = random_raw_corpus(&mut r, 30, &COUNTRIES, (2000, 2000));
    let records = records_from_raw(&raw);
    let table = CountTable::build(&records, "C1", &span(), AggregationKey::Institution);
    for (inst, &count) in &table.unary {
        let expected = raw
            .iter()
            .filter(|w| {
                w.authorships
                    .iter()
                    .flat_map(|a| &a.institutions)
                    .any(|i| i.id.as_deref() == Some(inst.as_str()))
            })
            .count() as u64;
        assert_eq!(count, expected, "{inst}");
    }
}

#[test]
fn collaboration_rate_matches_enumeration() {
    let mut r = rng(9);
    for _ in 0..50 {
        let records = random_records(&mut r, 40, &COUNTRIES[..5], (2000, 2000), "C1");
        let table = CountTable::build(&records, "C1", &span(), AggregationKey::Country);
        let sets = WorkSets::from_records(&records);
        for x in sets.by_entity.keys() {
            let rate = intl_collab_rate(&table, x).unwrap();
            assert!((rate - sets.intl_rate(x)).abs() < 1e-15);
        }
        assert!(intl_collab_rate(&table, "ZZ").is_err());
    }
}

#[test]
fn masking_hides_exactly_the_sub_threshold_years() {
    let mut r = rng(10);
    let records = random_records(&mut r, 3000, &COUNTRIES[..3], (2001, 2010), "C1");
    let tables: YearTables = (2001..=2010)
        .map(|y| {
            (
                y,
                CountTable::build(&records, "C1", &Period::single_year(y), AggregationKey::Country),
            )
        })
        .collect();
    let threshold = 100;
    for x in &COUNTRIES[..3] {
        let series = intl_collab_series(&tables, x, threshold);
        assert_eq!(series.points.len(), 10);
        for p in &series.points {
            let n = tables[&p.year].unary_count(x);
            assert_eq!(p.masked, n < threshold, "{x} {}", p.year);
        }
    }
    let unknown = unknown_rate_series(&tables);
    assert!(unknown.points.iter().all(|p| !p.masked));
}

proptest! {
    #[test]
    fn co_counts_bounded_by_unary(seed in any::<u64>()) {
        let mut r = rng(seed);
        let records = random_records(&mut r, 60, &COUNTRIES[..6], (2000, 2005), "C1");
        let t = CountTable::build(&records, "C1", &span(), AggregationKey::Country);
        for (pair, &n) in &t.pairwise {
            prop_assert!(n <= t.unary_count(&pair.a).min(t.unary_count(&pair.b)));
        }
        prop_assert!(t.unary.values().sum::<u64>() >= t.attributed_count());
    }

    #[test]
    fn table_ignores_record_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut records = random_records(&mut r, 60, &COUNTRIES[..6], (2000, 2005), "C1");
        let a = CountTable::build(&records, "C1", &span(), AggregationKey::Country);
        records.shuffle(&mut r);
        let b = CountTable::build(&records, "C1", &span(), AggregationKey::Country);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn union_size_by_inclusion_exclusion(seed in any::<u64>()) {
        let mut r = rng(seed);
        let records = random_records(&mut r, 60, &COUNTRIES[..4], (2000, 2005), "C1");
        let t = CountTable::build(&records, "C1", &span(), AggregationKey::Country);
        let sets = WorkSets::from_records(&records);
        for x in &COUNTRIES[..4] {
            for y in &COUNTRIES[..4] {
                let union = sets.by_entity.get(*x).into_iter().chain(sets.by_entity.get(*y))
                    .flatten().collect::<BTreeSet<_>>().len() as u64;
                prop_assert_eq!(t.unary_count(x) + t.unary_count(y) - t.pair_count(x, y), union);
            }
        }
    }

    #[test]
    fn sharded_tables_merge_to_whole(seed in any::<u64>(), cut in 0usize..60) {
        let mut r = rng(seed);
        let records = random_records(&mut r, 60, &COUNTRIES[..5], (2000, 2005), "C1");
        let cut = cut.min(records.len());
        let whole = CountTable::build(&records, "C1", &span(), AggregationKey::Country);
        let mut left = CountTable::build(&records[..cut], "C1", &span(), AggregationKey::Country);
        left.merge(&CountTable::build(&records[cut..], "C1", &span(), AggregationKey::Country));
        prop_assert_eq!(left, whole);
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let records = random_records(&mut r, 30, &COUNTRIES[..5], (2000, 2005), "C1");
        let t = CountTable::build(&records, "C1", &span(), AggregationKey::Country);
        prop_assert_eq!(CountTable::from_json(&t.to_json()).unwrap(), t);
    }
}
