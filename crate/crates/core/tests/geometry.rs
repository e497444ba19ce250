use collab_core::corpus::{AggregationKey, CountTable, Period};
use collab_core::geometry::{
    cut_clusters, euclidean_embedding, icd, icd_from_heights, ward_cluster, Dendrogram, DistanceMatrix, GeometryError,
    H0Mode, Merge,
};
use collab_testkit::{
    labels, merge_sets, point_distances, random_dendrogram, random_points, random_records, rng, ward_oracle, WorkSets,
    COUNTRIES,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn jaccard_matrix(seed: u64, works: usize, countries: usize) -> Option<(DistanceMatrix, WorkSets)> {
    let mut r = rng(seed);
    let records = random_records(&mut r, works, &COUNTRIES[..countries], (2000, 2000), "C1");
    let table = CountTable::build(
        &records,
        "C1",
        &Period::span(2000, 2000).unwrap(),
        AggregationKey::Country,
    );
    let entities: Vec<String> = table.unary.keys().cloned().collect();
    let d = DistanceMatrix::from_table(&table, &entities).ok()?;
    Some((d, WorkSets::from_records(&records)))
}

fn point_matrix(points: &[Vec<f64>]) -> DistanceMatrix {
    DistanceMatrix::from_dissimilarities(labels(points.len()), point_distances(points)).unwrap()
}

proptest! {
    #[test]
    fn jaccard_equals_set_oracle(seed in any::<u64>()) {
        if let Some((d, sets)) = jaccard_matrix(seed, 50, 6) {
            for i in 0..d.len() {
                for j in 0..d.len() {
                    let expected = if i == j { 0.0 } else { sets.jaccard_distance(&d.entities()[i], &d.entities()[j]) };
                    prop_assert!((d.get(i, j) - expected).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn jaccard_is_a_metric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let countries: Vec<String> = (0..30).map(|i| format!("C{i:02}")).collect();
        let names: Vec<&str> = countries.iter().map(String::as_str).collect();
        let records = random_records(&mut r, 400, &names, (2000, 2000), "C1");
        let table = CountTable::build(&records, "C1", &Period::span(2000, 2000).unwrap(), AggregationKey::Country);
        let entities: Vec<String> = table.unary.keys().cloned().collect();
        let d = DistanceMatrix::from_table(&table, &entities).unwrap();
        prop_assert!(d.max_triangle_violation() <= 1e-12);
    }

    #[test]
    fn embedding_reproduces_point_distances(seed in any::<u64>(), n in 2usize..=30, k in 1usize..=10) {
        let mut r = rng(seed);
        let points = random_points(&mut r, n, k);
        let d = point_matrix(&points);
        let e = euclidean_embedding(&d);
        prop_assert!(e.embeddable);
        prop_assert!(e.max_reconstruction_error(&d) <= 1e-8);
    }

    #[test]
    fn ward_matches_coordinate_oracle(seed in any::<u64>(), n in 1usize..=8, k in 1usize..=4) {
        let mut r = rng(seed);
        let points = random_points(&mut r, n, k);
        let tree = ward_cluster(&point_matrix(&points)).unwrap();
        let oracle = ward_oracle(&points, &labels(n), 1e-12);
        let got = merge_sets(&tree);
        prop_assert_eq!(got.len(), oracle.len());
        for (g, o) in got.iter().zip(&oracle) {
            prop_assert_eq!(&g.left, &o.left);
            prop_assert_eq!(&g.right, &o.right);
            prop_assert!((g.height - o.height).abs() <= 1e-10);
        }
    }

    #[test]
    fn ward_ignores_entity_order(seed in any::<u64>(), n in 2usize..=12) {
        let mut r = rng(seed);
        let points = random_points(&mut r, n, 3);
        let d = point_matrix(&points);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let a = ward_cluster(&d).unwrap();
        let b = ward_cluster(&d.permuted(&order)).unwrap();
        let names = |t: &Dendrogram| -> Vec<(Vec<String>, Vec<String>)> {
            t.merges().iter().map(|m| {
                let side = |node| {
                    let mut v: Vec<String> = t.leaves_under(node).into_iter().map(|i| t.leaves()[i].clone()).collect();
                    v.sort();
                    v
                };
                (side(m.left), side(m.right))
            }).collect()
        };
        prop_assert_eq!(names(&a), names(&b));
        for (x, y) in a.heights().iter().zip(b.heights()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn ward_heights_never_decrease(seed in any::<u64>(), n in 2usize..=30) {
        let mut r = rng(seed);
        let points = random_points(&mut r, n, 5);
        let h = ward_cluster(&point_matrix(&points)).unwrap().heights();
        prop_assert!(h.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn cluster_count_formula(seed in any::<u64>(), n in 1usize..=40, t in 0.0f64..2.2) {
        let mut r = rng(seed);
        let tree = random_dendrogram(&mut r, n);
        let cut = cut_clusters(&tree, t);
        let above = tree.heights().iter().filter(|&&h| h >= t).count();
        prop_assert_eq!(cut.count, above + 1);
        let distinct: std::collections::BTreeSet<_> = cut.labels.iter().collect();
        prop_assert_eq!(distinct.len(), cut.count);
    }

    #[test]
    fn lower_heights_give_lower_icd(seed in any::<u64>(), n in 1usize..=20) {
        let mut r = rng(seed);
        let high: Vec<f64> = (0..n).map(|_| r.random_range(0.0..0.99)).collect();
        let low: Vec<f64> = high.iter().map(|h| h * r.random_range(0.0..1.0)).collect();
        let a = icd_from_heights(&low, 1.0).unwrap();
        let b = icd_from_heights(&high, 1.0).unwrap();
        prop_assert!(a.mean <= b.mean);
        prop_assert!(a.median <= b.median);
    }

    #[test]
    fn newick_and_json_round_trip(seed in any::<u64>(), n in 1usize..=20) {
        let mut r = rng(seed);
        let tree = random_dendrogram(&mut r, n);
        prop_assert_eq!(Dendrogram::from_json(&tree.to_json()).unwrap(), tree.clone());
        let newick = tree.to_newick();
        prop_assert!(newick.ends_with(';'));
        prop_assert_eq!(newick.matches('(').count(), n - 1);
    }
}

#[test]
fn cut_at_default_threshold_on_straddling_heights() {
    // ((((0,1):0.2,(2,3):0.6):0.99,4):1.005,5):1.2; the last two merges are at or above h*
    let merge = |left, right, height, size| Merge {
        left,
        right,
        height,
        size,
    };
    let tree = Dendrogram::new(
        labels(6),
        vec![
            merge(0, 1, 0.2, 2),
            merge(2, 3, 0.6, 2),
            merge(6, 7, 0.99, 4),
            merge(8, 4, 1.005, 5),
            merge(9, 5, 1.2, 6),
        ],
    )
    .unwrap();
    let cut = cut_clusters(&tree, 1.005);
    assert_eq!(cut.count, 3);
    assert_eq!(cut.labels, vec![1, 1, 1, 1, 2, 3]);
    assert_eq!(cut_clusters(&tree, 1.0051).count, 2);
}

#[test]
fn icd_of_single_height() {
    let r = icd_from_heights(&[0.9], 1.0).unwrap();
    assert!((r.mean - (-(0.1f64).ln())).abs() <= 1e-12);
    assert!((r.median - (-(0.1f64).ln())).abs() <= 1e-12);
}

#[test]
fn strict_h0_rejects_heights_at_or_above_one() {
    let mut r = rng(3);
    for _ in 0..50 {
        let tree = random_dendrogram(&mut r, 12);
        let result = icd(&tree, H0Mode::Strict);
        if tree.max_height().unwrap() >= 1.0 {
            assert!(matches!(result, Err(GeometryError::InvalidH0 { .. })));
        } else {
            assert_eq!(result.unwrap().h0, 1.0);
        }
    }
}
