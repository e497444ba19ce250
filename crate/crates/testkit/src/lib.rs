//! Independent oracles and seeded generators shared by the test suites.
//!
//! Nothing here calls into the counting or clustering code it is used to check;
//! the oracles work from explicit sets and raw coordinates.

use std::collections::{BTreeMap, BTreeSet};

use collab_core::corpus::{RawAuthorship, RawInstitution, RawWork, WorkRecord};
use collab_core::geometry::{Dendrogram, Merge};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const COUNTRIES: [&str; 10] = ["BR", "CN", "DE", "FR", "GB", "IN", "JP", "KR", "RU", "US"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Work ids grouped by the country codes appearing anywhere among their
/// contributors' institutions.
#[derive(Debug, Default, Clone)]
pub struct WorkSets {
    pub by_entity: BTreeMap<String, BTreeSet<String>>,
    pub unknown: BTreeSet<String>,
    pub all: BTreeSet<String>,
}

impl WorkSets {
    pub fn from_raw(works: &[RawWork]) -> Self {
        let mut sets = WorkSets::default();
        for w in works {
            sets.all.insert(w.id.clone());
            let mut any = false;
            for a in &w.authorships {
                for inst in &a.institutions {
                    if let Some(code) = inst.country_code.as_deref() {
                        let code = code.trim().to_ascii_uppercase();
                        if code.is_empty() {
                            continue;
                        }
                        any = true;
                        sets.by_entity.entry(code).or_default().insert(w.id.clone());
                    }
                }
            }
            if !any {
                sets.unknown.insert(w.id.clone());
            }
        }
        sets
    }

    pub fn from_records(records: &[WorkRecord]) -> Self {
        let mut sets = WorkSets::default();
        for r in records {
            sets.all.insert(r.work_id.clone());
            if r.nationalities.is_empty() {
                sets.unknown.insert(r.work_id.clone());
            }
            for c in &r.nationalities {
                sets.by_entity.entry(c.clone()).or_default().insert(r.work_id.clone());
            }
        }
        sets
    }

    fn set(&self, x: &str) -> BTreeSet<String> {
        self.by_entity.get(x).cloned().unwrap_or_default()
    }

    pub fn count(&self, x: &str) -> u64 {
        self.set(x).len() as u64
    }

    pub fn joint(&self, x: &str, y: &str) -> u64 {
        self.set(x).intersection(&self.set(y)).count() as u64
    }

    /// |S_x ∩ S_y| / |S_x ∪ S_y| computed on the sets themselves.
    pub fn jaccard_distance(&self, x: &str, y: &str) -> f64 {
        let (sx, sy) = (self.set(x), self.set(y));
        let union = sx.union(&sy).count();
        1.0 - sx.intersection(&sy).count() as f64 / union as f64
    }

    /// Share of x's works that also list some other entity.
    pub fn intl_rate(&self, x: &str) -> f64 {
        let sx = self.set(x);
        let shared = sx
            .iter()
            .filter(|w| self.by_entity.iter().any(|(y, s)| y != x && s.contains(*w)))
            .count();
        shared as f64 / sx.len() as f64
    }
}

/// Works with one to four authorships, each affiliated with zero to two
/// institutions whose country may be missing, blank or repeated.
pub fn random_raw_corpus(rng: &mut impl Rng, max_works: usize, countries: &[&str], years: (i32, i32)) -> Vec<RawWork> {
    let n = rng.random_range(1..=max_works);
    (0..n)
        .map(|i| {
            let authorships = (0..rng.random_range(1..=4))
                .map(|_| RawAuthorship {
                    institutions: (0..rng.random_range(0..=2))
                        .map(|_| {
                            let country_code = match rng.random_range(0..10) {
                                0 => None,
                                1 => Some(String::new()),
                                2 => Some(countries[rng.random_range(0..countries.len())].to_ascii_lowercase()),
                                _ => Some(countries[rng.random_range(0..countries.len())].to_string()),
                            };
                            RawInstitution {
                                id: Some(format!("I{}", rng.random_range(0..20))),
                                ror: None,
                                country_code,
                            }
                        })
                        .collect(),
                })
                .collect();
            RawWork {
                id: format!("W{i}"),
                publication_year: Some(rng.random_range(years.0..=years.1)),
                work_type: Some("article".into()),
                primary_location: None,
                authorships,
            }
        })
        .collect()
}

/// Records with between zero and three nationalities drawn from `countries`.
pub fn random_records(
    rng: &mut impl Rng,
    count: usize,
    countries: &[&str],
    years: (i32, i32),
    discipline: &str,
) -> Vec<WorkRecord> {
    (0..count)
        .map(|i| {
            let k = rng.random_range(0..=3.min(countries.len()));
            let nationalities = countries.choose_multiple(rng, k).map(|s| s.to_string()).collect();
            WorkRecord {
                work_id: format!("W{i}"),
                year: rng.random_range(years.0..=years.1),
                discipline_id: discipline.to_string(),
                nationalities,
                institutions: BTreeSet::new(),
                is_journal_article: true,
            }
        })
        .collect()
}

pub fn random_points(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn point_distances(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| euclidean(a, b)).collect())
        .collect()
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("E{i:02}")).collect()
}

/// Random binary tree over `n` leaves with non-decreasing heights in (0, 2).
pub fn random_dendrogram(rng: &mut impl Rng, n: usize) -> Dendrogram {
    let mut heights: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.random_range(0.0..2.0)).collect();
    heights.sort_by(f64::total_cmp);
    let mut active: Vec<(usize, usize)> = (0..n).map(|i| (i, 1)).collect();
    let mut merges = Vec::new();
    for (k, h) in heights.into_iter().enumerate() {
        let a = active.swap_remove(rng.random_range(0..active.len()));
        let b = active.swap_remove(rng.random_range(0..active.len()));
        merges.push(Merge {
            left: a.0,
            right: b.0,
            height: h,
            size: a.1 + b.1,
        });
        active.push((n + k, a.1 + b.1));
    }
    Dendrogram::new(labels(n), merges).expect("generated dendrogram is valid")
}

/// One merge of the oracle: leaf index sets and coupling height.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMerge {
    pub left: BTreeSet<usize>,
    pub right: BTreeSet<usize>,
    pub height: f64,
}

fn error_sum_of_squares(points: &[Vec<f64>], members: &BTreeSet<usize>) -> f64 {
    let k = points[0].len();
    let m = members.len() as f64;
    let centroid: Vec<f64> = (0..k)
        .map(|d| members.iter().map(|&i| points[i][d]).sum::<f64>() / m)
        .collect();
    members.iter().map(|&i| euclidean(&points[i], &centroid).powi(2)).sum()
}

/// Ward agglomeration computed directly in coordinate space.
///
/// Every step scores every pair of current clusters by the increase in total
/// within-cluster sum of squares and reports `sqrt(2 * increase)`. Pairs within
/// `tie_tolerance` of the best are resolved by the (lower, higher) pair of
/// smallest member labels, and the cluster holding the smaller label is the
/// left child.
pub fn ward_oracle(points: &[Vec<f64>], names: &[String], tie_tolerance: f64) -> Vec<OracleMerge> {
    let mut clusters: Vec<BTreeSet<usize>> = (0..points.len()).map(|i| BTreeSet::from([i])).collect();
    let min_name = |c: &BTreeSet<usize>| c.iter().map(|&i| names[i].clone()).min().expect("non-empty cluster");
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut scored = Vec::new();
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let union: BTreeSet<usize> = clusters[a].union(&clusters[b]).copied().collect();
                let delta = error_sum_of_squares(points, &union)
                    - error_sum_of_squares(points, &clusters[a])
                    - error_sum_of_squares(points, &clusters[b]);
                scored.push(((2.0 * delta.max(0.0)).sqrt(), a, b));
            }
        }
        let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let (height, a, b) = scored
            .into_iter()
            .filter(|s| s.0 <= best + tie_tolerance)
            .min_by_key(|&(_, a, b)| {
                let (x, y) = (min_name(&clusters[a]), min_name(&clusters[b]));
                if x < y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .expect("at least one pair");
        let cb = clusters.remove(b);
        let ca = clusters.remove(a);
        let (left, right) = if min_name(&ca) < min_name(&cb) {
            (ca, cb)
        } else {
            (cb, ca)
        };
        clusters.push(left.union(&right).copied().collect());
        merges.push(OracleMerge { left, right, height });
    }
    merges
}

/// The merges of `dendrogram` as leaf index sets, for comparison with [`ward_oracle`].
pub fn merge_sets(dendrogram: &Dendrogram) -> Vec<OracleMerge> {
    dendrogram
        .merges()
        .iter()
        .map(|m| OracleMerge {
            left: dendrogram.leaves_under(m.left).into_iter().collect(),
            right: dendrogram.leaves_under(m.right).into_iter().collect(),
            height: m.height,
        })
        .collect()
}
