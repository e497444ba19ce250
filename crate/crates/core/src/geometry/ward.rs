use super::{Dendrogram, DistanceMatrix, GeometryError, Merge};

/// Candidate merges whose heights differ by at most this much are tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

struct Cluster {
    node: usize,
    size: usize,
    /// Rank of the lexicographically smallest leaf label in the cluster.
    min_label: usize,
}

/// Agglomerative clustering with the ward.D2 criterion.
///
/// Distances are treated as Euclidean and squared before the Lance-Williams
/// update
/// `d2(k, i+j) = ((n_i + n_k) d2(k,i) + (n_j + n_k) d2(k,j) - n_k d2(i,j)) / (n_i + n_j + n_k)`;
/// the reported coupling height is `sqrt(d2)`. Among candidate pairs within
/// [`TIE_TOLERANCE`] of the minimum height, the pair with the smallest
/// (lower, higher) minimum-leaf-label ranks merges first, which makes the result
/// independent of the entity order of `d`.
pub fn ward_cluster(d: &DistanceMatrix) -> Result<Dendrogram, GeometryError> {
    let n = d.len();
    if n == 0 {
        return Err(GeometryError::InvalidMatrix("no entities to cluster".into()));
    }

    let mut by_label: Vec<usize> = (0..n).collect();
    by_label.sort_by(|&a, &b| d.entities()[a].cmp(&d.entities()[b]));
    let mut rank = vec![0; n];
    for (r, &i) in by_label.iter().enumerate() {
        rank[i] = r;
    }

    let mut d2: Vec<f64> = (0..n * n).map(|k| d.get(k / n, k % n).powi(2)).collect();
    let mut slots: Vec<Option<Cluster>> = (0..n)
        .map(|i| {
            Some(Cluster {
                node: i,
                size: 1,
                min_label: rank[i],
            })
        })
        .collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let active: Vec<usize> = (0..n).filter(|&s| slots[s].is_some()).collect();

        let mut best_height = f64::INFINITY;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                best_height = best_height.min(d2[i * n + j].max(0.0).sqrt());
            }
        }
        let mut chosen: Option<((usize, usize), (usize, usize))> = None;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                if d2[i * n + j].max(0.0).sqrt() > best_height + TIE_TOLERANCE {
                    continue;
                }
                let (li, lj) = (label(&slots, i), label(&slots, j));
                let key = (li.min(lj), li.max(lj));
                if chosen.is_none_or(|(k, _)| key < k) {
                    chosen = Some((key, (i, j)));
                }
            }
        }
        let (_, (i, j)) = chosen.expect("at least two active clusters");

        let ci = slots[i].take().expect("active");
        let cj = slots[j].take().expect("active");
        let dij = d2[i * n + j].max(0.0);
        let (ni, nj) = (ci.size as f64, cj.size as f64);
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let nk = slots[k].as_ref().expect("active").size as f64;
            let updated = ((ni + nk) * d2[k * n + i] + (nj + nk) * d2[k * n + j] - nk * dij) / (ni + nj + nk);
            d2[k * n + i] = updated;
            d2[i * n + k] = updated;
        }

        let (left, right) = if ci.min_label < cj.min_label {
            (&ci, &cj)
        } else {
            (&cj, &ci)
        };
        merges.push(Merge {
            left: left.node,
            right: right.node,
            height: dij.sqrt(),
            size: ci.size + cj.size,
        });
        slots[i] = Some(Cluster {
            node: n + step,
            size: ci.size + cj.size,
            min_label: ci.min_label.min(cj.min_label),
        });
    }

    Dendrogram::new(d.entities().to_vec(), merges)
}

fn label(slots: &[Option<Cluster>], s: usize) -> usize {
    slots[s].as_ref().expect("active").min_label
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(names: &[&str], rows: Vec<Vec<f64>>) -> DistanceMatrix {
        DistanceMatrix::new(names.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn two_entities_merge_at_their_distance() {
        let d = matrix(&["a", "b"], vec![vec![0.0, 0.37], vec![0.37, 0.0]]);
        let t = ward_cluster(&d).unwrap();
        assert_eq!(t.merges().len(), 1);
        assert_eq!(t.merges()[0].height, 0.37);
        assert_eq!(t.merges()[0].size, 2);
    }

    #[test]
    fn separated_pairs_merge_first() {
        let near = 0.1;
        let far = 0.9;
        let rows = vec![
            vec![0.0, far, near, far],
            vec![far, 0.0, far, near],
            vec![near, far, 0.0, far],
            vec![far, near, far, 0.0],
        ];
        let t = ward_cluster(&matrix(&["a", "b", "c", "d"], rows)).unwrap();
        let m = t.merges();
        assert_eq!((m[0].left, m[0].right), (0, 2));
        assert_eq!((m[1].left, m[1].right), (1, 3));
        assert_eq!(m[0].height, near);
        // two Lance-Williams updates collapse to (4 far^2 - 2 near^2) / 2
        let expected = ((2.0 * far * far * 2.0 - 2.0 * near * near) / 2.0f64).sqrt();
        assert!((m[2].height - expected).abs() < 1e-12);
    }

    #[test]
    fn ties_break_on_labels() {
        let rows = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 0.0 } else { 0.5 }).collect())
            .collect();
        let t = ward_cluster(&matrix(&["d", "c", "b", "a"], rows)).unwrap();
        // "a" (index 3) and "b" (index 2) merge first
        let first = t.merges()[0];
        assert_eq!((first.left, first.right), (3, 2));
    }

    #[test]
    fn single_entity() {
        let t = ward_cluster(&matrix(&["a"], vec![vec![0.0]])).unwrap();
        assert!(t.merges().is_empty());
    }
}
