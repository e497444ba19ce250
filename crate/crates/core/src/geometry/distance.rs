use std::collections::BTreeSet;
use std::io::Write;

use super::GeometryError;
use crate::corpus::CountTable;

/// Jaccard index `n_xy / (n_x + n_y - n_xy)`.
pub fn affinity(n_x: u64, n_y: u64, n_xy: u64) -> Result<f64, GeometryError> {
    if n_xy > n_x.min(n_y) {
        return Err(GeometryError::InconsistentCounts { n_x, n_y, n_xy });
    }
    let union = n_x + n_y - n_xy;
    if union == 0 {
        return Err(GeometryError::EmptyUnion);
    }
    Ok(n_xy as f64 / union as f64)
}

/// `1 - affinity`.
pub fn jaccard_distance(n_x: u64, n_y: u64, n_xy: u64) -> Result<f64, GeometryError> {
    affinity(n_x, n_y, n_xy).map(|a| 1.0 - a)
}

/// Symmetric distance matrix over an ordered list of distinct entities.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entities: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal and the `[0, 1]` range.
    #[allow(clippy::needless_range_loop)]
    pub fn new(entities: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let n = entities.len();
        check_unique(&entities)?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(GeometryError::InvalidMatrix(format!("expected {n}x{n} values")));
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(GeometryError::InvalidMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = rows[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(GeometryError::InvalidMatrix(format!("D[{i}][{j}] = {v} outside [0,1]")));
                }
                if v != rows[j][i] {
                    return Err(GeometryError::InvalidMatrix(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(DistanceMatrix {
            entities,
            values: rows.into_iter().flatten().collect(),
        })
    }

    /// Symmetric, zero-diagonal, nonnegative; no upper bound. Used for
    /// Euclidean distances that are not Jaccard distances.
    #[allow(clippy::needless_range_loop)]
    pub fn from_dissimilarities(entities: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let n = entities.len();
        check_unique(&entities)?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(GeometryError::InvalidMatrix(format!("expected {n}x{n} values")));
        }
        for i in 0..n {
            for j in 0..n {
                let v = rows[i][j];
                if !v.is_finite() || v < 0.0 || v != rows[j][i] || (i == j && v != 0.0) {
                    return Err(GeometryError::InvalidMatrix(format!("bad entry ({i},{j}) = {v}")));
                }
            }
        }
        Ok(DistanceMatrix {
            entities,
            values: rows.into_iter().flatten().collect(),
        })
    }

    /// Jaccard distances from the unary and pairwise counts of `table`.
    pub fn from_table(table: &CountTable, entities: &[String]) -> Result<Self, GeometryError> {
        check_unique(entities)?;
        let n = entities.len();
        let mut counts = Vec::with_capacity(n);
        for e in entities {
            match table.unary.get(e) {
                Some(&c) if c > 0 => counts.push(c),
                _ => return Err(GeometryError::MissingEntity(e.clone())),
            }
        }
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = jaccard_distance(counts[i], counts[j], table.pair_count(&entities[i], &entities[j]))?;
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Ok(DistanceMatrix {
            entities: entities.to_vec(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.len().max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Same matrix with entities reordered so that new index `k` is old index `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = self.len();
        assert_eq!(order.len(), n, "permutation length");
        let mut values = vec![0.0; n * n];
        for (i, &oi) in order.iter().enumerate() {
            for (j, &oj) in order.iter().enumerate() {
                values[i * n + j] = self.get(oi, oj);
            }
        }
        DistanceMatrix {
            entities: order.iter().map(|&k| self.entities[k].clone()).collect(),
            values,
        }
    }

    /// Largest violation `D_ij - (D_ik + D_kj)` over all triples; `<= 0` when the
    /// triangle inequality holds everywhere.
    pub fn max_triangle_violation(&self) -> f64 {
        let n = self.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max(self.get(i, j) - self.get(j, k) - self.get(k, i));
                }
            }
        }
        worst
    }

    /// Lower triangle as `entity_a,entity_b,distance`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["entity_a", "entity_b", "distance"])?;
        for i in 0..self.len() {
            for j in 0..i {
                w.write_record([
                    self.entities[i].as_str(),
                    self.entities[j].as_str(),
                    &crate::format::sig6(self.get(i, j)),
                ])?;
            }
        }
        w.flush()
    }
}

fn check_unique(entities: &[String]) -> Result<(), GeometryError> {
    let mut seen = BTreeSet::new();
    for e in entities {
        if !seen.insert(e.as_str()) {
            return Err(GeometryError::DuplicateEntity(e.clone()));
        }
    }
    Ok(())
}
