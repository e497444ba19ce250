use nalgebra::{DMatrix, SymmetricEigen};

use super::DistanceMatrix;

/// Eigenvalues in `[-CLAMP_RELATIVE * lambda_max, 0)` are treated as zero.
pub const CLAMP_RELATIVE: f64 = 1e-9;

/// Point configuration whose pairwise distances reproduce a distance matrix.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub entities: Vec<String>,
    /// Row `i` is the point of entity `i`; columns follow `eigenvalues`.
    pub coordinates: DMatrix<f64>,
    /// Spectrum of Q in descending order, before clamping.
    pub eigenvalues: Vec<f64>,
    /// False when some eigenvalue lies below the clamping tolerance, i.e. the
    /// input is not a Euclidean distance matrix. Coordinates then come from
    /// the clamped spectrum.
    pub embeddable: bool,
    pub clamped: usize,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coordinates.row(i).iter().copied().collect()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.coordinates.row(i) - self.coordinates.row(j)).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Largest `| ||x_i - x_j|| - D_ij |`.
    pub fn max_reconstruction_error(&self, d: &DistanceMatrix) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.distance(i, j) - d.get(i, j)).abs());
            }
        }
        worst
    }
}

/// Embeds `d` through the Gram matrix anchored at the first entity,
/// `Q_ij = (D_1j^2 + D_i1^2 - D_ij^2) / 2 = P diag(lambda) P^T`, taking the rows of
/// `P sqrt(diag(lambda))` as coordinates.
pub fn euclidean_embedding(d: &DistanceMatrix) -> Embedding {
    let n = d.len();
    let sq = |i: usize, j: usize| d.get(i, j) * d.get(i, j);
    let q = DMatrix::from_fn(n, n, |i, j| {
        if n == 0 {
            0.0
        } else {
            (sq(0, j) + sq(i, 0) - sq(i, j)) / 2.0
        }
    });
    let eigen = SymmetricEigen::new(q);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eigen.eigenvalues[k]).collect();

    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = CLAMP_RELATIVE * eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let mut embeddable = true;
    let mut clamped = 0;
    let mut roots = Vec::with_capacity(n);
    for &lambda in &eigenvalues {
        if lambda >= 0.0 {
            roots.push(lambda.sqrt());
            continue;
        }
        // an all-zero matrix only has rounding noise in its spectrum
        if lambda < -tolerance && scale > f64::EPSILON {
            embeddable = false;
        }
        clamped += 1;
        roots.push(0.0);
    }

    let coordinates = DMatrix::from_fn(n, n, |i, c| eigen.eigenvectors[(i, order[c])] * roots[c]);
    Embedding {
        entities: d.entities().to_vec(),
        coordinates,
        eigenvalues,
        embeddable,
        clamped,
    }
}
