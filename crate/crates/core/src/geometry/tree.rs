use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Slack allowed when checking that merge heights never decrease.
const HEIGHT_SLACK: f64 = 1e-12;

/// One agglomeration. Leaves are nodes `0..n`; the `k`-th merge creates node `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Binary merge tree over `n` leaves with `n - 1` merges in height order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    leaves: Vec<String>,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn new(leaves: Vec<String>, merges: Vec<Merge>) -> Result<Self, GeometryError> {
        let n = leaves.len();
        let bad = |msg: String| Err(GeometryError::InvalidDendrogram(msg));
        if n == 0 {
            return bad("no leaves".into());
        }
        if merges.len() != n - 1 {
            return bad(format!("{} merges for {n} leaves", merges.len()));
        }
        let mut size = vec![1usize; n];
        let mut consumed = vec![false; 2 * n - 1];
        let mut previous = f64::NEG_INFINITY;
        for (k, m) in merges.iter().enumerate() {
            let node = n + k;
            for child in [m.left, m.right] {
                if child >= node {
                    return bad(format!("merge {k} references node {child} before it exists"));
                }
                if std::mem::replace(&mut consumed[child], true) {
                    return bad(format!("node {child} merged twice"));
                }
            }
            if m.left == m.right {
                return bad(format!("merge {k} joins a node with itself"));
            }
            if !m.height.is_finite() || m.height < 0.0 {
                return bad(format!("merge {k} has height {}", m.height));
            }
            if m.height < previous - HEIGHT_SLACK {
                return bad(format!("merge {k} height {} below previous {previous}", m.height));
            }
            previous = previous.max(m.height);
            let s = size[m.left] + size[m.right];
            if s != m.size {
                return bad(format!("merge {k} size {} != {s}", m.size));
            }
            size.push(s);
        }
        Ok(Dendrogram { leaves, merges })
    }

    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    pub fn max_height(&self) -> Option<f64> {
        self.merges.iter().map(|m| m.height).reduce(f64::max)
    }

    pub fn root(&self) -> usize {
        2 * self.len() - 2
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.len()
    }

    /// Height of a node; leaves sit at zero.
    pub fn node_height(&self, node: usize) -> f64 {
        if self.is_leaf(node) {
            0.0
        } else {
            self.merges[node - self.len()].height
        }
    }

    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        (!self.is_leaf(node)).then(|| {
            let m = &self.merges[node - self.len()];
            (m.left, m.right)
        })
    }

    /// Leaf indices under `node`, left subtree first.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            match self.children(v) {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(v),
            }
        }
        out
    }

    /// Leaves in drawing order (no crossing branches).
    pub fn leaf_order(&self) -> Vec<usize> {
        self.leaves_under(self.root())
    }

    /// Newick string with branch lengths `height(parent) - height(child)`.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_newick(self.root(), &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, node: usize, out: &mut String) {
        match self.children(node) {
            Some((l, r)) => {
                out.push('(');
                for (i, child) in [l, r].into_iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.write_newick(child, out);
                    let length = self.node_height(node) - self.node_height(child);
                    let _ = write!(out, ":{}", length.max(0.0));
                }
                out.push(')');
            }
            None => out.push_str(&newick_label(&self.leaves[node])),
        }
    }

    /// `{"leaves": [...], "merges": [{left, right, height, size}, ...]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let raw: Dendrogram =
            serde_json::from_str(text).map_err(|e| GeometryError::InvalidDendrogram(e.to_string()))?;
        Dendrogram::new(raw.leaves, raw.merges)
    }
}

fn newick_label(label: &str) -> String {
    let plain = !label.is_empty() && !label.chars().any(|c| c.is_whitespace() || "()[]':;,".contains(c));
    if plain {
        label.to_string()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

/// Flat clustering from cutting a dendrogram at a coupling-height threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCut {
    pub threshold: f64,
    /// Cluster label of each leaf, numbered from 1 in order of first appearance.
    pub labels: Vec<usize>,
    pub count: usize,
}

impl ClusterCut {
    pub fn assignment(&self, dendrogram: &Dendrogram) -> BTreeMap<String, usize> {
        dendrogram
            .leaves()
            .iter()
            .cloned()
            .zip(self.labels.iter().copied())
            .collect()
    }
}

/// Removes every merge with `h_k >= threshold` (and any merge above a removed
/// one) and labels the remaining connected components. For a monotone
/// dendrogram the cluster count is `|{h_k >= threshold}| + 1`.
pub fn cut_clusters(dendrogram: &Dendrogram, threshold: f64) -> ClusterCut {
    let n = dendrogram.len();
    let mut kept = vec![true; 2 * n - 1];
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for (k, m) in dendrogram.merges().iter().enumerate() {
        let keep = m.height < threshold && kept[m.left] && kept[m.right];
        kept[n + k] = keep;
        if keep {
            let a = find(&mut parent, dendrogram.leaves_under(m.left)[0]);
            let b = find(&mut parent, dendrogram.leaves_under(m.right)[0]);
            let (lo, hi) = (a.min(b), a.max(b));
            parent[hi] = lo;
        }
    }

    let mut label_of_root = BTreeMap::new();
    let mut labels = Vec::with_capacity(n);
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        let next = label_of_root.len() + 1;
        labels.push(*label_of_root.entry(root).or_insert(next));
    }
    ClusterCut {
        threshold,
        count: label_of_root.len(),
        labels,
    }
}
