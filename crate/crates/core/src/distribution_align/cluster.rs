use nalgebra::DMatrix;
use serde::Serialize;

use crate::{Error, Result};

/// Linkage criterion for agglomerative clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    /// UPGMA.
    #[default]
    Average,
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "upgma" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            other => Err(Error::Config(format!("unknown linkage {other:?}"))),
        }
    }
}

/// One agglomeration step. Cluster ids below `n` are leaves; the cluster
/// created by step `i` has id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram over `n` leaves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

/// Nested view of a dendrogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DendrogramNode {
    Leaf { leaf: usize },
    Merge { height: f64, size: usize, children: [Box<DendrogramNode>; 2] },
}

impl Dendrogram {
    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Root of the merge tree; `None` for a single leaf.
    pub fn tree(&self) -> Option<DendrogramNode> {
        fn build(d: &Dendrogram, id: usize) -> DendrogramNode {
            if id < d.leaves {
                return DendrogramNode::Leaf { leaf: id };
            }
            let m = &d.merges[id - d.leaves];
            DendrogramNode::Merge {
                height: m.height,
                size: m.size,
                children: [Box::new(build(d, m.left)), Box::new(build(d, m.right))],
            }
        }
        if self.merges.is_empty() {
            None
        } else {
            Some(build(self, self.leaves + self.merges.len() - 1))
        }
    }

    /// Leaf order of a left-to-right traversal of the tree.
    pub fn leaf_order(&self) -> Vec<usize> {
        fn walk(node: &DendrogramNode, out: &mut Vec<usize>) {
            match node {
                DendrogramNode::Leaf { leaf } => out.push(*leaf),
                DendrogramNode::Merge { children, .. } => {
                    walk(&children[0], out);
                    walk(&children[1], out);
                }
            }
        }
        let mut out = Vec::with_capacity(self.leaves);
        match self.tree() {
            Some(root) => walk(&root, &mut out),
            None => out.extend(0..self.leaves),
        }
        out
    }
}

/// Agglomerative clustering of a symmetric distance matrix.
pub fn cluster(distances: &DMatrix<f64>, linkage: Linkage) -> Result<Dendrogram> {
    let n = distances.nrows();
    if distances.ncols() != n || n == 0 {
        return Err(Error::Config("distance matrix must be square and nonempty".into()));
    }
    let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distances[(i, j)];
            if !d.is_finite() || d < 0.0 {
                return Err(Error::Numerical(format!("invalid distance {d} at ({i},{j})")));
            }
            condensed.push(d);
        }
    }
    let method = match linkage {
        Linkage::Average => kodama::Method::Average,
        Linkage::Complete => kodama::Method::Complete,
    };
    let dendrogram = kodama::linkage(&mut condensed, n, method);
    Ok(Dendrogram {
        leaves: n,
        merges: dendrogram
            .steps()
            .iter()
            .map(|s| Merge {
                left: s.cluster1,
                right: s.cluster2,
                height: s.dissimilarity,
                size: s.size,
            })
            .collect(),
    })
}
