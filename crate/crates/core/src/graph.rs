//! Weighted k-nearest-neighbor graphs and their Laplacians.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// `K` points in `R^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::DegenerateInput(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::DegenerateInput("points have dimension 0".into()));
        }
        for (k, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DegenerateInput(format!(
                    "point {k} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::DegenerateInput(format!(
                    "point {k} has a non-finite coordinate"
                )));
            }
        }
        Ok(Self { points, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k]
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gaussian edge weight `exp(-|v - v'|^2 / sigma)`.
pub fn gaussian_weight(squared_dist: f64, sigma: f64) -> f64 {
    (-squared_dist / sigma).exp()
}

/// Undirected weighted graph with a symmetric sparse adjacency matrix.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: CsrMatrix,
    degrees: Vec<f64>,
}

impl Graph {
    /// Builds a graph from undirected edges `(i, j, w)`. Each unordered pair may appear once.
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if vertex_count < 2 {
            return Err(Error::DegenerateInput(format!(
                "need at least 2 vertices, got {vertex_count}"
            )));
        }
        let mut triplets = Vec::with_capacity(2 * edges.len());
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i == j {
                return Err(Error::DegenerateInput(format!("self-loop at vertex {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::DegenerateInput(format!(
                    "edge ({i},{j}) has invalid weight {w}"
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::DegenerateInput(format!(
                    "edge ({i},{j}) listed twice"
                )));
            }
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
        let adjacency = CsrMatrix::from_triplets(vertex_count, &triplets)?;
        Self::from_adjacency(adjacency)
    }

    fn from_adjacency(adjacency: CsrMatrix) -> Result<Self> {
        let degrees = (0..adjacency.dim()).map(|i| adjacency.row_sum(i)).collect();
        let graph = Self { adjacency, degrees };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::DisconnectedGraph { components });
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency.get(i, j)
    }

    /// Number of neighbors of vertex `k`.
    pub fn neighbor_count(&self, k: usize) -> usize {
        self.adjacency.row(k).filter(|&(_, w)| w > 0.0).count()
    }

    /// Undirected edges `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .entries()
            .filter(|&(i, j, _)| i < j)
            .collect()
    }

    /// Connected components counted by breadth-first traversal over positive-weight edges.
    pub fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut visited = vec![false; n];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if visited[start] {
                continue;
            }
            components += 1;
            visited[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for (u, w) in self.adjacency.row(v) {
                    if w > 0.0 && !visited[u] {
                        visited[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        components
    }
}

/// Builds the Gaussian-weighted k-NN graph, symmetrized by union.
///
/// Each vertex selects its `k` nearest neighbors in Euclidean distance (ties
/// broken by index); an edge is kept if either endpoint selects it.
pub fn build_knn_graph(pc: &PointCloud, k: usize, sigma: f64) -> Result<Graph> {
    let n = pc.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "neighbor count must satisfy 1 <= k < {n}, got {k}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }

    let selections: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = pc.point(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(p, pc.point(j)), j))
                .collect();
            let by_dist =
                |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cand.select_nth_unstable_by(k - 1, by_dist);
            cand.truncate(k);
            cand.into_iter().map(|(d2, j)| (j, d2)).collect()
        })
        .collect();

    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * n * k);
    for (i, sel) in selections.iter().enumerate() {
        for &(j, d2) in sel {
            let (a, b) = (i.min(j), i.max(j));
            pairs.push((a, b, d2));
        }
    }
    pairs.sort_by_key(|x| (x.0, x.1));
    pairs.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);

    let mut triplets = Vec::with_capacity(2 * pairs.len());
    for (i, j, d2) in pairs {
        let w = gaussian_weight(d2, sigma);
        triplets.push((i, j, w));
        triplets.push((j, i, w));
    }
    Graph::from_adjacency(CsrMatrix::from_triplets(n, &triplets)?)
}

/// Which graph Laplacian to form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianKind {
    /// `D - A`
    #[default]
    Unnormalized,
    /// `I - D^{-1} A`
    RandomWalk,
    /// `I - D^{-1/2} A D^{-1/2}`
    Symmetric,
}

impl LaplacianKind {
    pub fn id(self) -> u32 {
        match self {
            LaplacianKind::Unnormalized => 0,
            LaplacianKind::RandomWalk => 1,
            LaplacianKind::Symmetric => 2,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        match id {
            0 => Some(LaplacianKind::Unnormalized),
            1 => Some(LaplacianKind::RandomWalk),
            2 => Some(LaplacianKind::Symmetric),
            _ => None,
        }
    }
}

impl std::str::FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unnormalized" => Ok(LaplacianKind::Unnormalized),
            "random-walk" | "randomwalk" => Ok(LaplacianKind::RandomWalk),
            "symmetric" => Ok(LaplacianKind::Symmetric),
            other => Err(Error::InvalidParameter(format!(
                "unknown laplacian kind `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for LaplacianKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LaplacianKind::Unnormalized => "unnormalized",
            LaplacianKind::RandomWalk => "random-walk",
            LaplacianKind::Symmetric => "symmetric",
        })
    }
}

/// A graph Laplacian as a sparse linear operator.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    matrix: CsrMatrix,
    kind: LaplacianKind,
    symmetric: bool,
    null_vector: Vec<f64>,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Unit vector spanning the kernel of the operator on a connected graph
    /// (right kernel for the random-walk kind).
    pub fn null_vector(&self) -> &[f64] {
        &self.null_vector
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.matrix.matvec(x))
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec_into(x, y);
    }
}

/// Forms the requested Laplacian of `g`.
pub fn laplacian(g: &Graph, kind: LaplacianKind) -> Result<SparseOperator> {
    let n = g.vertex_count();
    let d = g.degrees();
    if kind != LaplacianKind::Unnormalized {
        if let Some(vertex) = d.iter().position(|&x| x <= 0.0) {
            return Err(Error::ZeroDegree { vertex });
        }
    }
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(g.adjacency().nnz() + n);
    for i in 0..n {
        let diag = match kind {
            LaplacianKind::Unnormalized => d[i],
            _ => 1.0,
        };
        triplets.push((i, i, diag));
    }
    for (i, j, a) in g.adjacency().entries() {
        let v = match kind {
            LaplacianKind::Unnormalized => -a,
            LaplacianKind::RandomWalk => -a / d[i],
            LaplacianKind::Symmetric => -a / (d[i] * d[j]).sqrt(),
        };
        triplets.push((i, j, v));
    }
    let matrix = CsrMatrix::from_triplets(n, &triplets)?;
    let null_vector = match kind {
        LaplacianKind::Symmetric => {
            let norm = d.iter().sum::<f64>().sqrt();
            d.iter().map(|x| x.sqrt() / norm).collect()
        }
        _ => vec![1.0 / (n as f64).sqrt(); n],
    };
    Ok(SparseOperator {
        matrix,
        kind,
        symmetric: kind != LaplacianKind::RandomWalk,
        null_vector,
    })
}
