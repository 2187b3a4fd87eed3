use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{MiscError, Result};
use crate::linalg::pairwise_sq_distances;

/// Symmetrized 0-1 nearest-neighbor graph and its Laplacian `L = D − P`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodGraph {
    pub adjacency: Array2<f64>,
    pub degree: Array1<f64>,
    pub laplacian: Array2<f64>,
    pub neighbors_per_node: usize,
    /// Sorted adjacency lists, for sparse products.
    neighbors: Vec<Vec<usize>>,
}

impl NeighborhoodGraph {
    /// Builds the graph from a symmetric 0-1 adjacency with zero diagonal.
    pub fn from_adjacency(adjacency: Array2<f64>, neighbors_per_node: usize) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(MiscError::invalid("adjacency must be square"));
        }
        for i in 0..n {
            if adjacency[[i, i]] != 0.0 {
                return Err(MiscError::invalid("adjacency must have a zero diagonal"));
            }
            for j in 0..i {
                if adjacency[[i, j]] != adjacency[[j, i]] {
                    return Err(MiscError::invalid("adjacency must be symmetric"));
                }
            }
        }
        let neighbors: Vec<Vec<usize>> = adjacency
            .rows()
            .into_iter()
            .map(|r| r.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, _)| j).collect())
            .collect();
        if adjacency.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(MiscError::invalid("adjacency entries must be 0 or 1"));
        }
        let degree: Array1<f64> = neighbors.iter().map(|nb| nb.len() as f64).collect();
        let mut laplacian = -&adjacency;
        laplacian.diag_mut().assign(&degree);
        Ok(NeighborhoodGraph {
            adjacency,
            degree,
            laplacian,
            neighbors_per_node,
            neighbors,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    /// `H P` for `H` of shape `k × n`, using the adjacency lists.
    pub fn propagate(&self, h: &ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(h.raw_dim());
        for (i, nb) in self.neighbors.iter().enumerate() {
            let mut col = out.column_mut(i);
            for &j in nb {
                col += &h.column(j);
            }
        }
        out
    }

    /// `tr(H L Hᵀ)` for `H` of shape `k × n`.
    pub fn smoothness(&self, h: &ArrayView2<f64>) -> f64 {
        let hp = self.propagate(h);
        let mut total = 0.0;
        for (i, col) in h.columns().into_iter().enumerate() {
            let own: f64 = col.dot(&col);
            total += self.degree[i] * own - col.dot(&hp.column(i));
        }
        total
    }

    /// `½ Σᵢⱼ Pᵢⱼ ‖hᵢ − hⱼ‖²`, the edge-sum form of [`NeighborhoodGraph::smoothness`].
    pub fn edge_smoothness(&self, h: &ArrayView2<f64>) -> f64 {
        let n = self.n_nodes();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if self.adjacency[[i, j]] != 0.0 {
                    let d: f64 = h
                        .column(i)
                        .iter()
                        .zip(h.column(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    total += self.adjacency[[i, j]] * d;
                }
            }
        }
        0.5 * total
    }
}

/// Connects each column of `x` to its `eps` nearest neighbors (ties to the lower index), then symmetrizes by OR.
pub fn knn_graph(x: &ArrayView2<f64>, eps: usize) -> Result<NeighborhoodGraph> {
    let n = x.ncols();
    if eps < 1 || eps >= n {
        return Err(MiscError::invalid(format!(
            "neighborhood size must satisfy 1 <= eps < n, got eps={eps}, n={n}"
        )));
    }
    let dist = pairwise_sq_distances(x);
    let mut adjacency = Array2::zeros((n, n));
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[[i, a]].total_cmp(&dist[[i, b]]).then(a.cmp(&b)));
        for &j in &order[..eps] {
            adjacency[[i, j]] = 1.0;
            adjacency[[j, i]] = 1.0;
        }
    }
    NeighborhoodGraph::from_adjacency(adjacency, eps)
}
