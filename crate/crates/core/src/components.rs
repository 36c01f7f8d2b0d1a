//! Separation of non-intersecting manifolds: the k-NN graph, its
//! Laplacian, zero-eigenvalue counting and the split into components.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{eigvals_sym, knn_all};
use crate::points::PointMatrix;

/// How directed k-NN relations become undirected edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetrization {
    /// Edge if either endpoint lists the other.
    #[default]
    Union,
    /// Edge only if both endpoints list each other.
    Mutual,
}

/// Undirected, loop-free graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<usize>>,
}

impl NeighborGraph {
    /// Builds a graph from an edge list. Self-loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return invalid(format!("edge ({a}, {b}) out of range for {n} vertices"));
            }
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Connected components by breadth-first search, numbered by smallest member.
    pub fn connected_components(&self) -> ComponentLabels {
        let n = self.n();
        let mut labels = vec![usize::MAX; n];
        let mut m = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if labels[start] != usize::MAX {
                continue;
            }
            labels[start] = m;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &u in &self.adjacency[v] {
                    if labels[u] == usize::MAX {
                        labels[u] = m;
                        queue.push_back(u);
                    }
                }
            }
            m += 1;
        }
        ComponentLabels { labels, m }
    }
}

/// k-NN graph over all points, symmetrized as requested.
pub fn build_knn_graph(
    points: &PointMatrix,
    k: usize,
    symmetrization: Symmetrization,
) -> Result<NeighborGraph> {
    if points.n() < 2 {
        return invalid("a neighbor graph needs at least 2 points");
    }
    let sets = knn_all(points, k)?;
    let mut edges = Vec::new();
    for set in &sets {
        for &j in &set.neighbors {
            let keep = match symmetrization {
                Symmetrization::Union => true,
                // Only emit once, from the lower endpoint.
                Symmetrization::Mutual => set.center < j && sets[j].neighbors.contains(&set.center),
            };
            if keep {
                edges.push((set.center, j));
            }
        }
    }
    NeighborGraph::from_edges(points.n(), &edges)
}

/// Combinatorial Laplacian: degree on the diagonal, −1 per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    pub matrix: DMatrix<f64>,
}

pub fn laplacian(g: &NeighborGraph) -> Laplacian {
    let n = g.n();
    let mut matrix = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        matrix[(i, i)] = g.degree(i) as f64;
        for &j in g.neighbors(i) {
            matrix[(i, j)] = -1.0;
        }
    }
    Laplacian { matrix }
}

/// Number of eigenvalues below `zero_tol * max(λ_max, 1)`; at least 1.
pub fn count_components(lap: &Laplacian, zero_tol: f64) -> Result<usize> {
    let spectrum = eigvals_sym(&lap.matrix)?;
    Ok(count_zero_eigenvalues(&spectrum, zero_tol))
}

pub fn count_zero_eigenvalues(spectrum: &[f64], zero_tol: f64) -> usize {
    let largest = spectrum.iter().copied().fold(0.0f64, f64::max);
    let cutoff = zero_tol * largest.max(1.0);
    spectrum.iter().filter(|&&v| v < cutoff).count().max(1)
}

/// Per-point component ids in `[0, m)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentLabels {
    pub labels: Vec<usize>,
    pub m: usize,
}

impl ComponentLabels {
    /// Member indices of each component, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// How stage 1 turns the component count into a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Single-linkage agglomerative clustering on Euclidean distances.
    #[default]
    SingleLinkage,
    /// Connected components of the k-NN graph.
    Graph,
}

/// Partition into `m` clusters, labels renumbered by smallest member index.
///
/// In [`SplitMode::Graph`] the graph's connected components are returned when
/// there are exactly `m` of them; otherwise this falls back to single linkage.
pub fn split_components(
    points: &PointMatrix,
    g: &NeighborGraph,
    m: usize,
    mode: SplitMode,
) -> Result<ComponentLabels> {
    let n = points.n();
    if m == 0 || m > n {
        return invalid(format!("cannot split {n} points into {m} components"));
    }
    if g.n() != n {
        return invalid(format!(
            "graph has {} vertices but there are {n} points",
            g.n()
        ));
    }
    if mode == SplitMode::Graph {
        let cc = g.connected_components();
        if cc.m == m {
            return Ok(cc);
        }
    }
    Ok(single_linkage(points, m))
}

/// Single-linkage clustering cut at `m` clusters.
///
/// Builds the Euclidean minimum spanning tree with dense Prim and drops its
/// `m - 1` heaviest edges (ties: the later-added edge goes first).
pub fn single_linkage(points: &PointMatrix, m: usize) -> ComponentLabels {
    let n = points.n();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut link = vec![0usize; n];
    let mut tree_edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));

    in_tree[0] = true;
    for (j, b) in best.iter_mut().enumerate().skip(1) {
        *b = points.dist2(0, j);
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        tree_edges.push((best[next], link[next], next));
        for j in 0..n {
            if !in_tree[j] {
                let d = points.dist2(next, j);
                if d < best[j] {
                    best[j] = d;
                    link[j] = next;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..tree_edges.len()).collect();
    order.sort_by(|&a, &b| tree_edges[b].0.total_cmp(&tree_edges[a].0).then(b.cmp(&a)));
    let mut cut = vec![false; tree_edges.len()];
    for &e in order.iter().take(m - 1) {
        cut[e] = true;
    }
    let kept: Vec<(usize, usize)> = tree_edges
        .iter()
        .zip(&cut)
        .filter(|(_, &c)| !c)
        .map(|(e, _)| (e.1, e.2))
        .collect();
    // The forest has exactly m trees, so its connected components are the clusters.
    NeighborGraph::from_edges(n, &kept)
        .expect("tree edges are in range")
        .connected_components()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_pair() -> NeighborGraph {
        NeighborGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap()
    }

    #[test]
    fn collinear_graph_is_symmetric() {
        let p = PointMatrix::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        let g = build_knn_graph(&p, 1, Symmetrization::Union).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert!(g.has_edge(1, 2) && g.has_edge(2, 1));
        assert!(!g.has_edge(0, 2));
        let g = build_knn_graph(&p, 1, Symmetrization::Mutual).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn graph_needs_two_points() {
        let p = PointMatrix::from_rows(&[[0.0]]).unwrap();
        assert!(build_knn_graph(&p, 1, Symmetrization::Union).is_err());
    }

    #[test]
    fn laplacian_small_graphs() {
        let l = laplacian(&NeighborGraph::from_edges(2, &[(0, 1)]).unwrap());
        assert_eq!(
            l.matrix,
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );

        let l = laplacian(&NeighborGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.matrix[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }

        let l = laplacian(&NeighborGraph::from_edges(4, &[]).unwrap());
        assert!(l.matrix.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn counts_components() {
        assert_eq!(
            count_components(&laplacian(&triangle_pair()), 1e-8).unwrap(),
            2
        );
        let path = NeighborGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(count_components(&laplacian(&path), 1e-8).unwrap(), 1);
        let empty = NeighborGraph::from_edges(7, &[]).unwrap();
        assert_eq!(count_components(&laplacian(&empty), 1e-8).unwrap(), 7);
    }

    #[test]
    fn connected_components_numbered_by_first_member() {
        let g = NeighborGraph::from_edges(5, &[(4, 1), (2, 3)]).unwrap();
        let cc = g.connected_components();
        assert_eq!(cc.m, 3);
        assert_eq!(cc.labels, vec![0, 1, 2, 2, 1]);
    }

    #[test]
    fn split_single_component() {
        let p = PointMatrix::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let g = build_knn_graph(&p, 1, Symmetrization::Union).unwrap();
        let labels = split_components(&p, &g, 1, SplitMode::SingleLinkage).unwrap();
        assert_eq!(labels.labels, vec![0, 0, 0]);
        assert!(split_components(&p, &g, 4, SplitMode::SingleLinkage).is_err());
        assert!(split_components(&p, &g, 0, SplitMode::SingleLinkage).is_err());
    }

    #[test]
    fn single_linkage_cuts_widest_gaps() {
        let p = PointMatrix::from_rows(&[[10.0], [0.0], [0.5], [10.2], [30.0]]).unwrap();
        let c = single_linkage(&p, 3);
        assert_eq!(c.labels, vec![0, 1, 1, 0, 2]);
        let c = single_linkage(&p, 2);
        assert_eq!(c.labels, vec![0, 0, 0, 0, 1]);
        let c = single_linkage(&p, 5);
        assert_eq!(c.labels, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn graph_mode_uses_connected_components() {
        let p = PointMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]]).unwrap();
        let g = triangle_pair();
        let labels = split_components(&p, &g, 2, SplitMode::Graph).unwrap();
        assert_eq!(labels.labels, vec![0, 0, 0, 1, 1, 1]);
        // Count disagrees with the graph: falls back to single linkage.
        let labels = split_components(&p, &g, 3, SplitMode::Graph).unwrap();
        assert_eq!(labels.m, 3);
    }
}
