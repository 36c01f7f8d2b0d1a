//! Per-point primitives: exact k-nearest-neighbor queries, neighborhood
//! covariance and its eigenstructure, angular gaps between principal
//! directions, and intrinsic-dimension estimation.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, AcevError, Result};
use crate::points::{sq_dist, PointMatrix};

/// The `k` nearest points to `center`, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub center: usize,
    pub neighbors: Vec<usize>,
    /// Euclidean distances matching `neighbors`, non-decreasing.
    pub distances: Vec<f64>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Copy of this set without the neighbor at `pos`.
    pub fn without(&self, pos: usize) -> NeighborSet {
        let mut out = self.clone();
        out.neighbors.remove(pos);
        out.distances.remove(pos);
        out
    }
}

/// Exact k-NN of point `i` by brute force. Ties in distance go to the lower index.
pub fn knn_query(points: &PointMatrix, i: usize, k: usize) -> Result<NeighborSet> {
    if i >= points.n() {
        return invalid(format!(
            "point index {i} out of range for {} points",
            points.n()
        ));
    }
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let center = points.row(i);
    let mut cand: Vec<(f64, usize)> = (0..points.n())
        .filter(|&j| j != i)
        .map(|j| (sq_dist(center, points.row(j)), j))
        .collect();
    let take = k.min(cand.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if take < cand.len() && take > 0 {
        cand.select_nth_unstable_by(take - 1, cmp);
        cand.truncate(take);
    }
    cand.sort_unstable_by(cmp);
    cand.truncate(take);
    Ok(NeighborSet {
        center: i,
        neighbors: cand.iter().map(|c| c.1).collect(),
        distances: cand.iter().map(|c| c.0.sqrt()).collect(),
    })
}

/// k-NN sets for every point, computed in parallel.
pub fn knn_all(points: &PointMatrix, k: usize) -> Result<Vec<NeighborSet>> {
    (0..points.n())
        .into_par_iter()
        .map(|i| knn_query(points, i, k))
        .collect()
}

/// Sample covariance of a neighborhood together with the mean it is centered on.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCovariance {
    pub centroid: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

/// Covariance of `{center} ∪ neighbors` with divisor `m - 1`.
pub fn local_covariance(points: &PointMatrix, neigh: &NeighborSet) -> Result<LocalCovariance> {
    covariance_of(points, neigh.center, &neigh.neighbors)
}

pub(crate) fn covariance_of(
    points: &PointMatrix,
    center: usize,
    neighbors: &[usize],
) -> Result<LocalCovariance> {
    let m = neighbors.len() + 1;
    if m < 2 {
        return Err(AcevError::DegenerateNeighborhood { center, size: m });
    }
    let dim = points.dim();
    let members = || std::iter::once(center).chain(neighbors.iter().copied());

    let mut centroid = vec![0.0; dim];
    for idx in members() {
        for (c, x) in centroid.iter_mut().zip(points.row(idx)) {
            *c += x;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= m as f64);

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    let mut dev = vec![0.0; dim];
    for idx in members() {
        for ((d, x), c) in dev.iter_mut().zip(points.row(idx)).zip(&centroid) {
            *d = x - c;
        }
        for a in 0..dim {
            for b in a..dim {
                cov[(a, b)] += dev[a] * dev[b];
            }
        }
    }
    let denom = (m - 1) as f64;
    for a in 0..dim {
        for b in a..dim {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(LocalCovariance {
        centroid,
        matrix: cov,
    })
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `w` is the unit eigenvector for `values[w]`.
    pub vectors: DMatrix<f64>,
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return invalid(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        ));
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-8 * scale {
                return invalid(format!("matrix is not symmetric at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

/// Symmetric eigensolver; eigenvector signs are fixed so the largest-magnitude
/// entry of each column is positive.
pub fn eig_sym(m: &DMatrix<f64>) -> Result<SymEigen> {
    check_symmetric(m)?;
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&w| eig.eigenvalues[w]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    Ok(SymEigen { values, vectors })
}

/// Eigenvalues only, descending. Skips eigenvector accumulation, which is
/// what dominates the dense Laplacian spectrum.
pub fn eigvals_sym(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let mut values: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle between two undirected lines, in `[0, π/2]`.
pub fn angle_differ(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return invalid(format!("vector lengths differ: {} vs {}", a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return invalid("angle undefined for a zero-norm vector");
    }
    let cos = (dot(a, b).abs() / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// Neighborhood eigenstructure of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGeometry {
    pub center: usize,
    pub centroid: Vec<f64>,
    /// Descending and non-negative.
    pub eigvals: Vec<f64>,
    /// `dim * dim` entries; direction `w` is `eigvecs[w*dim..(w+1)*dim]`.
    eigvecs: Vec<f64>,
    pub intrinsic_dim: usize,
}

impl LocalGeometry {
    pub fn dim(&self) -> usize {
        self.centroid.len()
    }

    /// Unit vector of the `w`-th principal direction.
    pub fn eigvec(&self, w: usize) -> &[f64] {
        let d = self.dim();
        &self.eigvecs[w * d..(w + 1) * d]
    }

    pub fn eigvecs(&self) -> impl Iterator<Item = &[f64]> {
        self.eigvecs.chunks_exact(self.dim())
    }

    /// Builds a geometry from explicit parts. `eigvecs[w]` must be unit-norm
    /// and mutually orthogonal; eigenvalues must already be descending.
    pub fn from_parts(
        center: usize,
        centroid: Vec<f64>,
        eigvals: Vec<f64>,
        eigvecs: &[Vec<f64>],
        eta: f64,
    ) -> Result<Self> {
        let dim = centroid.len();
        if eigvals.len() != dim || eigvecs.len() != dim || eigvecs.iter().any(|v| v.len() != dim) {
            return invalid("geometry parts disagree on dimension");
        }
        if eigvals.windows(2).any(|w| w[0] < w[1]) {
            return invalid("eigenvalues must be descending");
        }
        let eigvals: Vec<f64> = eigvals.into_iter().map(|v| v.max(0.0)).collect();
        let intrinsic_dim = intrinsic_dim(&eigvals, eta);
        Ok(Self {
            center,
            centroid,
            eigvals,
            eigvecs: eigvecs.concat(),
            intrinsic_dim,
        })
    }
}

/// Number of eigenvalues carrying more than `eta` of the total variance.
pub fn intrinsic_dim(eigvals: &[f64], eta: f64) -> usize {
    let total: f64 = eigvals.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return 0;
    }
    eigvals
        .iter()
        .filter(|&&v| v.max(0.0) / total > eta)
        .count()
}

/// Covariance -> eigendecomposition -> intrinsic dimension for one neighborhood.
pub fn local_geometry(
    points: &PointMatrix,
    i: usize,
    neigh: &NeighborSet,
    eta: f64,
) -> Result<LocalGeometry> {
    if neigh.center != i {
        return invalid(format!(
            "neighbor set is centered on {}, not {i}",
            neigh.center
        ));
    }
    geometry_of(points, i, &neigh.neighbors, eta)
}

pub(crate) fn geometry_of(
    points: &PointMatrix,
    center: usize,
    neighbors: &[usize],
    eta: f64,
) -> Result<LocalGeometry> {
    let cov = covariance_of(points, center, neighbors)?;
    let eig = eig_sym(&cov.matrix)?;
    let dim = points.dim();
    let eigvals: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let mut eigvecs = Vec::with_capacity(dim * dim);
    for w in 0..dim {
        eigvecs.extend(eig.vectors.column(w).iter());
    }
    Ok(LocalGeometry {
        center,
        centroid: cov.centroid,
        intrinsic_dim: intrinsic_dim(&eigvals, eta),
        eigvals,
        eigvecs,
    })
}

/// Number of leading directions treated as tangent when pairing directions.
///
/// This is the intrinsic dimension when it lies strictly between 0 and the
/// ambient dimension. A full-rank spectrum is split at its largest ratio
/// between consecutive eigenvalues instead. `None` for an all-zero spectrum
/// or a one-dimensional space.
pub fn tangent_split(g: &LocalGeometry) -> Option<usize> {
    let dim = g.dim();
    let d = g.intrinsic_dim;
    if d > 0 && d < dim {
        return Some(d);
    }
    if d == 0 || dim < 2 || g.eigvals[dim - 1] <= 0.0 {
        return None;
    }
    (1..dim).max_by(|&a, &b| {
        let ra = g.eigvals[a - 1] / g.eigvals[a];
        let rb = g.eigvals[b - 1] / g.eigvals[b];
        // Prefer the earlier split on ties.
        ra.total_cmp(&rb).then(b.cmp(&a))
    })
}

/// Angular gap between equally ranked principal directions of two geometries.
pub fn angle_profile(g1: &LocalGeometry, g2: &LocalGeometry) -> Result<Vec<f64>> {
    if g1.dim() != g2.dim() {
        return invalid(format!(
            "geometry dimensions differ: {} vs {}",
            g1.dim(),
            g2.dim()
        ));
    }
    (0..g1.dim())
        .map(|w| angle_differ(g1.eigvec(w), g2.eigvec(w)))
        .collect()
}

/// Angular gap of each principal direction of `other` to the matching
/// eigenspace of `reference`.
///
/// `reference` splits its directions into a tangent block and a normal block
/// (see [`tangent_split`]). Entry `g` is the angle between `other`'s rank-`g`
/// direction and the span of the block holding rank `g` in `reference`.
/// Reorderings inside a block, which are arbitrary when its eigenvalues are
/// close, do not register as gaps. Without a split every direction is its
/// own block and the result equals [`angle_profile`].
pub fn subspace_angle_profile(
    reference: &LocalGeometry,
    other: &LocalGeometry,
) -> Result<Vec<f64>> {
    if reference.dim() != other.dim() {
        return invalid(format!(
            "geometry dimensions differ: {} vs {}",
            reference.dim(),
            other.dim()
        ));
    }
    let dim = reference.dim();
    let Some(split) = tangent_split(reference) else {
        return angle_profile(reference, other);
    };
    let profile = (0..dim)
        .map(|g| {
            let v = other.eigvec(g);
            let (block, rest) = if g < split {
                (0..split, split..dim)
            } else {
                (split..dim, 0..split)
            };
            let inside: f64 = block.map(|h| dot(v, reference.eigvec(h)).powi(2)).sum();
            let outside: f64 = rest.map(|h| dot(v, reference.eigvec(h)).powi(2)).sum();
            outside.sqrt().atan2(inside.sqrt())
        })
        .collect();
    Ok(profile)
}
