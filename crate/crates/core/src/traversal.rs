//! Growth of individual manifolds inside one component.
//!
//! Each manifold is a depth-first tree. A child joins its parent's tree when
//! the angular gaps between their neighborhood eigenvectors agree with the
//! exponential moving average carried down the tree. A child that fails is
//! given a second chance: neighbors that look imported from another manifold
//! (largest [`mod_dis`]) are peeled off its neighborhood one at a time and the
//! test is repeated on what remains.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::{
    build_knn_graph, count_zero_eigenvalues, laplacian, split_components, ComponentLabels,
};
use crate::config::{AcevConfig, Correspondence};
use crate::error::{invalid, AcevError, Result};
use crate::geometry::{
    angle_profile, eigvals_sym, geometry_of, knn_all, subspace_angle_profile, LocalGeometry,
    NeighborSet,
};
use crate::points::PointMatrix;

/// Predicted angular gap per principal direction, radians.
#[derive(Debug, Clone, PartialEq)]
pub struct EmaVector(pub Vec<f64>);

/// `alpha * observed + (1 - alpha) * prev`, component-wise.
pub fn ema_update(prev: &EmaVector, observed: &[f64], alpha: f64) -> EmaVector {
    EmaVector(
        prev.0
            .iter()
            .zip(observed)
            .map(|(p, o)| alpha * o + (1.0 - alpha) * p)
            .collect(),
    )
}

/// How a node entered its tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inclusion {
    Root,
    WarmUp,
    Accepted,
    /// Accepted after dropping this many neighbors.
    Filtered(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraversalNode {
    pub point: usize,
    pub parent: Option<usize>,
    /// `None` only for a root, whose EMA is seeded by its first child.
    pub ema: Option<EmaVector>,
    /// Angle profile against the parent's geometry; `None` for a root.
    pub observed: Option<Vec<f64>>,
    pub geometry: LocalGeometry,
    pub depth: usize,
    pub manifold: usize,
    pub inclusion: Inclusion,
}

/// Result of testing one candidate against its would-be parent.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionOutcome {
    pub accepted: bool,
    pub observed: Vec<f64>,
    pub ema: EmaVector,
}

fn observe(
    parent: &LocalGeometry,
    candidate: &LocalGeometry,
    correspondence: Correspondence,
) -> Result<Vec<f64>> {
    match correspondence {
        Correspondence::Rank => angle_profile(parent, candidate),
        Correspondence::Subspace => subspace_angle_profile(parent, candidate),
    }
}

/// Updates the parent's EMA with the observed angle profile and accepts when
/// the prediction and the observation agree within `angle_tol` in every
/// direction. A parent without an EMA seeds it from the observation.
pub fn inclusion_test(
    parent: &TraversalNode,
    candidate: &LocalGeometry,
    cfg: &AcevConfig,
) -> Result<InclusionOutcome> {
    let observed = observe(&parent.geometry, candidate, cfg.correspondence)?;
    let prev = parent
        .ema
        .clone()
        .unwrap_or_else(|| EmaVector(observed.clone()));
    let ema = ema_update(&prev, &observed, cfg.alpha);
    let same_dim = !cfg.dim_check || candidate.intrinsic_dim == parent.geometry.intrinsic_dim;
    let accepted = same_dim
        && ema
            .0
            .iter()
            .zip(&observed)
            .all(|(e, o)| (e - o).abs() <= cfg.angle_tol);
    Ok(InclusionOutcome {
        accepted,
        observed,
        ema,
    })
}

/// Distance from `x` to the line through `origin` along unit vector `dir`.
fn dist_line(x: &[f64], origin: &[f64], dir: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(origin).map(|(a, b)| a - b).collect();
    let along: f64 = diff.iter().zip(dir).map(|(d, e)| d * e).sum();
    let sq: f64 = diff
        .iter()
        .zip(dir)
        .map(|(d, e)| {
            let perp = d - along * e;
            perp * perp
        })
        .sum();
    sq.sqrt()
}

/// Filtration score of neighbor `r` (coordinates `r_point`, own neighborhood
/// geometry `r_geometry`) relative to a parent geometry:
/// `Σ_w dist(r, line_w) · λ_w(r) / λ_w(parent)`, where `line_w` passes through
/// the parent's centroid along its `w`-th principal direction. Parent
/// eigenvalues are floored at `1e-12 · λ_1(parent)` (itself at least `1e-300`).
pub fn mod_dis(r_point: &[f64], parent: &LocalGeometry, r_geometry: &LocalGeometry) -> f64 {
    let floor = 1e-12 * parent.eigvals.first().copied().unwrap_or(0.0).max(1e-300);
    (0..parent.dim())
        .map(|w| {
            let ratio = r_geometry.eigvals[w] / parent.eigvals[w].max(floor);
            dist_line(r_point, &parent.centroid, parent.eigvec(w)) * ratio
        })
        .sum()
}

/// Outcome of [`filter_neighborhood`].
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub filtered: NeighborSet,
    pub accepted: bool,
    pub geometry: LocalGeometry,
    pub outcome: InclusionOutcome,
    pub removed: usize,
}

/// Retries the inclusion of `q` while dropping its neighbors in decreasing
/// order of [`mod_dis`] against the parent.
///
/// `geometries[r]` is the unfiltered geometry of neighbor `r`. Stops at the
/// first passing neighborhood, or with `accepted == false` once one more
/// removal would take the neighborhood below the filtration floor.
pub fn filter_neighborhood(
    points: &PointMatrix,
    neigh: &NeighborSet,
    parent: &TraversalNode,
    geometries: &[LocalGeometry],
    cfg: &AcevConfig,
) -> Result<FilterOutcome> {
    let q = neigh.center;
    let floor = cfg.filtration_floor(parent.geometry.intrinsic_dim);

    let mut scored: Vec<(f64, usize)> = neigh
        .neighbors
        .iter()
        .enumerate()
        .map(|(pos, &r)| {
            (
                mod_dis(points.row(r), &parent.geometry, &geometries[r]),
                pos,
            )
        })
        .collect();
    // Highest score first; among equal scores the farther neighbor goes first.
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));

    let mut keep = vec![true; neigh.len()];
    let mut current = neigh.clone();
    let mut geometry = geometry_of(points, q, &current.neighbors, cfg.var_thresh)?;
    let mut outcome = inclusion_test(parent, &geometry, cfg)?;
    let mut removed = 0;
    for &(_, pos) in &scored {
        if outcome.accepted || current.len() <= floor {
            break;
        }
        keep[pos] = false;
        removed += 1;
        current = NeighborSet {
            center: q,
            neighbors: select(&neigh.neighbors, &keep),
            distances: select(&neigh.distances, &keep),
        };
        geometry = geometry_of(points, q, &current.neighbors, cfg.var_thresh)?;
        outcome = inclusion_test(parent, &geometry, cfg)?;
    }
    Ok(FilterOutcome {
        filtered: current,
        accepted: outcome.accepted,
        geometry,
        outcome,
        removed,
    })
}

fn select<T: Copy>(values: &[T], keep: &[bool]) -> Vec<T> {
    values
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(v, _)| *v)
        .collect()
}

/// The unlabelled point with the smallest first coordinate; ties fall through
/// to the later coordinates, then to the lower index.
pub fn select_root(points: &PointMatrix, unlabelled: &[usize]) -> Result<usize> {
    unlabelled
        .iter()
        .copied()
        .min_by(|&a, &b| {
            points
                .row(a)
                .iter()
                .zip(points.row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })
        .ok_or_else(|| AcevError::InvalidInput("root selection over an empty set".into()))
}

/// Manifold assignment within one component.
#[derive(Debug, Clone)]
pub struct ComponentSegmentation {
    /// Global point indices, ascending.
    pub members: Vec<usize>,
    /// Manifold id per member, dense from 0 in creation order.
    pub manifold: Vec<usize>,
    pub manifold_count: usize,
    /// Every included node in inclusion order; `point`/`parent` are global indices.
    pub nodes: Vec<TraversalNode>,
}

/// Splits one component into manifolds by repeated tree growth.
///
/// Each new tree is rooted at the [`select_root`] choice among the unlabelled
/// points of lowest intrinsic dimension, so roots avoid the cluttered
/// neighborhoods around intersections while cleaner points remain.
pub fn segment_component(
    points: &PointMatrix,
    members: &[usize],
    cfg: &AcevConfig,
) -> Result<ComponentSegmentation> {
    cfg.validate()?;
    if members.is_empty() {
        return invalid("cannot segment an empty component");
    }
    let mut members = members.to_vec();
    members.sort_unstable();
    members.dedup();
    let n = members.len();
    let sub = points.select(&members)?;

    if n == 1 {
        let geometry = geometry_of(&sub, 0, &[], cfg.var_thresh).unwrap_or_else(|_| {
            LocalGeometry::from_parts(
                members[0],
                sub.row(0).to_vec(),
                vec![0.0; sub.dim()],
                &identity_axes(sub.dim()),
                cfg.var_thresh,
            )
            .expect("identity axes are a valid basis")
        });
        return Ok(ComponentSegmentation {
            manifold: vec![0],
            manifold_count: 1,
            nodes: vec![root_node(members[0], geometry, 0)],
            members,
        });
    }

    let neigh = knn_all(&sub, cfg.k)?;
    let geometries: Vec<LocalGeometry> = neigh
        .par_iter()
        .map(|ns| geometry_of(&sub, ns.center, &ns.neighbors, cfg.var_thresh))
        .collect::<Result<_>>()?;

    // Local-index bookkeeping; translated to global indices on the way out.
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut state: Vec<Option<TraversalNode>> = vec![None; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut remaining = n;
    let mut manifold = 0;

    while remaining > 0 {
        let unlabelled: Vec<usize> = (0..n).filter(|&i| label[i].is_none()).collect();
        let lowest = unlabelled
            .iter()
            .map(|&i| geometries[i].intrinsic_dim)
            .min()
            .expect("remaining > 0");
        let candidates: Vec<usize> = unlabelled
            .into_iter()
            .filter(|&i| geometries[i].intrinsic_dim == lowest)
            .collect();
        let root = select_root(&sub, &candidates)?;
        let warmup = ((cfg.warmup_frac * remaining as f64).ceil() as usize).max(1);

        label[root] = Some(manifold);
        state[root] = Some(root_node(root, geometries[root].clone(), manifold));
        order.push(root);
        remaining -= 1;
        let mut grown = 1usize;

        if neigh[root].len() >= cfg.min_neigh {
            let mut stack: Vec<(usize, usize)> = Vec::new();
            push_children(&mut stack, &neigh[root], root, &label);

            while let Some((cand, parent)) = stack.pop() {
                if label[cand].is_some() {
                    continue;
                }
                let parent_node = state[parent].as_ref().expect("parent is in the tree");
                let (geometry, ema, observed, inclusion) = if grown < warmup {
                    let observed =
                        observe(&parent_node.geometry, &geometries[cand], cfg.correspondence)?;
                    let ema = EmaVector(observed.clone());
                    (geometries[cand].clone(), ema, observed, Inclusion::WarmUp)
                } else {
                    let direct = inclusion_test(parent_node, &geometries[cand], cfg)?;
                    if direct.accepted {
                        (
                            geometries[cand].clone(),
                            direct.ema,
                            direct.observed,
                            Inclusion::Accepted,
                        )
                    } else {
                        let f =
                            filter_neighborhood(&sub, &neigh[cand], parent_node, &geometries, cfg)?;
                        if !f.accepted {
                            continue;
                        }
                        (
                            f.geometry,
                            f.outcome.ema,
                            f.outcome.observed,
                            Inclusion::Filtered(f.removed),
                        )
                    }
                };
                let depth = parent_node.depth + 1;
                label[cand] = Some(manifold);
                state[cand] = Some(TraversalNode {
                    point: cand,
                    parent: Some(parent),
                    ema: Some(ema),
                    observed: Some(observed),
                    geometry,
                    depth,
                    manifold,
                    inclusion,
                });
                order.push(cand);
                remaining -= 1;
                grown += 1;
                push_children(&mut stack, &neigh[cand], cand, &label);
            }
        }
        manifold += 1;
    }

    let nodes = order
        .into_iter()
        .map(|i| {
            let mut node = state[i].take().expect("every labelled point has a node");
            node.point = members[i];
            node.parent = node.parent.map(|p| members[p]);
            node.geometry.center = members[i];
            node
        })
        .collect();
    let manifold_ids = label
        .into_iter()
        .map(|l| l.ok_or_else(|| AcevError::Internal("point left unlabelled".into())))
        .collect::<Result<Vec<_>>>()?;

    Ok(ComponentSegmentation {
        members,
        manifold: manifold_ids,
        manifold_count: manifold,
        nodes,
    })
}

fn identity_axes(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|w| (0..dim).map(|j| if j == w { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn root_node(point: usize, geometry: LocalGeometry, manifold: usize) -> TraversalNode {
    TraversalNode {
        point,
        parent: None,
        ema: None,
        observed: None,
        geometry,
        depth: 0,
        manifold,
        inclusion: Inclusion::Root,
    }
}

/// Pushes unlabelled neighbors so the nearest one is popped first.
fn push_children(
    stack: &mut Vec<(usize, usize)>,
    neigh: &NeighborSet,
    parent: usize,
    label: &[Option<usize>],
) {
    for &c in neigh.neighbors.iter().rev() {
        if label[c].is_none() {
            stack.push((c, parent));
        }
    }
}

/// One segmented manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSummary {
    pub component: usize,
    /// Id within the component.
    pub manifold: usize,
    /// Global point indices, ascending.
    pub members: Vec<usize>,
    /// Most common intrinsic dimension among the members' tree geometries
    /// (smallest on ties).
    pub intrinsic_dim: usize,
}

/// Final per-point `(component, manifold)` assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldLabeling {
    pub assignment: Vec<(usize, usize)>,
    /// Ordered by component, then by manifold id.
    pub manifolds: Vec<ManifoldSummary>,
}

impl ManifoldLabeling {
    /// Index into [`Self::manifolds`] for every point.
    pub fn flat_labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.assignment.len()];
        for (id, m) in self.manifolds.iter().enumerate() {
            for &p in &m.members {
                out[p] = id;
            }
        }
        out
    }

    pub fn manifold_count(&self) -> usize {
        self.manifolds.len()
    }

    pub fn component_count(&self) -> usize {
        self.manifolds
            .iter()
            .map(|m| m.component + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Wall-clock time spent per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub graph: Duration,
    pub spectrum: Duration,
    pub split: Duration,
    pub traversal: Duration,
}

/// Everything the full pipeline produces.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub labeling: ManifoldLabeling,
    pub components: ComponentLabels,
    pub per_component: Vec<ComponentSegmentation>,
    pub timings: StageTimings,
}

/// Runs both stages and returns the labeling.
pub fn segment(points: &PointMatrix, cfg: &AcevConfig) -> Result<ManifoldLabeling> {
    run(points, cfg).map(|s| s.labeling)
}

/// Runs both stages, keeping intermediate results and stage timings.
pub fn run(points: &PointMatrix, cfg: &AcevConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let n = points.n();
    let mut timings = StageTimings::default();

    let components = if n == 1 {
        ComponentLabels {
            labels: vec![0],
            m: 1,
        }
    } else {
        let t = Instant::now();
        let graph = build_knn_graph(points, cfg.k, cfg.symmetrization)?;
        timings.graph = t.elapsed();

        let t = Instant::now();
        let spectrum = eigvals_sym(&laplacian(&graph).matrix)?;
        let m = count_zero_eigenvalues(&spectrum, cfg.zero_tol).min(n);
        timings.spectrum = t.elapsed();

        let t = Instant::now();
        let split = split_components(points, &graph, m, cfg.split)?;
        timings.split = t.elapsed();
        split
    };

    let t = Instant::now();
    let per_component: Vec<ComponentSegmentation> = components
        .members()
        .par_iter()
        .map(|members| segment_component(points, members, cfg))
        .collect::<Result<_>>()?;
    timings.traversal = t.elapsed();

    let mut assignment = vec![None; n];
    let mut manifolds = Vec::new();
    for (c, seg) in per_component.iter().enumerate() {
        let mut groups = vec![Vec::new(); seg.manifold_count];
        for (&p, &m) in seg.members.iter().zip(&seg.manifold) {
            assignment[p] = Some((c, m));
            groups[m].push(p);
        }
        let mut dims = vec![Vec::new(); seg.manifold_count];
        for node in &seg.nodes {
            dims[node.manifold].push(node.geometry.intrinsic_dim);
        }
        for (m, (members, dims)) in groups.into_iter().zip(dims).enumerate() {
            manifolds.push(ManifoldSummary {
                component: c,
                manifold: m,
                members,
                intrinsic_dim: mode(&dims),
            });
        }
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| AcevError::Internal(format!("point {i} has no manifold"))))
        .collect::<Result<Vec<_>>>()?;

    Ok(Segmentation {
        labeling: ManifoldLabeling {
            assignment,
            manifolds,
        },
        components,
        per_component,
        timings,
    })
}

fn mode(values: &[usize]) -> usize {
    let Some(&max) = values.iter().max() else {
        return 0;
    };
    let mut counts = vec![0usize; max + 1];
    for &v in values {
        counts[v] += 1;
    }
    // max_by_key keeps the last maximum; scan in reverse so the smallest wins.
    (0..=max).rev().max_by_key(|&v| counts[v]).unwrap_or(0)
}
