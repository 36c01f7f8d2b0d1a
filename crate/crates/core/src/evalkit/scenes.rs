//! Seeded synthetic point clouds made of planes, S-curves and line segments.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`. Per point it
//! takes the manifold parameters first (uniform `[0, 1)` draws, in the order
//! documented on each generator) and then, when `sigma > 0`, one standard
//! normal per ambient coordinate scaled by `sigma`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::points::{sq_dist, PointMatrix};

/// Analytic description of a part, used to locate intersections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Locus {
    /// Hyperplane `{x : normal · (x - origin) = 0}`.
    Plane { origin: Vec<f64>, normal: Vec<f64> },
    /// Line `{origin + s · dir}`.
    Line { origin: Vec<f64>, dir: Vec<f64> },
    /// No closed form; intersections are found by proximity.
    Sampled,
}

/// Orthogonal map followed by a translation: `x -> R x + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    /// Row-major `D x D`.
    rotation: Vec<f64>,
    translation: Vec<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Vec<Vec<f64>>, translation: Vec<f64>) -> Result<Self> {
        let d = translation.len();
        if rotation.len() != d || rotation.iter().any(|r| r.len() != d) {
            return invalid("rotation and translation disagree on dimension");
        }
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = rotation[i]
                    .iter()
                    .zip(&rotation[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-9 {
                    return invalid("rotation matrix is not orthogonal");
                }
            }
        }
        Ok(Self {
            rotation: rotation.concat(),
            translation,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut rotation = vec![0.0; dim * dim];
        for i in 0..dim {
            rotation[i * dim + i] = 1.0;
        }
        Self {
            rotation,
            translation: vec![0.0; dim],
        }
    }

    /// Rotation by `angle` radians about the y axis of 3-D space.
    pub fn rotate_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: vec![c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c],
            translation: vec![0.0; 3],
        }
    }

    /// The same map followed by a shift.
    pub fn then_translate(mut self, shift: &[f64]) -> Self {
        for (t, s) in self.translation.iter_mut().zip(shift) {
            *t += s;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    fn rotate(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.rotation[i * d + j] * v[j]).sum())
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.rotate(x);
        for (o, t) in out.iter_mut().zip(&self.translation) {
            *o += t;
        }
        out
    }

    fn apply_locus(&self, locus: &Locus) -> Locus {
        match locus {
            Locus::Plane { origin, normal } => Locus::Plane {
                origin: self.apply(origin),
                normal: self.rotate(normal),
            },
            Locus::Line { origin, dir } => Locus::Line {
                origin: self.apply(origin),
                dir: self.rotate(dir),
            },
            Locus::Sampled => Locus::Sampled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescriptor {
    pub name: String,
    /// Point count of each part.
    pub sizes: Vec<usize>,
    pub sigma: f64,
    pub seed: u64,
    /// Intersection band half-width used for the mask.
    pub band: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub points: PointMatrix,
    /// Part index per point, dense from 0.
    pub truth: Vec<usize>,
    pub intersection_mask: Vec<bool>,
    pub descriptor: SceneDescriptor,
    /// One entry per part, already placed.
    pub loci: Vec<Locus>,
}

fn noise(rng: &mut ChaCha8Rng, sigma: f64, p: &mut [f64]) {
    if sigma > 0.0 {
        for x in p.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *x += sigma * z;
        }
    }
}

fn single_part(
    name: &str,
    rows: Vec<[f64; 3]>,
    sigma: f64,
    seed: u64,
    locus: Locus,
) -> Result<SyntheticScene> {
    let n = rows.len();
    Ok(SyntheticScene {
        points: PointMatrix::from_rows(&rows)?,
        truth: vec![0; n],
        intersection_mask: vec![false; n],
        descriptor: SceneDescriptor {
            name: name.to_string(),
            sizes: vec![n],
            sigma,
            seed,
            band: 0.0,
        },
        loci: vec![locus],
    })
}

fn check_args(n: usize, sigma: f64) -> Result<()> {
    if n == 0 {
        return invalid("a scene needs at least one point");
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        ));
    }
    Ok(())
}

/// Square patch of side `extent` in the `z = 0` plane, centered on the origin.
/// Draws `u` then `v`, mapped to `(u - 0.5, v - 0.5, 0) * extent`.
pub fn gen_plane(n: usize, extent: f64, sigma: f64, seed: u64) -> Result<SyntheticScene> {
    check_args(n, sigma)?;
    if !(extent > 0.0 && extent.is_finite()) {
        return invalid(format!("plane extent must be positive, got {extent}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let mut p = [(u - 0.5) * extent, (v - 0.5) * extent, 0.0];
            noise(&mut rng, sigma, &mut p);
            p
        })
        .collect();
    let locus = Locus::Plane {
        origin: vec![0.0; 3],
        normal: vec![0.0, 0.0, 1.0],
    };
    single_part("plane", rows, sigma, seed, locus)
}

/// S-shaped surface: `t = 3π(u - 0.5)`, `(sin t, 2v, sign(t)(cos t - 1))`.
/// Draws `u` then `v`.
pub fn gen_scurve(n: usize, sigma: f64, seed: u64) -> Result<SyntheticScene> {
    check_args(n, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let t = 3.0 * PI * (u - 0.5);
            let mut p = [t.sin(), 2.0 * v, t.signum() * (t.cos() - 1.0)];
            noise(&mut rng, sigma, &mut p);
            p
        })
        .collect();
    single_part("s-curve", rows, sigma, seed, Locus::Sampled)
}

/// Segment from `(-1, 0, 0)` to `(1, 0, 0)`. Draws `u`, mapped to `(2u - 1, 0, 0)`.
pub fn gen_line(n: usize, sigma: f64, seed: u64) -> Result<SyntheticScene> {
    check_args(n, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut p = [2.0 * u - 1.0, 0.0, 0.0];
            noise(&mut rng, sigma, &mut p);
            p
        })
        .collect();
    let locus = Locus::Line {
        origin: vec![0.0; 3],
        dir: vec![1.0, 0.0, 0.0],
    };
    single_part("line", rows, sigma, seed, locus)
}

/// `3σ + 1%` of the largest bounding-box side among the parts.
pub fn default_band(sigma: f64, parts: &[&PointMatrix]) -> f64 {
    let extent = parts
        .iter()
        .map(|p| {
            let (lo, hi) = bounds(p);
            lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    3.0 * sigma + 0.01 * extent
}

fn bounds(p: &PointMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; p.dim()];
    let mut hi = vec![f64::NEG_INFINITY; p.dim()];
    for row in p.rows() {
        for (k, &x) in row.iter().enumerate() {
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
    }
    (lo, hi)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Where two parts meet, when it has a closed form.
enum PairLocus {
    /// Affine flat `{x : (x - point) ⟂ span(normals)}`; `normals` orthonormal.
    Flat {
        point: Vec<f64>,
        normals: Vec<Vec<f64>>,
    },
    Point(Vec<f64>),
    Empty,
}

impl PairLocus {
    fn distance(&self, x: &[f64]) -> f64 {
        match self {
            PairLocus::Flat { point, normals } => {
                let diff: Vec<f64> = x.iter().zip(point).map(|(a, b)| a - b).collect();
                normals
                    .iter()
                    .map(|n| dot(&diff, n).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
            PairLocus::Point(p) => sq_dist(x, p).sqrt(),
            PairLocus::Empty => f64::INFINITY,
        }
    }
}

fn pair_locus(a: &Locus, b: &Locus) -> Option<PairLocus> {
    match (a, b) {
        (
            Locus::Plane {
                origin: o1,
                normal: n1,
            },
            Locus::Plane {
                origin: o2,
                normal: n2,
            },
        ) => {
            // Orthonormalize the two normals; the intersection is the flat
            // through a common point, orthogonal to both.
            let e1: Vec<f64> = {
                let l = dot(n1, n1).sqrt();
                n1.iter().map(|v| v / l).collect()
            };
            let proj = dot(n2, &e1);
            let rest: Vec<f64> = n2.iter().zip(&e1).map(|(v, e)| v - proj * e).collect();
            let rest_len = dot(&rest, &rest).sqrt();
            if rest_len < 1e-12 * dot(n2, n2).sqrt() {
                return Some(PairLocus::Empty);
            }
            let e2: Vec<f64> = rest.iter().map(|v| v / rest_len).collect();
            // Solve e1·x = e1·o1, n2·x = n2·o2 with x in span(e1, e2).
            let c1 = dot(&e1, o1);
            let c2 = (dot(n2, o2) - proj * c1) / rest_len;
            let point = e1.iter().zip(&e2).map(|(a, b)| c1 * a + c2 * b).collect();
            Some(PairLocus::Flat {
                point,
                normals: vec![e1, e2],
            })
        }
        (Locus::Plane { origin, normal }, Locus::Line { origin: lo, dir })
        | (Locus::Line { origin: lo, dir }, Locus::Plane { origin, normal }) => {
            let denom = dot(normal, dir);
            if denom.abs() < 1e-12 * dot(normal, normal).sqrt() * dot(dir, dir).sqrt() {
                return Some(PairLocus::Empty);
            }
            let diff: Vec<f64> = origin.iter().zip(lo).map(|(a, b)| a - b).collect();
            let s = dot(normal, &diff) / denom;
            Some(PairLocus::Point(
                lo.iter().zip(dir).map(|(o, d)| o + s * d).collect(),
            ))
        }
        _ => None,
    }
}

/// Places the parts with their transforms and concatenates them.
///
/// `truth` is the part index. A point is masked when it lies within `band` of
/// the bounding box of some other part and within `band` of where the two
/// parts meet: the analytic locus for plane/plane and plane/line pairs, and
/// the nearest point of the other part otherwise.
pub fn compose_scene(
    name: &str,
    parts: &[SyntheticScene],
    placements: &[RigidTransform],
    band: f64,
) -> Result<SyntheticScene> {
    if parts.is_empty() {
        return invalid("a composed scene needs at least one part");
    }
    if parts.len() != placements.len() {
        return invalid(format!(
            "{} parts but {} placements",
            parts.len(),
            placements.len()
        ));
    }
    let dim = parts[0].points.dim();
    for (i, (part, place)) in parts.iter().zip(placements).enumerate() {
        if part.points.dim() != dim || place.dim() != dim {
            return invalid(format!("part {i} is not in {dim}-dimensional space"));
        }
    }

    let mut placed: Vec<PointMatrix> = Vec::with_capacity(parts.len());
    let mut loci = Vec::new();
    for (part, place) in parts.iter().zip(placements) {
        let data: Vec<f64> = part.points.rows().flat_map(|r| place.apply(r)).collect();
        placed.push(PointMatrix::new(data, part.points.n(), dim)?);
        loci.push(
            part.loci
                .first()
                .map_or(Locus::Sampled, |l| place.apply_locus(l)),
        );
    }
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = placed.iter().map(bounds).collect();

    let mut data = Vec::new();
    let mut truth = Vec::new();
    let mut mask = Vec::new();
    for (i, pts) in placed.iter().enumerate() {
        for row in pts.rows() {
            let masked = (0..placed.len()).filter(|&j| j != i).any(|j| {
                let (lo, hi) = &boxes[j];
                let near_box = row
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(x, (l, h))| *x >= l - band && *x <= h + band);
                near_box
                    && match pair_locus(&loci[i], &loci[j]) {
                        Some(locus) => locus.distance(row) <= band,
                        None => placed[j].rows().any(|q| sq_dist(row, q) < band * band),
                    }
            });
            data.extend_from_slice(row);
            truth.push(i);
            mask.push(masked);
        }
    }
    let n = truth.len();
    let sigma = parts.iter().map(|p| p.descriptor.sigma).fold(0.0, f64::max);
    Ok(SyntheticScene {
        points: PointMatrix::new(data, n, dim)?,
        truth,
        intersection_mask: mask,
        descriptor: SceneDescriptor {
            name: name.to_string(),
            sizes: parts.iter().map(|p| p.points.n()).collect(),
            sigma,
            seed: parts[0].descriptor.seed,
            band,
        },
        loci,
    })
}

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &[
    "plane",
    "s-curve",
    "line",
    "plane-plane",
    "plane-s-curve",
    "s-curve-line",
    "four-part",
];

fn part_seed(seed: u64, part: u64) -> u64 {
    // SplitMix64 finalizer over the part index.
    let mut z = seed.wrapping_add(part.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const PLANE_AREA: f64 = 4.0;
const SCURVE_AREA: f64 = 6.0 * PI;

/// Splits `n` in proportion to `weights`, every share at least 1.
fn shares(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let mut out: Vec<usize> = weights
        .iter()
        .map(|w| ((n as f64 * w / total).round() as usize).max(1))
        .collect();
    let assigned: usize = out.iter().sum();
    let last = out.len() - 1;
    out[last] = (out[last] + n).saturating_sub(assigned).max(1);
    out
}

fn quarter_turn() -> RigidTransform {
    RigidTransform::rotate_y(PI / 2.0)
}

/// Named scene with `n` points in total and the default band.
///
/// * `plane-plane`: the `z = 0` patch crossed by its copy turned into the
///   `x = 0` plane; they meet along the y axis.
/// * `plane-s-curve`: an S-curve cut through its middle by the `x = 0` patch
///   spanning `y ∈ [0, 2]`.
/// * `s-curve-line`: an S-curve pierced at `(0, 1, 0)` by a segment along z.
/// * `four-part`: `plane-plane` shifted to `x = 6`, next to `s-curve-line`.
///
/// Planes and S-curves share points in proportion to area; a line gets 6%.
pub fn preset(name: &str, n: usize, sigma: f64, seed: u64) -> Result<SyntheticScene> {
    check_args(n, sigma)?;
    let s = |i| part_seed(seed, i);
    let scene = match name {
        "plane" => gen_plane(n, 2.0, sigma, seed)?,
        "s-curve" => gen_scurve(n, sigma, seed)?,
        "line" => gen_line(n, sigma, seed)?,
        "plane-plane" => {
            if n < 2 {
                return invalid("plane-plane needs at least 2 points");
            }
            let sizes = shares(n, &[PLANE_AREA, PLANE_AREA]);
            let parts = [
                gen_plane(sizes[0], 2.0, sigma, s(0))?,
                gen_plane(sizes[1], 2.0, sigma, s(1))?,
            ];
            let place = [RigidTransform::identity(3), quarter_turn()];
            with_band(name, &parts, &place, sigma)?
        }
        "plane-s-curve" => {
            if n < 2 {
                return invalid("plane-s-curve needs at least 2 points");
            }
            let sizes = shares(n, &[SCURVE_AREA, PLANE_AREA]);
            let parts = [
                gen_scurve(sizes[0], sigma, s(0))?,
                gen_plane(sizes[1], 2.0, sigma, s(1))?,
            ];
            let place = [
                RigidTransform::identity(3),
                quarter_turn().then_translate(&[0.0, 1.0, 0.0]),
            ];
            with_band(name, &parts, &place, sigma)?
        }
        "s-curve-line" => {
            if n < 2 {
                return invalid("s-curve-line needs at least 2 points");
            }
            let line = ((n as f64 * 0.06).round() as usize).clamp(1, n - 1);
            let parts = [
                gen_scurve(n - line, sigma, s(0))?,
                gen_line(line, sigma, s(1))?,
            ];
            let place = [
                RigidTransform::identity(3),
                RigidTransform::rotate_y(-PI / 2.0).then_translate(&[0.0, 1.0, 0.0]),
            ];
            with_band(name, &parts, &place, sigma)?
        }
        "four-part" => {
            if n < 4 {
                return invalid("four-part needs at least 4 points");
            }
            let line = ((n as f64 * 0.06).round() as usize).clamp(1, n - 3);
            let sizes = shares(n - line, &[PLANE_AREA, PLANE_AREA, SCURVE_AREA]);
            let parts = [
                gen_plane(sizes[0], 2.0, sigma, s(0))?,
                gen_plane(sizes[1], 2.0, sigma, s(1))?,
                gen_scurve(sizes[2], sigma, s(2))?,
                gen_line(line, sigma, s(3))?,
            ];
            let shift = [6.0, 1.0, 0.0];
            let place = [
                RigidTransform::identity(3).then_translate(&shift),
                quarter_turn().then_translate(&shift),
                RigidTransform::identity(3),
                RigidTransform::rotate_y(-PI / 2.0).then_translate(&[0.0, 1.0, 0.0]),
            ];
            with_band(name, &parts, &place, sigma)?
        }
        other => {
            return invalid(format!(
                "unknown scene '{other}', expected one of: {}",
                PRESETS.join(", ")
            ))
        }
    };
    let mut scene = scene;
    scene.descriptor.seed = seed;
    Ok(scene)
}

fn with_band(
    name: &str,
    parts: &[SyntheticScene],
    place: &[RigidTransform],
    sigma: f64,
) -> Result<SyntheticScene> {
    let band = default_band(sigma, &parts.iter().map(|p| &p.points).collect::<Vec<_>>());
    compose_scene(name, parts, place, band)
}
