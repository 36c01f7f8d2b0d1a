//! JSON run report.
//!
//! Key names are stable:
//!
//! | key | content |
//! |---|---|
//! | `version` | tool version |
//! | `input` | `path`, `sha256`, `n`, `dim` |
//! | `config` | every effective [`AcevConfig`] field |
//! | `components` | component count `m` |
//! | `manifolds_per_component` | manifold count of each component |
//! | `manifolds` | `component`, `manifold`, `size`, `intrinsic_dim` per manifold |
//! | `metrics` | `ari`, `nmi`, `ari_off_mask`, `nmi_off_mask`, `masked`; `null` without truth |
//! | `timings_s` | wall-clock seconds for `graph`, `spectrum`, `split`, `traversal`, `total` |

use acev::{AcevConfig, Segmentation, StageTimings};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
    pub n: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldEntry {
    pub component: usize,
    pub manifold: usize,
    pub size: usize,
    pub intrinsic_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ari: f64,
    pub nmi: f64,
    /// Scores over the points outside the mask; `None` without a mask column
    /// or when every point is masked.
    pub ari_off_mask: Option<f64>,
    pub nmi_off_mask: Option<f64>,
    pub masked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub graph: f64,
    pub spectrum: f64,
    pub split: f64,
    pub traversal: f64,
    pub total: f64,
}

impl From<StageTimings> for Timings {
    fn from(t: StageTimings) -> Self {
        let graph = t.graph.as_secs_f64();
        let spectrum = t.spectrum.as_secs_f64();
        let split = t.split.as_secs_f64();
        let traversal = t.traversal.as_secs_f64();
        Timings {
            graph,
            spectrum,
            split,
            traversal,
            total: graph + spectrum + split + traversal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub input: InputInfo,
    pub config: AcevConfig,
    pub components: usize,
    pub manifolds_per_component: Vec<usize>,
    pub manifolds: Vec<ManifoldEntry>,
    pub metrics: Option<Metrics>,
    pub timings_s: Timings,
}

impl RunReport {
    pub fn new(
        input: InputInfo,
        config: &AcevConfig,
        seg: &Segmentation,
        metrics: Option<Metrics>,
    ) -> Self {
        let manifolds_per_component = seg.per_component.iter().map(|c| c.manifold_count).collect();
        let manifolds = seg
            .labeling
            .manifolds
            .iter()
            .map(|m| ManifoldEntry {
                component: m.component,
                manifold: m.manifold,
                size: m.members.len(),
                intrinsic_dim: m.intrinsic_dim,
            })
            .collect();
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            input,
            config: config.clone(),
            components: seg.components.m,
            manifolds_per_component,
            manifolds,
            metrics,
            timings_s: seg.timings.into(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| crate::error::CliError::Internal(format!("report serialization: {e}")))
    }
}

/// ARI/NMI of `predicted` against `truth`, overall and outside `mask`.
pub fn score(predicted: &[usize], truth: &[usize], mask: Option<&[bool]>) -> Result<Metrics> {
    let ari = acev::evalkit::ari(predicted, truth)?;
    let nmi = acev::evalkit::nmi(predicted, truth)?;
    let (mut ari_off_mask, mut nmi_off_mask, mut masked) = (None, None, 0);
    if let Some(mask) = mask {
        let keep: Vec<usize> = (0..predicted.len()).filter(|&i| !mask[i]).collect();
        masked = predicted.len() - keep.len();
        if !keep.is_empty() {
            let p: Vec<usize> = keep.iter().map(|&i| predicted[i]).collect();
            let t: Vec<usize> = keep.iter().map(|&i| truth[i]).collect();
            ari_off_mask = Some(acev::evalkit::ari(&p, &t)?);
            nmi_off_mask = Some(acev::evalkit::nmi(&p, &t)?);
        }
    }
    Ok(Metrics {
        ari,
        nmi,
        ari_off_mask,
        nmi_off_mask,
        masked,
    })
}
