use serde::{Deserialize, Serialize};

use crate::components::{SplitMode, Symmetrization};
use crate::error::{AcevError, Result};

/// How principal directions of a parent and a candidate are paired when
/// measuring angular gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correspondence {
    /// Rank `g` against rank `g`.
    Rank,
    /// Rank `g` against the parent's tangent or normal block containing `g`.
    #[default]
    Subspace,
}

/// Segmentation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcevConfig {
    /// Neighborhood size.
    pub k: usize,
    /// EMA smoothing factor, in `(0, 1)`.
    pub alpha: f64,
    /// Largest tolerated gap between the EMA prediction and an observed angle, radians.
    pub angle_tol: f64,
    /// Fraction of local variance a direction must carry to count as non-zero.
    pub var_thresh: f64,
    /// Relative tolerance for a Laplacian eigenvalue to count as zero.
    pub zero_tol: f64,
    /// Fraction of unlabelled points included unconditionally when a manifold starts.
    pub warmup_frac: f64,
    /// Smallest neighborhood the filtration may shrink to. The effective floor
    /// is `max(min_neigh, parent intrinsic dim + 1)`.
    pub min_neigh: usize,
    /// Only consumed by the scene generators.
    pub seed: u64,
    pub symmetrization: Symmetrization,
    pub split: SplitMode,
    pub correspondence: Correspondence,
    /// Also require the candidate's intrinsic dimension to equal the parent's.
    pub dim_check: bool,
}

impl Default for AcevConfig {
    fn default() -> Self {
        Self {
            k: 25,
            alpha: 0.6,
            angle_tol: 0.05,
            var_thresh: 0.01,
            zero_tol: 1e-8,
            warmup_frac: 0.0005,
            min_neigh: 5,
            seed: 0,
            symmetrization: Symmetrization::Union,
            split: SplitMode::SingleLinkage,
            correspondence: Correspondence::Subspace,
            dim_check: true,
        }
    }
}

impl AcevConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(AcevError::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.angle_tol > 0.0 && self.angle_tol.is_finite()) {
            return fail(format!(
                "angle_tol must be positive, got {}",
                self.angle_tol
            ));
        }
        if !(0.0..1.0).contains(&self.warmup_frac) {
            return fail(format!(
                "warmup_frac must lie in [0, 1), got {}",
                self.warmup_frac
            ));
        }
        if !(0.0..1.0).contains(&self.var_thresh) {
            return fail(format!(
                "var_thresh must lie in [0, 1), got {}",
                self.var_thresh
            ));
        }
        if !(self.zero_tol > 0.0 && self.zero_tol < 1.0) {
            return fail(format!(
                "zero_tol must lie in (0, 1), got {}",
                self.zero_tol
            ));
        }
        if self.min_neigh < 2 {
            return fail(format!(
                "min_neigh must be at least 2, got {}",
                self.min_neigh
            ));
        }
        if self.k < self.min_neigh {
            return fail(format!(
                "k ({}) must be at least min_neigh ({})",
                self.k, self.min_neigh
            ));
        }
        Ok(())
    }

    /// Filtration floor for a parent of the given intrinsic dimension.
    pub fn filtration_floor(&self, parent_dim: usize) -> usize {
        self.min_neigh.max(parent_dim + 1)
    }
}
