//! Effective configuration: built-in defaults, then a key=value file, then flags.

use std::path::{Path, PathBuf};

use acev::{AcevConfig, Correspondence, SplitMode, Symmetrization};
use clap::Args;

use crate::error::{CliError, Result};

/// Segmentation flags shared by every command that runs the pipeline.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// key=value file applied before the flags below.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Neighborhood size [default: 25]
    #[arg(long)]
    pub k: Option<usize>,
    /// EMA smoothing factor in (0, 1) [default: 0.6]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Inclusion tolerance in radians [default: 0.05]
    #[arg(long)]
    pub angle_tol: Option<f64>,
    /// Variance fraction a direction needs to count toward the intrinsic dimension [default: 0.01]
    #[arg(long)]
    pub var_thresh: Option<f64>,
    /// Relative tolerance for zero Laplacian eigenvalues [default: 1e-8]
    #[arg(long)]
    pub zero_tol: Option<f64>,
    /// Fraction of points admitted unconditionally when a manifold starts [default: 0.0005]
    #[arg(long)]
    pub warmup_frac: Option<f64>,
    /// Smallest neighborhood the filtration may shrink to [default: 5]
    #[arg(long)]
    pub min_neigh: Option<usize>,
    /// Seed recorded in the report [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Take graph connected components as the stage-1 split when their count matches
    #[arg(long)]
    pub components_by_graph: bool,
}

impl ConfigFlags {
    pub fn resolve(&self) -> Result<AcevConfig> {
        let mut cfg = AcevConfig::default();
        if let Some(path) = &self.config {
            apply_file(&mut cfg, path)?;
        }
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        take!(
            k,
            alpha,
            angle_tol,
            var_thresh,
            zero_tol,
            warmup_frac,
            min_neigh,
            seed
        );
        if self.components_by_graph {
            cfg.split = SplitMode::Graph;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply_file(cfg: &mut AcevConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| CliError::Config {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
        set_key(cfg, key.trim(), value.trim()).map_err(err)?;
    }
    Ok(())
}

/// Sets one configuration key. Keys accept `-` or `_` as separators.
pub fn set_key(cfg: &mut AcevConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("{key}: cannot parse {value:?}"))
    }
    match key.replace('-', "_").as_str() {
        "k" => cfg.k = num(key, value)?,
        "alpha" => cfg.alpha = num(key, value)?,
        "angle_tol" => cfg.angle_tol = num(key, value)?,
        "var_thresh" => cfg.var_thresh = num(key, value)?,
        "zero_tol" => cfg.zero_tol = num(key, value)?,
        "warmup_frac" => cfg.warmup_frac = num(key, value)?,
        "min_neigh" => cfg.min_neigh = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "dim_check" => cfg.dim_check = num(key, value)?,
        "components_by_graph" => {
            let on: bool = num(key, value)?;
            cfg.split = if on {
                SplitMode::Graph
            } else {
                SplitMode::SingleLinkage
            };
        }
        "symmetrization" => {
            cfg.symmetrization = match value {
                "union" => Symmetrization::Union,
                "mutual" => Symmetrization::Mutual,
                _ => {
                    return Err(format!(
                        "symmetrization must be union or mutual, got {value:?}"
                    ))
                }
            }
        }
        "correspondence" => {
            cfg.correspondence = match value {
                "rank" => Correspondence::Rank,
                "subspace" => Correspondence::Subspace,
                _ => {
                    return Err(format!(
                        "correspondence must be rank or subspace, got {value:?}"
                    ))
                }
            }
        }
        other => return Err(format!("unknown key {other:?}")),
    }
    Ok(())
}
