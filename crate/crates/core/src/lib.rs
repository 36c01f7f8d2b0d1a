//! Unsupervised segmentation of point clouds into intersecting manifolds.
//!
//! The pipeline runs in two stages:
//!
//! 1. [`components`]: a k-nearest-neighbor graph is built over the points and
//!    the multiplicity of the zero eigenvalue of its Laplacian gives the
//!    number of non-intersecting pieces; single-linkage clustering then
//!    splits the data into that many components.
//! 2. [`traversal`]: inside each component, manifolds are grown one at a time
//!    as depth-first trees. A point joins when the angular gaps between its
//!    local principal directions and its parent's agree with an exponential
//!    moving average carried along the tree; near intersections the
//!    candidate's neighborhood is filtered before retrying.
//!
//! [`evalkit`] adds ARI/NMI scoring and seeded synthetic scenes.
//!
//! ```
//! use acev::{evalkit, segment, AcevConfig};
//!
//! let scene = evalkit::preset("plane-plane", 400, 0.0, 7).unwrap();
//! let labeling = segment(&scene.points, &AcevConfig::default()).unwrap();
//! assert_eq!(labeling.assignment.len(), 400);
//! ```

pub mod components;
pub mod config;
pub mod error;
pub mod evalkit;
pub mod geometry;
mod points;
pub mod traversal;

pub use components::{ComponentLabels, NeighborGraph, SplitMode, Symmetrization};
pub use config::{AcevConfig, Correspondence};
pub use error::{AcevError, Result};
pub use geometry::{LocalGeometry, NeighborSet};
pub use points::PointMatrix;
pub use traversal::{run, segment, ManifoldLabeling, Segmentation, StageTimings};
