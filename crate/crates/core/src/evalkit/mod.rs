//! Ground-truth scoring and synthetic scenes.

mod metrics;
mod scenes;

pub use metrics::{ari, contingency, nmi, Contingency};
pub use scenes::{
    compose_scene, default_band, gen_line, gen_plane, gen_scurve, preset, Locus, RigidTransform,
    SceneDescriptor, SyntheticScene, PRESETS,
};
