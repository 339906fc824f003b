//! Gradient-like flow machinery: field construction, trajectory integration,
//! connecting-orbit shooting, and compactness diagnostics.

mod field;
mod monitor;
mod ode;
mod shoot;

pub use field::{gradient_like_field, BlendProfile, FieldOptions, FlowField, FlowNode};
pub use monitor::{
    band_confined_max_norm, cerami_monitor, estimate_epsilon, gronwall_radius, CeramiReport,
};
pub use ode::{integrate, IntegrateOptions, Terminal, Trajectory};
pub use shoot::{connecting_orbit_count, ShootOptions, ShootReport};
