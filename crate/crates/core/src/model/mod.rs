//! Physical model shared by the forward solver and the inversion.

pub mod geometry;
pub mod layout;
pub mod medium;
pub mod plan;
pub mod pulse;

pub use geometry::{Arc, CrackScene, Point, Stiffness};
pub use layout::{make_layout, LayoutConfig, Polarization, SensingLayout};
pub use medium::{MediumModel, Mode};
pub use plan::{PlanConfig, TransformPlan};
pub use pulse::{Pulse, PulseKind};
