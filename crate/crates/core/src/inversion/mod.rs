//! Regularized near-field solves and the indicator maps built from them.

pub mod indicator;
pub mod map;
pub mod tikhonov;

pub use indicator::{
    discrepancy_target, flsm_indicator, select_frequencies, tlsm_indicator, FlsmRule,
    InversionSettings, TrialSolve,
};
pub use map::{threshold_map, threshold_values, IndicatorKind, IndicatorMap, MapStats, Thresholded};
pub use tikhonov::{MorozovChoice, MorozovStatus, Projection, SpectralSystem, Tradeoff};
