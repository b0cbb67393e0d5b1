//! Batch front door: scenario files, the generate-invert-emit pipeline,
//! manifests and map metrics.

pub mod config;
pub mod metrics;
pub mod run;

pub use config::{IndicatorChoice, NoiseSpec, Scenario, Study, StudyCell};
pub use metrics::{map_metrics, metrics_of, MapMetrics};
pub use run::{
    compare, generate, generate_to, invert_cell, read_map_csv, run, verify_manifest, Artifact,
    CellReport, Comparison, Manifest, MapReport, MetricsReport, RunReport,
};
