//! Experiment engine: configuration, Monte Carlo estimation, the quadrature
//! oracle, scenario runners and report files.

pub mod config;
pub mod mc;
pub mod presets;
pub mod quadrature;
pub mod report;
pub mod scenarios;

pub use config::{ExperimentConfig, QueryLaw};
pub use mc::{default_workers, estimate_accuracy, par_map_indexed, AccuracyCell, AccuracyEstimate};
pub use presets::{preset, PRESET_NAMES};
pub use quadrature::{oracle_accuracy_at, quadrature_oracle_accuracy, quadrature_oracle_accuracy_with_query_var};
pub use report::ExperimentReport;
