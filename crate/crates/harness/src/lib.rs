//! Experiment harness for the `feddw` simulator: layered configuration,
//! presets, run directories with CSV/JSON artifacts, μ sweeps, the
//! weight-norm study and SL/CR heatmap export.

pub mod config;
pub mod error;
pub mod experiment;
pub mod heatmap;
pub mod norm_study;
pub mod preset;

pub use config::{config_from_str, emit_config, parse_config, Overrides};
pub use error::{HarnessError, Result};
pub use experiment::{read_metrics, read_summary, run_experiment, run_with_data, sweep, MetricsRow, RunArtifacts, RunSummary};
pub use heatmap::{heatmap_export, heatmap_import, HeatmapExport};
pub use norm_study::{norm_study, spearman, NormReport};
pub use preset::{Preset, SWEEP_MUS};
