//! Config-driven runs, the reproduction registry and artifact files.

pub mod artifacts;
pub mod config;
pub mod problems;
pub mod registry;
pub mod runner;

pub use artifacts::{summarize, write_artifacts, Outcome, ReportFile, TraceRow, CSV_COLUMNS};
pub use config::{load_config, parse_config, Algorithm, ExperimentConfig, Z0Spec};
pub use registry::{list, lookup_entry, reproduce, ReproductionEntry, Runtime, REGISTRY};
pub use runner::{output_root, run_experiment, run_to_dir, OUTPUT_ENV};
