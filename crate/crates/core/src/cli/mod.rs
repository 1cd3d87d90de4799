//! Config-driven experiment runner behind the `abc-gbi` binary: JSON
//! experiment configs, subprocess simulators, artifact manifests and
//! report generation.

pub mod config;
pub mod external;
pub mod report;
pub mod runner;

pub use config::ExperimentConfig;
pub use external::{external_model, named_discrepancy, ExternalProtocol, ExternalSimulator};
pub use report::{build_report, render_text, Report};
pub use runner::{calibrate_config_file, run_config, run_config_file, Manifest};
