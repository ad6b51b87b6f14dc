//! Seeded experiments over `fracmap-core` with JSON/CSV reports and
//! calibrated-constant regression.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod suites;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
pub use experiments::{find, run, EXPERIMENTS};
pub use report::{Report, Table, Verdict};
