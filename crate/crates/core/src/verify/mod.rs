//! Numerical certification harness.

pub mod brackets;
pub mod conservation;
pub mod independence;
pub mod limits;
pub mod maps;
pub mod registry;
pub mod report;
pub mod sampling;
pub mod superposition;

pub use registry::{registry, run_checks, select, CheckSpec};
pub use report::{CheckReport, Metadata, SuiteReport, Witness};
pub use sampling::DEFAULT_SEED;
