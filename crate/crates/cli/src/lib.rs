//! Configuration, report and output plumbing behind the `otalg` binary.

pub mod config;
pub mod design;
pub mod output;

pub use config::RunConfigFile;
