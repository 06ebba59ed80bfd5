//! Staged pipeline over `dicke-core`: configuration, content-addressed caches, a run
//! manifest and CSV/JSON emission for each stage.

pub mod cache;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod stages;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{Outcome, Pipeline, Stage};
