//! Command-line tools and HTTP service for explainable clinical-trial search.

pub mod api;
pub mod commands;
pub mod error;
pub mod manifest;

pub use api::{router, AppState, SearchResponse};
pub use error::CliError;
