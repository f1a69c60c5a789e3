//! Command-line harness: run config, manifest, response store and the
//! coder-facing HTTP service around the `topiclab` core.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod service;
pub mod session;
pub mod store;

pub use commands::run;
pub use error::{HarnessError, Result};
