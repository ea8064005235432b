//! Configuration, file formats and the command pipeline around `kdeverify-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod imdp_file;
pub mod output;
pub mod pipeline;
pub mod reproduce;
pub mod samples;

pub use config::RunConfig;
pub use error::{exit, CliError};
