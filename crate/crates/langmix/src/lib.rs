//! Command-line front end and file formats for `langmix-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod fetch;
pub mod formats;
pub mod render;

pub use error::{AppError, Result};
