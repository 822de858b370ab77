//! `nugget-eval`: batch evaluation, annotation validation and the workbench service.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod service;

pub use args::{Cli, Command};
pub use commands::{run, Exit};
