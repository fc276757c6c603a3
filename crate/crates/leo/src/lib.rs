//! Files, run directories and the command-line front end for `leo-core`.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod run;

pub use error::{Error, Result};
