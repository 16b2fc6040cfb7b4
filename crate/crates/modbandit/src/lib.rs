//! File formats, threaded actors, experiment presets and the command line
//! on top of `modbandit-core`.

pub mod actors;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod csvlog;
pub mod error;
pub mod modset;
pub mod presets;
pub mod snapshot;
pub mod svg;

pub use error::{Error, Result};
