//! File formats, dataset loading, configuration and the command-line
//! pipeline around `kanhar-core`.

pub mod cli;
pub mod config;
pub mod formats;
pub mod loader;
pub mod pipeline;
