//! File formats, experiment drivers and the command-line front end for
//! `hcl-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod datasets;
pub mod error;
pub mod fit;
pub mod io;
pub mod record;
pub mod scene;
