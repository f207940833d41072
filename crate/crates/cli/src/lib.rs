//! Command-line front end for the panoramic 3D tracker: file formats,
//! run configuration, weight container and the five subcommands
//! (`simulate`, `track`, `train-motion`, `eval`, `compare`).

pub mod commands;
pub mod config;
pub mod formats;
pub mod weights_io;

/// Environment variable consulted for the default simulation seed.
pub const SEED_ENV: &str = "PANOPTRACK_SEED";
