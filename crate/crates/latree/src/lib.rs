//! File formats, checkpoints, run directories and the command-line front end
//! for `latree-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod exit;
pub mod io;
pub mod manifest;
pub mod report;
pub mod run;
