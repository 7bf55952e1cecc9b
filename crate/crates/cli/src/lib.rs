//! Library surface of the experiment driver; the `cosmo` binary is a thin
//! argument parser over these functions, and the acceptance suite drives
//! them directly.

pub mod config;
pub mod runner;
