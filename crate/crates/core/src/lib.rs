pub mod baselines;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod layout;
pub mod mcss;
pub mod metrics;
pub mod proposals;
pub mod render;
pub mod scoring;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};

#[cfg(test)]
mod testutil;
