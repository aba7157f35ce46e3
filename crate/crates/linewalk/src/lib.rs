//! Simulation and verification toolkit for symmetric random walks on
//! finitely generated groups of increasing piecewise-linear homeomorphisms
//! of the real line.
//!
//! Layering, bottom up:
//!
//! * [`homeo`]: exact rational PL maps (algebra, fixed sets, area functional);
//! * [`walkgroup`]: weighted symmetric generating systems and their checks;
//! * [`chain`]: Monte Carlo trajectories, stopped runs, couplings;
//! * [`stationary`]: empirical stationary measures and their diagnostics;
//! * [`geometry`]: the measure-induced distance, martingale and contraction
//!   experiments, structure classification;
//! * [`derriennic`]: the coordinate change that removes drift, with its
//!   Lipschitz and displacement certificates;
//! * [`scenario`] and [`config`]: named presets and run configuration for
//!   the `linewalk` binary.

pub mod chain;
pub mod cli;
pub mod config;
pub mod derriennic;
pub mod geometry;
pub mod homeo;
pub mod scenario;
pub mod stationary;
pub mod stream;
pub mod walkgroup;
#[cfg(test)]
pub(crate) mod oracle;

pub use homeo::{PLHomeo, Rat};
