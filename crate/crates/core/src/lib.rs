//! Branching adaptive surrogate search for global black-box optimization.
//!
//! The search domain is kept as a mutually exclusive, exhaustive partition of
//! axis-aligned boxes. Each iteration selects a subregion with an adaptive
//! probability, generates a point in it (uniformly or by minimizing a
//! surrogate), and branches promising and large subregions.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, the command
//! line and thread pools live in the `basso-cli` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod domain;
pub mod engine;
mod error;
pub mod gp;
pub mod harness;
pub mod math;
pub mod objectives;
pub mod quadreg;
pub mod reference;
pub mod rng;
pub mod samplers;
pub mod strategies;
pub mod trace;

pub use domain::{BoxDomain, LatticeDomain, Objective, PartitionState, Problem, Subregion};
pub use engine::{BassoConfig, Engine};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use samplers::SamplerKind;
pub use strategies::{StrategyKind, SubregionProbabilities};
pub use trace::{RunTrace, TraceRecord};

/// A point in the search space.
pub type Point = alloc::vec::Vec<f64>;
