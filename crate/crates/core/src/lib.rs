//! Lattice models of diffusion-limited trimolecular reactions: closed-form
//! collision and reaction times, exact mean first-passage times on small
//! lattices and stochastic simulation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod formulas;
pub mod model;
pub mod oracle;
pub mod ssa;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    Boundary, DiffusionRates, Dimension, DomainSpec, RateScaling, ReactionScheme, Species,
    SpeciesCounts, Variant,
};
