//! Scenario fuzzing for sequential decision-making agents.
//!
//! The parameter space of an environment is tessellated into a grid of
//! hypercube cells that tracks test density and critical counts. A
//! generator alternates between sensitivity-guided local perturbation of
//! stored scenarios and grid-guided global exploration, switching on the
//! critical rate over a sliding window. Behavioural novelty is scored with
//! online Gaussian mixtures over trajectory states and transitions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod database;
pub mod envs;
pub mod error;
pub mod generator;
pub mod harness;
pub mod metrics;
pub mod novelty;
pub mod rng;
pub mod space;

pub use error::{Error, Result};
