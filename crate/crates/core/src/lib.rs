//! Numerical tools for the Lasry-Lions free-boundary price formation model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod manifold;
pub mod model;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, NormKind, Norms};
pub use model::{Equilibrium, MassPair, ModelParams};
