//! Experiment orchestration for the price formation model: JSON-configured
//! scenarios, decay-rate fitting, convergence studies, sweeps and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fit;
pub mod hash;
pub mod perturbation;
pub mod plot;
pub mod scenario;
pub mod study;

pub use config::ScenarioConfig;
pub use error::{HarnessError, Result};
pub use fit::{fit_decay, DecayFit, FitError};
pub use perturbation::{PerturbationKind, PerturbationSpec};
pub use scenario::{run_scenario, Outcome, Summary};
