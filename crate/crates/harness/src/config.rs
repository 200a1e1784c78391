use std::path::{Path, PathBuf};

use pricelab_core::model::{equilibrium_from_masses, MassPair};
use pricelab_core::solver::SolverOptions;
use pricelab_core::{Equilibrium, Grid, ModelParams, NormKind};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::perturbation::PerturbationSpec;

/// One simulation scenario as read from JSON.
///
/// The initial equilibrium is given either by side masses (`m1`, `m2`) or
/// explicitly by `equilibrium: {p0, lambda0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(flatten)]
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Equilibrium>,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Defaults to the grid spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub solver: SolverOptions,
    #[serde(default = "default_norm")]
    pub fit_norm: NormKind,
    #[serde(default)]
    pub plots: bool,
}

fn default_n() -> usize {
    801
}
fn default_t_end() -> f64 {
    1.0
}
fn default_stride() -> usize {
    1
}
fn default_norm() -> NormKind {
    NormKind::Linf
}

impl ScenarioConfig {
    /// Scenario at masses `(m1, m2)` with default discretization and no
    /// perturbation.
    pub fn with_masses(params: ModelParams, m1: f64, m2: f64) -> Self {
        Self {
            params,
            m1: Some(m1),
            m2: Some(m2),
            equilibrium: None,
            perturbation: PerturbationSpec::default(),
            n: default_n(),
            dt: None,
            t_end: default_t_end(),
            stride: default_stride(),
            out: None,
            seed: 0,
            solver: SolverOptions::default(),
            fit_norm: default_norm(),
            plots: false,
        }
    }

    pub fn with_equilibrium(params: ModelParams, e: Equilibrium) -> Self {
        Self {
            m1: None,
            m2: None,
            equilibrium: Some(e),
            ..Self::with_masses(params, 0.0, 0.0)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(HarnessError::config)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.params, self.n).map_err(HarnessError::config)
    }

    pub fn dt(&self) -> Result<f64> {
        let h = self.grid()?.h;
        Ok(self.dt.unwrap_or(h))
    }

    /// The unperturbed equilibrium of the scenario.
    pub fn base_equilibrium(&self) -> Result<Equilibrium> {
        match (self.equilibrium, self.m1, self.m2) {
            (Some(e), None, None) => {
                Equilibrium::new(e.p0, e.lambda0, &self.params).map_err(HarnessError::config)
            }
            (None, Some(m1), Some(m2)) => {
                let m = MassPair::new(m1, m2).map_err(HarnessError::config)?;
                equilibrium_from_masses(&m, &self.params).map_err(HarnessError::config)
            }
            _ => Err(HarnessError::Config(
                "give either both of m1, m2 or an explicit equilibrium".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(HarnessError::config)?;
        let grid = self.grid()?;
        let dt = self.dt()?;
        if !(dt > 0.0) || dt > grid.h * (1.0 + 1e-12) {
            return Err(HarnessError::Config(format!(
                "dt = {dt} must be positive and at most h = {}",
                grid.h
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(HarnessError::Config(format!("t_end = {} must be positive", self.t_end)));
        }
        if self.stride == 0 {
            return Err(HarnessError::Config("stride must be at least 1".into()));
        }
        let e = self.base_equilibrium()?;
        self.perturbation.validate(&e, &self.params)
    }
}
