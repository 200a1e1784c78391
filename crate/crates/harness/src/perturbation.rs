use std::f64::consts::PI;

use pricelab_core::solver::smallness_radius;
use pricelab_core::spectral::{eigenpairs, kernel_basis, CouplingSign};
use pricelab_core::{Equilibrium, Grid, GridFunction, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationKind {
    #[default]
    None,
    /// Member of the first nonzero eigenspace about `p⁰`; when the space is
    /// two-dimensional, the member vanishing at `p⁰`.
    FirstEigenfunction,
    /// `cos(mode·π(x + A)/(A + B))`.
    SmoothCosine {
        #[serde(default = "one")]
        mode: u32,
    },
    /// Seeded cosine series with `1/k²` decay of the coefficients.
    RandomSmooth {
        #[serde(default = "eight")]
        modes: u32,
    },
    /// `c·g0 + d·h0` about `p⁰`, unscaled.
    KernelShift { c: f64, d: f64 },
}

fn one() -> u32 {
    1
}
fn eight() -> u32 {
    8
}

/// Perturbation kind with its linf amplitude (ignored by `kernel-shift`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    #[serde(default)]
    pub amplitude: f64,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, amplitude: f64) -> Self {
        Self { kind, amplitude }
    }

    pub fn validate(&self, e: &Equilibrium, prm: &ModelParams) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(HarnessError::Config(format!(
                "amplitude {} must be finite and non-negative",
                self.amplitude
            )));
        }
        let size = match self.kind {
            PerturbationKind::KernelShift { c, d } => c.abs() * prm.cost + 2.0 * d.abs(),
            _ => self.amplitude,
        };
        let guard = smallness_radius(e.lambda0, prm.cost);
        if size >= guard {
            return Err(HarnessError::Config(format!(
                "perturbation size {size} exceeds the smallness radius {guard} of the equilibrium"
            )));
        }
        Ok(())
    }

    /// Nodal perturbation about the equilibrium `e`.
    pub fn build(&self, grid: Grid, e: &Equilibrium, seed: u64) -> Result<GridFunction> {
        let prm = grid.params;
        let normalized = |f: GridFunction| {
            let m = f.norms().linf;
            if m == 0.0 {
                f
            } else {
                f.scale(self.amplitude / m)
            }
        };
        Ok(match self.kind {
            PerturbationKind::None => GridFunction::zeros(grid),
            PerturbationKind::FirstEigenfunction => {
                if self.amplitude == 0.0 {
                    return Ok(GridFunction::zeros(grid));
                }
                normalized(first_eigenfunction(grid, e.p0)?)
            }
            PerturbationKind::SmoothCosine { mode } => {
                let w = mode as f64 * PI / prm.length();
                GridFunction::sample(grid, |x| self.amplitude * (w * (x + prm.left)).cos())
            }
            PerturbationKind::RandomSmooth { modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coef: Vec<f64> = (1..=modes.max(1))
                    .map(|k| rng.random_range(-1.0..1.0) / (k * k) as f64)
                    .collect();
                let f = GridFunction::sample(grid, |x| {
                    coef.iter()
                        .enumerate()
                        .map(|(k, c)| c * ((k + 1) as f64 * PI * (x + prm.left) / prm.length()).cos())
                        .sum()
                });
                normalized(f)
            }
            PerturbationKind::KernelShift { c, d } => {
                let kb = kernel_basis(&prm.centered_at(e.p0)).map_err(HarnessError::config)?;
                GridFunction::sample(grid, |x| c * kb.g0(x - e.p0) + d * kb.h0(x - e.p0))
            }
        })
    }
}

/// Sampled first eigenfunction of the operator linearized about `p0`.
pub fn first_eigenfunction(grid: Grid, p0: f64) -> Result<GridFunction> {
    let centered = grid.params.centered_at(p0);
    let pair = eigenpairs(&centered, 1, CouplingSign::Printed)
        .map_err(HarnessError::config)?
        .remove(0);
    let sample = |k: usize| GridFunction::sample(grid, |x| pair.eval(k, x - p0).unwrap_or(0.0));
    if pair.dim < 2 {
        return Ok(sample(0));
    }
    let (b0, b1) = (pair.basis[0].middle.amp_cos, pair.basis[1].middle.amp_cos);
    if b0 == 0.0 {
        return Ok(sample(0));
    }
    if b1 == 0.0 {
        return Ok(sample(1));
    }
    sample(0).scale(b1).sub(&sample(1).scale(b0)).map_err(HarnessError::config)
}
