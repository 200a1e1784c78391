use std::path::PathBuf;

use pricelab_core::model::{admissible, MassPair};
use pricelab_core::spectral::{
    assemble_discrete_operator_at, discrete_spectrum, eigenpairs, spectral_gap, CouplingSign,
};
use pricelab_core::{Equilibrium, Grid, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::perturbation::{PerturbationKind, PerturbationSpec};
use crate::scenario::run_scenario;

/// Discrete versus analytic spectrum of the printed operator about `p0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCheck {
    pub n: usize,
    pub h: f64,
    /// Magnitudes of the two discrete eigenvalues nearest zero.
    pub near_kernel: [f64; 2],
    pub analytic: Vec<f64>,
    pub discrete: Vec<f64>,
    pub rel_err: Vec<f64>,
    /// Largest `|Im μ| / |μ|` among the matched eigenvalues.
    pub max_rel_imag: f64,
}

/// Compares the first `count` distinct nonzero analytic eigenvalues with the
/// nearest eigenvalues of the dense discretization on `n` nodes.
pub fn spectrum_check(prm: &ModelParams, p0: f64, n: usize, count: usize) -> Result<SpectrumCheck> {
    let grid = Grid::new(*prm, n).map_err(HarnessError::config)?;
    let centered = prm.centered_at(p0);
    let analytic: Vec<f64> = eigenpairs(&centered, count, CouplingSign::Printed)
        .map_err(HarnessError::config)?
        .iter()
        .map(|e| e.mu)
        .collect();
    let m = assemble_discrete_operator_at(&grid, p0, CouplingSign::Printed).map_err(HarnessError::config)?;
    let eig = discrete_spectrum(&m, (4 * count + 4).min(n)).map_err(|e| HarnessError::solver("eigensolve", e))?;
    let rest = &eig[2..];
    let mut discrete = Vec::with_capacity(count);
    let mut rel_err = Vec::with_capacity(count);
    let mut max_rel_imag = 0.0f64;
    for &mu in &analytic {
        let z = rest
            .iter()
            .min_by(|x, y| (x.re - mu).abs().total_cmp(&(y.re - mu).abs()))
            .expect("spectrum has more than two eigenvalues");
        discrete.push(z.re);
        rel_err.push((z.re - mu).abs() / mu.abs());
        max_rel_imag = max_rel_imag.max(z.im.abs() / mu.abs());
    }
    Ok(SpectrumCheck {
        n,
        h: grid.h,
        near_kernel: [eig[0].abs(), eig[1].abs()],
        analytic,
        discrete,
        rel_err,
        max_rel_imag,
    })
}

pub fn observed_orders(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub side_mass_drift: f64,
    pub max_step_total_mass_change: f64,
    /// linf distance of the final state to the predicted equilibrium.
    pub fixed_point_residual: f64,
    pub spectrum: Option<SpectrumCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelResult>,
    pub side_mass_drift_orders: Vec<f64>,
    pub fixed_point_residual_orders: Vec<f64>,
    /// Per analytic eigenvalue, orders between successive spectrum levels.
    pub eigenvalue_orders: Vec<Vec<f64>>,
}

/// Coarsest grid of the eigenvalue comparison; it doubles per level and is
/// skipped once it would exceed `MAX_DENSE_NODES`.
pub const EIGEN_BASE_NODES: usize = 201;
pub const MAX_DENSE_NODES: usize = 801;
const EIGEN_COUNT: usize = 3;

/// Reruns `cfg` with `h` and `dt` halved per level (levels run in parallel,
/// level `k` writing under `out/level_k` when an output directory is set).
pub fn convergence_study(cfg: &ScenarioConfig, levels: usize) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(HarnessError::Config(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    cfg.validate()?;
    let dt0 = cfg.dt()?;
    let p0 = cfg.base_equilibrium()?.p0;
    let results: Vec<Result<LevelResult>> = (0..levels)
        .into_par_iter()
        .map(|k| {
            let scale = 1usize << k;
            let mut c = cfg.clone();
            c.n = (cfg.n - 1) * scale + 1;
            c.dt = Some(dt0 / scale as f64);
            c.stride = cfg.stride * scale;
            c.plots = false;
            c.out = cfg.out.as_ref().map(|d| d.join(format!("level_{k}")));
            let o = run_scenario(&c)?;
            let n_eig = (EIGEN_BASE_NODES - 1) * scale + 1;
            let spectrum = if n_eig <= MAX_DENSE_NODES {
                Some(spectrum_check(&c.params, p0, n_eig, EIGEN_COUNT)?)
            } else {
                None
            };
            let s = &o.summary;
            Ok(LevelResult {
                n: c.n,
                h: s.h,
                dt: s.dt,
                side_mass_drift: s.mass.side_mass_drift,
                max_step_total_mass_change: s.mass.max_step_total_mass_change,
                fixed_point_residual: s.limit.linf_to_predicted,
                spectrum,
            })
        })
        .collect();
    let levels: Vec<LevelResult> = results.into_iter().collect::<Result<_>>()?;
    let drift: Vec<f64> = levels.iter().map(|l| l.side_mass_drift).collect();
    let fpr: Vec<f64> = levels.iter().map(|l| l.fixed_point_residual).collect();
    let spectra: Vec<&SpectrumCheck> = levels.iter().filter_map(|l| l.spectrum.as_ref()).collect();
    let eigenvalue_orders = (0..EIGEN_COUNT)
        .map(|j| observed_orders(&spectra.iter().map(|s| s.rel_err[j]).collect::<Vec<_>>()))
        .collect();
    let report = ConvergenceReport {
        side_mass_drift_orders: observed_orders(&drift),
        fixed_point_residual_orders: observed_orders(&fpr),
        eigenvalue_orders,
        levels,
    };
    if let Some(dir) = &cfg.out {
        write_json(&dir.join("convergence.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCase {
    pub equilibrium: Equilibrium,
    pub predicted: Equilibrium,
    pub t_end: f64,
    pub spectral_gap: f64,
    pub spectral_gap_dynamic: f64,
    pub gamma_fit: Option<f64>,
    pub side_mass_drift: f64,
    pub max_step_total_mass_change: f64,
    pub linf_to_predicted: f64,
    pub tol_linf: f64,
    pub conservation_ok: bool,
    pub rate_ok: bool,
    pub limit_ok: bool,
    pub converged: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub chi: f64,
    pub seed: u64,
    pub cases: Vec<SweepCase>,
    pub all_converged: bool,
    /// Largest `|γ_fit - γ̂| / γ̂` over the cases.
    pub worst_rate_error: f64,
    pub worst_side_mass_drift: f64,
}

/// Relative amplitude of the sweep perturbations, in units of `λ⁰a`.
pub const SWEEP_RELATIVE_AMPLITUDE: f64 = 0.05;
pub const RATE_TOL: f64 = 0.15;
pub const SIDE_MASS_TOL: f64 = 1e-3;
pub const STEP_MASS_TOL: f64 = 1e-12;

/// Draws `count` admissible equilibria with `λ⁰ ∈ [chi, chi + 1]` and `p⁰`
/// uniform in the price range (four cells from its ends), perturbs each
/// along `base.perturbation.kind` with linf amplitude `0.05·λ⁰a` and runs
/// to `max(base.t_end, 3/γ̂)`. Cases run in parallel.
pub fn sweep_equilibria(base: &ScenarioConfig, chi: f64, count: usize, seed: u64) -> Result<SweepReport> {
    if !(chi > 0.0) {
        return Err(HarnessError::Config(format!("chi = {chi} must be positive")));
    }
    let prm = base.params;
    prm.validate().map_err(HarnessError::config)?;
    let grid = base.grid()?;
    let (plo, phi) = prm.price_range();
    let margin = 4.0 * grid.h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(count);
    while draws.len() < count {
        let lambda0 = rng.random_range(chi..=chi + 1.0);
        let p0 = rng.random_range(plo + margin..phi - margin);
        let e = Equilibrium { p0, lambda0 };
        let m: MassPair = e.masses(&prm);
        if admissible(&m, &prm) {
            draws.push(e);
        }
    }
    let gap = spectral_gap(&prm);
    let kind = match base.perturbation.kind {
        PerturbationKind::None | PerturbationKind::KernelShift { .. } => PerturbationKind::FirstEigenfunction,
        k => k,
    };
    let cases: Vec<Result<SweepCase>> = draws
        .par_iter()
        .enumerate()
        .map(|(k, &e)| {
            let mut c = ScenarioConfig::with_equilibrium(prm, e);
            c.n = base.n;
            c.dt = base.dt;
            c.stride = base.stride;
            c.solver = base.solver;
            c.fit_norm = base.fit_norm;
            c.seed = seed.wrapping_add(k as u64);
            c.t_end = base.t_end.max(3.0 / gap);
            c.perturbation = PerturbationSpec::new(kind, SWEEP_RELATIVE_AMPLITUDE * e.lambda0 * prm.cost);
            c.out = base.out.as_ref().map(|d: &PathBuf| d.join(format!("case_{k}")));
            let tol_linf = 2.0 * grid.h;
            match run_scenario(&c) {
                Ok(o) => {
                    let s = &o.summary;
                    let conservation_ok = s.mass.side_mass_drift <= SIDE_MASS_TOL
                        && s.mass.max_step_total_mass_change <= STEP_MASS_TOL;
                    let gamma_fit = s.decay_fit.map(|f| f.gamma_fit);
                    let rate_ok = gamma_fit.is_some_and(|g| (g - gap).abs() <= RATE_TOL * gap);
                    let limit_ok = s.limit.linf_to_predicted <= tol_linf;
                    Ok(SweepCase {
                        equilibrium: e,
                        predicted: s.limit.predicted,
                        t_end: c.t_end,
                        spectral_gap: gap,
                        spectral_gap_dynamic: s.spectral_gap_dynamic,
                        gamma_fit,
                        side_mass_drift: s.mass.side_mass_drift,
                        max_step_total_mass_change: s.mass.max_step_total_mass_change,
                        linf_to_predicted: s.limit.linf_to_predicted,
                        tol_linf,
                        conservation_ok,
                        rate_ok,
                        limit_ok,
                        converged: limit_ok,
                        failure: None,
                    })
                }
                Err(HarnessError::Solver { source, .. }) => Ok(SweepCase {
                    equilibrium: e,
                    predicted: e,
                    t_end: c.t_end,
                    spectral_gap: gap,
                    spectral_gap_dynamic: f64::NAN,
                    gamma_fit: None,
                    side_mass_drift: f64::NAN,
                    max_step_total_mass_change: f64::NAN,
                    linf_to_predicted: f64::NAN,
                    tol_linf,
                    conservation_ok: false,
                    rate_ok: false,
                    limit_ok: false,
                    converged: false,
                    failure: Some(source.to_string()),
                }),
                Err(other) => Err(other),
            }
        })
        .collect();
    let cases: Vec<SweepCase> = cases.into_iter().collect::<Result<_>>()?;
    let report = SweepReport {
        chi,
        seed,
        all_converged: cases.iter().all(|c| c.converged),
        worst_rate_error: cases
            .iter()
            .map(|c| c.gamma_fit.map_or(f64::INFINITY, |g| (g - gap).abs() / gap))
            .fold(0.0, f64::max),
        worst_side_mass_drift: cases.iter().map(|c| c.side_mass_drift).fold(0.0, f64::max),
        cases,
    };
    if let Some(dir) = &base.out {
        write_json(&dir.join("sweep.json"), &report)?;
    }
    Ok(report)
}

fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), value)?;
    Ok(())
}
