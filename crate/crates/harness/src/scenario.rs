use std::fs;
use std::io::BufWriter;
use std::path::Path;

use pricelab_core::manifold::predict_limit;
use pricelab_core::model::equilibrium_from_masses;
use pricelab_core::solver::{init_state, run_observed, smallness_radius, Run};
use pricelab_core::spectral::{dynamic_spectral_gap, spectral_gap, RANK_TOL, TRIG_TOL};
use pricelab_core::{Equilibrium, GridFunction, NormKind, Norms};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::fit::{default_window, fit_decay, DecayFit, FIT_RESIDUAL_FLAG, FLOOR_FACTOR};
use crate::hash::content_hash;
use crate::plot::{line_chart, Series};

/// Errors below this are treated as an exact fixed point: no rate is fitted.
pub const FIXED_POINT_TOL: f64 = 1e-10;
const SNAPSHOTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub trig_tol: f64,
    pub fit_residual_flag: f64,
    pub floor_factor: f64,
    pub fixed_point_tol: f64,
    pub smallness_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassReport {
    pub m1_initial: f64,
    pub m2_initial: f64,
    pub m1_final: f64,
    pub m2_final: f64,
    /// Largest relative side-mass deviation over the recorded trajectory.
    pub side_mass_drift: f64,
    /// Largest per-step change of the total trapezoid mass.
    pub max_step_total_mass_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitReport {
    pub predicted: Equilibrium,
    /// Root and flux of the final state.
    pub attained_p: f64,
    pub attained_lambda: f64,
    /// linf distance of the final state to the sampled predicted equilibrium.
    pub linf_to_predicted: f64,
    /// linf distance of the final state to the sampled unperturbed equilibrium.
    pub linf_to_base: f64,
    /// Distance between the predicted equilibrium and the one carrying the
    /// final side masses; the error floor of the decay fit.
    pub fixed_point_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: ScenarioConfig,
    pub input_hash: String,
    pub tolerances: Tolerances,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub base_equilibrium: Equilibrium,
    pub limit: LimitReport,
    pub mass: MassReport,
    /// Gap of the operator as parameterized by `(A, B, a)`; sets the fit window.
    pub spectral_gap: f64,
    /// Gap of the printed operator about the predicted root.
    pub spectral_gap_centered: f64,
    /// Gap with the dynamic coupling sign about the predicted root.
    pub spectral_gap_dynamic: f64,
    pub decay_fit: Option<DecayFit>,
    /// Why `decay_fit` is absent or unreliable.
    pub fit_note: Option<String>,
    pub initial_error: Norms,
    pub final_error: Norms,
    pub max_error_linf: f64,
    /// `t_final / D`.
    pub physical_time: f64,
    pub failure: Option<String>,
}

pub struct Outcome {
    pub summary: Summary,
    pub run: Run,
    pub initial: GridFunction,
    pub f_inf: GridFunction,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Outcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let prm = cfg.params;
    let dt = cfg.dt()?;
    let base = cfg.base_equilibrium()?;
    let pert = cfg.perturbation.build(grid, &base, cfg.seed)?;
    let f_base = GridFunction::sample(grid, |x| base.value(x, prm.cost));
    let f_i = f_base.add(&pert).map_err(HarnessError::config)?;
    let s0 = init_state(&f_i, base.p0).map_err(|e| HarnessError::solver("initial state", e))?;
    let predicted = predict_limit(&f_i, s0.p, &prm).map_err(HarnessError::config)?;
    let f_inf = GridFunction::sample(grid, |x| predicted.value(x, prm.cost));

    let centered = prm.centered_at(predicted.p0);
    let gap = spectral_gap(&prm);
    let n_steps = ((cfg.t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let every = (n_steps / (SNAPSHOTS - 1)).max(1);
    let mut snapshots = Vec::new();
    let mut k = 0usize;
    let run = run_observed(&s0, dt, cfg.t_end, &f_inf, cfg.stride, cfg.solver, |s| {
        if k.is_multiple_of(every) || k == n_steps {
            snapshots.push((s.t, s.f.values.clone()));
        }
        k += 1;
    })
    .map_err(|e| HarnessError::solver("scenario run", e))?;

    let traj = &run.trajectory;
    let first = traj.records.first().expect("trajectory starts with the initial record");
    let last = traj.records.last().expect("trajectory is never empty");
    let m_final = run
        .state
        .masses()
        .map_err(|e| HarnessError::solver("final masses", e))?;
    let fixed_point_residual = match equilibrium_from_masses(&m_final, &prm) {
        Ok(e_end) => GridFunction::sample(grid, |x| e_end.value(x, prm.cost))
            .sub(&f_inf)
            .map(|d| d.norms().get(cfg.fit_norm))
            .unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    };
    let linf_to = |f: &GridFunction| run.state.f.sub(f).map(|d| d.norms().linf).unwrap_or(f64::NAN);
    let max_error_linf = traj.records.iter().map(|r| r.err.linf).fold(0.0, f64::max);

    let (decay_fit, fit_note) = if max_error_linf < FIXED_POINT_TOL {
        (None, Some(format!("undefined: error stays below {FIXED_POINT_TOL:e}")))
    } else {
        let window = default_window(traj, cfg.fit_norm, gap, fixed_point_residual);
        match fit_decay(traj, cfg.fit_norm, window) {
            Ok(f) if f.flagged() => (Some(f), Some(format!("residual {:.3e} above flag", f.residual))),
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    let summary = Summary {
        config: cfg.clone(),
        input_hash: content_hash(&serde_json::to_vec(cfg)?),
        tolerances: Tolerances {
            rank_tol: RANK_TOL,
            trig_tol: TRIG_TOL,
            fit_residual_flag: FIT_RESIDUAL_FLAG,
            floor_factor: FLOOR_FACTOR,
            fixed_point_tol: FIXED_POINT_TOL,
            smallness_radius: smallness_radius(base.lambda0, prm.cost),
        },
        h: grid.h,
        dt,
        steps: run.steps,
        t_final: run.state.t,
        base_equilibrium: base,
        limit: LimitReport {
            predicted,
            attained_p: run.state.p,
            attained_lambda: run.state.lam,
            linf_to_predicted: linf_to(&f_inf),
            linf_to_base: linf_to(&f_base),
            fixed_point_residual,
        },
        mass: MassReport {
            m1_initial: first.m1,
            m2_initial: first.m2,
            m1_final: m_final.m1,
            m2_final: m_final.m2,
            side_mass_drift: traj.side_mass_drift(),
            max_step_total_mass_change: run.max_step_mass_change,
        },
        spectral_gap: gap,
        spectral_gap_centered: spectral_gap(&centered),
        spectral_gap_dynamic: dynamic_spectral_gap(&centered),
        decay_fit,
        fit_note,
        initial_error: first.err,
        final_error: last.err,
        max_error_linf,
        physical_time: run.state.t / prm.diffusion,
        failure: run.failure.as_ref().map(|e| e.to_string()),
    };
    let outcome = Outcome {
        summary,
        run,
        initial: f_i,
        f_inf,
        snapshots,
    };
    if let Some(dir) = &cfg.out {
        write_artifacts(&outcome, dir)?;
    }
    if let Some(err) = &outcome.run.failure {
        return Err(HarnessError::solver("scenario run", err.clone()));
    }
    Ok(outcome)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

/// Writes `trajectory.csv`, `final_state.csv`, `summary.json` and, when
/// enabled, `snapshots.svg` and `error.svg` into `dir`.
pub fn write_artifacts(o: &Outcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join("trajectory.csv");
    o.run
        .trajectory
        .write_csv(create(&path)?)
        .map_err(|e| HarnessError::io(&path, e))?;
    let path = dir.join("final_state.csv");
    o.run
        .state
        .f
        .write_csv(create(&path)?)
        .map_err(|e| HarnessError::io(&path, e))?;
    let path = dir.join("summary.json");
    serde_json::to_writer_pretty(create(&path)?, &o.summary)?;

    if o.summary.config.plots {
        let grid = o.initial.grid;
        let series: Vec<Series> = o
            .snapshots
            .iter()
            .map(|(t, v)| Series {
                label: format!("t = {t:.3}"),
                points: grid.nodes().zip(v.iter().copied()).collect(),
            })
            .collect();
        let path = dir.join("snapshots.svg");
        fs::write(&path, line_chart("f(x, t)", "x", "f", &series)).map_err(|e| HarnessError::io(&path, e))?;

        let norm = o.summary.config.fit_norm;
        let err = Series {
            label: format!("log10 {norm:?} error"),
            points: o
                .run
                .trajectory
                .records
                .iter()
                .filter(|r| r.err.get(norm) > 0.0)
                .map(|r| (r.t, r.err.get(norm).log10()))
                .collect(),
        };
        let path = dir.join("error.svg");
        fs::write(&path, line_chart("error vs time", "t", "log10 error", &[err]))
            .map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}

/// `norm` distance between two sampled profiles; used by reports.
pub fn distance(a: &GridFunction, b: &GridFunction, norm: NormKind) -> f64 {
    a.sub(b).map(|d| d.norms().get(norm)).unwrap_or(f64::NAN)
}
