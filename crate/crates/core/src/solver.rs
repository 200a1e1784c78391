//! Time stepping of the signed single-density equation
//! `f_t = f_xx - f_x(p) [δ(x - p + a) - δ(x - p - a)]` with homogeneous
//! Neumann ends and the free boundary `p(t)` tracked as the root of `f`.
//!
//! Each step deposits the transaction sources explicitly from the current
//! state and advances diffusion implicitly. The discrete Laplacian uses ghost
//! reflection at both ends, so trapezoid mass is conserved exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Norms};
use crate::model::{Equilibrium, MassPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    BackwardEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverOptions {
    #[serde(default)]
    pub scheme: Scheme,
    /// Re-deposit the sources once with the midpoint flux of a predictor step.
    #[serde(default)]
    pub corrector: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub f: GridFunction,
    pub t: f64,
    pub p: f64,
    pub lam: f64,
}

impl SimState {
    pub fn masses(&self) -> Result<MassPair> {
        let prm = &self.f.grid.params;
        Ok(MassPair {
            m1: self.f.integrate(prm.lo(), self.p)?,
            m2: -self.f.integrate(self.p, prm.hi())?,
        })
    }

    /// Checks the sign structure away from a band of one cell around `p`.
    pub fn sign_structure_holds(&self) -> bool {
        let g = &self.f.grid;
        g.nodes().zip(&self.f.values).all(|(x, &v)| {
            if x < self.p - g.h {
                v > 0.0
            } else if x > self.p + g.h {
                v < 0.0
            } else {
                true
            }
        })
    }
}

/// Unique zero of the interpolant of `f` in `center ± radius` (clipped to the
/// domain): bisection down to a single cell, then a closed-form linear solve.
pub fn find_root(f: &GridFunction, center: f64, radius: f64) -> Result<f64> {
    let prm = &f.grid.params;
    let mut lo = (center - radius).max(prm.lo());
    let mut hi = (center + radius).min(prm.hi());
    let (flo, fhi) = (f.interpolate(lo)?, f.interpolate(hi)?);
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let g = &f.grid;
    while hi - lo > 1e-12 && g.locate(lo).0 != g.locate(hi).0 {
        let mid = 0.5 * (lo + hi);
        let v = f.interp_unchecked(mid);
        if v > 0.0 {
            lo = mid;
        } else if v < 0.0 {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    let (vl, vh) = (f.interp_unchecked(lo), f.interp_unchecked(hi));
    if vl == vh {
        return Ok(0.5 * (lo + hi));
    }
    // the interpolant is linear on [lo, hi] here
    let root = lo + (hi - lo) * vl / (vl - vh);
    Ok(root.clamp(lo, hi))
}

/// Smallness radius `min(λν, λ)` with `ν = a/8`.
pub fn smallness_radius(lambda0: f64, cost: f64) -> f64 {
    let nu = cost / 8.0;
    (lambda0 * nu).min(lambda0)
}

/// Builds the initial state from data `f_I` whose root lies near `p_guess`.
pub fn init_state(f_init: &GridFunction, p_guess: f64) -> Result<SimState> {
    let prm = f_init.grid.params;
    let (plo, phi) = prm.price_range();
    if !(p_guess > plo && p_guess < phi) {
        return Err(Error::BoundaryCollision {
            p: p_guess,
            lo: plo,
            hi: phi,
        });
    }
    let p = find_root(f_init, p_guess, 0.5 * prm.cost)?;
    let lam = -f_init.derivative_at(p, 1)?;
    if !(lam > 0.0) {
        return Err(Error::NonpositiveSlope { slope: lam });
    }
    let nearest = Equilibrium { p0: p, lambda0: lam };
    let dev = f_init
        .values
        .iter()
        .zip(f_init.grid.nodes())
        .fold(0.0f64, |m, (v, x)| m.max((v - nearest.value(x, prm.cost)).abs()));
    let guard = smallness_radius(lam, prm.cost);
    if dev >= guard {
        log::warn!(
            "initial data deviates from the nearest equilibrium by {dev:.3e} (linf), above the smallness radius {guard:.3e}"
        );
    }
    Ok(SimState {
        f: f_init.clone(),
        t: 0.0,
        p,
        lam,
    })
}

/// Factored `(I - θ dt Δ_h)` for the Neumann Laplacian, with the explicit
/// part `(I + (1-θ) dt Δ_h)` for Crank-Nicolson.
#[derive(Debug, Clone)]
pub struct Diffusion {
    n: usize,
    r: f64,
    scheme: Scheme,
    // Thomas factors
    c_prime: Vec<f64>,
    denom: Vec<f64>,
    sub: Vec<f64>,
}

impl Diffusion {
    pub fn new(n: usize, h: f64, dt: f64, scheme: Scheme) -> Self {
        let theta = match scheme {
            Scheme::BackwardEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        };
        let r = dt / (h * h);
        let k = theta * r;
        let diag = vec![1.0 + 2.0 * k; n];
        let mut sub = vec![-k; n];
        let mut sup = vec![-k; n];
        // ghost reflection: u_{-1} = u_1, u_n = u_{n-2}
        sup[0] = -2.0 * k;
        sub[n - 1] = -2.0 * k;
        sub[0] = 0.0;
        sup[n - 1] = 0.0;
        let mut c_prime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = diag[0];
        c_prime[0] = sup[0] / denom[0];
        for i in 1..n {
            denom[i] = diag[i] - sub[i] * c_prime[i - 1];
            c_prime[i] = sup[i] / denom[i];
        }
        Self {
            n,
            r,
            scheme,
            c_prime,
            denom,
            sub,
        }
    }

    /// Applies one diffusion step to `rhs` (already containing sources).
    pub fn advance(&self, u_old: &[f64], sources: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut d: Vec<f64> = match self.scheme {
            Scheme::BackwardEuler => u_old.iter().zip(sources).map(|(u, s)| u + s).collect(),
            Scheme::CrankNicolson => {
                let k = 0.5 * self.r;
                (0..n)
                    .map(|i| {
                        let left = if i == 0 { u_old[1] } else { u_old[i - 1] };
                        let right = if i + 1 == n { u_old[n - 2] } else { u_old[i + 1] };
                        u_old[i] + k * (left - 2.0 * u_old[i] + right) + sources[i]
                    })
                    .collect()
            }
        };
        d[0] /= self.denom[0];
        for i in 1..n {
            d[i] = (d[i] - self.sub[i] * d[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.c_prime[i] * d[i + 1];
        }
        d
    }
}

/// Integrates a state forward with a fixed step, reusing the factorization.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub dt: f64,
    pub options: SolverOptions,
    diffusion: Diffusion,
}

impl Stepper {
    pub fn new(grid: &crate::grid::Grid, dt: f64, options: SolverOptions) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeStep(dt));
        }
        Ok(Self {
            dt,
            options,
            diffusion: Diffusion::new(grid.n, grid.h, dt, options.scheme),
        })
    }

    fn sources(&self, s: &SimState, lam: f64) -> Result<Vec<f64>> {
        let a = s.f.grid.params.cost;
        let mut src = GridFunction::zeros(s.f.grid);
        let amount = lam * self.dt;
        src.add_delta(s.p - a, amount)
            .and_then(|_| src.add_delta(s.p + a, -amount))
            .map_err(|_| {
                let (lo, hi) = s.f.grid.params.price_range();
                Error::BoundaryCollision { p: s.p, lo, hi }
            })?;
        Ok(src.values)
    }

    fn refresh(&self, s: &SimState, values: Vec<f64>, dt: f64) -> Result<SimState> {
        let grid = s.f.grid;
        let f = GridFunction { grid, values };
        let radius = 4.0 * grid.h.max(s.lam * dt);
        let p = find_root(&f, s.p, radius)?;
        let (lo, hi) = grid.params.price_range();
        if !(p > lo && p < hi) {
            return Err(Error::BoundaryCollision { p, lo, hi });
        }
        let lam = -f.derivative_at(p, 1)?;
        if !(lam > 0.0) {
            return Err(Error::NonpositiveSlope { slope: lam });
        }
        Ok(SimState {
            f,
            t: s.t + dt,
            p,
            lam,
        })
    }

    pub fn step(&self, s: &SimState) -> Result<SimState> {
        let src = self.sources(s, s.lam)?;
        let values = self.diffusion.advance(&s.f.values, &src);
        let next = self.refresh(s, values, self.dt)?;
        if !self.options.corrector {
            return Ok(next);
        }
        let lam_mid = 0.5 * (s.lam + next.lam);
        let src = self.sources(s, lam_mid)?;
        let values = self.diffusion.advance(&s.f.values, &src);
        self.refresh(s, values, self.dt)
    }
}

/// One step of size `dt`.
pub fn step(s: &SimState, dt: f64, options: SolverOptions) -> Result<SimState> {
    Stepper::new(&s.f.grid, dt, options)?.step(s)
}

/// `p'(t) = -f_xx(p) / f_x(p)`.
pub fn boundary_velocity(s: &SimState) -> Result<f64> {
    let fx = s.f.derivative_at(s.p, 1)?;
    if !(fx < 0.0) {
        return Err(Error::NonpositiveSlope { slope: -fx });
    }
    let fxx = s.f.derivative_at(s.p, 2)?;
    Ok(-fxx / fx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub p: f64,
    pub lambda: f64,
    pub m1: f64,
    pub m2: f64,
    pub err: Norms,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,p,lambda,m1,m2,err_l2,err_linf,err_h1")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.t, r.p, r.lambda, r.m1, r.m2, r.err.l2, r.err.linf, r.err.h1
            )?;
        }
        Ok(())
    }

    /// Largest relative side-mass deviation from the first record.
    pub fn side_mass_drift(&self) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        self.records.iter().fold(0.0f64, |m, r| {
            m.max(((r.m1 - first.m1) / first.m1).abs())
                .max(((r.m2 - first.m2) / first.m2).abs())
        })
    }
}

/// Outcome of [`run`]. A failing step halts the run; the records up to that
/// point are kept and `failure` holds the time-annotated cause.
#[derive(Debug, Clone)]
pub struct Run {
    pub trajectory: Trajectory,
    pub state: SimState,
    pub steps: usize,
    /// Largest per-step change of the total trapezoid mass.
    pub max_step_mass_change: f64,
    /// Largest |p'(t)| seen over the recorded steps.
    pub max_boundary_speed: f64,
    pub failure: Option<Error>,
}

impl Run {
    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

fn record(s: &SimState, f_inf: &GridFunction) -> Result<TrajectoryRecord> {
    let m = s.masses()?;
    Ok(TrajectoryRecord {
        t: s.t,
        p: s.p,
        lambda: s.lam,
        m1: m.m1,
        m2: m.m2,
        err: s.f.sub(f_inf)?.norms(),
    })
}

/// Steps from `s0` to `t_end`, recording every `stride` steps (and the final
/// state). Requires `dt <= h`.
pub fn run(
    s0: &SimState,
    dt: f64,
    t_end: f64,
    f_inf: &GridFunction,
    stride: usize,
    options: SolverOptions,
) -> Result<Run> {
    run_observed(s0, dt, t_end, f_inf, stride, options, |_| {})
}

/// [`run`] with `observe` called on every accepted state, including `s0`.
pub fn run_observed<F: FnMut(&SimState)>(
    s0: &SimState,
    dt: f64,
    t_end: f64,
    f_inf: &GridFunction,
    stride: usize,
    options: SolverOptions,
    mut observe: F,
) -> Result<Run> {
    let grid = s0.f.grid;
    if !(dt > 0.0) || dt > grid.h * (1.0 + 1e-12) {
        return Err(Error::InvalidTimeStep(dt));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("t_end = {t_end} must be positive")));
    }
    let stride = stride.max(1);
    let n_steps = ((t_end - s0.t) / dt - 1e-9).ceil().max(1.0) as usize;
    let stepper = Stepper::new(&grid, dt, options)?;
    let last_dt = (t_end - s0.t) - (n_steps - 1) as f64 * dt;
    let last = if (last_dt - dt).abs() > 1e-12 * dt && last_dt > 0.0 {
        Some(Stepper::new(&grid, last_dt, options)?)
    } else {
        None
    };

    let mut trajectory = Trajectory::default();
    trajectory.records.push(record(s0, f_inf)?);
    observe(s0);
    let mut state = s0.clone();
    let mut mass = state.f.total();
    let mut max_dm = 0.0f64;
    let mut max_speed = 0.0f64;
    let mut failure = None;
    let mut steps = 0;
    for k in 0..n_steps {
        let st = match (&last, k + 1 == n_steps) {
            (Some(l), true) => l,
            _ => &stepper,
        };
        match st.step(&state) {
            Ok(next) => {
                state = next;
                steps += 1;
                observe(&state);
            }
            Err(e) => {
                failure = Some(Error::AtTime {
                    t: state.t,
                    source: Box::new(e),
                });
                break;
            }
        }
        let m = state.f.total();
        max_dm = max_dm.max((m - mass).abs());
        mass = m;
        if let Ok(v) = boundary_velocity(&state) {
            max_speed = max_speed.max(v.abs());
        }
        if (k + 1) % stride == 0 || k + 1 == n_steps {
            trajectory.records.push(record(&state, f_inf)?);
        }
    }
    Ok(Run {
        trajectory,
        state,
        steps,
        max_step_mass_change: max_dm,
        max_boundary_speed: max_speed,
        failure,
    })
}
