//! Kernel projection, long-time limit prediction, the `H` map between
//! `(λ, p)` and side masses, and the nonlinear remainder `N(g)` as a finite
//! measure of point masses and point dipoles.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::model::{equilibrium_from_masses, Equilibrium, MassPair, ModelParams};
use crate::solver::{find_root, init_state, SolverOptions, Stepper};
use crate::spectral::CouplingSign;

/// Coordinates of a state on `(g0, h0)` and the side integrals they come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCoords {
    pub c: f64,
    pub d: f64,
    pub i1: f64,
    pub i2: f64,
}

/// `(c, d)` from the side integrals `I1 = ∫_{-A}^0`, `I2 = ∫_0^B`.
pub fn kernel_coords(i1: f64, i2: f64, prm: &ModelParams) -> KernelCoords {
    let (ll, rr, a) = (prm.left, prm.right, prm.cost);
    let det = a * (a - 2.0 * ll) * (a - 2.0 * rr);
    KernelCoords {
        c: ((2.0 * ll - a) * i2 - (2.0 * rr - a) * i1) / det,
        d: ((a * rr - a * a / 2.0) * i1 - (a * a / 2.0 - a * ll) * i2) / det,
        i1,
        i2,
    }
}

pub fn project_kernel(f: &GridFunction, prm: &ModelParams) -> Result<KernelCoords> {
    project_kernel_about(f, 0.0, prm)
}

/// Projection onto the kernel of the operator linearized about `p0`.
pub fn project_kernel_about(f: &GridFunction, p0: f64, prm: &ModelParams) -> Result<KernelCoords> {
    let i1 = f.integrate(prm.lo(), p0)?;
    let i2 = f.integrate(p0, prm.hi())?;
    Ok(kernel_coords(i1, i2, &prm.centered_at(p0)))
}

/// `k(t)/R₂` of the kernel drift.
pub fn gamma1(prm: &ModelParams) -> f64 {
    let (ll, rr, a) = (prm.left, prm.right, prm.cost);
    2.0 * (ll + rr - a) / (a * (a - 2.0 * ll) * (a - 2.0 * rr))
}

/// `z(t)/R₂` of the kernel drift.
pub fn gamma2(prm: &ModelParams) -> f64 {
    let (ll, rr, a) = (prm.left, prm.right, prm.cost);
    (ll - rr) / ((a - 2.0 * ll) * (a - 2.0 * rr))
}

/// Equilibrium carrying the side masses of `f_i` split at `p_i`.
pub fn predict_limit(f_i: &GridFunction, p_i: f64, prm: &ModelParams) -> Result<Equilibrium> {
    let m = MassPair {
        m1: f_i.integrate(prm.lo(), p_i)?,
        m2: -f_i.integrate(p_i, prm.hi())?,
    };
    equilibrium_from_masses(&m, prm)
}

/// `H(λ, p) = (λa(p - a/2 + A) - λp²/2, λp²/2 - λa(B - p - a/2))`.
pub fn h_map(lambda: f64, p: f64, prm: &ModelParams) -> (f64, f64) {
    let (ll, rr, a) = (prm.left, prm.right, prm.cost);
    let q = 0.5 * p * p;
    (
        lambda * (a * (p - 0.5 * a + ll) - q),
        lambda * (q - a * (rr - p - 0.5 * a)),
    )
}

/// Central-difference Jacobian of [`h_map`], rows `(h1, h2)`, columns `(λ, p)`.
pub fn h_jacobian(lambda: f64, p: f64, prm: &ModelParams) -> [[f64; 2]; 2] {
    let el = 1e-6 * lambda.abs().max(1.0);
    let ep = 1e-6;
    let (a1, a2) = h_map(lambda + el, p, prm);
    let (b1, b2) = h_map(lambda - el, p, prm);
    let (c1, c2) = h_map(lambda, p + ep, prm);
    let (d1, d2) = h_map(lambda, p - ep, prm);
    [
        [(a1 - b1) / (2.0 * el), (c1 - d1) / (2.0 * ep)],
        [(a2 - b2) / (2.0 * el), (c2 - d2) / (2.0 * ep)],
    ]
}

pub fn h_jacobian_det(lambda: f64, p: f64, prm: &ModelParams) -> f64 {
    let j = h_jacobian(lambda, p, prm);
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 100;
pub const NEWTON_MAX_HALVINGS: usize = 30;
pub const SINGULAR_DET: f64 = 1e-12;

/// Damped Newton solve of `H(λ, p) = (h1, h2)` from `seed`.
pub fn invert_h(h1: f64, h2: f64, seed: (f64, f64), prm: &ModelParams) -> Result<(f64, f64)> {
    let (plo, phi) = prm.price_range();
    let inside = |l: f64, p: f64| l > 0.0 && p > plo && p < phi;
    let (mut lam, mut p) = seed;
    if !inside(lam, p) {
        return Err(Error::InvalidInput(format!("seed ({lam}, {p}) outside the valid domain")));
    }
    let resid = |l: f64, p: f64| {
        let (r1, r2) = h_map(l, p, prm);
        (r1 - h1, r2 - h2)
    };
    let norm = |r: (f64, f64)| r.0.hypot(r.1);
    let tol = NEWTON_TOL * h1.abs().max(h2.abs()).max(1.0);
    let mut r = resid(lam, p);
    for _ in 0..NEWTON_MAX_ITER {
        if norm(r) <= tol {
            return Ok((lam, p));
        }
        let j = h_jacobian(lam, p, prm);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < SINGULAR_DET {
            return Err(Error::SingularJacobian { det });
        }
        let dl = (j[1][1] * r.0 - j[0][1] * r.1) / det;
        let dp = (j[0][0] * r.1 - j[1][0] * r.0) / det;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let (nl, np) = (lam - t * dl, p - t * dp);
            if inside(nl, np) {
                let nr = resid(nl, np);
                if norm(nr) < norm(r) {
                    lam = nl;
                    p = np;
                    r = nr;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(r) <= tol {
        return Ok((lam, p));
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: norm(r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    N1,
    N2,
    N3,
    N4,
}

/// `weight · δ_location` (order 0) or `weight · δ'_location` (order 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointTerm {
    pub location: f64,
    pub weight: f64,
    pub order: u8,
    pub group: Group,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NRemainder {
    pub p: f64,
    pub p0: f64,
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    pub sign: CouplingSign,
    pub point_terms: Vec<PointTerm>,
}

impl NRemainder {
    /// Order-0 weight on each side of `p0`; dipoles carry no mass.
    pub fn side_integrals(&self) -> (f64, f64) {
        self.point_terms
            .iter()
            .filter(|t| t.order == 0 && t.weight != 0.0)
            .fold((0.0, 0.0), |(l, r), t| {
                if t.location < self.p0 {
                    (l + t.weight, r)
                } else {
                    (l, r + t.weight)
                }
            })
    }
}

/// `N(g)` for the perturbation `g` of the equilibrium `e`, using the linear
/// operator with the dynamic coupling sign.
pub fn n_remainder(g: &GridFunction, e: &Equilibrium, prm: &ModelParams) -> Result<NRemainder> {
    n_remainder_signed(g, e, prm, CouplingSign::Dynamic)
}

/// `N(g) = g_t - L_s g` evaluated at the state `f⁰ + g`, grouped as
///
/// * `N¹ = λ⁰[δ_{p-a} - δ_{p⁰-a} - δ_{p+a} + δ_{p⁰+a}] - sλ⁰q[δ'_{p⁰-a} - δ'_{p⁰+a}]`
/// * `N² = sR₁[δ'_{p⁰-a} - δ'_{p⁰+a}]`
/// * `N³ = -g_x(p⁰)[δ_{p-a} - δ_{p⁰-a} - δ_{p+a} + δ_{p⁰+a}]`
/// * `N⁴ = -R₂[δ_{p-a} - δ_{p+a}]`
pub fn n_remainder_signed(
    g: &GridFunction,
    e: &Equilibrium,
    prm: &ModelParams,
    sign: CouplingSign,
) -> Result<NRemainder> {
    let grid = g.grid;
    let a = prm.cost;
    let (p0, l0) = (e.p0, e.lambda0);
    let f = GridFunction::sample(grid, |x| e.value(x, a)).add(g)?;
    let p = find_root(&f, p0, 0.5 * a)?;
    let slope = -f.derivative_at(p, 1)?;
    if !(slope > 0.0) {
        return Err(Error::NonpositiveSlope { slope });
    }
    let q = p - p0;
    let r1 = g.interpolate(p)? - g.interpolate(p0)?;
    let gx0 = g.derivative_at(p0, 1)?;
    let r2 = g.derivative_at(p, 1)? - gx0;
    let s = sign.value();

    let term = |location: f64, weight: f64, order: u8, group: Group| PointTerm {
        location,
        weight,
        order,
        group,
    };
    let point_terms = vec![
        term(p - a, l0, 0, Group::N1),
        term(p0 - a, -l0, 0, Group::N1),
        term(p + a, -l0, 0, Group::N1),
        term(p0 + a, l0, 0, Group::N1),
        term(p0 - a, -s * l0 * q, 1, Group::N1),
        term(p0 + a, s * l0 * q, 1, Group::N1),
        term(p0 - a, s * r1, 1, Group::N2),
        term(p0 + a, -s * r1, 1, Group::N2),
        term(p - a, -gx0, 0, Group::N3),
        term(p0 - a, gx0, 0, Group::N3),
        term(p + a, gx0, 0, Group::N3),
        term(p0 + a, -gx0, 0, Group::N3),
        term(p - a, -r2, 0, Group::N4),
        term(p + a, r2, 0, Group::N4),
    ];
    Ok(NRemainder {
        p,
        p0,
        q,
        r1,
        r2,
        sign,
        point_terms,
    })
}

/// `Σ w φ(x)` over point masses minus `Σ w φ'(x)` over dipoles.
pub fn pair_measure<F, G>(m: &NRemainder, phi: F, dphi: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    m.point_terms
        .iter()
        .map(|t| match t.order {
            0 => t.weight * phi(t.location),
            _ => -t.weight * dphi(t.location),
        })
        .sum()
}

/// Smooth probe used to pair measures and grid functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Probe {
    One,
    X,
    X2,
    /// `cos(kπ(x + A)/(A + B))`
    Cos { k: u32, left: f64, length: f64 },
}

impl Probe {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Probe::One => 1.0,
            Probe::X => x,
            Probe::X2 => x * x,
            Probe::Cos { k, left, length } => (k as f64 * PI * (x + left) / length).cos(),
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            Probe::One => 0.0,
            Probe::X => 1.0,
            Probe::X2 => 2.0 * x,
            Probe::Cos { k, left, length } => {
                let w = k as f64 * PI / length;
                -w * (w * (x + left)).sin()
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Probe::One => "1".into(),
            Probe::X => "x".into(),
            Probe::X2 => "x^2".into(),
            Probe::Cos { k, .. } => format!("cos{k}"),
        }
    }
}

/// `{1, x, x², cos(π(x+A)/(A+B)), cos(2π(x+A)/(A+B))}`.
pub fn test_battery(prm: &ModelParams) -> Vec<Probe> {
    let cos = |k| Probe::Cos {
        k,
        left: prm.left,
        length: prm.length(),
    };
    vec![Probe::One, Probe::X, Probe::X2, cos(1), cos(2)]
}

pub fn pair_probe(m: &NRemainder, probe: &Probe) -> f64 {
    pair_measure(m, |x| probe.value(x), |x| probe.slope(x))
}

/// Trapezoid pairing `Σ w_i f_i φ(x_i)` of nodal values with a probe.
pub fn pair_grid(f: &GridFunction, probe: &Probe) -> f64 {
    let g = &f.grid;
    f.values
        .iter()
        .enumerate()
        .map(|(i, v)| g.weight(i) * v * probe.value(g.x(i)))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Smallness {
    pub slope: f64,
    pub eps: Vec<f64>,
    pub sizes: Vec<f64>,
}

/// Least-squares slope of `log max_φ |⟨N(εg), φ⟩|` against `log ε`.
pub fn smallness_exponent(
    e: &Equilibrium,
    g_dir: &GridFunction,
    eps_list: &[f64],
    prm: &ModelParams,
) -> Result<Smallness> {
    if eps_list.len() < 2 || eps_list.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("need at least two positive amplitudes".into()));
    }
    if g_dir.values.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput("perturbation direction is identically zero".into()));
    }
    let scale = g_dir.norms().linf.max(1.0);
    let battery = test_battery(prm);
    let mut sizes = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let m = n_remainder(&g_dir.scale(eps), e, prm)?;
        let s = battery
            .iter()
            .map(|b| pair_probe(&m, b).abs())
            .fold(0.0f64, f64::max);
        if !(s > 1e-12 * eps * eps * scale) {
            return Err(Error::InvalidInput(format!("remainder vanishes at amplitude {eps}")));
        }
        sizes.push(s);
    }
    let xs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    Ok(Smallness {
        slope: least_squares_slope(&xs, &ys),
        eps: eps_list.to_vec(),
        sizes,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityReport {
    pub h: f64,
    pub t_end: f64,
    pub max_dc: f64,
    pub max_dd: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl StationarityReport {
    pub fn drift(&self) -> f64 {
        self.max_dc.max(self.max_dd)
    }
}

/// Runs the solver from the sampled equilibrium for `t = 1` with `dt = h`
/// and reports the drift of the kernel coordinates about `p⁰`.
pub fn stationarity_check(e: &Equilibrium, prm: &ModelParams, grid: &Grid) -> Result<StationarityReport> {
    Equilibrium::new(e.p0, e.lambda0, prm)?;
    let t_end = 1.0;
    let f0 = GridFunction::sample(*grid, |x| e.value(x, prm.cost));
    let mut state = init_state(&f0, e.p0)?;
    let k0 = project_kernel_about(&state.f, e.p0, prm)?;
    let stepper = Stepper::new(grid, grid.h, SolverOptions::default())?;
    let steps = (t_end / grid.h).round() as usize;
    let (mut dc, mut dd) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        state = stepper.step(&state).map_err(|err| Error::AtTime {
            t: state.t,
            source: Box::new(err),
        })?;
        let k = project_kernel_about(&state.f, e.p0, prm)?;
        dc = dc.max((k.c - k0.c).abs());
        dd = dd.max((k.d - k0.d).abs());
    }
    let centered = prm.centered_at(e.p0);
    Ok(StationarityReport {
        h: grid.h,
        t_end,
        max_dc: dc,
        max_dd: dd,
        gamma1: gamma1(&centered),
        gamma2: gamma2(&centered),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eigenpairs, kernel_basis};

    fn sym() -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.4).unwrap()
    }

    #[test]
    fn projection_examples() {
        let prm = sym();
        let g = Grid::new(prm, 801).unwrap();
        let kb = kernel_basis(&prm).unwrap();
        let k = project_kernel(&GridFunction::sample(g, |x| kb.g0(x)), &prm).unwrap();
        assert!((k.c - 1.0).abs() < 1e-10 && k.d.abs() < 1e-10);
        let k = project_kernel(&GridFunction::sample(g, |_| 1.0), &prm).unwrap();
        assert!(k.c.abs() < 1e-12 && (k.d - 0.625).abs() < 1e-12);
        let k = project_kernel(&GridFunction::sample(g, |x| kb.h0(x)), &prm).unwrap();
        assert!(k.c.abs() < 1e-10 && (k.d - 1.0).abs() < 1e-10);
    }

    #[test]
    fn projection_annihilates_eigenfunctions_exactly() {
        for prm in [sym(), ModelParams::new(1.0, 2.0, 0.4).unwrap()] {
            for e in eigenpairs(&prm, 6, CouplingSign::Printed).unwrap() {
                for i in 0..e.dim {
                    let (i1, i2) = e.side_masses(i).unwrap();
                    let k = kernel_coords(i1, i2, &prm);
                    assert!(k.c.abs() < 1e-10 && k.d.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn projection_of_basis_masses_is_identity() {
        let prm = ModelParams::new(1.3, 0.8, 0.3).unwrap();
        let kb = kernel_basis(&prm).unwrap();
        let (g1, g2) = kb.g0_masses();
        let (h1, h2) = kb.h0_masses();
        for (c, d) in [(0.3, -0.7), (-1.0, 1.0), (0.0, 0.25)] {
            let k = kernel_coords(c * g1 + d * h1, c * g2 + d * h2, &prm);
            assert!((k.c - c).abs() < 1e-12 && (k.d - d).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_limit_examples() {
        let prm = sym();
        let g = Grid::new(prm, 801).unwrap();
        let e = Equilibrium { p0: 0.0, lambda0: 0.9375 };
        let f = GridFunction::sample(g, |x| e.value(x, 0.4));
        let lim = predict_limit(&f, 0.0, &prm).unwrap();
        assert!(lim.p0.abs() < 1e-10 && (lim.lambda0 - 0.9375).abs() < 1e-10);

        let prm = ModelParams::new(1.0, 2.0, 0.4).unwrap();
        let g = Grid::new(prm, 1201).unwrap();
        let e = equilibrium_from_masses(&MassPair { m1: 0.2, m2: 0.4 }, &prm).unwrap();
        let f = GridFunction::sample(g, |x| e.value(x, 0.4));
        let lim = predict_limit(&f, e.p0, &prm).unwrap();
        assert!((lim.p0 - 0.0666667).abs() < 1e-6 && (lim.lambda0 - 0.576923).abs() < 1e-6);
    }

    #[test]
    fn h_map_examples() {
        let prm = sym();
        let (h1, h2) = h_map(0.9375, 0.0, &prm);
        assert!((h1 - 0.3).abs() < 1e-14 && (h2 + 0.3).abs() < 1e-14);
        let det = h_jacobian_det(0.9375, 0.0, &prm);
        assert!((det - 0.24).abs() < 1e-6 * 0.24);
    }

    #[test]
    fn invert_h_examples() {
        let prm = sym();
        let (h1, h2) = h_map(0.9375, 0.0, &prm);
        let (l, p) = invert_h(h1, h2, (0.8, 0.1), &prm).unwrap();
        assert!((l - 0.9375).abs() < 1e-10 && p.abs() < 1e-10);

        let prm = ModelParams::new(1.0, 2.0, 0.4).unwrap();
        let (h1, h2) = h_map(0.576923, 0.0666667, &prm);
        let (l, p) = invert_h(h1, h2, (0.5, 0.0), &prm).unwrap();
        assert!((l - 0.576923).abs() < 1e-10 && (p - 0.0666667).abs() < 1e-10);

        let err = invert_h(h1, h2, (1e-14, 0.0), &prm).unwrap_err();
        assert!(matches!(err, Error::SingularJacobian { .. } | Error::NoConvergence { .. }));
    }

    #[test]
    fn pair_measure_examples() {
        let mk = |terms: Vec<PointTerm>| NRemainder {
            p: 0.0,
            p0: 0.0,
            q: 0.0,
            r1: 0.0,
            r2: 0.0,
            sign: CouplingSign::Dynamic,
            point_terms: terms,
        };
        let t = |order| PointTerm {
            location: 0.3,
            weight: if order == 0 { 2.0 } else { 1.0 },
            order,
            group: Group::N1,
        };
        assert!((pair_measure(&mk(vec![t(0)]), |x| x * x, |x| 2.0 * x) - 0.18).abs() < 1e-15);
        assert!((pair_measure(&mk(vec![t(1)]), |x| x * x, |x| 2.0 * x) + 0.6).abs() < 1e-15);
        assert_eq!(pair_measure(&mk(vec![]), |x| x, |_| 1.0), 0.0);
    }

    #[test]
    fn remainder_of_zero_vanishes() {
        let prm = sym();
        let g = Grid::new(prm, 401).unwrap();
        let e = Equilibrium { p0: 0.0, lambda0: 0.9375 };
        for sign in [CouplingSign::Printed, CouplingSign::Dynamic] {
            let m = n_remainder_signed(&GridFunction::zeros(g), &e, &prm, sign).unwrap();
            assert!(m.q.abs() < 1e-14 && m.r1 == 0.0 && m.r2 == 0.0);
            for b in test_battery(&prm) {
                assert!(pair_probe(&m, &b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn side_integrals_are_plus_minus_r2() {
        let prm = sym();
        let g = Grid::new(prm, 401).unwrap();
        let e = Equilibrium { p0: 0.05, lambda0: 1.1 };
        let pert = GridFunction::sample(g, |x| 0.03 * (2.0 * x).sin() + 0.01 * x * x);
        let m = n_remainder(&pert, &e, &prm).unwrap();
        let (i1, i2) = m.side_integrals();
        assert!((i2 - m.r2).abs() < 1e-10 && (i1 + m.r2).abs() < 1e-10);
        assert!(m.r2 != 0.0);
    }

    #[test]
    fn smallness_slope_is_superlinear() {
        let prm = sym();
        let g = Grid::new(prm, 1601).unwrap();
        let e = Equilibrium { p0: 0.0, lambda0: 0.9375 };
        let dir = GridFunction::sample(g, |x| (PI * (x + 1.0)).cos());
        let s = smallness_exponent(&e, &dir, &[0.02, 0.01, 0.005, 0.0025], &prm).unwrap();
        assert!(s.slope > 1.5, "{s:?}");
        // odd directions keep the root in place and the remainder vanishes
        let odd = GridFunction::sample(g, |x| (PI * (x + 1.0) / 2.0).cos());
        assert!(smallness_exponent(&e, &odd, &[0.02, 0.01], &prm).is_err());
        assert!(smallness_exponent(&e, &GridFunction::zeros(g), &[0.1, 0.05], &prm).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma2(&sym()), 0.0);
        assert!((gamma1(&sym()) - 2.0 * 1.6 / (0.4 * 1.6 * 1.6)).abs() < 1e-12);
    }

    #[test]
    fn stationarity_drift_is_tiny() {
        let prm = sym();
        let g = Grid::new(prm, 201).unwrap();
        let r = stationarity_check(&Equilibrium { p0: 0.0, lambda0: 0.9375 }, &prm, &g).unwrap();
        assert!(r.drift() <= g.h, "{r:?}");
    }
}
