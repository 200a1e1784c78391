//! One test per acceptance criterion. Each prints `PASS`/`FAIL` lines with
//! the measured value and the pinned tolerance, then asserts.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use pricelab_core::manifold::{
    h_jacobian_det, h_map, invert_h, n_remainder, pair_grid, pair_probe, smallness_exponent, test_battery,
};
use pricelab_core::model::{admissibility_bounds, equilibrium_from_masses, MassPair};
use pricelab_core::solver::smallness_radius;
use pricelab_core::spectral::{
    assemble_discrete_operator_at, classify_symmetric, eigenpairs, matching_rank, spectral_gap, CouplingSign,
};
use pricelab_core::{Equilibrium, Error, Grid, GridFunction, ModelParams};
use pricelab_harness::study::{convergence_study, spectrum_check, sweep_equilibria};
use pricelab_harness::{run_scenario, PerturbationKind, PerturbationSpec, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Checks {
    id: u32,
    ok: bool,
}

impl Checks {
    fn new(id: u32) -> Self {
        println!();
        Self { id, ok: true }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} c{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, self.id);
        self.ok &= ok;
    }

    fn runtime(&mut self, start: Instant, limit: Duration) {
        let t = start.elapsed();
        self.check("runtime", t < limit, format!("{t:.2?} < {limit:?}"));
    }

    fn finish(self) {
        assert!(self.ok, "criterion {} failed; see FAIL lines above", self.id);
    }
}

fn sym() -> ModelParams {
    ModelParams::new(1.0, 1.0, 0.4).unwrap()
}

fn asym() -> ModelParams {
    ModelParams::new(1.0, 2.0, 0.4).unwrap()
}

/// Symmetric baseline: `m1 = m2 = 0.3`, `n = 801`, `dt = h`, `t_end = 1`,
/// first-eigenfunction perturbation of linf amplitude 0.02.
fn symmetric_baseline() -> ScenarioConfig {
    let mut c = ScenarioConfig::with_masses(sym(), 0.3, 0.3);
    c.perturbation = PerturbationSpec::new(PerturbationKind::FirstEigenfunction, 0.02);
    c
}

/// Asymmetric scenario at the same spacing `h = 1/400` as the baseline.
fn asymmetric_scenario(t_end: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::with_masses(asym(), 0.2, 0.4);
    c.n = 1201;
    c.t_end = t_end;
    c.perturbation = PerturbationSpec::new(PerturbationKind::FirstEigenfunction, 0.02);
    c
}

#[test]
fn c1_equilibrium_algebra() {
    let start = Instant::now();
    let mut c = Checks::new(1);
    let mut lattice = Vec::new();
    'outer: for (ll, rr) in [(1.0, 1.0), (1.0, 2.0), (1.5, 1.0), (2.0, 2.5)] {
        for a in [0.1, 0.25, 0.4] {
            for (m1, m2) in [(0.3, 0.3), (0.2, 0.4), (0.5, 0.2), (1.0, 0.9), (0.05, 0.1)] {
                let prm = ModelParams::new(ll, rr, a).unwrap();
                let m = MassPair::new(m1, m2).unwrap();
                if equilibrium_from_masses(&m, &prm).is_ok() {
                    lattice.push((prm, m));
                }
                if lattice.len() == 20 {
                    break 'outer;
                }
            }
        }
    }
    c.check("lattice size", lattice.len() == 20, format!("{} admissible points", lattice.len()));
    let mut err = 0.0f64;
    for (prm, m) in &lattice {
        let e = equilibrium_from_masses(m, prm).unwrap();
        let back = e.masses(prm);
        err = err.max((back.m1 - m.m1).abs()).max((back.m2 - m.m2).abs());
        let e2 = equilibrium_from_masses(&back, prm).unwrap();
        err = err.max((e2.p0 - e.p0).abs()).max((e2.lambda0 - e.lambda0).abs());
    }
    c.check("round trip", err <= 1e-12, format!("max error {err:.3e} <= 1e-12"));

    let mut rejected = 0;
    let mut total = 0;
    for (prm, _) in &lattice {
        let (lo, hi) = admissibility_bounds(prm);
        for ratio in [0.5 * lo, 0.99 * lo, 1.01 * hi, 2.0 * hi] {
            total += 1;
            let m = MassPair::new(ratio * 0.4, 0.4).unwrap();
            if matches!(equilibrium_from_masses(&m, prm), Err(Error::NotAdmissible { .. })) {
                rejected += 1;
            }
        }
    }
    c.check("inadmissible rejected", rejected == total, format!("{rejected}/{total}"));
    c.runtime(start, Duration::from_secs(1));
    c.finish();
}

#[test]
fn c2_spectral_gap_values() {
    let start = Instant::now();
    let mut c = Checks::new(2);
    for (prm, want) in [(sym(), 15.4213), (asym(), 3.0462)] {
        let g = spectral_gap(&prm);
        c.check(
            &format!("gap A={} B={} a={}", prm.left, prm.right, prm.cost),
            (g - want).abs() <= 1e-3,
            format!("{g:.6} vs {want} (tol 1e-3)"),
        );
    }
    c.runtime(start, Duration::from_secs(1));
    c.finish();
}

#[test]
fn c3_analytic_eigenpairs() {
    let start = Instant::now();
    let mut c = Checks::new(3);
    let prm = sym();
    let pairs = eigenpairs(&prm, 8, CouplingSign::Printed).unwrap();
    c.check("count", pairs.len() == 8, format!("{} eigenpairs", pairs.len()));
    let (mut jump, mut neumann, mut mass) = (0.0f64, 0.0f64, 0.0f64);
    for p in &pairs {
        for k in 0..p.dim {
            jump = p.jump_residuals(k).unwrap().iter().fold(jump, |m, r| m.max(r.abs()));
            neumann = p.neumann_residuals(k).unwrap().iter().fold(neumann, |m, r| m.max(r.abs()));
            let (l, r) = p.side_masses(k).unwrap();
            mass = mass.max(l.abs()).max(r.abs());
        }
    }
    c.check("jump conditions", jump <= 1e-10, format!("max residual {jump:.3e} <= 1e-10"));
    c.check("Neumann conditions", neumann <= 1e-10, format!("max residual {neumann:.3e} <= 1e-10"));
    c.check("zero side masses", mass <= 1e-10, format!("max |mass| {mass:.3e} <= 1e-10"));

    let classes = classify_symmetric(prm.cost, 12).unwrap();
    let mut mismatches = Vec::new();
    for cl in &classes {
        let dim = matching_rank(cl.alpha, &prm).map_or(0, |p| p.dim);
        if dim != cl.dim {
            mismatches.push((cl.alpha, cl.dim, dim));
        }
    }
    let listed = pairs.iter().all(|p| {
        classes
            .iter()
            .any(|cl| (cl.alpha - p.alpha).abs() < 1e-9 && cl.dim == p.dim && cl.case == p.case)
    });
    c.check(
        "classification agrees",
        mismatches.is_empty() && listed,
        format!("{} entries, mismatches {mismatches:?}", classes.len()),
    );
    c.runtime(start, Duration::from_secs(5));
    c.finish();
}

#[test]
fn c4_discrete_analytic_spectrum() {
    let start = Instant::now();
    let mut c = Checks::new(4);
    let prm = sym();
    let checks: Vec<_> = [201, 401, 801].iter().map(|&n| spectrum_check(&prm, 0.0, n, 3).unwrap()).collect();
    let fine = &checks[2];
    c.check(
        "near-kernel dimension 2 at n=801",
        fine.near_kernel.iter().all(|&m| m < 1e-2),
        format!("|mu| = {:.3e}, {:.3e} < 1e-2", fine.near_kernel[0], fine.near_kernel[1]),
    );
    for j in 0..3 {
        let rel = fine.rel_err[j];
        c.check(
            &format!("eigenvalue {} at n=801", j + 1),
            rel <= 0.02,
            format!("{:.6} vs {:.6}, rel {rel:.3e} <= 0.02", fine.discrete[j], fine.analytic[j]),
        );
        let orders: Vec<f64> = checks.windows(2).map(|w| (w[0].rel_err[j] / w[1].rel_err[j]).log2()).collect();
        c.check(
            &format!("eigenvalue {} order", j + 1),
            orders.iter().all(|&o| o >= 1.0),
            format!("observed orders {orders:.3?} >= 1 over n = 201/401/801"),
        );
    }
    c.runtime(start, Duration::from_secs(60));
    c.finish();
}

#[test]
fn c5_conservation() {
    let start = Instant::now();
    let mut c = Checks::new(5);
    let report = convergence_study(&symmetric_baseline(), 3).unwrap();
    let base = &report.levels[0];
    c.check(
        "total mass per step (n=801)",
        base.max_step_total_mass_change <= 1e-12,
        format!("{:.3e} <= 1e-12", base.max_step_total_mass_change),
    );
    c.check(
        "side-mass drift (n=801)",
        base.side_mass_drift <= 1e-3,
        format!("{:.3e} <= 1e-3", base.side_mass_drift),
    );
    let ratios: Vec<f64> = report.levels.windows(2).map(|w| w[0].side_mass_drift / w[1].side_mass_drift).collect();
    c.check(
        "drift halves under refinement",
        ratios.iter().all(|&r| r >= 1.9),
        format!(
            "drift {:?}, ratios {ratios:.4?} >= 1.9",
            report.levels.iter().map(|l| format!("{:.3e}", l.side_mass_drift)).collect::<Vec<_>>()
        ),
    );
    let step_max = report.levels.iter().map(|l| l.max_step_total_mass_change).fold(0.0, f64::max);
    c.check("total mass per step (all levels)", step_max <= 1e-12, format!("{step_max:.3e} <= 1e-12"));
    c.runtime(start, Duration::from_secs(120));
    c.finish();
}

#[test]
fn c6_decay_rate() {
    let mut c = Checks::new(6);
    for (label, cfg, gap) in [
        ("symmetric", symmetric_baseline(), 15.4213),
        ("asymmetric", asymmetric_scenario(3.0), 3.0462),
    ] {
        let start = Instant::now();
        let s = run_scenario(&cfg).unwrap().summary;
        match s.decay_fit {
            Some(fit) => {
                let rel = (fit.gamma_fit - gap).abs() / gap;
                c.check(
                    &format!("{label} linf decay rate"),
                    rel <= 0.15,
                    format!(
                        "gamma_fit {:.4} vs {gap} (rel {rel:.3}, tol 0.15), window [{:.4}, {:.4}], dynamic-sign gap {:.4}",
                        fit.gamma_fit, fit.window.0, fit.window.1, s.spectral_gap_dynamic
                    ),
                );
            }
            None => c.check(&format!("{label} linf decay rate"), false, format!("no fit: {:?}", s.fit_note)),
        }
        c.runtime(start, Duration::from_secs(120));
    }
    c.finish();
}

#[test]
fn c7_limit_selection() {
    let start = Instant::now();
    let mut c = Checks::new(7);
    let gap = spectral_gap(&asym());
    let cfg = asymmetric_scenario(3.0 / gap);
    let h = cfg.grid().unwrap().h;
    let s = run_scenario(&cfg).unwrap().summary;
    let base = s.base_equilibrium;
    let want = Equilibrium { p0: 0.0666667, lambda0: 0.576923 };
    c.check(
        "mass-predicted equilibrium of (m1, m2) = (0.2, 0.4)",
        (base.p0 - want.p0).abs() < 1e-6 && (base.lambda0 - want.lambda0).abs() < 1e-6,
        format!("({:.7}, {:.6}) vs ({}, {})", base.p0, base.lambda0, want.p0, want.lambda0),
    );
    c.check(
        "asymmetric limit at t = 3/gap",
        s.limit.linf_to_base <= 2.0 * h && s.limit.linf_to_predicted <= 2.0 * h,
        format!(
            "linf to ({:.7}, {:.6}) {:.3e}, to the limit predicted from perturbed masses ({:.7}, {:.6}) {:.3e}, <= 2h = {:.3e} at t = {:.4}",
            base.p0,
            base.lambda0,
            s.limit.linf_to_base,
            s.limit.predicted.p0,
            s.limit.predicted.lambda0,
            s.limit.linf_to_predicted,
            2.0 * h,
            s.t_final
        ),
    );

    let mut shifted = cfg.clone();
    shifted.perturbation = PerturbationSpec::new(PerturbationKind::KernelShift { c: -0.05, d: 0.002 }, 0.0);
    let s = run_scenario(&shifted).unwrap().summary;
    c.check(
        "kernel shift reaches shifted equilibrium",
        s.limit.linf_to_predicted <= 2.0 * h,
        format!(
            "predicted ({:.6}, {:.6}), linf {:.3e} <= 2h = {:.3e}",
            s.limit.predicted.p0,
            s.limit.predicted.lambda0,
            s.limit.linf_to_predicted,
            2.0 * h
        ),
    );
    c.check(
        "kernel shift leaves the original equilibrium",
        s.limit.linf_to_base > 2.0 * h,
        format!("linf to original {:.3e} > 2h = {:.3e}", s.limit.linf_to_base, 2.0 * h),
    );
    c.runtime(start, Duration::from_secs(120));
    c.finish();
}

fn random_smooth(grid: Grid, prm: &ModelParams, rng: &mut ChaCha8Rng, linf: f64) -> GridFunction {
    let coefs: Vec<f64> = (1..=6).map(|k| rng.random_range(-1.0..1.0) / (k * k) as f64).collect();
    let g = GridFunction::sample(grid, |x| {
        let y = PI * (x + prm.left) / prm.length();
        coefs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * y).cos()).sum()
    });
    let m = g.norms().linf;
    g.scale(linf / m)
}

#[test]
fn c8_remainder_identities() {
    let start = Instant::now();
    let mut c = Checks::new(8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut drawn = 0;
    while drawn < 20 {
        let prm = if drawn % 2 == 0 { sym() } else { asym() };
        let (plo, phi) = prm.price_range();
        let e = Equilibrium {
            p0: rng.random_range(plo + 0.05..phi - 0.05),
            lambda0: rng.random_range(0.3..2.0),
        };
        if Equilibrium::new(e.p0, e.lambda0, &prm).is_err() {
            continue;
        }
        let grid = Grid::new(prm, 601).unwrap();
        let g = random_smooth(grid, &prm, &mut rng, 0.5 * smallness_radius(e.lambda0, prm.cost));
        let m = n_remainder(&g, &e, &prm).unwrap();
        let (i1, i2) = m.side_integrals();
        worst = worst.max((i2 - m.r2).abs()).max((i1 + m.r2).abs());
        drawn += 1;
    }
    c.check("I2 = R2 = -I1 on 20 draws", worst <= 1e-10, format!("max deviation {worst:.3e} <= 1e-10"));

    let mut worst = 0.0f64;
    for (prm, n, e0, shift, dlam) in [
        (sym(), 801, Equilibrium { p0: 0.0, lambda0: 0.9375 }, 4.0, 0.01),
        (asym(), 1201, Equilibrium { p0: 0.07, lambda0: 0.58 }, -3.0, -0.02),
    ] {
        let grid = Grid::new(prm, n).unwrap();
        let e1 = Equilibrium { p0: e0.p0 + shift * grid.h, lambda0: e0.lambda0 + dlam };
        let f0 = GridFunction::sample(grid, |x| e0.value(x, prm.cost));
        let g = GridFunction::sample(grid, |x| e1.value(x, prm.cost)).sub(&f0).unwrap();
        let m = n_remainder(&g, &e0, &prm).unwrap();
        let op = assemble_discrete_operator_at(&grid, e0.p0, CouplingSign::Dynamic).unwrap();
        let lg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| op[(i, j)] * g.values[j]).sum()).collect();
        let lg = GridFunction::new(grid, lg).unwrap();
        for probe in test_battery(&prm) {
            worst = worst.max((pair_probe(&m, &probe) + pair_grid(&lg, &probe)).abs());
        }
    }
    c.check("<N(g), phi> = -<Lg, phi>", worst <= 1e-6, format!("max deviation {worst:.3e} <= 1e-6"));

    let eps = [0.002, 0.004, 0.008, 0.016];
    for (prm, e, k) in [
        (sym(), Equilibrium { p0: 0.0, lambda0: 0.9375 }, 2u32),
        (sym(), Equilibrium { p0: 0.0, lambda0: 0.9375 }, 4),
        (asym(), Equilibrium { p0: 0.0666667, lambda0: 0.576923 }, 1),
        (asym(), Equilibrium { p0: 0.0666667, lambda0: 0.576923 }, 2),
    ] {
        let grid = Grid::new(prm, 801).unwrap();
        let dir = GridFunction::sample(grid, |x| (k as f64 * PI * (x + prm.left) / prm.length()).cos());
        let s = smallness_exponent(&e, &dir, &eps, &prm).unwrap();
        c.check(
            &format!("smallness slope A={} B={} cos{k}", prm.left, prm.right),
            s.slope > 1.0,
            format!("{:.3} > 1", s.slope),
        );
    }
    c.runtime(start, Duration::from_secs(30));
    c.finish();
}

#[test]
fn c9_h_jacobian() {
    let start = Instant::now();
    let mut c = Checks::new(9);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut det_err, mut trip_err, mut fwd_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let ll: f64 = rng.random_range(0.8..2.5);
        let rr = rng.random_range(0.8..2.5);
        let a = rng.random_range(0.05..0.45 * ll.min(rr));
        let prm = ModelParams::new(ll, rr, a).unwrap();
        let lambda = rng.random_range(0.2..3.0);
        let det = h_jacobian_det(lambda, 0.0, &prm);
        let want = lambda * a * a * (ll + rr - a);
        det_err = det_err.max((det - want).abs() / want);

        let (plo, phi) = prm.price_range();
        let p = rng.random_range(0.5 * plo..0.5 * phi);
        let (h1, h2) = h_map(lambda, p, &prm);
        let seed = (lambda * rng.random_range(0.9..1.1), p + rng.random_range(-0.05..0.05) * a);
        let (l2, p2) = invert_h(h1, h2, seed, &prm).unwrap();
        trip_err = trip_err.max((l2 - lambda).abs()).max((p2 - p).abs());
        let (k1, k2) = h_map(l2, p2, &prm);
        fwd_err = fwd_err.max((k1 - h1).abs()).max((k2 - h2).abs());
    }
    c.check("det DH at (lambda, 0)", det_err <= 1e-6, format!("max rel error {det_err:.3e} <= 1e-6"));
    c.check("invert_h(h_map(x)) = x", trip_err <= 1e-10, format!("max error {trip_err:.3e} <= 1e-10"));
    c.check("h_map(invert_h(y)) = y", fwd_err <= 1e-10, format!("max error {fwd_err:.3e} <= 1e-10"));
    c.runtime(start, Duration::from_secs(5));
    c.finish();
}

#[test]
fn c10_uniformity_probe() {
    let start = Instant::now();
    let mut c = Checks::new(10);
    let mut base = ScenarioConfig::with_masses(sym(), 0.3, 0.3);
    base.perturbation = PerturbationSpec::new(PerturbationKind::FirstEigenfunction, 0.0);
    let report = sweep_equilibria(&base, 0.5, 5, 10).unwrap();
    c.check("case count", report.cases.len() == 5, format!("{}", report.cases.len()));
    for (k, case) in report.cases.iter().enumerate() {
        let e = case.equilibrium;
        let tag = format!("case {k} (p0 {:.4}, lambda0 {:.4})", e.p0, e.lambda0);
        c.check(
            &format!("{tag} converges"),
            case.converged,
            format!("linf to predicted {:.3e} <= {:.3e} at t = {:.4}", case.linf_to_predicted, case.tol_linf, case.t_end),
        );
        c.check(
            &format!("{tag} conservation"),
            case.conservation_ok,
            format!(
                "side drift {:.3e} <= 1e-3, mass per step {:.3e} <= 1e-12",
                case.side_mass_drift, case.max_step_total_mass_change
            ),
        );
        let mut refine = ScenarioConfig::with_equilibrium(sym(), e);
        refine.t_end = case.t_end;
        refine.perturbation = PerturbationSpec::new(PerturbationKind::FirstEigenfunction, 0.05 * e.lambda0 * 0.4);
        let study = convergence_study(&refine, 3).unwrap();
        let ratios: Vec<f64> = study.levels.windows(2).map(|w| w[0].side_mass_drift / w[1].side_mass_drift).collect();
        c.check(&format!("{tag} drift halves"), ratios.iter().all(|&r| r >= 1.9), format!("ratios {ratios:.4?} >= 1.9"));
        let fit = case.gamma_fit.unwrap_or(f64::NAN);
        c.check(
            &format!("{tag} decay rate"),
            case.rate_ok,
            format!(
                "gamma_fit {fit:.4} vs {:.4} (tol 0.15), dynamic-sign gap {:.4}",
                case.spectral_gap, case.spectral_gap_dynamic
            ),
        );
    }
    c.runtime(start, Duration::from_secs(600));
    c.finish();
}
