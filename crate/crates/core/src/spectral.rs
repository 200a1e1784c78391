//! Spectrum of the operator linearized about an equilibrium centered at 0,
//!
//! `Lg = g_xx - g_x(0) [δ_{-a} - δ_a] + s g(0) [δ'_{-a} - δ'_a]`,
//!
//! on `[-A, B]` with Neumann ends. `s = +1` is the coupling as written in the
//! model's linearization, `s = -1` the sign that makes the tangent of the
//! equilibrium family (`∂f/∂p⁰ = λ 1_{(-a,a)}`) a kernel element. The two
//! readings share every eigenfunction with `g(0) = 0`. See [`CouplingSign`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{check_domain, ModelParams};

/// Relative singular-value threshold of the matching-system rank test.
pub const RANK_TOL: f64 = 1e-9;
/// Tolerance of the trigonometric predicates in [`classify_symmetric`].
pub const TRIG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingSign {
    /// `+g(0)[δ'_{-a} - δ'_a]`: jumps `[g]_a = g(0)`, `[g]_{-a} = -g(0)`.
    #[default]
    Printed,
    /// `-g(0)[δ'_{-a} - δ'_a]`: the sign produced by linearizing the
    /// free-boundary dynamics.
    Dynamic,
}

impl CouplingSign {
    pub fn value(self) -> f64 {
        match self {
            CouplingSign::Printed => 1.0,
            CouplingSign::Dynamic => -1.0,
        }
    }
}

/// The two zero modes of the printed operator. `h0` takes the midpoint value
/// 1.5 within `1e-12·a` of its jumps at `±a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelBasis {
    pub params: ModelParams,
}

impl KernelBasis {
    pub fn g0(&self, x: f64) -> f64 {
        let a = self.params.cost;
        x.clamp(-a, a)
    }

    pub fn h0(&self, x: f64) -> f64 {
        let a = self.params.cost;
        let d = x.abs() - a;
        if d.abs() <= 1e-12 * a {
            1.5
        } else if d < 0.0 {
            1.0
        } else {
            2.0
        }
    }

    /// `∫_{-A}^0` and `∫_0^B` of `g0`.
    pub fn g0_masses(&self) -> (f64, f64) {
        let (a, ll, rr) = (self.params.cost, self.params.left, self.params.right);
        (-(a * a / 2.0 + a * (ll - a)), a * a / 2.0 + a * (rr - a))
    }

    /// `∫_{-A}^0` and `∫_0^B` of `h0`.
    pub fn h0_masses(&self) -> (f64, f64) {
        let (a, ll, rr) = (self.params.cost, self.params.left, self.params.right);
        (a + 2.0 * (ll - a), a + 2.0 * (rr - a))
    }
}

pub fn kernel_basis(prm: &ModelParams) -> Result<KernelBasis> {
    prm.validate_geometry()?;
    Ok(KernelBasis { params: *prm })
}

/// `min{(2π/(2A-a))², (2π/(2B-a))², (π/a)²}`.
pub fn spectral_gap(prm: &ModelParams) -> f64 {
    let (ll, rr, a) = (prm.left, prm.right, prm.cost);
    (2.0 * PI / (2.0 * ll - a))
        .min(2.0 * PI / (2.0 * rr - a))
        .min(PI / a)
        .powi(2)
}

/// Smallest nonzero eigenvalue magnitude under [`CouplingSign::Dynamic`]:
/// `(π/(A+B-a))²`.
pub fn dynamic_spectral_gap(prm: &ModelParams) -> f64 {
    (PI / (prm.length() - prm.cost)).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `nπ/a`
    Cost,
    /// `2nπ/(2A-a)`
    Left,
    /// `2nπ/(2B-a)`
    Right,
    /// `nπ/(A+B-a)`, the frequencies of the dynamic reading
    Glued,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Cost => "a",
            Family::Left => "left",
            Family::Right => "right",
            Family::Glued => "glued",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub alpha: f64,
    pub families: Vec<Family>,
}

fn merge_candidates(mut raw: Vec<(f64, Family)>) -> Vec<Candidate> {
    raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut out: Vec<Candidate> = Vec::new();
    for (alpha, fam) in raw {
        match out.last_mut() {
            Some(c) if (c.alpha - alpha).abs() <= 1e-9 * alpha => {
                if !c.families.contains(&fam) {
                    c.families.push(fam);
                }
            }
            _ => out.push(Candidate {
                alpha,
                families: vec![fam],
            }),
        }
    }
    out
}

fn family_members(step: f64, alpha_max: f64, fam: Family) -> impl Iterator<Item = (f64, Family)> {
    (1..)
        .map(move |n| (n as f64 * step, fam))
        .take_while(move |&(x, _)| x <= alpha_max * (1.0 + 1e-12))
}

/// Zeros in `(0, alpha_max]` of the determinant factors of the printed
/// matching system, sorted, with coincident values merged.
pub fn eigenvalue_candidates(prm: &ModelParams, alpha_max: f64) -> Result<Vec<Candidate>> {
    prm.validate_geometry()?;
    if !(alpha_max > 0.0) {
        return Err(Error::InvalidInput(format!("alpha_max = {alpha_max} must be positive")));
    }
    let (ll, rr, a) = (prm.left, prm.right, prm.cost);
    let raw = family_members(PI / a, alpha_max, Family::Cost)
        .chain(family_members(2.0 * PI / (2.0 * ll - a), alpha_max, Family::Left))
        .chain(family_members(2.0 * PI / (2.0 * rr - a), alpha_max, Family::Right))
        .collect();
    Ok(merge_candidates(raw))
}

/// Candidate frequencies for either coupling sign.
pub fn eigenvalue_candidates_for(
    prm: &ModelParams,
    alpha_max: f64,
    sign: CouplingSign,
) -> Result<Vec<Candidate>> {
    match sign {
        CouplingSign::Printed => eigenvalue_candidates(prm, alpha_max),
        CouplingSign::Dynamic => {
            prm.validate_geometry()?;
            if !(alpha_max > 0.0) {
                return Err(Error::InvalidInput(format!("alpha_max = {alpha_max} must be positive")));
            }
            let step = PI / (prm.length() - prm.cost);
            Ok(merge_candidates(family_members(step, alpha_max, Family::Glued).collect()))
        }
    }
}

/// Matching system in the unknowns `(c1, c2, d, e)` of the ansatz
/// `c1 sin αx + c2 cos αx` on `(-a, a)`, `d cos α(B-x)` on `(a, B)` and
/// `e cos α(A+x)` on `(-A, -a)`.
pub fn matching_matrix(alpha: f64, prm: &ModelParams, sign: CouplingSign) -> Matrix4<f64> {
    let s = sign.value();
    let (ll, rr, a) = (prm.left, prm.right, prm.cost);
    let (sa, ca) = (alpha * a).sin_cos();
    Matrix4::new(
        -sa, -ca - s, (alpha * (rr - a)).cos(), 0.0,
        -sa, ca + s, 0.0, -(alpha * (ll - a)).cos(),
        1.0 - ca, sa, (alpha * (rr - a)).sin(), 0.0,
        ca - 1.0, sa, 0.0, (alpha * (ll - a)).sin(),
    )
}

/// `amp_sin sin(αx) + amp_cos cos(αx)` on one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    pub amp_sin: f64,
    pub amp_cos: f64,
}

impl Branch {
    pub fn value(&self, alpha: f64, x: f64) -> f64 {
        let (s, c) = (alpha * x).sin_cos();
        self.amp_sin * s + self.amp_cos * c
    }

    pub fn slope(&self, alpha: f64, x: f64) -> f64 {
        let (s, c) = (alpha * x).sin_cos();
        alpha * (self.amp_sin * c - self.amp_cos * s)
    }

    pub fn antiderivative(&self, alpha: f64, x: f64) -> f64 {
        let (s, c) = (alpha * x).sin_cos();
        (self.amp_cos * s - self.amp_sin * c) / alpha
    }
}

/// Branches on `(-A, -a)`, `(-a, a)`, `(a, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenfunction {
    pub left: Branch,
    pub middle: Branch,
    pub right: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub alpha: f64,
    pub mu: f64,
    pub dim: usize,
    pub basis: Vec<Eigenfunction>,
    pub families: Vec<Family>,
    /// Case number of the symmetric classification, when `A = B = 1`.
    pub case: Option<u8>,
    pub params: ModelParams,
    pub sign: CouplingSign,
}

/// Row-reduces `rows` in place (partial pivoting) and drops zero rows.
fn rref(rows: &mut Vec<[f64; 4]>) {
    let mut lead = 0;
    let mut r = 0;
    while r < rows.len() && lead < 4 {
        let piv = (r..rows.len())
            .max_by(|&i, &j| rows[i][lead].abs().total_cmp(&rows[j][lead].abs()))
            .unwrap();
        if rows[piv][lead].abs() < 1e-12 {
            lead += 1;
            continue;
        }
        rows.swap(r, piv);
        let p = rows[r][lead];
        for v in rows[r].iter_mut() {
            *v /= p;
        }
        let pivot = rows[r];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r {
                let f = row[lead];
                for (v, pv) in row.iter_mut().zip(pivot) {
                    *v -= f * pv;
                }
            }
        }
        r += 1;
        lead += 1;
    }
    rows.truncate(r);
}

fn eigenfunction_from(coef: [f64; 4], alpha: f64, prm: &ModelParams) -> Eigenfunction {
    // coef in (d, e, c1, c2) order
    let [d, e, c1, c2] = coef;
    let (sb, cb) = (alpha * prm.right).sin_cos();
    let (sl, cl) = (alpha * prm.left).sin_cos();
    Eigenfunction {
        left: Branch {
            amp_sin: -e * sl,
            amp_cos: e * cl,
        },
        middle: Branch {
            amp_sin: c1,
            amp_cos: c2,
        },
        right: Branch {
            amp_sin: d * sb,
            amp_cos: d * cb,
        },
    }
}

fn is_symmetric_unit(prm: &ModelParams) -> bool {
    prm.left == 1.0 && prm.right == 1.0
}

fn families_of(alpha: f64, prm: &ModelParams, sign: CouplingSign) -> Vec<Family> {
    let tol = 1e-9 * alpha.max(1.0);
    let hit = |step: f64| {
        let n = (alpha / step).round();
        n >= 1.0 && (alpha - n * step).abs() <= tol
    };
    let (ll, rr, a) = (prm.left, prm.right, prm.cost);
    match sign {
        CouplingSign::Printed => [
            (PI / a, Family::Cost),
            (2.0 * PI / (2.0 * ll - a), Family::Left),
            (2.0 * PI / (2.0 * rr - a), Family::Right),
        ]
        .into_iter()
        .filter(|&(step, _)| hit(step))
        .map(|(_, f)| f)
        .collect(),
        CouplingSign::Dynamic => {
            if hit(PI / (prm.length() - a)) {
                vec![Family::Glued]
            } else {
                vec![]
            }
        }
    }
}

/// Null space of the matching system at `alpha`, or `None` when trivial.
pub fn matching_rank(alpha: f64, prm: &ModelParams) -> Option<EigenPair> {
    matching_rank_signed(alpha, prm, CouplingSign::Printed)
}

pub fn matching_rank_signed(alpha: f64, prm: &ModelParams, sign: CouplingSign) -> Option<EigenPair> {
    if !(alpha > 0.0) {
        return None;
    }
    let m = matching_matrix(alpha, prm, sign);
    let svd = m.svd(false, true);
    let v_t = svd.v_t?;
    let smax = svd.singular_values.max();
    let mut rows: Vec<[f64; 4]> = (0..4)
        .filter(|&i| svd.singular_values[i] <= RANK_TOL * smax)
        .map(|i| {
            let v = v_t.row(i);
            [v[2], v[3], v[0], v[1]]
        })
        .collect();
    if rows.is_empty() {
        return None;
    }
    rref(&mut rows);
    let basis: Vec<Eigenfunction> = rows
        .into_iter()
        .map(|mut c| {
            let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for v in c.iter_mut() {
                *v /= scale;
                if v.abs() < 1e-14 {
                    *v = 0.0;
                }
            }
            eigenfunction_from(c, alpha, prm)
        })
        .collect();
    let dim = basis.len();
    let case = if is_symmetric_unit(prm) && sign == CouplingSign::Printed {
        symmetric_case(alpha, prm.cost).map(|(c, _)| c)
    } else {
        None
    };
    Some(EigenPair {
        alpha,
        mu: -alpha * alpha,
        dim,
        basis,
        families: families_of(alpha, prm, sign),
        case,
        params: *prm,
        sign,
    })
}

impl EigenPair {
    fn member(&self, index: usize) -> Result<&Eigenfunction> {
        self.basis.get(index).ok_or(Error::IndexOutOfRange {
            index,
            dim: self.dim,
        })
    }

    /// Branch used at `x`; the closed middle interval wins at `±a`.
    fn branch_at(f: &Eigenfunction, x: f64, a: f64) -> &Branch {
        if x < -a {
            &f.left
        } else if x > a {
            &f.right
        } else {
            &f.middle
        }
    }

    pub fn eval(&self, index: usize, x: f64) -> Result<f64> {
        check_domain(x, &self.params)?;
        let f = self.member(index)?;
        Ok(Self::branch_at(f, x, self.params.cost).value(self.alpha, x))
    }

    pub fn slope(&self, index: usize, x: f64) -> Result<f64> {
        check_domain(x, &self.params)?;
        let f = self.member(index)?;
        Ok(Self::branch_at(f, x, self.params.cost).slope(self.alpha, x))
    }

    /// Residuals of `[g]_a - s g(0)`, `[g]_{-a} + s g(0)`, `[g']_a + g'(0)`,
    /// `[g']_{-a} - g'(0)` evaluated from the branch formulas.
    pub fn jump_residuals(&self, index: usize) -> Result<[f64; 4]> {
        let f = self.member(index)?;
        let (al, a, s) = (self.alpha, self.params.cost, self.sign.value());
        let g0 = f.middle.value(al, 0.0);
        let gx0 = f.middle.slope(al, 0.0);
        Ok([
            f.right.value(al, a) - f.middle.value(al, a) - s * g0,
            f.middle.value(al, -a) - f.left.value(al, -a) + s * g0,
            f.right.slope(al, a) - f.middle.slope(al, a) + gx0,
            f.middle.slope(al, -a) - f.left.slope(al, -a) - gx0,
        ])
    }

    /// `g'(-A)` and `g'(B)`.
    pub fn neumann_residuals(&self, index: usize) -> Result<[f64; 2]> {
        let f = self.member(index)?;
        Ok([
            f.left.slope(self.alpha, -self.params.left),
            f.right.slope(self.alpha, self.params.right),
        ])
    }

    /// `∫_{-A}^0 g` and `∫_0^B g` from the closed-form antiderivatives.
    pub fn side_masses(&self, index: usize) -> Result<(f64, f64)> {
        let f = self.member(index)?;
        let (al, a, ll, rr) = (self.alpha, self.params.cost, self.params.left, self.params.right);
        let span = |b: &Branch, lo: f64, hi: f64| b.antiderivative(al, hi) - b.antiderivative(al, lo);
        Ok((
            span(&f.left, -ll, -a) + span(&f.middle, -a, 0.0),
            span(&f.middle, 0.0, a) + span(&f.right, a, rr),
        ))
    }
}

pub fn eigenfunction_eval(e: &EigenPair, basis_index: usize, x: f64) -> Result<f64> {
    e.eval(basis_index, x)
}

/// The first `count` eigenpairs accepted by the rank test, scanning the
/// candidate frequencies for `sign` in increasing order.
pub fn eigenpairs(prm: &ModelParams, count: usize, sign: CouplingSign) -> Result<Vec<EigenPair>> {
    prm.validate_geometry()?;
    let mut out = Vec::with_capacity(count);
    let mut alpha_max = 4.0 * PI / prm.cost.min(prm.length() - prm.cost);
    while out.len() < count {
        out.clear();
        for c in eigenvalue_candidates_for(prm, alpha_max, sign)? {
            if let Some(e) = matching_rank_signed(c.alpha, prm, sign) {
                out.push(e);
                if out.len() == count {
                    break;
                }
            }
        }
        alpha_max *= 2.0;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricClass {
    pub alpha: f64,
    /// `None` when the predicates admit no eigenfunction.
    pub case: Option<u8>,
    pub dim: usize,
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= TRIG_TOL
}

/// Case and dimension at frequency `alpha` for `A = B = 1`.
fn symmetric_case(alpha: f64, a: f64) -> Option<(u8, usize)> {
    let (s1, c1) = alpha.sin_cos();
    let (sa, ca) = (alpha * a).sin_cos();
    if near(c1, 0.0) {
        if !near(sa, 0.0) {
            None
        } else if near(ca, 1.0) {
            Some((1, 1))
        } else {
            Some((2, 2))
        }
    } else if near(sa, 0.0) && near(ca, -1.0) {
        Some((3, 1))
    } else if near(ca, 1.0) {
        if near(s1, 0.0) {
            Some((5, 2))
        } else {
            Some((4, 1))
        }
    } else if !near(sa, 0.0) {
        Some((6, 2))
    } else {
        None
    }
}

/// Classifies the first `n_max` candidate frequencies for `A = B = 1` by the
/// trigonometric predicates on `cos α`, `sin αa`, `cos αa` and `sin α`.
pub fn classify_symmetric(a: f64, n_max: usize) -> Result<Vec<SymmetricClass>> {
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::InvalidParams(format!("classification needs 0 < a < 1/2, got a = {a}")));
    }
    let prm = ModelParams::new(1.0, 1.0, a)?;
    let mut alpha_max = 4.0 * PI / a;
    loop {
        let cands = eigenvalue_candidates(&prm, alpha_max)?;
        if cands.len() >= n_max {
            return Ok(cands
                .into_iter()
                .take(n_max)
                .map(|c| match symmetric_case(c.alpha, a) {
                    Some((case, dim)) => SymmetricClass {
                        alpha: c.alpha,
                        case: Some(case),
                        dim,
                    },
                    None => SymmetricClass {
                        alpha: c.alpha,
                        case: None,
                        dim: 0,
                    },
                })
                .collect());
        }
        alpha_max *= 2.0;
    }
}

/// Dense discretization of `L` about the equilibrium root `p0` (geometry
/// shifted so that `p0` plays the role of 0).
pub fn assemble_discrete_operator_at(grid: &Grid, p0: f64, sign: CouplingSign) -> Result<DMatrix<f64>> {
    let prm = &grid.params;
    let h = grid.h;
    if h > prm.cost / 8.0 {
        return Err(Error::InvalidParams(format!(
            "grid spacing {h} does not resolve a = {} (need h <= a/8)",
            prm.cost
        )));
    }
    let n = grid.n;
    let a = prm.cost;
    let mut m = DMatrix::zeros(n, n);
    let w = 1.0 / (h * h);
    m[(0, 0)] = -2.0 * w;
    m[(0, 1)] = 2.0 * w;
    m[(n - 1, n - 1)] = -2.0 * w;
    m[(n - 1, n - 2)] = 2.0 * w;
    for i in 1..n - 1 {
        m[(i, i - 1)] = w;
        m[(i, i)] = -2.0 * w;
        m[(i, i + 1)] = w;
    }

    let value0 = grid.value_functional(p0)?;
    let slope0 = grid.derivative_functional(p0, 1)?;

    // -g_x(p0) [δ_{p0-a} - δ_{p0+a}]
    let mut delta = vec![0.0; n];
    for (c, sgn) in [(p0 - a, 1.0), (p0 + a, -1.0)] {
        let (i, wl, wr) = grid.hat(c)?;
        delta[i] += sgn * wl;
        delta[i + 1] += sgn * wr;
    }
    // s g(p0) [δ'_{p0-a} - δ'_{p0+a}], δ'_c = (hat(c - h/2) - hat(c + h/2)) / h
    let mut dipole = vec![0.0; n];
    for (c, sgn) in [(p0 - a, 1.0), (p0 + a, -1.0)] {
        for (shift, sd) in [(-0.5 * h, 1.0), (0.5 * h, -1.0)] {
            let (i, wl, wr) = grid.hat(c + shift)?;
            dipole[i] += sgn * sd * wl / h;
            dipole[i + 1] += sgn * sd * wr / h;
        }
    }
    let s = sign.value();
    for (row, (&dl, &dp)) in delta.iter().zip(&dipole).enumerate() {
        if dl != 0.0 {
            for &(k, c) in &slope0 {
                m[(row, k)] -= dl * c;
            }
        }
        if dp != 0.0 {
            for &(k, c) in &value0 {
                m[(row, k)] += s * dp * c;
            }
        }
    }
    Ok(m)
}

/// Dense discretization of the printed `L` about 0.
pub fn assemble_discrete_operator(grid: &Grid, prm: &ModelParams) -> Result<DMatrix<f64>> {
    if grid.params != *prm {
        return Err(Error::InvalidParams("grid and parameters disagree".into()));
    }
    assemble_discrete_operator_at(grid, 0.0, CouplingSign::Printed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexEig {
    pub re: f64,
    pub im: f64,
}

impl ComplexEig {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// The `k` eigenvalues of smallest magnitude of a dense general matrix.
pub fn discrete_spectrum(m: &DMatrix<f64>, k: usize) -> Result<Vec<ComplexEig>> {
    if !m.is_square() {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if k > m.nrows() {
        return Err(Error::InvalidInput(format!("k = {k} exceeds dimension {}", m.nrows())));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100 * m.nrows()).ok_or(Error::ConvergenceFailure)?;
    let mut eig: Vec<ComplexEig> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| ComplexEig { re: z.re, im: z.im })
        .collect();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    eig.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    eig.truncate(k);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;

    fn sym() -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.4).unwrap()
    }

    #[test]
    fn kernel_basis_examples() {
        let kb = kernel_basis(&sym()).unwrap();
        assert_eq!(kb.g0(0.7), 0.4);
        assert_eq!(kb.h0(0.2), 1.0);
        assert_eq!(kb.h0(0.7), 2.0);
        assert_eq!(kb.g0(0.0), 0.0);
        assert_eq!(kb.g0(-0.9), -0.4);
    }

    #[test]
    fn spectral_gap_examples() {
        assert!((spectral_gap(&sym()) - 15.4213).abs() < 1e-3);
        let asym = ModelParams::new(1.0, 2.0, 0.4).unwrap();
        assert!((spectral_gap(&asym) - 3.0462).abs() < 1e-3);
        let swapped = ModelParams::new(2.0, 1.0, 0.4).unwrap();
        assert_eq!(spectral_gap(&asym), spectral_gap(&swapped));
    }

    #[test]
    fn candidate_examples() {
        let c = eigenvalue_candidates(&sym(), 10.0).unwrap();
        assert!((c[0].alpha - 3.9270).abs() < 1e-4);
        let double = c.iter().find(|c| (c.alpha - 7.8540).abs() < 1e-4).unwrap();
        assert!(double.families.contains(&Family::Cost));
        assert!(double.families.len() >= 2);
        // A = B: left and right families coincide
        assert!(c.iter().all(|c| c.families.contains(&Family::Left) == c.families.contains(&Family::Right)));
        assert!(eigenvalue_candidates(&sym(), 0.0).is_err());
    }

    #[test]
    fn matching_rank_examples() {
        let e = matching_rank(2.0 * PI / 1.6, &sym()).unwrap();
        assert_eq!(e.dim, 2);
        assert_eq!(e.case, Some(6));
        // the first basis member's right branch is cos(α(1 - x))
        for &x in &[0.45, 0.7, 0.99] {
            let want = (e.alpha * (1.0 - x)).cos();
            assert!((e.eval(0, x).unwrap() - want).abs() < 1e-12);
        }

        let e = matching_rank(PI / 0.4, &sym()).unwrap();
        assert!(e.dim >= 1);
        // some member is a multiple of cos(αx) in the middle
        assert!(e.basis.iter().any(|f| f.middle.amp_sin.abs() < 1e-10 && f.middle.amp_cos.abs() > 1e-3));

        assert!(matching_rank(1.0, &sym()).is_none());
    }

    #[test]
    fn eval_errors() {
        let e = matching_rank(2.0 * PI / 1.6, &sym()).unwrap();
        assert!(matches!(e.eval(0, 1.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(e.eval(2, 0.0), Err(Error::IndexOutOfRange { index: 2, dim: 2 })));
    }

    #[test]
    fn eigenpairs_satisfy_conditions_and_zero_mass() {
        for prm in [sym(), ModelParams::new(1.0, 2.0, 0.4).unwrap(), ModelParams::new(0.7, 1.3, 0.25).unwrap()] {
            for sign in [CouplingSign::Printed, CouplingSign::Dynamic] {
                for e in eigenpairs(&prm, 8, sign).unwrap() {
                    for k in 0..e.dim {
                        for r in e.jump_residuals(k).unwrap() {
                            assert!(r.abs() < 1e-10, "{prm:?} {sign:?} α={} {r}", e.alpha);
                        }
                        for r in e.neumann_residuals(k).unwrap() {
                            assert!(r.abs() < 1e-10);
                        }
                        let (m1, m2) = e.side_masses(k).unwrap();
                        assert!(m1.abs() < 1e-10 && m2.abs() < 1e-10, "{m1} {m2}");
                    }
                }
            }
        }
    }

    #[test]
    fn every_candidate_is_accepted() {
        for prm in [sym(), ModelParams::new(1.0, 2.0, 0.4).unwrap()] {
            for sign in [CouplingSign::Printed, CouplingSign::Dynamic] {
                for c in eigenvalue_candidates_for(&prm, 40.0, sign).unwrap() {
                    assert!(matching_rank_signed(c.alpha, &prm, sign).is_some(), "{sign:?} {}", c.alpha);
                }
            }
        }
    }

    #[test]
    fn dynamic_gap_is_first_dynamic_frequency() {
        for prm in [sym(), ModelParams::new(1.0, 2.0, 0.4).unwrap()] {
            let e = &eigenpairs(&prm, 1, CouplingSign::Dynamic).unwrap()[0];
            assert!((e.alpha.powi(2) - dynamic_spectral_gap(&prm)).abs() < 1e-9);
        }
        assert!((dynamic_spectral_gap(&sym()) - (PI / 1.6).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn classification_matches_rank() {
        for &a in &[0.4, 0.1, 0.25, 0.3, 0.37, 0.45, 0.2] {
            let prm = ModelParams::new(1.0, 1.0, a).unwrap();
            for cls in classify_symmetric(a, 12).unwrap() {
                let dim = matching_rank(cls.alpha, &prm).map_or(0, |e| e.dim);
                assert_eq!(dim, cls.dim, "a={a} α={} case {:?}", cls.alpha, cls.case);
            }
        }
        let c = classify_symmetric(0.4, 4).unwrap();
        assert_eq!(c[0].case, Some(6));
        assert_eq!(c[0].dim, 2);
        assert!(matches!(c[1].case, Some(2) | Some(3)));
        assert!(classify_symmetric(0.6, 3).is_err());
    }

    #[test]
    fn discrete_operator_annihilates_kernel() {
        let prm = sym();
        let g = Grid::new(prm, 401).unwrap();
        let m = assemble_discrete_operator(&g, &prm).unwrap();
        let kb = kernel_basis(&prm).unwrap();
        for f in [
            GridFunction::sample(g, |x| kb.g0(x)),
            GridFunction::sample(g, |x| kb.h0(x)),
        ] {
            let v = nalgebra::DVector::from_vec(f.values);
            let r = &m * v;
            assert!(r.amax() <= 10.0 * g.h, "{}", r.amax());
        }
        // constants: Laplacian part vanishes, point couplings cancel in mass
        let ones = nalgebra::DVector::from_element(g.n, 1.0);
        let r = &m * ones;
        let mass: f64 = (0..g.n).map(|i| g.weight(i) * r[i]).sum();
        assert!(mass.abs() < 1e-9);
        assert!(assemble_discrete_operator(&Grid::new(prm, 31).unwrap(), &prm).is_err());
    }

    #[test]
    fn neumann_laplacian_spectrum() {
        let prm = sym();
        let g = Grid::new(prm, 201).unwrap();
        let n = g.n;
        let w = 1.0 / (g.h * g.h);
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = -2.0 * w;
        m[(0, 1)] = 2.0 * w;
        m[(n - 1, n - 1)] = -2.0 * w;
        m[(n - 1, n - 2)] = 2.0 * w;
        for i in 1..n - 1 {
            m[(i, i - 1)] = w;
            m[(i, i)] = -2.0 * w;
            m[(i, i + 1)] = w;
        }
        let eig = discrete_spectrum(&m, 4).unwrap();
        for (k, z) in eig.iter().enumerate() {
            let want = -(k as f64 * PI / 2.0).powi(2);
            assert!((z.re - want).abs() <= 0.01 * want.abs() + 1e-8);
        }
    }

    #[test]
    fn discrete_spectrum_matches_analytic() {
        let prm = sym();
        let g = Grid::new(prm, 401).unwrap();
        let m = assemble_discrete_operator(&g, &prm).unwrap();
        let eig = discrete_spectrum(&m, 4).unwrap();
        assert!(eig[0].abs() < 1e-2 && eig[1].abs() < 1e-2, "{eig:?}");
        assert!((eig[2].re + 15.4213).abs() < 0.02 * 15.4213, "{eig:?}");
        assert!(eig[2].im.abs() < 1e-6 * 15.4213);
    }
}
