//! Uniform node-centred grid on `[-A, B]` and the grid functions living on it.
//!
//! Quadrature is the composite trapezoid rule with partial cells resolved by
//! linear interpolation, so integrals of piecewise-linear profiles whose kinks
//! sit on nodes (or on the integration limits) are exact. Point sources use
//! linear hat weights; their trapezoid mass equals the requested strength.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_domain, ModelParams};

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub params: ModelParams,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(params: ModelParams, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidParams(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        params.validate()?;
        Ok(Self::new_unchecked(params, n))
    }

    /// Skips parameter validation; used for shifted geometries in the
    /// linearized analysis.
    pub(crate) fn new_unchecked(params: ModelParams, n: usize) -> Self {
        let h = params.length() / (n - 1) as f64;
        Self { params, n, h }
    }

    /// Node coordinate; the last node is exactly `B`.
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.params.hi()
        } else {
            self.params.lo() + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Cell `i` and fraction `theta ∈ [0, 1]` with `x = x_i + theta h`.
    /// Coordinates within 1e-9 h of a node snap to it.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let u = (x - self.params.lo()) / self.h;
        let nearest = u.round();
        let u = if (u - nearest).abs() < 1e-9 { nearest } else { u };
        let i = (u.floor().max(0.0) as usize).min(self.n - 2);
        let theta = (u - i as f64).clamp(0.0, 1.0);
        (i, theta)
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let u = ((x - self.params.lo()) / self.h).round();
        (u.max(0.0) as usize).min(self.n - 1)
    }

    /// Whether `x` coincides with a node up to 1e-9 h.
    pub fn is_node(&self, x: f64) -> bool {
        let u = (x - self.params.lo()) / self.h;
        (u - u.round()).abs() < 1e-9
    }

    /// Hat weights `(i, w_i, w_{i+1})` of a unit point mass at `c`, scaled
    /// by `1/h` so that the trapezoid mass is one.
    pub fn hat(&self, c: f64) -> Result<(usize, f64, f64)> {
        let (lo, hi) = (self.params.lo() + self.h, self.params.hi() - self.h);
        if !(c > lo && c < hi) {
            return Err(Error::OutOfDomain { x: c, lo, hi });
        }
        let (i, theta) = self.locate(c);
        Ok((i, (1.0 - theta) / self.h, theta / self.h))
    }

    /// Interpolation weights of the value functional at `x`.
    pub fn value_functional(&self, x: f64) -> Result<Vec<(usize, f64)>> {
        check_domain(x, &self.params)?;
        let (i, theta) = self.locate(x);
        Ok(vec![(i, 1.0 - theta), (i + 1, theta)])
    }

    /// Weights of the `order`-th derivative at `x` of the quadratic through
    /// the three nodes nearest to `x`.
    pub fn derivative_functional(&self, x: f64, order: u8) -> Result<Vec<(usize, f64)>> {
        check_domain(x, &self.params)?;
        let h = self.h;
        match order {
            1 => {
                let k = self.nearest(x).clamp(1, self.n - 2);
                let t = (x - self.x(k)) / h;
                // f' = [(u+ - u-)/2 + t (u+ - 2u + u-)] / h
                Ok(vec![
                    (k - 1, (-0.5 + t) / h),
                    (k, -2.0 * t / h),
                    (k + 1, (0.5 + t) / h),
                ])
            }
            2 => {
                let dist = (x - self.params.lo()).min(self.params.hi() - x);
                if dist < 2.0 * h * (1.0 - 1e-9) {
                    return Err(Error::TooCloseToBoundary { x });
                }
                let k = self.nearest(x).clamp(1, self.n - 2);
                let w = 1.0 / (h * h);
                Ok(vec![(k - 1, w), (k, -2.0 * w), (k + 1, w)])
            }
            _ => Err(Error::InvalidInput(format!(
                "derivative order must be 1 or 2, got {order}"
            ))),
        }
    }
}

pub fn make_grid(params: ModelParams, n: usize) -> Result<Grid> {
    Grid::new(params, n)
}

/// Nodal values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
}

impl Norms {
    pub fn get(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2 => self.l2,
            NormKind::Linf => self.linf,
            NormKind::H1 => self.h1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L2,
    Linf,
    H1,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                grid.n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n],
        }
    }

    /// Pointwise evaluation of `f` at the nodes.
    pub fn sample(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    /// Piecewise-linear interpolant at `x`.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        check_domain(x, &self.grid.params)?;
        Ok(self.interp_unchecked(x))
    }

    pub(crate) fn interp_unchecked(&self, x: f64) -> f64 {
        let (i, theta) = self.grid.locate(x);
        if theta == 0.0 {
            return self.values[i];
        }
        (1.0 - theta) * self.values[i] + theta * self.values[i + 1]
    }

    /// Trapezoid value of `∫_lo^hi f`, splitting the partial end cells.
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        let prm = &self.grid.params;
        check_domain(lo, prm)?;
        check_domain(hi, prm)?;
        if hi < lo {
            return Err(Error::InvalidInput(format!(
                "integration limits out of order: {lo} > {hi}"
            )));
        }
        if hi == lo {
            return Ok(0.0);
        }
        let g = &self.grid;
        let (i, _) = g.locate(lo);
        let (j, tj) = g.locate(hi);
        let (flo, fhi) = (self.interp_unchecked(lo), self.interp_unchecked(hi));
        if i == j || (j == i + 1 && tj == 0.0) {
            return Ok(0.5 * (hi - lo) * (flo + fhi));
        }
        let u = &self.values;
        // lo .. x_{i+1}
        let mut total = 0.5 * (g.x(i + 1) - lo) * (flo + u[i + 1]);
        // full cells x_{i+1} .. x_j
        for k in (i + 1)..j {
            total += 0.5 * (g.x(k + 1) - g.x(k)) * (u[k] + u[k + 1]);
        }
        // x_j .. hi
        total += 0.5 * (hi - g.x(j)) * (u[j] + fhi);
        Ok(total)
    }

    /// Trapezoid integral over the whole interval.
    pub fn total(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.weight(i) * v)
            .sum()
    }

    /// Derivative of the local quadratic through the three nearest nodes.
    pub fn derivative_at(&self, x: f64, order: u8) -> Result<f64> {
        let w = self.grid.derivative_functional(x, order)?;
        Ok(w.iter().map(|&(k, c)| c * self.values[k]).sum())
    }

    /// `strength` times the hat-discretized point mass at `c`.
    pub fn deposit_delta(grid: Grid, c: f64, strength: f64) -> Result<Self> {
        let mut f = Self::zeros(grid);
        f.add_delta(c, strength)?;
        Ok(f)
    }

    pub fn add_delta(&mut self, c: f64, strength: f64) -> Result<()> {
        let (i, wl, wr) = self.grid.hat(c)?;
        self.values[i] += strength * wl;
        if wr != 0.0 {
            self.values[i + 1] += strength * wr;
        }
        Ok(())
    }

    /// `strength` times the discretized distributional derivative `δ'(x - c)`:
    /// a divided difference of hats at `c ∓ h/2`. Its trapezoid pairing with
    /// a sampled `φ` is `-strength` times the centred difference of the
    /// interpolant of `φ` at `c`.
    pub fn add_dipole(&mut self, c: f64, strength: f64) -> Result<()> {
        let h = self.grid.h;
        self.add_delta(c - 0.5 * h, strength / h)?;
        self.add_delta(c + 0.5 * h, -strength / h)
    }

    pub fn norms(&self) -> Norms {
        let g = &self.grid;
        let l2sq: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| g.weight(i) * v * v)
            .sum();
        let linf = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let grad_sq: f64 = self
            .values
            .windows(2)
            .map(|w| {
                let d = (w[1] - w[0]) / g.h;
                g.h * d * d
            })
            .sum();
        Norms {
            l2: l2sq.sqrt(),
            linf,
            h1: (l2sq + grad_sq).sqrt(),
        }
    }

    /// Elementwise `self - other`; both must live on the same grid.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &GridFunction, op: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("grid functions live on different grids".into()));
        }
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    /// Writes `x,value` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,value")?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(w, "{x},{v}")?;
        }
        Ok(())
    }

    /// Reads an `x,value` CSV. The nodes must form the uniform grid of
    /// `params` (checked to 1e-9 relative to the spacing).
    pub fn read_csv<R: BufRead>(r: R, params: ModelParams) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::InvalidInput(format!("line {}: missing column", lineno + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))
            };
            xs.push(parse(parts.next())?);
            vs.push(parse(parts.next())?);
        }
        let grid = Grid::new(params, xs.len())?;
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.x(i)).abs() > 1e-9 * grid.h {
                return Err(Error::InvalidInput(format!(
                    "row {i}: x = {x} does not match node {}",
                    grid.x(i)
                )));
            }
        }
        GridFunction::new(grid, vs)
    }
}
