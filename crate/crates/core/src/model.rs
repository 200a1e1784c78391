//! Problem geometry and the two-parameter family of stationary states.
//!
//! Stationary states are piecewise linear: flat at `lambda0 * a` left of
//! `p0 - a`, linear with slope `-lambda0` on `(p0 - a, p0 + a)` and flat at
//! `-lambda0 * a` right of `p0 + a`. They are equivalently labelled by the two
//! side masses, which the dynamics conserve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for comparisons of closed-form quantities.
pub const REL_TOL: f64 = 1e-12;

fn unit_diffusion() -> f64 {
    1.0
}

/// Interval `[-A, B]`, transaction cost `a` and diffusion scale `D`.
///
/// The dynamics are always integrated with unit diffusion; a non-unit `D`
/// only rescales reported times (`t_physical = t / D`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(rename = "A")]
    pub left: f64,
    #[serde(rename = "B")]
    pub right: f64,
    #[serde(rename = "a")]
    pub cost: f64,
    #[serde(rename = "D", default = "unit_diffusion")]
    pub diffusion: f64,
}

impl ModelParams {
    pub fn new(left: f64, right: f64, cost: f64) -> Result<Self> {
        let p = Self {
            left,
            right,
            cost,
            diffusion: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks `A, B, a > 0`, `a < min(A/2, B/2)` and `D > 0`.
    pub fn validate(&self) -> Result<()> {
        let all = [self.left, self.right, self.cost, self.diffusion];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.left <= 0.0 {
            return Err(Error::InvalidParams(format!("A = {} must be > 0", self.left)));
        }
        if self.right <= 0.0 {
            return Err(Error::InvalidParams(format!("B = {} must be > 0", self.right)));
        }
        if self.cost <= 0.0 {
            return Err(Error::InvalidParams(format!("a = {} must be > 0", self.cost)));
        }
        let half_min = 0.5 * self.left.min(self.right);
        if self.cost >= half_min {
            return Err(Error::InvalidParams(format!(
                "a = {} must be < min(A/2, B/2) = {}",
                self.cost, half_min
            )));
        }
        if self.diffusion <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "D = {} must be > 0",
                self.diffusion
            )));
        }
        Ok(())
    }

    /// Weaker check for the linearized analysis about a shifted root:
    /// finite values with `0 < a < min(A, B)`.
    pub fn validate_geometry(&self) -> Result<()> {
        let all = [self.left, self.right, self.cost];
        if all.iter().any(|v| !v.is_finite()) || self.cost <= 0.0 {
            return Err(Error::InvalidParams("parameters must be finite with a > 0".into()));
        }
        if self.cost >= self.left.min(self.right) {
            return Err(Error::InvalidParams(format!(
                "a = {} must be < min(A, B) = {}",
                self.cost,
                self.left.min(self.right)
            )));
        }
        Ok(())
    }

    /// Left endpoint `-A`.
    pub fn lo(&self) -> f64 {
        -self.left
    }

    /// Right endpoint `B`.
    pub fn hi(&self) -> f64 {
        self.right
    }

    pub fn length(&self) -> f64 {
        self.left + self.right
    }

    /// Open interval `(-A + a, B - a)` in which the free boundary must stay.
    pub fn price_range(&self) -> (f64, f64) {
        (-self.left + self.cost, self.right - self.cost)
    }

    /// Geometry seen from a free boundary at `p0`: the interval becomes
    /// `[-(A + p0), B - p0]`. The result only satisfies `A', B' > a`, not the
    /// full `validate` constraint, and is meant for the linearized analysis.
    pub fn centered_at(&self, p0: f64) -> Self {
        Self {
            left: self.left + p0,
            right: self.right - p0,
            ..*self
        }
    }
}

/// A stationary state, labelled by its root `p0` and flux `lambda0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub p0: f64,
    pub lambda0: f64,
}

impl Equilibrium {
    /// Validated constructor: `p0 ∈ (-A + a, B - a)`, `lambda0 > 0`.
    pub fn new(p0: f64, lambda0: f64, prm: &ModelParams) -> Result<Self> {
        let (lo, hi) = prm.price_range();
        if !(p0 > lo && p0 < hi) {
            return Err(Error::InvalidParams(format!(
                "p0 = {p0} must lie in ({lo}, {hi})"
            )));
        }
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "lambda0 = {lambda0} must be positive"
            )));
        }
        Ok(Self { p0, lambda0 })
    }

    /// Value of the stationary profile at `x`, without a domain check.
    pub fn value(&self, x: f64, cost: f64) -> f64 {
        if x <= self.p0 - cost {
            self.lambda0 * cost
        } else if x >= self.p0 + cost {
            -self.lambda0 * cost
        } else {
            -self.lambda0 * (x - self.p0)
        }
    }

    /// Value of the stationary profile at `x ∈ [-A, B]`.
    pub fn eval(&self, x: f64, prm: &ModelParams) -> Result<f64> {
        check_domain(x, prm)?;
        Ok(self.value(x, prm.cost))
    }

    /// Side masses `m1 = ∫_{-A}^{p0} f`, `m2 = -∫_{p0}^{B} f`.
    pub fn masses(&self, prm: &ModelParams) -> MassPair {
        let a = prm.cost;
        MassPair {
            m1: self.lambda0 * a * (self.p0 - 0.5 * a + prm.left),
            m2: self.lambda0 * a * (prm.right - self.p0 - 0.5 * a),
        }
    }
}

/// Buyer-side and vendor-side masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassPair {
    pub m1: f64,
    pub m2: f64,
}

impl MassPair {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        if !(m1 > 0.0 && m2 > 0.0 && m1.is_finite() && m2.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "masses must be positive, got m1 = {m1}, m2 = {m2}"
            )));
        }
        Ok(Self { m1, m2 })
    }

    pub fn total(&self) -> f64 {
        self.m1 + self.m2
    }
}

pub fn check_domain(x: f64, prm: &ModelParams) -> Result<()> {
    if x < prm.lo() || x > prm.hi() || !x.is_finite() {
        return Err(Error::OutOfDomain {
            x,
            lo: prm.lo(),
            hi: prm.hi(),
        });
    }
    Ok(())
}

pub fn validate_params(prm: &ModelParams) -> Result<()> {
    prm.validate()
}

/// Bounds `[a/(2A+2B-3a), (2A+2B-3a)/a]` on `m1/m2`.
pub fn admissibility_bounds(prm: &ModelParams) -> (f64, f64) {
    let span = 2.0 * prm.left + 2.0 * prm.right - 3.0 * prm.cost;
    (prm.cost / span, span / prm.cost)
}

/// Whether `m1/m2` lies in the closed admissible range.
pub fn admissible(m: &MassPair, prm: &ModelParams) -> bool {
    let (lo, hi) = admissibility_bounds(prm);
    let ratio = m.m1 / m.m2;
    ratio >= lo * (1.0 - REL_TOL) && ratio <= hi * (1.0 + REL_TOL)
}

/// The unique stationary state carrying side masses `m`.
///
/// Ratios exactly on the admissibility bound are accepted with a warning:
/// the root then sits on the edge of `(-A + a, B - a)`.
pub fn equilibrium_from_masses(m: &MassPair, prm: &ModelParams) -> Result<Equilibrium> {
    let (lo, hi) = admissibility_bounds(prm);
    if !admissible(m, prm) {
        return Err(Error::NotAdmissible {
            m1: m.m1,
            m2: m.m2,
            lo,
            hi,
        });
    }
    let (a, left, right) = (prm.cost, prm.left, prm.right);
    let total = m.m1 + m.m2;
    let p0 = (-a * (m.m1 - m.m2) - 2.0 * left * m.m2 + 2.0 * right * m.m1) / (2.0 * total);
    let lambda0 = total / (a * (-a + left + right));
    let ratio = m.m1 / m.m2;
    if (ratio - lo).abs() <= REL_TOL * lo || (ratio - hi).abs() <= REL_TOL * hi {
        log::warn!(
            "mass ratio {ratio} sits on the admissibility bound; p = {p0} is on the edge of the price range"
        );
    }
    Ok(Equilibrium { p0, lambda0 })
}

pub fn masses_of_equilibrium(e: &Equilibrium, prm: &ModelParams) -> MassPair {
    e.masses(prm)
}
