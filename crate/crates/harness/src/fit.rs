use pricelab_core::solver::Trajectory;
use pricelab_core::NormKind;
use serde::Serialize;
use thiserror::Error;

/// RMS log-residual above which a fit is flagged as unreliable.
pub const FIT_RESIDUAL_FLAG: f64 = 0.05;
/// The fit window ends where the error drops below this multiple of the
/// fixed-point residual.
pub const FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("non-positive error {value} at t = {t}: the error floor was reached, shrink the window")]
    NonpositiveError { t: f64, value: f64 },
    #[error("window [{0}, {1}] holds fewer than two samples")]
    TooFewPoints(f64, f64),
}

/// Least-squares line through `(t, ln e)`: `e ≈ c_fit·exp(-gamma_fit·t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub gamma_fit: f64,
    pub c_fit: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub norm_kind: NormKind,
    pub points: usize,
}

impl DecayFit {
    pub fn flagged(&self) -> bool {
        !(self.residual <= FIT_RESIDUAL_FLAG)
    }

    pub fn relative_error(&self, gamma: f64) -> f64 {
        (self.gamma_fit - gamma).abs() / gamma
    }
}

pub fn fit_series(
    t: &[f64],
    e: &[f64],
    window: (f64, f64),
    norm_kind: NormKind,
) -> Result<DecayFit, FitError> {
    let (lo, hi) = window;
    let slack = 1e-9 * hi.abs().max(1.0);
    let mut pts = Vec::new();
    for (&ti, &ei) in t.iter().zip(e) {
        if ti < lo - slack || ti > hi + slack {
            continue;
        }
        if !(ei > 0.0) {
            return Err(FitError::NonpositiveError { t: ti, value: ei });
        }
        pts.push((ti, ei.ln()));
    }
    if pts.len() < 2 {
        return Err(FitError::TooFewPoints(lo, hi));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = sty / stt;
    let icpt = my - slope * mt;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - icpt - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        gamma_fit: -slope,
        c_fit: icpt.exp(),
        window,
        residual,
        norm_kind,
        points: pts.len(),
    })
}

pub fn fit_decay(traj: &Trajectory, norm_kind: NormKind, window: (f64, f64)) -> Result<DecayFit, FitError> {
    let t = traj.times();
    let e: Vec<f64> = traj.records.iter().map(|r| r.err.get(norm_kind)).collect();
    fit_series(&t, &e, window, norm_kind)
}

/// `[0.2/γ̂, min(t_end, 3/γ̂)]`, with the upper end pulled back to the last
/// record before the error first falls below `FLOOR_FACTOR · floor`.
pub fn default_window(traj: &Trajectory, norm_kind: NormKind, gap: f64, floor: f64) -> (f64, f64) {
    let t_end = traj.records.last().map_or(0.0, |r| r.t);
    let lo = 0.2 / gap;
    let mut hi = (3.0 / gap).min(t_end);
    let cut = FLOOR_FACTOR * floor;
    if let Some(r) = traj
        .records
        .iter()
        .find(|r| r.t >= lo && r.err.get(norm_kind) <= cut)
    {
        let before = traj
            .records
            .iter()
            .filter(|q| q.t < r.t)
            .map(|q| q.t)
            .fold(lo, f64::max);
        hi = hi.min(before);
    }
    (lo, hi.max(lo))
}
