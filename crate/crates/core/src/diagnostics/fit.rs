use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{ScalarField, SpectralGrid};

/// Least-squares fits of `log value` against `log(1+t)` and against `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub power_slope: f64,
    pub power_rms: f64,
    pub exp_slope: f64,
    pub exp_rms: f64,
    pub points: usize,
}

impl DecayFit {
    /// The power law is rejected when the exponential model explains the
    /// series strictly better.
    pub fn power_law_accepted(&self) -> bool {
        self.power_rms <= self.exp_rms
    }
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

/// Fits the samples with `t` inside `window` (inclusive).
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    if pts.len() < 3 {
        return Err(Error::invalid(format!(
            "decay fit needs at least 3 samples in [{}, {}], got {}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("decay fit needs positive values, got {v} at t = {t}")));
    }
    if pts.iter().any(|(t, _)| *t <= -1.0) {
        return Err(Error::invalid("decay fit needs t > -1"));
    }
    let logv: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let t: Vec<f64> = pts.iter().map(|(t, _)| *t).collect();
    let logt: Vec<f64> = t.iter().map(|t| t.ln_1p()).collect();
    let (power_slope, power_rms) = line_fit(&logt, &logv);
    let (exp_slope, exp_rms) = line_fit(&t, &logv);
    Ok(DecayFit {
        power_slope,
        power_rms,
        exp_slope,
        exp_rms,
        points: pts.len(),
    })
}

/// Ratio `‖∇^m g‖ / (‖∇^{m+1} g‖^{1−θ} ‖g‖_{Ḃ^{−s}_{2,∞}}^θ)` with
/// `θ = 1/(m+1+s)`; the interpolation inequality says it stays bounded.
pub fn interpolation_ratio(grid: &SpectralGrid, g: &ScalarField, m: usize, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::invalid(format!("Besov exponent must be positive, got {s}")));
    }
    let theta = 1.0 / (m as f64 + 1.0 + s);
    let lhs = grid.homogeneous_norm_sq(g, m).sqrt();
    let top = grid.homogeneous_norm_sq(g, m + 1).sqrt();
    let low = grid.besov_block_norm(g, s);
    let den = top.powf(1.0 - theta) * low.powf(theta);
    if den == 0.0 {
        return Err(Error::invalid("field has no nonzero modes"));
    }
    Ok(lhs / den)
}
