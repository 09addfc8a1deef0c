//! Least-squares power-law fits in log-log coordinates.

use crate::error::{Error, Result};

/// `value ≈ prefactor · distance^exponent`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// root-mean-square residual of `ln value`
    pub rms_residual: f64,
}

/// Log-space residuals below this are accepted whatever the `R²`: a nearly
/// flat power law has almost no variance for `R²` to explain.
const RMS_ACCEPT: f64 = 1e-3;

pub fn fit_power_law(distance: &[f64], value: &[f64]) -> Result<PowerLawFit> {
    if distance.len() != value.len() || distance.len() < 3 {
        return Err(Error::Invalid(
            "power-law fit needs at least three (distance, value) pairs".into(),
        ));
    }
    let mut xs = Vec::with_capacity(distance.len());
    let mut ys = Vec::with_capacity(distance.len());
    for (&t, &v) in distance.iter().zip(value) {
        if !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite()) {
            return Err(Error::Invalid(format!(
                "power-law fit needs positive finite data, got ({t}, {v})"
            )));
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        rms_residual: (sse / n).sqrt(),
    })
}

/// Fits and rejects the result as inconclusive when both `R² < threshold`
/// and the log residuals exceed `1e-3`.
pub fn fit_checked(
    distance: &[f64],
    value: &[f64],
    threshold: f64,
    what: &'static str,
) -> Result<PowerLawFit> {
    let fit = fit_power_law(distance, value)?;
    if fit.r_squared < threshold && fit.rms_residual > RMS_ACCEPT {
        return Err(Error::Inconclusive {
            what,
            r_squared: fit.r_squared,
            threshold,
        });
    }
    Ok(fit)
}

/// `1 − 2^{−k}` distances, i.e. `2^{−k}` for `k` in `lo..=hi`.
pub fn geometric_distances(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}
