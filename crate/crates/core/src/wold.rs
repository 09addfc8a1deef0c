//! MA(∞) representation `X_t = Σ ψ_j Z_{t−j}` of an aggregate.
//!
//! The innovation variance is `σ² = 2π exp((1/2π) ∫ log f)`. Spectra here
//! may have power-law poles at `0` and `π`, so `log f` is split as
//!
//! ```text
//! log f(λ) = e₀ log(2 sin(λ/2)) + e_π log(2 cos(λ/2)) + R(λ)
//! ```
//!
//! with `R` bounded. Both logarithms integrate to zero over `[0, π]` and have
//! the exact factors `(1 − z)^{e₀/2}` and `(1 + z)^{e_π/2}`, so only `R`
//! goes through the cepstral (FFT of log-spectrum) machinery.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{check_memory, Error, Result};
use crate::quad::{integrate, Frequency, Segment, Tolerance};
use crate::spectral::SpectralDensity;

/// MA(∞) coefficients `ψ_0 = 1, ψ_1, …, ψ_J` and innovation variance.
#[derive(Debug, Clone, PartialEq)]
pub struct MaExpansion {
    pub coeffs: Vec<f64>,
    pub innovation_variance: f64,
    /// FFT size behind the returned coefficients, 0 when no FFT was involved
    pub grid: usize,
    /// largest change of `ψ_j`, `j ≤ J/2`, when the grid was doubled
    pub alias_change: f64,
}

impl MaExpansion {
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `σ² Σ_j ψ_j ψ_{j+h}` over the retained coefficients.
    pub fn implied_acvf(&self, h: usize) -> f64 {
        let c = &self.coeffs;
        if h >= c.len() {
            return 0.0;
        }
        let s: f64 = c.iter().zip(&c[h..]).map(|(a, b)| a * b).sum();
        self.innovation_variance * s
    }

    /// `(σ²/2π) |Σ ψ_j e^{ijλ}|²`
    pub fn implied_spectrum(&self, lambda: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &p) in self.coeffs.iter().enumerate() {
            let a = j as f64 * lambda;
            re += p * a.cos();
            im += p * a.sin();
        }
        self.innovation_variance / (2.0 * PI) * (re * re + im * im)
    }

    /// Estimate of `σ² Σ_{j > J} ψ_j ψ_{j+h}`, the part of the autocovariance
    /// lost to truncation, from a power law `|ψ_j| ≈ c j^β` fitted to the
    /// last half of the coefficients. Zero when the coefficients decay
    /// faster than any power (short memory).
    pub fn acvf_tail_estimate(&self) -> f64 {
        let n = self.coeffs.len();
        if n < 16 {
            return 0.0;
        }
        let (js, vs): (Vec<f64>, Vec<f64>) = (n / 2..n)
            .filter(|&j| self.coeffs[j] != 0.0)
            .map(|j| (j as f64, self.coeffs[j].abs()))
            .unzip();
        if js.len() < 8 {
            return 0.0;
        }
        let Ok(fit) = crate::powerlaw::fit_power_law(&js, &vs) else {
            return 0.0;
        };
        let beta = fit.exponent;
        // exponential decay shows up as a steep or poorly fitting power law
        if beta < -3.0 || fit.r_squared < 0.999 {
            return 0.0;
        }
        if beta >= -0.5 {
            return f64::INFINITY;
        }
        let j = (n - 1) as f64;
        self.innovation_variance * fit.prefactor.powi(2) * j.powf(2.0 * beta + 1.0) / (-2.0 * beta - 1.0)
    }

    /// `Σ_{j > J/2} ψ_j² / Σ ψ_j²`
    pub fn tail_fraction(&self) -> f64 {
        let total: f64 = self.coeffs.iter().map(|p| p * p).sum();
        let half = self.coeffs.len() / 2;
        let tail: f64 = self.coeffs[half..].iter().map(|p| p * p).sum();
        tail / total
    }
}

/// `h_j = Γ(j+d) / (Γ(j+1) Γ(d))`, the coefficients of `(1 − z)^{−d}`.
pub fn fi_ma_coeffs(d: f64, truncation: usize) -> Result<Vec<f64>> {
    check_memory("d", d)?;
    if truncation < 1 {
        return Err(Error::domain("truncation", 0.0, "J >= 1"));
    }
    Ok(binomial_series(-d, -1.0, truncation))
}

/// Coefficients of `(1 + sign·z)^{power}` up to `z^n`.
fn binomial_series(power: f64, sign: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    for j in 1..=n {
        let jf = j as f64;
        let prev = out[j - 1];
        // (1 + sz)^p: c_j = c_{j−1} s (p − j + 1) / j
        out.push(prev * (jf - 1.0 - power) / jf * -sign);
    }
    out
}

fn convolve(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let hi = k.min(a.len().saturating_sub(1));
            (0..=hi)
                .filter(|&i| k - i < b.len())
                .map(|i| a[i] * b[k - i])
                .sum()
        })
        .collect()
}

fn frequency_on_grid(k: usize, m: usize) -> Frequency {
    // λ_k = 2πk/m folded onto [0, π], with exact distance to π
    let k = if 2 * k > m { m - k } else { k };
    let twice = 2 * k;
    if 2 * twice <= m {
        Frequency::new(2.0 * PI * k as f64 / m as f64)
    } else {
        Frequency::below_pi(PI * (m - twice) as f64 / m as f64)
    }
}

/// `R(λ) = log f − e₀ log(2 sin(λ/2)) − e_π log(2 cos(λ/2))`
fn regular_log(f: &SpectralDensity, e0: f64, epi: f64, freq: Frequency) -> Result<f64> {
    let v = f.eval_at(freq)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::NonIntegrableLog(format!(
            "f({}) = {v}",
            freq.lambda
        )));
    }
    let mut r = v.ln();
    if e0 != 0.0 {
        r -= e0 * (2.0 * freq.sin_half()).ln();
    }
    if epi != 0.0 {
        r -= epi * (2.0 * freq.cos_half()).ln();
    }
    Ok(r)
}

/// Tiny offset used to take the limit of `R` at a pole.
const POLE_OFFSET: f64 = 1e-10;

fn regular_log_limit(f: &SpectralDensity, e0: f64, epi: f64, freq: Frequency) -> Result<f64> {
    let probe = if freq.lambda == 0.0 && e0 != 0.0 {
        Frequency::new(POLE_OFFSET)
    } else if freq.to_pi == 0.0 && epi != 0.0 {
        Frequency::below_pi(POLE_OFFSET)
    } else {
        freq
    };
    regular_log(f, e0, epi, probe)
}

/// `σ² = 2π exp((1/π) ∫₀^π log f)` by adaptive quadrature of the regular
/// part `R`; the pole terms integrate to zero.
pub fn innovation_variance(f: &SpectralDensity) -> Result<f64> {
    let (e0, epi) = f.log_singularities();
    let failure = std::cell::Cell::new(None);
    let est = integrate(
        |p| {
            let freq = if p.x < 0.5 * PI {
                Frequency::new(p.x)
            } else {
                Frequency::below_pi(PI - p.x)
            };
            match regular_log(f, e0, epi, freq) {
                Ok(r) => r,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            }
        },
        &[Segment::regular(0.0, PI)],
        Tolerance::relative(1e-12).with_abs(1e-13),
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(2.0 * PI * (est?.value / PI).exp())
}

/// Cepstral coefficients `c_0..=c_n` of `R` from `m` grid samples.
fn cepstrum(samples: &[f64], n: usize) -> Vec<f64> {
    let m = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&r| Complex::new(r, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter().take(n + 1).map(|c| c.re / m as f64).collect()
}

/// Coefficients of `exp(Σ_{n≥1} c_n z^n)` up to `z^J`.
fn exp_series(c: &[f64], n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n + 1];
    a[0] = 1.0;
    let weighted: Vec<f64> = (0..=n).map(|k| k as f64 * c.get(k).copied().unwrap_or(0.0)).collect();
    for j in 1..=n {
        let s: f64 = (1..=j).map(|k| weighted[k] * a[j - k]).sum();
        a[j] = s / j as f64;
    }
    a
}

/// Default truncation `J`.
pub const DEFAULT_TRUNCATION: usize = 4096;
/// Default FFT size.
pub const DEFAULT_GRID: usize = 1 << 16;
const ALIAS_TOL: f64 = 1e-4;
const ALIAS_FLOOR: f64 = 1e-12;

/// Outer factorization of `f` by the cepstral method.
///
/// `grid` must be a power of two with `grid ≥ 8 J`. The spectrum is
/// sampled on `2·grid` points as well, and the factorization is rejected
/// with [`Error::Aliasing`] if any `ψ_j`, `j ≤ J/2`, moves by more than
/// `1e-4` relative (floor `1e-12`) between the two grids.
pub fn ma_from_spectrum(f: &SpectralDensity, truncation: usize, grid: usize) -> Result<MaExpansion> {
    if truncation < 1 {
        return Err(Error::domain("truncation", truncation as f64, "J >= 1"));
    }
    if !grid.is_power_of_two() || grid < 8 * truncation {
        return Err(Error::domain(
            "grid",
            grid as f64,
            "a power of two with grid >= 8 J",
        ));
    }
    let (e0, epi) = f.log_singularities();
    let fine_m = 2 * grid;
    // by evenness only 0..=m/2 needs evaluating
    let half: Result<Vec<f64>> = (0..=fine_m / 2)
        .into_par_iter()
        .map(|k| regular_log_limit(f, e0, epi, frequency_on_grid(k, fine_m)))
        .collect();
    let half = half?;
    let fine: Vec<f64> = (0..fine_m).map(|k| half[k.min(fine_m - k)]).collect();
    let coarse: Vec<f64> = fine.iter().step_by(2).copied().collect();

    let build = |samples: &[f64]| -> (Vec<f64>, f64) {
        let c = cepstrum(samples, truncation);
        let regular = exp_series(&c, truncation);
        let mut psi = regular;
        if e0 != 0.0 {
            psi = convolve(&psi, &binomial_series(0.5 * e0, -1.0, truncation), truncation);
        }
        if epi != 0.0 {
            psi = convolve(&psi, &binomial_series(0.5 * epi, 1.0, truncation), truncation);
        }
        (psi, 2.0 * PI * c[0].exp())
    };
    let (psi_coarse, _) = build(&coarse);
    let (psi, sigma2) = build(&fine);

    let mut alias_change: f64 = 0.0;
    for j in 0..=truncation / 2 {
        let change = (psi[j] - psi_coarse[j]).abs() / psi[j].abs().max(ALIAS_FLOOR);
        if change > ALIAS_TOL {
            return Err(Error::Aliasing {
                index: j,
                change,
                tolerance: ALIAS_TOL,
            });
        }
        alias_change = alias_change.max(change);
    }
    Ok(MaExpansion {
        coeffs: psi,
        innovation_variance: sigma2,
        grid: fine_m,
        alias_change,
    })
}

/// `ψ = h ∗ g` for `f = f_FI(·; d) · g`, where `g` has MA coefficients
/// `g_coeffs` (`g_0 = 1`) and innovation variance `σ_g²`; the product has
/// innovation variance `σ_g² / (2π)`.
pub fn product_ma_coeffs(d: f64, g_coeffs: &[f64], sigma2_g: f64, truncation: usize) -> Result<MaExpansion> {
    let h = fi_ma_coeffs(d, truncation)?;
    if g_coeffs.is_empty() || (g_coeffs[0] - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid("g coefficients must start with g_0 = 1".into()));
    }
    if !(sigma2_g > 0.0 && sigma2_g.is_finite()) {
        return Err(Error::domain("sigma2_g", sigma2_g, "finite and > 0"));
    }
    Ok(MaExpansion {
        coeffs: convolve(&h, g_coeffs, truncation),
        innovation_variance: sigma2_g / (2.0 * PI),
        grid: 0,
        alias_change: 0.0,
    })
}

/// Recovers innovations from a series by inverting `X_t = Σ ψ_j Z_{t−j}`
/// with `Z_t = 0` before the sample; returns `Z_t / σ`.
pub fn standardized_innovations(series: &[f64], ma: &MaExpansion) -> Vec<f64> {
    let psi = &ma.coeffs;
    let sigma = ma.innovation_variance.sqrt();
    let mut z: Vec<f64> = Vec::with_capacity(series.len());
    for (t, &x) in series.iter().enumerate() {
        let depth = t.min(psi.len() - 1);
        let past: f64 = (1..=depth).map(|j| psi[j] * z[t - j]).sum();
        z.push(x - past);
    }
    z.iter().map(|v| v / sigma).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fi_coefficients_start() {
        let h = fi_ma_coeffs(0.3, 5).unwrap();
        assert_eq!(h[0], 1.0);
        assert!((h[1] - 0.3).abs() < 1e-15);
        assert!((h[2] - 0.3 * 1.3 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn white_noise_factorization() {
        let f = SpectralDensity::Constant { level: 1.0 / (2.0 * PI) };
        let ma = ma_from_spectrum(&f, 64, 1024).unwrap();
        assert!((ma.innovation_variance - 1.0).abs() < 1e-12);
        assert!(ma.coeffs[1..].iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn grid_validation() {
        let f = SpectralDensity::Fi { d: 0.2 };
        assert!(ma_from_spectrum(&f, 64, 256).is_err());
        assert!(ma_from_spectrum(&f, 64, 1000).is_err());
    }
}
