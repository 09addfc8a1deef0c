//! Monte-Carlo panels of random-coefficient AR(1) series.
//!
//! Each micro-series `Y_t = a Y_{t−1} + ε_t` draws its own `a` from the
//! mixture density and starts from its stationary law, so there is no
//! initialization bias. The aggregate is `X_t = N^{−1/2} Σ_j Y_t^{(j)}`.
//!
//! Randomness for series `j` of replicate `r` comes from a ChaCha8 stream
//! addressed by `(seed, r, j)`, and series are summed in fixed blocks in a
//! fixed order, so results do not depend on the number of threads.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::mixture::{check_admissibility, MixtureDensity, NoiseSpec};
use crate::powerlaw::fit_power_law;
use crate::spectral::acvf_from_mixture;

/// Series summed sequentially before the block partial sums are combined.
const BLOCK: usize = 256;

/// Simulation settings.
#[derive(Debug, Clone)]
pub struct PanelConfig {
    pub phi: MixtureDensity,
    pub noise: NoiseSpec,
    /// number of micro-series `N`
    pub series: usize,
    /// retained length `T`
    pub length: usize,
    /// extra initial steps discarded; unnecessary with stationary starts
    pub burn_in: usize,
    pub seed: u64,
    pub replicates: usize,
    /// largest lag of the sample autocovariances
    pub max_lag: usize,
}

impl PanelConfig {
    pub fn new(phi: MixtureDensity, noise: NoiseSpec, series: usize, length: usize) -> Self {
        PanelConfig {
            phi,
            noise,
            series,
            length,
            burn_in: 0,
            seed: 0,
            replicates: 1,
            max_lag: 100.min(length.saturating_sub(1)),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.series < 1 || self.length < 1 || self.replicates < 1 {
            return Err(Error::Invalid(
                "panel needs at least one series, one time step and one replicate".into(),
            ));
        }
        if self.max_lag >= self.length {
            return Err(Error::Invalid(format!(
                "max lag {} must be below the series length {}",
                self.max_lag, self.length
            )));
        }
        if !check_admissibility(&self.phi)?.admissible {
            return Err(Error::Invalid("mixture density is not admissible".into()));
        }
        Ok(())
    }
}

/// Simulated aggregates and their second-order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelResult {
    /// aggregate series `X_1..X_T`, one per replicate
    pub aggregates: Vec<Vec<f64>>,
    /// `γ̂(h) = T^{−1} Σ_t X_t X_{t+h}`, one row per replicate
    pub sample_acvf: Vec<Vec<f64>>,
    /// replicate mean of `γ̂(h)`
    pub mean_acvf: Vec<f64>,
    /// Monte-Carlo standard error of a single replicate's `γ̂(h)`: the
    /// standard deviation across replicates
    pub mc_stderr: Vec<f64>,
    /// replicate mean of `I(λ_k)`, `λ_k = 2πk/T`, `k = 1..=T/2`
    pub periodogram: Vec<(f64, f64)>,
}

fn stream_id(replicate: usize, series: usize) -> u64 {
    ((replicate as u64) << 32) | series as u64
}

fn simulate_block(
    cfg: &PanelConfig,
    sampler: &crate::mixture::CoefficientSampler,
    replicate: usize,
    block: std::ops::Range<usize>,
) -> Vec<f64> {
    let sd = cfg.noise.variance().sqrt();
    let mut acc = vec![0.0; cfg.length];
    for j in block {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream_id(replicate, j));
        let a = sampler.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        let mut y = z * sd / (1.0 - a * a).sqrt();
        for _ in 0..cfg.burn_in {
            let e: f64 = StandardNormal.sample(&mut rng);
            y = a * y + sd * e;
        }
        for slot in acc.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            y = a * y + sd * e;
            *slot += y;
        }
    }
    acc
}

/// One aggregate path for replicate `r`.
fn aggregate(cfg: &PanelConfig, sampler: &crate::mixture::CoefficientSampler, r: usize) -> Vec<f64> {
    let blocks: Vec<std::ops::Range<usize>> = (0..cfg.series)
        .step_by(BLOCK)
        .map(|s| s..(s + BLOCK).min(cfg.series))
        .collect();
    let partials: Vec<Vec<f64>> = blocks
        .into_par_iter()
        .map(|b| simulate_block(cfg, sampler, r, b))
        .collect();
    let scale = 1.0 / (cfg.series as f64).sqrt();
    let mut x = vec![0.0; cfg.length];
    for p in partials {
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += pi;
        }
    }
    for xi in x.iter_mut() {
        *xi *= scale;
    }
    x
}

/// `T^{−1} Σ_{t<T−h} x_t x_{t+h}` for `h = 0..=max_lag`, without demeaning.
pub fn sample_acvf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..=max_lag)
        .map(|h| x.iter().zip(&x[h..]).map(|(a, b)| a * b).sum::<f64>() / n)
        .collect()
}

/// `I(λ_k) = |Σ_t x_t e^{−iλ_k t}|² / (2πT)` for `k = 1..=T/2`.
pub fn periodogram(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (1..=n / 2)
        .map(|k| {
            let lambda = 2.0 * PI * k as f64 / n as f64;
            (lambda, buf[k].norm_sqr() / (2.0 * PI * n as f64))
        })
        .collect()
}

/// Runs every replicate of the panel.
pub fn simulate_panel(cfg: &PanelConfig) -> Result<PanelResult> {
    cfg.validate()?;
    let sampler = cfg.phi.sampler()?;
    let aggregates: Vec<Vec<f64>> = (0..cfg.replicates).map(|r| aggregate(cfg, &sampler, r)).collect();
    let sample: Vec<Vec<f64>> = aggregates.par_iter().map(|x| sample_acvf(x, cfg.max_lag)).collect();
    let r = cfg.replicates as f64;
    let mut mean = vec![0.0; cfg.max_lag + 1];
    for row in &sample {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / r;
        }
    }
    let stderr: Vec<f64> = (0..=cfg.max_lag)
        .map(|h| {
            if cfg.replicates < 2 {
                return f64::NAN;
            }
            let var = sample.iter().map(|row| (row[h] - mean[h]).powi(2)).sum::<f64>() / (r - 1.0);
            var.sqrt()
        })
        .collect();
    let grams: Vec<Vec<(f64, f64)>> = aggregates.par_iter().map(|x| periodogram(x)).collect();
    let mut pgram = grams[0].clone();
    for (k, p) in pgram.iter_mut().enumerate() {
        p.1 = grams.iter().map(|g| g[k].1).sum::<f64>() / r;
    }
    Ok(PanelResult {
        aggregates,
        sample_acvf: sample,
        mean_acvf: mean,
        mc_stderr: stderr,
        periodogram: pgram,
    })
}

/// One lag of [`TheoryReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct LagComparison {
    pub lag: usize,
    pub sample: f64,
    /// `γ(h)` from the mixture
    pub theory: f64,
    /// `E γ̂(h) = (T − h) γ(h) / T`
    pub expected: f64,
    /// standard error of one replicate's `γ̂(h)`
    pub stderr: f64,
    /// `(γ̂_r(h) − E γ̂(h)) / stderr` for each replicate `r`
    pub z: Vec<f64>,
    /// z-score of the replicate mean, using `stderr / √R`
    pub mean_z: f64,
}

/// Jarque–Bera normality statistic with its asymptotic `χ²₂` p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Jarque–Bera test of a sample.
pub fn jarque_bera(x: &[f64]) -> NormalityTest {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let statistic = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0).powi(2));
    NormalityTest {
        statistic,
        p_value: (-0.5 * statistic).exp(),
    }
}

/// Empirical versus theoretical second-order behaviour of a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub lags: Vec<LagComparison>,
    /// `(replicate, lag)` pairs with `|z| > 3`
    pub flagged: Vec<(usize, usize)>,
    /// slope of `log I(λ_k)` on `log(2 sin(λ_k/2))` over `k ≤ √T`; `−2d` under FI(d)
    pub log_periodogram_slope: f64,
    /// normality of `X_{T/2}` across replicates
    pub normality: NormalityTest,
}

impl TheoryReport {
    /// Share of flagged `(replicate, lag)` pairs.
    pub fn flagged_fraction(&self) -> f64 {
        let total: usize = self.lags.iter().map(|c| c.z.len()).sum();
        self.flagged.len() as f64 / total as f64
    }
}

/// Compares a simulated panel with the mixture's autocovariances and
/// spectral behaviour near zero.
pub fn compare_to_theory(
    result: &PanelResult,
    phi: &MixtureDensity,
    noise: NoiseSpec,
    max_lag: usize,
) -> Result<TheoryReport> {
    let available = result.mean_acvf.len().saturating_sub(1);
    if max_lag > available {
        return Err(Error::Invalid(format!(
            "requested {max_lag} lags, panel has {available}"
        )));
    }
    let len = result.aggregates[0].len();
    let theory = acvf_from_mixture(phi, noise, max_lag)?;
    let lags: Vec<LagComparison> = (0..=max_lag)
        .map(|h| {
            let g = theory.values()[h];
            let expected = g * (len - h) as f64 / len as f64;
            let stderr = result.mc_stderr[h];
            let z = result.sample_acvf.iter().map(|row| (row[h] - expected) / stderr).collect();
            let reps = result.sample_acvf.len() as f64;
            LagComparison {
                lag: h,
                sample: result.mean_acvf[h],
                theory: g,
                expected,
                stderr,
                z,
                mean_z: (result.mean_acvf[h] - expected) / stderr * reps.sqrt(),
            }
        })
        .collect();
    let flagged = lags
        .iter()
        .flat_map(|c| {
            c.z.iter()
                .enumerate()
                .filter(|(_, z)| !(z.abs() <= 3.0))
                .map(move |(r, _)| (r, c.lag))
        })
        .collect();

    let m = ((len as f64).sqrt() as usize).clamp(3, result.periodogram.len());
    let (xs, ys): (Vec<f64>, Vec<f64>) = result.periodogram[..m]
        .iter()
        .map(|&(l, i)| (2.0 * (0.5 * l).sin(), i))
        .unzip();
    let slope = fit_power_law(&xs, &ys)?.exponent;

    let mid: Vec<f64> = result.aggregates.iter().map(|x| x[len / 2]).collect();
    let normality = if mid.len() >= 3 {
        jarque_bera(&mid)
    } else {
        NormalityTest {
            statistic: f64::NAN,
            p_value: f64::NAN,
        }
    };
    Ok(TheoryReport {
        lags,
        flagged,
        log_periodogram_slope: slope,
        normality,
    })
}
