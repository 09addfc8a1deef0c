//! Spectral densities and autocovariances of aggregated processes.
//!
//! For a mixture density `φ` and noise variance `σ²`, the aggregate has
//!
//! ```text
//! f(λ) = σ²/(2π) ∫ φ(x) / |1 − x e^{iλ}|² dx,    γ(h) = σ² ∫ x^|h| φ(x) / (1 − x²) dx.
//! ```
//!
//! Both integrals are evaluated with the segment quadrature of [`crate::quad`],
//! which absorbs the power-law behaviour of `φ` at `0` and `±1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{check_memory, Error, Result};
use crate::mixture::{check_admissibility, MixtureDensity, NoiseSpec};
use crate::powerlaw::{fit_checked, geometric_distances};
use crate::quad::{integrate, split_segments, Abscissa, Frequency, Segment, Tolerance};

/// A spectral density on `[−π, π]`, even in `λ`.
#[derive(Debug, Clone)]
pub enum SpectralDensity {
    /// `(1/2π) |1 − e^{iλ}|^{−2d}`
    Fi { d: f64 },
    /// `(1/2π) |1 + e^{iλ}|^{−2d}`
    Sfi { d: f64 },
    /// `f_FI(λ; d1) · f_SFI(λ; d2)`
    ProductFi { d1: f64, d2: f64 },
    /// aggregate of the uniform mixture on `[a, b]`, in closed form
    UniformClosed { a: f64, b: f64, variance: f64 },
    /// aggregate of an arbitrary mixture, by quadrature
    FromMixture {
        phi: MixtureDensity,
        noise: NoiseSpec,
    },
    /// linear interpolation in `|λ|` on an increasing grid in `[0, π]`
    TabulatedEven { grid: Vec<f64>, values: Vec<f64> },
    /// a flat spectrum
    Constant { level: f64 },
    /// pointwise product of two spectral densities
    Product(Box<SpectralDensity>, Box<SpectralDensity>),
}

/// Closed forms accepted by [`closed_spectral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Fi { d: f64 },
    Sfi { d: f64 },
    ProductFi { d1: f64, d2: f64 },
    Uniform { a: f64, b: f64, variance: f64 },
}

/// Validates parameters and returns the closed-form spectral density.
pub fn closed_spectral(form: ClosedForm) -> Result<SpectralDensity> {
    Ok(match form {
        ClosedForm::Fi { d } => {
            check_memory("d", d)?;
            SpectralDensity::Fi { d }
        }
        ClosedForm::Sfi { d } => {
            check_memory("d", d)?;
            SpectralDensity::Sfi { d }
        }
        ClosedForm::ProductFi { d1, d2 } => {
            check_memory("d1", d1)?;
            check_memory("d2", d2)?;
            SpectralDensity::ProductFi { d1, d2 }
        }
        ClosedForm::Uniform { a, b, variance } => {
            crate::mixture::uniform_mixture(a, b)?;
            NoiseSpec::new(variance)?;
            SpectralDensity::UniformClosed { a, b, variance }
        }
    })
}

/// Which end of `[0, π]` a tail statement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Zero,
    Pi,
}

/// `f(λ) ≈ constant · dist^exponent`, `dist` being the distance to the endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
}

fn fi_value(d: f64, two_sin: f64) -> f64 {
    if two_sin == 0.0 {
        f64::INFINITY
    } else {
        two_sin.powf(-2.0 * d) / (2.0 * PI)
    }
}

/// Closed-form aggregate spectrum of the uniform mixture on `[a, b]`.
fn uniform_value(a: f64, b: f64, variance: f64, freq: Frequency) -> f64 {
    let s = freq.sin();
    let scale = variance / (2.0 * PI);
    if freq.lambda == 0.0 {
        return scale / ((1.0 - a) * (1.0 - b));
    }
    if freq.to_pi == 0.0 {
        return scale / ((1.0 + a) * (1.0 + b));
    }
    let c = freq.cos();
    // ∫_a^b dx / ((x − c)² + s²) = atan2(s(b − a), s² + (b − c)(a − c)) / s
    let angle = (s * (b - a)).atan2(s * s + (b - c) * (a - c));
    scale * angle / (s * (b - a))
}

impl SpectralDensity {
    /// `f(λ)`; closed forms return `+∞` at their singular frequency.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        self.eval_at(Frequency::new(lambda))
    }

    /// `f` at a frequency given with its exact distance to `π`.
    pub fn eval_at(&self, freq: Frequency) -> Result<f64> {
        Ok(match self {
            SpectralDensity::Fi { d } => fi_value(*d, 2.0 * freq.sin_half()),
            SpectralDensity::Sfi { d } => fi_value(*d, 2.0 * freq.cos_half()),
            SpectralDensity::ProductFi { d1, d2 } => {
                fi_value(*d1, 2.0 * freq.sin_half()) * fi_value(*d2, 2.0 * freq.cos_half())
            }
            SpectralDensity::UniformClosed { a, b, variance } => uniform_value(*a, *b, *variance, freq),
            SpectralDensity::FromMixture { phi, noise } => spectral_from_mixture_at(phi, *noise, freq)?,
            SpectralDensity::TabulatedEven { grid, values } => interpolate(grid, values, freq.lambda),
            SpectralDensity::Constant { level } => *level,
            SpectralDensity::Product(f, g) => f.eval_at(freq)? * g.eval_at(freq)?,
        })
    }

    /// Coefficients `(e0, eπ)` with
    /// `log f(λ) = e0 log(2 sin(λ/2)) + eπ log(2 cos(λ/2)) + bounded`.
    pub fn log_singularities(&self) -> (f64, f64) {
        match self {
            SpectralDensity::Fi { d } => (-2.0 * d, 0.0),
            SpectralDensity::Sfi { d } => (0.0, -2.0 * d),
            SpectralDensity::ProductFi { d1, d2 } => (-2.0 * d1, -2.0 * d2),
            SpectralDensity::FromMixture { phi, .. } => {
                let adm = check_admissibility(phi).ok();
                let pole = |e: Option<f64>| match e {
                    Some(alpha) if alpha < 1.0 => alpha - 1.0,
                    _ => 0.0,
                };
                match adm {
                    Some(a) => (pole(a.exponent_plus), pole(a.exponent_minus)),
                    None => (0.0, 0.0),
                }
            }
            SpectralDensity::Product(f, g) => {
                let (a0, api) = f.log_singularities();
                let (b0, bpi) = g.log_singularities();
                (a0 + b0, api + bpi)
            }
            _ => (0.0, 0.0),
        }
    }

    /// `∫_{−π}^{π} f(λ) g(λ) dλ` for even `g`, with the power-law behaviour
    /// of `f` at `0` and `π` absorbed by the quadrature.
    pub fn integrate<G>(&self, g: G, tol: Tolerance) -> Result<f64>
    where
        G: Fn(Frequency) -> f64,
    {
        let (e0, epi) = self.log_singularities();
        let seg = Segment::new(0.0, PI, e0, epi);
        let failure = std::cell::Cell::new(None);
        let value = integrate(
            |p| {
                // the segment anchors give exact distances to 0 and π
                let freq = if p.x < 0.5 * PI {
                    Frequency::new(p.x)
                } else {
                    Frequency::below_pi(PI - p.x)
                };
                match self.eval_at(freq) {
                    Ok(v) => v * g(freq),
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NAN
                    }
                }
            },
            &[seg],
            tol,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(2.0 * value?.value)
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[n - 1] {
        return values[n - 1];
    }
    let i = grid.partition_point(|&t| t <= x);
    let w = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    values[i - 1] + w * (values[i] - values[i - 1])
}

const SPECTRAL_TOL: f64 = 1e-11;

/// `f(λ)` of the aggregate of `(φ, σ²)` by quadrature.
pub fn spectral_from_mixture(phi: &MixtureDensity, noise: NoiseSpec, lambda: f64) -> Result<f64> {
    if !(lambda.abs() <= PI) {
        return Err(Error::domain("lambda", lambda, "-pi <= lambda <= pi"));
    }
    spectral_from_mixture_at(phi, noise, Frequency::new(lambda))
}

/// As [`spectral_from_mixture`], at a frequency carrying its distance to `π`.
pub fn spectral_from_mixture_at(phi: &MixtureDensity, noise: NoiseSpec, freq: Frequency) -> Result<f64> {
    let mut shift = (0.0, 0.0);
    if freq.lambda == 0.0 {
        shift.1 = -2.0;
    }
    if freq.to_pi == 0.0 {
        shift.0 = -2.0;
    }
    for seg in phi.segments() {
        let hits_plus = seg.hi == 1.0 && seg.exp_hi + shift.1 <= -1.0;
        let hits_minus = seg.lo == -1.0 && seg.exp_lo + shift.0 <= -1.0;
        if hits_plus || hits_minus {
            return Err(Error::Divergent {
                what: "spectral density",
                at: freq.lambda,
            });
        }
    }
    let near_plus = freq.lambda > 0.0 && freq.lambda < NEAR_SINGULAR;
    let near_minus = freq.to_pi > 0.0 && freq.to_pi < NEAR_SINGULAR;
    if freq.lambda > 0.0 && freq.lambda < MIN_SINGULAR_DISTANCE
        || freq.to_pi > 0.0 && freq.to_pi < MIN_SINGULAR_DISTANCE
    {
        return Err(Error::domain(
            "lambda",
            freq.lambda,
            "distance to 0 and pi at least 1e-150 (the kernel is not representable closer)",
        ));
    }
    let scale = noise.variance() / (2.0 * PI);
    if near_plus || near_minus {
        return Ok(scale * integrate_resolving_ends(phi, freq, near_plus, near_minus)?);
    }
    // the kernel peaks at distance ~λ from 1 and ~(π − λ) from −1
    let mut breaks = Vec::with_capacity(4);
    if freq.lambda > 0.0 && freq.lambda < 0.5 {
        breaks.push(1.0 - freq.lambda);
    }
    if freq.to_pi > 0.0 && freq.to_pi < 0.5 {
        breaks.push(freq.to_pi - 1.0);
    }
    let est = phi.integrate(
        |p: Abscissa| 1.0 / p.ar1_transfer(&freq),
        shift,
        &breaks,
        Tolerance::relative(SPECTRAL_TOL),
    )?;
    Ok(scale * est.value)
}

/// Closer than this to `0` or `π`, the kernel peak at distance `λ` from `±1`
/// is resolved in the coordinate `1 ∓ x`, where it stays representable.
const NEAR_SINGULAR: f64 = 1e-4;

/// Below this distance the squared kernel terms underflow.
const MIN_SINGULAR_DISTANCE: f64 = 1e-150;

/// `start, 8 start, 64 start, …` below `end`: the kernel decays like a power
/// of the distance beyond its peak, and adaptive bisection alone cannot find
/// a peak many decades below the segment width.
fn geometric_breaks(start: f64, end: f64) -> Vec<f64> {
    std::iter::successors(Some(start), |&b| Some(8.0 * b))
        .take_while(|&b| b < end)
        .collect()
}

/// `∫ φ(x) / |1 − x e^{iλ}|² dx` with the pieces of the support next to `±1`
/// integrated in the distance to the endpoint.
fn integrate_resolving_ends(phi: &MixtureDensity, freq: Frequency, plus: bool, minus: bool) -> Result<f64> {
    const END: f64 = 0.25;
    let kernel = |p: Abscissa| 1.0 / p.ar1_transfer(&freq);
    let tol = Tolerance::relative(SPECTRAL_TOL);
    let mut inner = Vec::new();
    let mut total = 0.0;
    for seg in phi.segments() {
        let mut rest = seg;
        if plus && seg.hi == 1.0 {
            let c = END.min(0.5 * seg.width());
            let near = split_segments(&[Segment::new(0.0, c, seg.exp_hi, 0.0)], &geometric_breaks(freq.lambda, c));
            let f = |p: Abscissa| {
                let q = Abscissa::below_one(p.x);
                phi.density_at(q) * kernel(q)
            };
            total += integrate(f, &near, tol)?.value;
            rest.hi = 1.0 - c;
            rest.exp_hi = 0.0;
        }
        if minus && seg.lo == -1.0 {
            let c = END.min(0.5 * rest.width());
            let near = split_segments(&[Segment::new(0.0, c, seg.exp_lo, 0.0)], &geometric_breaks(freq.to_pi, c));
            let f = |p: Abscissa| {
                let q = Abscissa::above_minus_one(p.x);
                phi.density_at(q) * kernel(q)
            };
            total += integrate(f, &near, tol)?.value;
            rest.lo = c - 1.0;
            rest.exp_lo = 0.0;
        }
        inner.push(rest);
    }
    let mut breaks = Vec::new();
    if !plus && freq.lambda > 0.0 && freq.lambda < 0.5 {
        breaks.push(1.0 - freq.lambda);
    }
    if !minus && freq.to_pi > 0.0 && freq.to_pi < 0.5 {
        breaks.push(freq.to_pi - 1.0);
    }
    let inner = split_segments(&inner, &breaks);
    total += integrate(|p| phi.density_at(p) * kernel(p), &inner, tol)?.value;
    Ok(total)
}

/// Autocovariances `γ(0..=H)` of an aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct AcvfSequence {
    values: Vec<f64>,
    noise: NoiseSpec,
    long_memory: bool,
}

impl AcvfSequence {
    pub fn new(values: Vec<f64>, noise: NoiseSpec, long_memory: bool) -> Self {
        AcvfSequence {
            values,
            noise,
            long_memory,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lag_horizon(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    /// Set when the autocovariances are not absolutely summable.
    pub fn long_memory(&self) -> bool {
        self.long_memory
    }

    /// Smallest eigenvalue of the Toeplitz matrix `[γ(|i − j|)]`.
    pub fn min_toeplitz_eigenvalue(&self) -> f64 {
        toeplitz_min_eigenvalue(&self.values)
    }
}

pub(crate) fn toeplitz_min_eigenvalue(values: &[f64]) -> f64 {
    let n = values.len();
    let m = DMatrix::from_fn(n, n, |i, j| values[i.abs_diff(j)]);
    m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

const ACVF_TOL: f64 = 1e-11;

/// `γ(h)` for `h = 0..=horizon`.
pub fn acvf_from_mixture(phi: &MixtureDensity, noise: NoiseSpec, horizon: usize) -> Result<AcvfSequence> {
    let long_memory = check_admissibility(phi).map(|a| a.long_memory).unwrap_or(false);
    let values: Result<Vec<f64>> = (0..=horizon)
        .into_par_iter()
        .map(|h| acvf_lag(phi, noise, h))
        .collect();
    Ok(AcvfSequence::new(values?, noise, long_memory))
}

/// `γ(h) = σ² ∫ x^h φ(x) / (1 − x²) dx` for a single lag.
pub fn acvf_lag(phi: &MixtureDensity, noise: NoiseSpec, h: usize) -> Result<f64> {
    let mut breaks = Vec::new();
    if h > 1 {
        let scale = 1.0 / h as f64;
        for k in [1.0, 8.0] {
            let t = k * scale;
            if t < 0.5 {
                breaks.push(1.0 - t);
                breaks.push(t - 1.0);
            }
        }
    }
    let h32 = u32::try_from(h).map_err(|_| Error::domain("lag", h as f64, "lag < 2^32"))?;
    let est = phi.integrate(
        |p: Abscissa| p.powi(h32) / (p.one_minus * p.one_plus),
        (-1.0, -1.0),
        &breaks,
        // odd lags of symmetric mixtures vanish, so also bound the absolute error
        Tolerance::relative(ACVF_TOL).with_abs(1e-15),
    )?;
    Ok(noise.variance() * est.value)
}

/// Log-log regression of `f` approaching `0` or `π` on the distances
/// `2^{−k}`, `k = 20..=40`.
pub fn tail_exponent(f: &SpectralDensity, at: Endpoint) -> Result<TailFit> {
    tail_exponent_on(f, at, &geometric_distances(TAIL_FIRST, TAIL_LAST))
}

const TAIL_FIRST: i32 = 20;
const TAIL_LAST: i32 = 40;
const TAIL_R2: f64 = 0.999;

/// As [`tail_exponent`] on caller-chosen distances.
pub fn tail_exponent_on(f: &SpectralDensity, at: Endpoint, distances: &[f64]) -> Result<TailFit> {
    let values: Result<Vec<f64>> = distances
        .iter()
        .map(|&t| match at {
            Endpoint::Zero => f.eval_at(Frequency::new(t)),
            Endpoint::Pi => f.eval_at(Frequency::below_pi(t)),
        })
        .collect();
    let fit = fit_checked(distances, &values?, TAIL_R2, "spectral tail exponent")?;
    Ok(TailFit {
        exponent: fit.exponent,
        constant: fit.prefactor,
        r_squared: fit.r_squared,
    })
}

/// `f` sampled at `n` equispaced frequencies `λ_k = kπ/(n−1)`, `k = 0..n`.
pub fn spectral_grid(f: &SpectralDensity, n: usize) -> Result<Vec<(f64, f64)>> {
    (0..n)
        .into_par_iter()
        .map(|k| {
            let (lambda, freq) = if n < 2 {
                (0.0, Frequency::new(0.0))
            } else if 2 * k < n {
                let l = PI * k as f64 / (n - 1) as f64;
                (l, Frequency::new(l))
            } else {
                let delta = PI * (n - 1 - k) as f64 / (n - 1) as f64;
                (PI - delta, Frequency::below_pi(delta))
            };
            let v = match f.eval_at(freq) {
                Ok(v) => v,
                Err(Error::Divergent { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok((lambda, v))
        })
        .collect()
}
