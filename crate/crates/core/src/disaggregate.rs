//! Disaggregation of product spectra.
//!
//! If `φ₁` lives on `[0, 1]` and `φ₂` on `[−1, 0]`, the product `f₁ f₂` of
//! their aggregate spectra is again an aggregate spectrum, with mixture
//!
//! ```text
//! φ(x) = ( φ₁(x) ∫ φ₂(y) k(x, y) dy + φ₂(x) ∫ φ₁(y) k(x, y) dy ) / C₊,
//! k(x, y) = 1 / ((1 − xy)(1 − y/x)),   C₊ = ∫∫ φ₁(x) φ₂(y) / (1 − xy) dy dx,
//! ```
//!
//! and noise variance `σ₁² σ₂² C₊ / (2π)`. The result is tabulated on a
//! Chebyshev grid per lobe, refined geometrically toward the lobe ends.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{check_memory, Error, Result};
use crate::mixture::{
    check_admissibility, fi_mixture, product_fi_mixture_closed, Lobe, MixtureDensity, NoiseSpec,
    Tabulated,
};
use crate::powerlaw::{fit_checked, geometric_distances};
use crate::quad::{Abscissa, GaussJacobi, Segment, Tolerance};

const INNER_TOL: f64 = 1e-11;

/// `C* = ∫₀¹∫₀¹ x^{d1−1}(1−x)^{1−2d1}(1+x) y^{d2−1}(1−y)^{1−2d2}(1+y) / (1+xy) dy dx`
/// by a tensor Gauss–Jacobi rule, checked against a rule with more nodes.
pub fn compute_cstar(d1: f64, d2: f64) -> Result<f64> {
    check_memory("d1", d1)?;
    check_memory("d2", d2)?;
    let rule = |n: usize| -> Result<f64> {
        let gx = GaussJacobi::new(n, d1 - 1.0, 1.0 - 2.0 * d1)?;
        let gy = GaussJacobi::new(n, d2 - 1.0, 1.0 - 2.0 * d2)?;
        let mut total = 0.0;
        for (&x, &wx) in gx.nodes().iter().zip(gx.weights()) {
            let inner: f64 = gy
                .nodes()
                .iter()
                .zip(gy.weights())
                .map(|(&y, &wy)| wy * (1.0 + y) / (1.0 + x * y))
                .sum();
            total += wx * (1.0 + x) * inner;
        }
        Ok(total)
    };
    let coarse = rule(32)?;
    let fine = rule(48)?;
    let change = (fine - coarse).abs();
    if change > 1e-12 * fine.abs() {
        return Err(Error::QuadratureTolerance {
            estimated: change / fine.abs(),
            requested: 1e-12,
        });
    }
    Ok(fine)
}

/// Output of the disaggregation.
#[derive(Debug, Clone)]
pub struct ProductMixtureResult {
    /// tabulated mixture density of the product spectrum
    pub phi: MixtureDensity,
    /// `C₊ = ∫∫ φ₁(x) φ₂(y) / (1 − xy)`
    pub c_star: f64,
    /// noise variance of the product
    pub noise: NoiseSpec,
    /// largest quadrature error estimate met while tabulating, relative
    pub achieved_tolerance: f64,
    factors: (MixtureDensity, MixtureDensity),
}

impl ProductMixtureResult {
    /// The disaggregation formula evaluated directly at `x`, bypassing the table.
    pub fn density_exact(&self, x: f64) -> Result<f64> {
        let (phi1, phi2) = &self.factors;
        Ok(product_value(phi1, phi2, Abscissa::new(x))?.0 / self.c_star)
    }

    /// The factor densities `(φ₁, φ₂)`.
    pub fn factors(&self) -> (&MixtureDensity, &MixtureDensity) {
        (&self.factors.0, &self.factors.1)
    }
}

/// Output-grid resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Chebyshev points per lobe
    pub per_lobe: usize,
    /// geometric refinement toward a lobe end down to `width · 2^{−levels}`
    pub levels: i32,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            per_lobe: 512,
            levels: 30,
        }
    }
}

/// The mixture of `f₁ f₂` from the mixtures of the factors.
pub fn product_mixture_numeric(
    phi1: &MixtureDensity,
    noise1: NoiseSpec,
    phi2: &MixtureDensity,
    noise2: NoiseSpec,
) -> Result<ProductMixtureResult> {
    product_mixture_numeric_with(phi1, noise1, phi2, noise2, GridOptions::default())
}

/// [`product_mixture_numeric`] with an explicit output grid.
pub fn product_mixture_numeric_with(
    phi1: &MixtureDensity,
    noise1: NoiseSpec,
    phi2: &MixtureDensity,
    noise2: NoiseSpec,
    grid: GridOptions,
) -> Result<ProductMixtureResult> {
    let (lo1, hi1) = phi1.support();
    let (lo2, hi2) = phi2.support();
    if lo1 < 0.0 || hi1 > 1.0 {
        return Err(Error::SupportViolation(format!(
            "first factor must live on [0, 1], has support [{lo1}, {hi1}]"
        )));
    }
    if lo2 < -1.0 || hi2 > 0.0 {
        return Err(Error::SupportViolation(format!(
            "second factor must live on [-1, 0], has support [{lo2}, {hi2}]"
        )));
    }
    for (name, phi) in [("first", phi1), ("second", phi2)] {
        if !check_admissibility(phi)?.admissible {
            return Err(Error::Divergent {
                what: if name == "first" {
                    "inner integral (first factor inadmissible)"
                } else {
                    "inner integral (second factor inadmissible)"
                },
                at: f64::NAN,
            });
        }
    }

    let c_star = normalizer(phi1, phi2)?;
    let noise = NoiseSpec::new(noise1.variance() * noise2.variance() * c_star / (2.0 * PI))?;

    let seg1 = phi1.segments();
    let seg2 = phi2.segments();
    let exp_at = |segs: &[Segment], x: f64| -> f64 {
        segs.iter()
            .find_map(|s| {
                if s.lo == x {
                    Some(s.exp_lo)
                } else if s.hi == x {
                    Some(s.exp_hi)
                } else {
                    None
                }
            })
            .unwrap_or(0.0)
    };
    // at the origin the inner integral contributes x^{1 + min(α, 0)}
    let origin_gain = |other_touches: bool, other_exp: f64| -> f64 {
        if other_touches {
            1.0 + other_exp.min(0.0)
        } else {
            1.0
        }
    };
    let exp1_lo = if lo1 == 0.0 {
        exp_at(&seg1, 0.0) + origin_gain(hi2 == 0.0, exp_at(&seg2, 0.0))
    } else {
        exp_at(&seg1, lo1)
    };
    let exp2_hi = if hi2 == 0.0 {
        exp_at(&seg2, 0.0) + origin_gain(lo1 == 0.0, exp_at(&seg1, 0.0))
    } else {
        exp_at(&seg2, hi2)
    };
    let lobes_spec = [
        (lo2, hi2, exp_at(&seg2, lo2), exp2_hi),
        (lo1, hi1, exp1_lo, exp_at(&seg1, hi1)),
    ];

    let mut lobes = Vec::with_capacity(2);
    let mut achieved: f64 = 0.0;
    for (lo, hi, exp_lo, exp_hi) in lobes_spec {
        let points = lobe_grid(lo, hi, grid);
        let values: Result<Vec<(f64, f64, f64)>> = points
            .par_iter()
            .map(|&p| {
                let (v, err) = product_value(phi1, phi2, p)?;
                let mut w = 1.0;
                if exp_lo != 0.0 {
                    w *= crate::mixture::above(p, lo).powf(exp_lo);
                }
                if exp_hi != 0.0 {
                    w *= crate::mixture::below(p, hi).powf(exp_hi);
                }
                Ok((p.x, v / (c_star * w), err))
            })
            .collect();
        let values = values?;
        let mut nodes = Vec::with_capacity(values.len());
        let mut reduced = Vec::with_capacity(values.len());
        for (x, r, err) in values {
            if !r.is_finite() {
                return Err(Error::Divergent {
                    what: "product mixture density",
                    at: x,
                });
            }
            if nodes.last().is_some_and(|&last| x <= last) {
                continue;
            }
            nodes.push(x);
            reduced.push(r.max(0.0));
            achieved = achieved.max(err);
        }
        lobes.push(Lobe {
            lo,
            hi,
            exp_lo,
            exp_hi,
            nodes,
            reduced,
        });
    }
    let phi = MixtureDensity::from_table(Tabulated::from_lobes(lobes)?);
    Ok(ProductMixtureResult {
        phi,
        c_star,
        noise,
        achieved_tolerance: achieved,
        factors: (phi1.clone(), phi2.clone()),
    })
}

/// Chebyshev nodes of `[lo, hi]` plus geometric refinement toward both ends.
fn lobe_grid(lo: f64, hi: f64, grid: GridOptions) -> Vec<Abscissa> {
    let width = hi - lo;
    let n = grid.per_lobe.max(2);
    // (distance from lo, distance from hi) pairs keep the ends exact
    let mut offsets: Vec<(f64, bool)> = Vec::new();
    for k in 0..n {
        let theta = PI * (k as f64 + 0.5) / n as f64;
        let s = 0.5 * (1.0 - theta.cos());
        if s <= 0.5 {
            offsets.push((width * s, false));
        } else {
            offsets.push((width * (1.0 - s), true));
        }
    }
    let first = width * 0.5 * (1.0 - (PI * 0.5 / n as f64).cos());
    for t in geometric_distances(1, grid.levels) {
        let dist = width * t;
        if dist < first {
            offsets.push((dist, false));
            offsets.push((dist, true));
        }
    }
    let mut points: Vec<Abscissa> = offsets
        .into_iter()
        .map(|(dist, from_hi)| {
            if from_hi {
                if hi == 1.0 {
                    Abscissa::below_one(dist)
                } else {
                    let mut p = Abscissa::new(hi - dist);
                    if hi == 0.0 {
                        p.x = -dist;
                    }
                    p
                }
            } else if lo == -1.0 {
                Abscissa::above_minus_one(dist)
            } else {
                let mut p = Abscissa::new(lo + dist);
                if lo == 0.0 {
                    p.x = dist;
                }
                p
            }
        })
        .collect();
    points.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal));
    points.dedup_by(|a, b| a.x == b.x);
    points
}

/// `C₊ · φ(x)` and the relative error estimate of its inner integral.
fn product_value(phi1: &MixtureDensity, phi2: &MixtureDensity, p: Abscissa) -> Result<(f64, f64)> {
    let x = p.x;
    if x == 0.0 {
        return Ok((f64::INFINITY, 0.0));
    }
    let (own, other) = if x > 0.0 { (phi1, phi2) } else { (phi2, phi1) };
    let weight = own.density_at(p);
    if weight == 0.0 {
        return Ok((0.0, 0.0));
    }
    // k(x, y) = x / ((1 − xy)(x − y)); y has the opposite sign of x, so this is positive
    let ax = x.abs();
    let breaks: Vec<f64> = [ax / 8.0, ax, 8.0 * ax]
        .iter()
        .map(|&t| if x > 0.0 { -t } else { t })
        .collect();
    let est = other.integrate(
        |q: Abscissa| ax / ((1.0 - x * q.x) * (ax + q.x.abs())),
        (0.0, 0.0),
        &breaks,
        Tolerance::relative(INNER_TOL),
    )?;
    let rel = if est.value != 0.0 {
        est.error / est.value.abs()
    } else {
        0.0
    };
    Ok((weight * est.value, rel))
}

/// `C₊ = ∫∫ φ₁(x) φ₂(y) / (1 − xy) dy dx` by nested quadrature.
fn normalizer(phi1: &MixtureDensity, phi2: &MixtureDensity) -> Result<f64> {
    let failure = std::cell::Cell::new(None);
    let est = phi1.integrate(
        |p: Abscissa| {
            let inner = phi2.integrate(
                |q: Abscissa| 1.0 / (1.0 - p.x * q.x),
                (0.0, 0.0),
                &[],
                Tolerance::relative(INNER_TOL),
            );
            match inner {
                Ok(e) => e.value,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            }
        },
        (0.0, 0.0),
        &[],
        Tolerance::relative(1e-10),
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(est?.value)
}

/// Disaggregation of `f_FI(λ; d) · g(λ)` where `g` is the aggregate
/// spectrum of `(φ_g, σ_g²)` with `φ_g` supported in `[−a, 0]`, `a < 1`.
pub fn fi_times_analytic(d: f64, phi_g: &MixtureDensity, noise_g: NoiseSpec) -> Result<ProductMixtureResult> {
    check_memory("d", d)?;
    let (lo, hi) = phi_g.support();
    if hi > 0.0 {
        return Err(Error::SupportViolation(format!(
            "analytic factor must live on [-a, 0], extends to {hi}"
        )));
    }
    if lo <= -1.0 {
        return Err(Error::SupportViolation(
            "analytic factor must stay away from -1".into(),
        ));
    }
    let (fi, noise_fi) = fi_mixture(d)?;
    product_mixture_numeric(&fi, noise_fi, phi_g, noise_g)
}

/// Fitted and predicted power laws of the closed-form product density at
/// `0+`, `0−`, `1−` and `−1+`, in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductAsymptotics {
    pub exponents: [f64; 4],
    pub prefactors: [f64; 4],
    pub predicted_exponents: [f64; 4],
    pub predicted_prefactors: [f64; 4],
}

impl ProductAsymptotics {
    /// Every exponent within `exponent_tol` and every prefactor within
    /// `prefactor_rel` relative of the prediction.
    pub fn within(&self, exponent_tol: f64, prefactor_rel: f64) -> bool {
        (0..4).all(|i| {
            (self.exponents[i] - self.predicted_exponents[i]).abs() <= exponent_tol
                && (self.prefactors[i] / self.predicted_prefactors[i] - 1.0).abs() <= prefactor_rel
        })
    }
}

/// Fits the local power laws of the closed-form product density.
///
/// Near `±1` the distances are `2^{−k}`, `k = 20..=40`. At the origin the
/// relative correction decays only like `|x|^{1−2d}`, so the fit uses
/// `|x| = 2^{−k}`, `k = 100..=160`.
pub fn verify_product_asymptotics(d1: f64, d2: f64) -> Result<ProductAsymptotics> {
    let (phi, _) = product_fi_mixture_closed(d1, d2)?;
    let cstar = phi.cstar().expect("closed product density carries C*");
    let near_end = geometric_distances(20, 40);
    let near_origin = geometric_distances(100, 160);
    let fit = |ts: &[f64], point: &dyn Fn(f64) -> Abscissa| -> Result<(f64, f64)> {
        let vs: Vec<f64> = ts.iter().map(|&t| phi.density_at(point(t))).collect();
        let f = fit_checked(ts, &vs, 0.999, "product density asymptotics")?;
        Ok((f.exponent, f.prefactor))
    };
    let zero_plus = fit(&near_origin, &|t| Abscissa::new(t))?;
    let zero_minus = fit(&near_origin, &|t| Abscissa::new(-t))?;
    let one_minus = fit(&near_end, &Abscissa::below_one)?;
    let minus_one_plus = fit(&near_end, &Abscissa::above_minus_one)?;
    let s1 = (PI * d1).sin();
    let s2 = (PI * d2).sin();
    Ok(ProductAsymptotics {
        exponents: [zero_plus.0, zero_minus.0, one_minus.0, minus_one_plus.0],
        prefactors: [zero_plus.1, zero_minus.1, one_minus.1, minus_one_plus.1],
        predicted_exponents: [d1 + d2 - 1.0, d1 + d2 - 1.0, 1.0 - 2.0 * d1, 1.0 - 2.0 * d2],
        predicted_prefactors: [
            PI / (cstar * s2),
            PI / (cstar * s1),
            2f64.powf(1.0 - 2.0 * d2) * PI / (cstar * s2),
            2f64.powf(1.0 - 2.0 * d1) * PI / (cstar * s1),
        ],
    })
}

/// `(1/2π) Σ_{j∈ℤ} γ₁(j + h) γ₂(j)`, the autocovariance of a product
/// spectrum from those of its factors, both given on lags `0, 1, …`.
///
/// The pair of terms `±j` is added until it falls below `1e−12 |sum|` or
/// `max_terms` is reached; the second value is a bound on the truncation
/// residual. When the budget runs out the last two partial sums are
/// averaged, which halves the error of an alternating tail.
pub fn product_acvf_series<A, B>(gamma1: A, gamma2: B, h: usize, max_terms: usize) -> (f64, f64)
where
    A: Fn(usize) -> f64,
    B: Fn(usize) -> f64,
{
    let mut sum = gamma1(h) * gamma2(0);
    let mut prev = sum;
    let mut last = 0.0;
    for j in 1..max_terms {
        let term = (gamma1(h + j) + gamma1(h.abs_diff(j))) * gamma2(j);
        prev = sum;
        sum += term;
        last = term;
        if term.abs() < 1e-12 * sum.abs() {
            return (sum / (2.0 * PI), term.abs() / (2.0 * PI));
        }
    }
    let averaged = 0.5 * (sum + prev);
    (averaged / (2.0 * PI), 0.5 * last.abs() / (2.0 * PI))
}
