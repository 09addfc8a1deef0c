//! Quadrature for integrands with algebraic endpoint singularities.
//!
//! The integrals in this crate all look like `∫ w(x) g(x) dx` where `w` has
//! power-law behaviour `(x − lo)^α (hi − x)^β` at the ends of a piece of the
//! support and `g` is smooth apart from sharp but bounded peaks. Each piece
//! is cut in half; on each half the change of variables `x = lo + h s^p`
//! with `p = 1/(1 + α)` cancels the leading singularity, and the result is
//! integrated on `s ∈ [0, 1]` by globally adaptive Gauss–Kronrod (7/15).
//!
//! Integrands receive an [`Abscissa`] that carries `1 − x` and `1 + x`
//! computed from the exact distance to the piece's endpoints, so factors
//! like `(1 − x)^(1−2d)` remain accurate when `x` is within a few ulps of 1.
//!
//! [`GaussJacobi`] provides fixed rules for smooth integrands against
//! `x^a (1 − x)^b` on `[0, 1]`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::specfun::beta;

/// A point of integration together with its exact distances to `±1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abscissa {
    pub x: f64,
    /// `1 − x`
    pub one_minus: f64,
    /// `1 + x`
    pub one_plus: f64,
}

impl Abscissa {
    pub fn new(x: f64) -> Self {
        Abscissa {
            x,
            one_minus: 1.0 - x,
            one_plus: 1.0 + x,
        }
    }

    /// A point at distance `t` below `1`.
    pub fn below_one(t: f64) -> Self {
        Abscissa {
            x: 1.0 - t,
            one_minus: t,
            one_plus: 2.0 - t,
        }
    }

    /// A point at distance `t` above `-1`.
    pub fn above_minus_one(t: f64) -> Self {
        Abscissa {
            x: t - 1.0,
            one_minus: 2.0 - t,
            one_plus: t,
        }
    }

    /// `x^n`, accurate for `x` close to `±1`.
    pub fn powi(&self, n: u32) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let sign = if self.x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        let log_abs = if self.x >= 0.0 {
            (-self.one_minus).ln_1p()
        } else {
            (-self.one_plus).ln_1p()
        };
        if self.x.abs() < 0.5 {
            return self.x.powi(n as i32);
        }
        sign * (n as f64 * log_abs).exp()
    }

    /// `|1 − x e^{iλ}|² = 1 − 2x cos λ + x²`, written as a sum of
    /// non-negative terms.
    pub fn ar1_transfer(&self, freq: &Frequency) -> f64 {
        if self.x >= 0.0 {
            let s = freq.sin_half();
            self.one_minus * self.one_minus + 4.0 * self.x * s * s
        } else {
            let c = freq.cos_half();
            self.one_plus * self.one_plus - 4.0 * self.x * c * c
        }
    }
}

/// A frequency in `[0, π]` that keeps its distance to `π` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    /// `|λ|`
    pub lambda: f64,
    /// `π − |λ|`
    pub to_pi: f64,
}

impl Frequency {
    /// Folds `λ ∈ [−π, π]` onto `[0, π]`.
    pub fn new(lambda: f64) -> Self {
        let l = lambda.abs();
        Frequency {
            lambda: l,
            to_pi: std::f64::consts::PI - l,
        }
    }

    /// The frequency `π − δ`.
    pub fn below_pi(delta: f64) -> Self {
        Frequency {
            lambda: std::f64::consts::PI - delta,
            to_pi: delta,
        }
    }

    /// `sin(λ/2)`
    pub fn sin_half(&self) -> f64 {
        if self.lambda <= std::f64::consts::FRAC_PI_2 {
            (0.5 * self.lambda).sin()
        } else {
            (0.5 * self.to_pi).cos()
        }
    }

    /// `cos(λ/2)`
    pub fn cos_half(&self) -> f64 {
        if self.lambda <= std::f64::consts::FRAC_PI_2 {
            (0.5 * self.lambda).cos()
        } else {
            (0.5 * self.to_pi).sin()
        }
    }

    /// `sin λ`
    pub fn sin(&self) -> f64 {
        2.0 * self.sin_half() * self.cos_half()
    }

    /// `cos λ`
    pub fn cos(&self) -> f64 {
        let s = self.sin_half();
        let c = self.cos_half();
        if s < c {
            1.0 - 2.0 * s * s
        } else {
            2.0 * c * c - 1.0
        }
    }
}

/// A piece `[lo, hi]` of an integration range with the power-law exponents
/// of the integrand at either end (`0` for a regular end).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub exp_lo: f64,
    pub exp_hi: f64,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, exp_lo: f64, exp_hi: f64) -> Self {
        Segment {
            lo,
            hi,
            exp_lo,
            exp_hi,
        }
    }

    pub fn regular(lo: f64, hi: f64) -> Self {
        Segment::new(lo, hi, 0.0, 0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// The same piece with both exponents shifted by `shift`.
    pub fn with_shifted_exponents(&self, shift_lo: f64, shift_hi: f64) -> Segment {
        Segment::new(self.lo, self.hi, self.exp_lo + shift_lo, self.exp_hi + shift_hi)
    }
}

/// Splits pieces at the given interior points; the new inner ends are regular.
pub fn split_segments(segments: &[Segment], points: &[f64]) -> Vec<Segment> {
    let mut out = Vec::with_capacity(segments.len() + points.len());
    for seg in segments {
        let mut cuts: Vec<f64> = points
            .iter()
            .copied()
            .filter(|&p| p > seg.lo && p < seg.hi)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        cuts.dedup();
        let mut lo = seg.lo;
        let mut exp_lo = seg.exp_lo;
        for c in cuts {
            out.push(Segment::new(lo, c, exp_lo, 0.0));
            lo = c;
            exp_lo = 0.0;
        }
        out.push(Segment::new(lo, seg.hi, exp_lo, seg.exp_hi));
    }
    out
}

/// Accuracy targets for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-11,
            abs: 0.0,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            rel,
            ..Tolerance::default()
        }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

/// Value and error estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One half of a segment in the substituted variable `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy)]
struct HalfMap {
    /// the endpoint the substitution is anchored at
    anchor: f64,
    /// signed width: `x = anchor + width · s^p`
    width: f64,
    power: f64,
    /// `1 − anchor` and `1 + anchor`
    anchor_one_minus: f64,
    anchor_one_plus: f64,
}

impl HalfMap {
    fn new(anchor: f64, other: f64, exponent: f64) -> Self {
        let power = substitution_power(exponent);
        HalfMap {
            anchor,
            width: other - anchor,
            power,
            anchor_one_minus: 1.0 - anchor,
            anchor_one_plus: 1.0 + anchor,
        }
    }

    #[inline]
    fn point(&self, s: f64) -> (Abscissa, f64) {
        let sp = if self.power == 1.0 { s } else { s.powf(self.power) };
        let offset = self.width * sp;
        let jac = if self.power == 1.0 {
            self.width.abs()
        } else {
            self.width.abs() * self.power * sp / s
        };
        let x = self.anchor + offset;
        (
            Abscissa {
                x,
                one_minus: self.anchor_one_minus - offset,
                one_plus: self.anchor_one_plus + offset,
            },
            jac,
        )
    }
}

fn substitution_power(exponent: f64) -> f64 {
    if exponent < 0.0 {
        1.0 / (1.0 + exponent)
    } else if exponent == exponent.round() {
        1.0
    } else {
        2.0
    }
}

struct Interval {
    map: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<F: Fn(Abscissa) -> f64>(f: &F, map: &HalfMap, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let (pt, jac) = map.point(s);
        if jac == 0.0 || (pt.one_minus == 0.0 || pt.one_plus == 0.0) {
            return 0.0;
        }
        let v = f(pt);
        if v == 0.0 {
            0.0
        } else {
            v * jac
        }
    };
    let fc = eval(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    (resk * half, ((resk - resg) * half).abs())
}

/// Integrates `f` over the union of `segments` to the given tolerance.
///
/// Returns [`Error::QuadratureTolerance`] when the interval budget runs out
/// before the error estimate meets `max(tol.abs, tol.rel·|value|)`, and
/// [`Error::Divergent`] when the integrand produces non-finite values.
pub fn integrate<F>(f: F, segments: &[Segment], tol: Tolerance) -> Result<Estimate>
where
    F: Fn(Abscissa) -> f64,
{
    let mut maps = Vec::with_capacity(2 * segments.len());
    for seg in segments {
        if !(seg.hi > seg.lo) {
            continue;
        }
        if seg.exp_lo == 0.0 && seg.exp_hi == 0.0 {
            maps.push(HalfMap::new(seg.lo, seg.hi, 0.0));
        } else {
            let mid = 0.5 * (seg.lo + seg.hi);
            maps.push(HalfMap::new(seg.lo, mid, seg.exp_lo));
            maps.push(HalfMap::new(seg.hi, mid, seg.exp_hi));
        }
    }

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (i, m) in maps.iter().enumerate() {
        let (v, e) = kronrod(&f, m, 0.0, 1.0);
        total += v;
        total_err += e;
        heap.push(Interval {
            map: i,
            a: 0.0,
            b: 1.0,
            value: v,
            error: e,
        });
    }
    let mut evaluations = 15 * maps.len();

    // pieces too short to split any further
    let mut frozen_err = 0.0;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Divergent {
                what: "integrand",
                at: f64::NAN,
            });
        }
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::QuadratureTolerance {
                estimated: total_err,
                requested: target,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-14 {
            frozen_err += worst.error;
            if heap.is_empty() {
                break;
            }
            if frozen_err > target {
                return Err(Error::QuadratureTolerance {
                    estimated: total_err,
                    requested: target,
                });
            }
            continue;
        }
        let map = &maps[worst.map];
        let (v1, e1) = kronrod(&f, map, worst.a, mid);
        let (v2, e2) = kronrod(&f, map, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Interval {
            map: worst.map,
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Interval {
            map: worst.map,
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated cancellation in the running total
    let value: f64 = heap.iter().map(|iv| iv.value).sum();
    let error: f64 = heap.iter().map(|iv| iv.error).sum::<f64>() + frozen_err;
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Convenience wrapper returning only the value.
pub fn integrate_value<F>(f: F, segments: &[Segment], tol: Tolerance) -> Result<f64>
where
    F: Fn(Abscissa) -> f64,
{
    integrate(f, segments, tol).map(|e| e.value)
}

/// Gauss–Jacobi rule for `∫₀¹ x^a (1 − x)^b g(x) dx`, built by the
/// Golub–Welsch eigenvalue method.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    a: f64,
    b: f64,
}

impl GaussJacobi {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Invalid("Gauss-Jacobi rule needs at least one node".into()));
        }
        if !(a > -1.0) || !(b > -1.0) {
            return Err(Error::domain("exponent", a.min(b), "exponents > -1"));
        }
        // Jacobi weight (1 − t)^α (1 + t)^β on [−1, 1] with t = 2x − 1
        let alpha = b;
        let beta_ = a;
        let ab = alpha + beta_;
        let mut jm = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let diag = if k == 0 {
                (beta_ - alpha) / (ab + 2.0)
            } else {
                (beta_ * beta_ - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
            };
            jm[(k, k)] = diag;
            if k + 1 < n {
                let j = kf + 1.0;
                let off2 = if k == 0 {
                    4.0 * (1.0 + alpha) * (1.0 + beta_) / ((2.0 + ab).powi(2) * (3.0 + ab))
                } else {
                    4.0 * j * (j + alpha) * (j + beta_) * (j + ab)
                        / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
                };
                let off = off2.sqrt();
                jm[(k, k + 1)] = off;
                jm[(k + 1, k)] = off;
            }
        }
        let mu0 = beta(a + 1.0, b + 1.0)?;
        let eig = jm.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = eig.eigenvalues[i];
                let v0 = eig.eigenvectors[(0, i)];
                (0.5 * (t + 1.0), mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap_or(Ordering::Equal));
        Ok(GaussJacobi {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            a,
            b,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// `∫₀¹ x^a (1 − x)^b g(x) dx`
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn smooth_polynomial() {
        let est = integrate(|p| p.x * p.x, &[Segment::regular(0.0, 2.0)], Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, 8.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn endpoint_power_singularities() {
        // ∫₀¹ x^{-0.9} (1-x)^{0.2} dx = B(0.1, 1.2)
        let exact = beta(0.1, 1.2).unwrap();
        let seg = Segment::new(0.0, 1.0, -0.9, 0.2);
        let est = integrate(|p| p.x.powf(-0.9) * p.one_minus.powf(0.2), &[seg], Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, exact, max_relative = 1e-10);
    }

    #[test]
    fn singular_at_minus_one_uses_exact_distance() {
        // ∫_{-1}^0 (1+x)^{-0.95} dx = 20
        let seg = Segment::new(-1.0, 0.0, -0.95, 0.0);
        let est = integrate(|p| p.one_plus.powf(-0.95), &[seg], Tolerance::default()).unwrap();
        assert_relative_eq!(est.value, 20.0, max_relative = 1e-10);
    }

    #[test]
    fn interval_budget_reports_tolerance_failure() {
        let tol = Tolerance {
            rel: 1e-15,
            abs: 0.0,
            max_intervals: 3,
        };
        let r = integrate(|p| (50.0 * p.x).sin().abs(), &[Segment::regular(0.0, 10.0)], tol);
        assert!(matches!(r, Err(Error::QuadratureTolerance { .. })));
    }

    #[test]
    fn split_inserts_regular_inner_ends() {
        let segs = split_segments(&[Segment::new(0.0, 1.0, -0.5, 0.3)], &[0.25, 0.75, 2.0]);
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0], Segment::new(0.0, 0.25, -0.5, 0.0));
        assert_eq!(segs[2], Segment::new(0.75, 1.0, 0.0, 0.3));
    }

    #[test]
    fn gauss_jacobi_exact_on_polynomials() {
        let gj = GaussJacobi::new(6, -0.7, 0.4).unwrap();
        // ∫ x^{-0.7}(1-x)^{0.4} x^3 dx = B(3.3, 1.4)
        assert_relative_eq!(gj.integrate(|x| x.powi(3)), beta(3.3, 1.4).unwrap(), max_relative = 1e-13);
        assert_relative_eq!(gj.integrate(|_| 1.0), beta(0.3, 1.4).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn abscissa_power_near_one() {
        let p = Abscissa::below_one(1e-14);
        assert_relative_eq!(p.powi(1000), (1000.0 * (-1e-14f64).ln_1p()).exp(), max_relative = 1e-15);
        let q = Abscissa::new(-0.3);
        assert_relative_eq!(q.powi(3), -0.027, max_relative = 1e-14);
    }

    #[test]
    fn transfer_function_matches_direct_formula() {
        for &x in &[-0.9, -0.2, 0.0, 0.4, 0.99] {
            for &l in &[0.01, 1.0, 3.0] {
                let direct = 1.0 - 2.0 * x * f64::cos(l) + x * x;
                let v = Abscissa::new(x).ar1_transfer(&Frequency::new(l));
                assert_relative_eq!(v, direct, max_relative = 1e-12);
            }
        }
    }
}
