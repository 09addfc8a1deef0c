//! Mixture densities of the random AR(1) coefficient.
//!
//! A [`MixtureDensity`] is a probability density on `(−1, 1)`. Besides
//! pointwise evaluation it describes itself as a list of [`Segment`]s whose
//! endpoint exponents give the local power law `|x − x₀|^α`, which is what
//! the quadrature in the rest of the crate needs.

mod sampler;
mod tabulated;

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

pub use sampler::CoefficientSampler;
pub use tabulated::{Lobe, Tabulated};

use crate::disaggregate::compute_cstar;
use crate::error::{check_memory, Error, Result};
use crate::powerlaw::{fit_checked, geometric_distances};
use crate::quad::{integrate, Abscissa, Segment, Tolerance};
use crate::specfun::{g_factor, ln_gamma};

/// Variance of the micro-level noise `ε_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if variance.is_finite() && variance > 0.0 {
            Ok(NoiseSpec { variance })
        } else {
            Err(Error::domain("noise variance", variance, "finite and > 0"))
        }
    }

    pub fn unit() -> Self {
        NoiseSpec { variance: 1.0 }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Which family a density belongs to, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureKind {
    Fi { d: f64 },
    Sfi { d: f64 },
    ProductFi { d1: f64, d2: f64 },
    Uniform { a: f64, b: f64 },
    Semiparametric { d1: f64, d2: f64 },
    Tabulated,
}

pub type Psi = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
struct Semiparametric {
    d1: f64,
    d2: f64,
    psi: Psi,
    scale: f64,
    lo: f64,
    hi: f64,
    singularities: Vec<(f64, f64)>,
}

#[derive(Clone)]
enum Repr {
    Fi {
        d: f64,
        c: f64,
    },
    Sfi {
        d: f64,
        c: f64,
    },
    ProductFi {
        d1: f64,
        d2: f64,
        cstar: f64,
        c12: f64,
        c21: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Semiparametric(Semiparametric),
    Tabulated(Tabulated),
}

/// A probability density for the AR(1) coefficient, supported in `[−1, 1]`.
#[derive(Clone)]
pub struct MixtureDensity {
    repr: Repr,
}

impl fmt::Debug for MixtureDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.support();
        f.debug_struct("MixtureDensity")
            .field("kind", &self.kind())
            .field("support", &(lo, hi))
            .finish()
    }
}

/// `C(d) = Γ(3−d) / (2 Γ(d) Γ(2−2d))`, the normalizing constant of the
/// FI(d) mixture density.
pub fn fi_constant(d: f64) -> Result<f64> {
    check_memory("d", d)?;
    Ok((ln_gamma(3.0 - d)? - ln_gamma(d)? - ln_gamma(2.0 - 2.0 * d)?).exp() / 2.0)
}

/// The same constant in its second form,
/// `2^{2d−2} sin(πd) Γ(3−d) / (√π Γ(3/2−d))`.
pub fn fi_constant_duplication_form(d: f64) -> Result<f64> {
    check_memory("d", d)?;
    let log = (2.0 * d - 2.0) * 2f64.ln() + ln_gamma(3.0 - d)? - 0.5 * PI.ln() - ln_gamma(1.5 - d)?;
    Ok(log.exp() * (PI * d).sin())
}

/// Noise variance that makes the FI(d) mixture aggregate to the unit-scale
/// FI spectrum: `sin(πd) / (C(d) π)`.
pub fn fi_noise_variance(d: f64) -> Result<f64> {
    Ok((PI * d).sin() / (fi_constant(d)? * PI))
}

/// The FI(d) mixture `C(d) x^{d−1} (1−x)^{1−2d} (1+x)` on `[0, 1]`.
pub fn fi_mixture(d: f64) -> Result<(MixtureDensity, NoiseSpec)> {
    let c = fi_constant(d)?;
    let noise = NoiseSpec::new(fi_noise_variance(d)?)?;
    Ok((MixtureDensity { repr: Repr::Fi { d, c } }, noise))
}

/// The mirrored FI(d) mixture on `[−1, 0]`, giving a spectral pole at `π`.
pub fn sfi_mixture(d: f64) -> Result<(MixtureDensity, NoiseSpec)> {
    let c = fi_constant(d)?;
    let noise = NoiseSpec::new(fi_noise_variance(d)?)?;
    Ok((MixtureDensity { repr: Repr::Sfi { d, c } }, noise))
}

/// Closed-form mixture of the product spectrum `FI(d1) · SFI(d2)`.
pub fn product_fi_mixture_closed(d1: f64, d2: f64) -> Result<(MixtureDensity, NoiseSpec)> {
    check_memory("d1", d1)?;
    check_memory("d2", d2)?;
    let cstar = compute_cstar(d1, d2)?;
    let side = |d: f64| -> Result<f64> {
        Ok((ln_gamma(d)? + ln_gamma(2.0 - 2.0 * d)? - ln_gamma(2.0 - d)?).exp() / cstar)
    };
    let c12 = side(d2)?;
    let c21 = side(d1)?;
    let variance = (PI * d1).sin() * (PI * d2).sin() * cstar / (2.0 * PI.powi(3));
    Ok((
        MixtureDensity {
            repr: Repr::ProductFi {
                d1,
                d2,
                cstar,
                c12,
                c21,
            },
        },
        NoiseSpec::new(variance)?,
    ))
}

/// The uniform density on `[a, b]` with `−1 < a < b < 1`.
pub fn uniform_mixture(a: f64, b: f64) -> Result<MixtureDensity> {
    if !(a > -1.0 && a < 1.0) {
        return Err(Error::domain("a", a, "-1 < a < b < 1"));
    }
    if !(b > a && b < 1.0) {
        return Err(Error::domain("b", b, "-1 < a < b < 1"));
    }
    Ok(MixtureDensity {
        repr: Repr::Uniform { a, b },
    })
}

/// `φ(x) ∝ (1−x)^{1−2d1} (1+x)^{1−2d2} ψ(x)` on `[−1, 1]`, normalized
/// numerically. See [`SemiparametricSpec`] for restricted supports and
/// interior singularities of `ψ`.
pub fn semiparametric_mixture<F>(d1: f64, d2: f64, psi: F) -> Result<MixtureDensity>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    SemiparametricSpec::new(d1, d2, psi).build()
}

/// Builder for semiparametric densities.
#[derive(Clone)]
pub struct SemiparametricSpec {
    d1: f64,
    d2: f64,
    psi: Psi,
    lo: f64,
    hi: f64,
    singularities: Vec<(f64, f64)>,
}

impl SemiparametricSpec {
    pub fn new<F>(d1: f64, d2: f64, psi: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SemiparametricSpec {
            d1,
            d2,
            psi: Arc::new(psi),
            lo: -1.0,
            hi: 1.0,
            singularities: Vec::new(),
        }
    }

    /// Restricts the support to `[lo, hi]`; `ψ` is treated as zero outside.
    pub fn support(mut self, lo: f64, hi: f64) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }

    /// Declares that `ψ` behaves like `|x − at|^exponent` near `at`.
    pub fn singularity(mut self, at: f64, exponent: f64) -> Self {
        self.singularities.push((at, exponent));
        self
    }

    pub fn build(self) -> Result<MixtureDensity> {
        check_memory("d1", self.d1)?;
        check_memory("d2", self.d2)?;
        if !(self.lo >= -1.0 && self.hi <= 1.0 && self.lo < self.hi) {
            return Err(Error::Invalid(format!(
                "semiparametric support [{}, {}] must be a non-empty subinterval of [-1, 1]",
                self.lo, self.hi
            )));
        }
        for &(at, e) in &self.singularities {
            if !(at > self.lo && at < self.hi) && at != self.lo && at != self.hi {
                return Err(Error::Invalid(format!("singularity at {at} lies outside the support")));
            }
            if !(e > -1.0) {
                return Err(Error::domain("singularity exponent", e, "> -1 (integrable)"));
            }
        }
        for end in [self.lo, self.hi] {
            if end.abs() == 1.0 && !(self.psi)(end).is_finite() {
                return Err(Error::Invalid(format!("psi({end}) is not finite")));
            }
        }
        let mut semi = Semiparametric {
            d1: self.d1,
            d2: self.d2,
            psi: self.psi,
            scale: 1.0,
            lo: self.lo,
            hi: self.hi,
            singularities: self.singularities,
        };
        semi.singularities
            .sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut density = MixtureDensity {
            repr: Repr::Semiparametric(semi),
        };
        let mass = density.total_mass()?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Divergent {
                what: "normalization integral",
                at: mass,
            });
        }
        if let Repr::Semiparametric(s) = &mut density.repr {
            s.scale = 1.0 / mass;
        }
        Ok(density)
    }
}

/// Result of [`check_admissibility`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// `∫ φ(x) / (1 − x²) dx < ∞`
    pub admissible: bool,
    /// `∫ φ(x) / (1 − x²)² dx = ∞`
    pub long_memory: bool,
    /// power-law exponent of `φ` at `−1`, if the support reaches it
    pub exponent_minus: Option<f64>,
    /// power-law exponent of `φ` at `+1`, if the support reaches it
    pub exponent_plus: Option<f64>,
}

/// Exponent slack for exponents obtained by regression rather than read
/// from parameters.
const ESTIMATED_EXPONENT_SLACK: f64 = 0.01;

/// Decides admissibility and long memory from the power-law exponents of
/// `φ` at `±1`.
///
/// With `φ ~ c (1 ∓ x)^α`, the first integral is finite iff `α > 0` and the
/// second diverges iff `α ≤ 1` (`α = 1` diverges logarithmically).
/// Exponents come from the parameters when known and otherwise from a
/// log-log regression on `1 − x = 2^{−k}`, `k = 8..20`.
pub fn check_admissibility(phi: &MixtureDensity) -> Result<Admissibility> {
    let (minus, plus) = phi.endpoint_exponents()?;
    let mut admissible = true;
    let mut long_memory = false;
    for e in [minus, plus].into_iter().flatten() {
        let (value, slack) = match e {
            Exponent::Known(v) => (v, 0.0),
            Exponent::Estimated(v) => (v, ESTIMATED_EXPONENT_SLACK),
        };
        if value <= 0.0 {
            admissible = false;
        }
        if value <= 1.0 + slack {
            long_memory = true;
        }
    }
    Ok(Admissibility {
        admissible,
        long_memory: admissible && long_memory,
        exponent_minus: minus.map(Exponent::value),
        exponent_plus: plus.map(Exponent::value),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Exponent {
    Known(f64),
    Estimated(f64),
}

impl Exponent {
    pub(crate) fn value(self) -> f64 {
        match self {
            Exponent::Known(v) | Exponent::Estimated(v) => v,
        }
    }
}

/// `x − lo` from an abscissa, exact when `lo` is `−1` or `0`.
#[inline]
pub(crate) fn above(p: Abscissa, lo: f64) -> f64 {
    if lo == -1.0 {
        p.one_plus
    } else {
        p.x - lo
    }
}

/// `hi − x` from an abscissa, exact when `hi` is `1` or `0`.
#[inline]
pub(crate) fn below(p: Abscissa, hi: f64) -> f64 {
    if hi == 1.0 {
        p.one_minus
    } else {
        hi - p.x
    }
}

#[inline]
fn pow_or_one(base: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        base.powf(exponent)
    }
}

impl MixtureDensity {
    pub fn kind(&self) -> MixtureKind {
        match &self.repr {
            Repr::Fi { d, .. } => MixtureKind::Fi { d: *d },
            Repr::Sfi { d, .. } => MixtureKind::Sfi { d: *d },
            Repr::ProductFi { d1, d2, .. } => MixtureKind::ProductFi { d1: *d1, d2: *d2 },
            Repr::Uniform { a, b } => MixtureKind::Uniform { a: *a, b: *b },
            Repr::Semiparametric(s) => MixtureKind::Semiparametric { d1: s.d1, d2: s.d2 },
            Repr::Tabulated(_) => MixtureKind::Tabulated,
        }
    }

    /// Wraps a table as a density; the table is already normalized.
    pub fn from_table(table: Tabulated) -> Self {
        MixtureDensity {
            repr: Repr::Tabulated(table),
        }
    }

    /// Loads a two-column `x,phi` CSV table.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::from_table(Tabulated::read_csv(path)?))
    }

    /// The table behind a tabulated density.
    pub fn table(&self) -> Option<&Tabulated> {
        match &self.repr {
            Repr::Tabulated(t) => Some(t),
            _ => None,
        }
    }

    /// `C*` of a closed-form product density.
    pub fn cstar(&self) -> Option<f64> {
        match &self.repr {
            Repr::ProductFi { cstar, .. } => Some(*cstar),
            _ => None,
        }
    }

    /// `ψ(1)` and `ψ(−1)` of a semiparametric density after normalization,
    /// where the support reaches those points.
    pub fn psi_at_ends(&self) -> Option<(Option<f64>, Option<f64>)> {
        match &self.repr {
            Repr::Semiparametric(s) => {
                let plus = (s.hi == 1.0).then(|| (s.psi)(1.0) * s.scale);
                let minus = (s.lo == -1.0).then(|| (s.psi)(-1.0) * s.scale);
                Some((plus, minus))
            }
            _ => None,
        }
    }

    /// Smallest closed interval outside which `φ = 0`.
    pub fn support(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Fi { .. } => (0.0, 1.0),
            Repr::Sfi { .. } => (-1.0, 0.0),
            Repr::ProductFi { .. } => (-1.0, 1.0),
            Repr::Uniform { a, b } => (*a, *b),
            Repr::Semiparametric(s) => (s.lo, s.hi),
            Repr::Tabulated(t) => t.support(),
        }
    }

    /// `φ(x)`
    pub fn density(&self, x: f64) -> f64 {
        self.density_at(Abscissa::new(x))
    }

    /// `φ(x)` using the exact distances to `±1` carried by the abscissa.
    pub fn density_at(&self, p: Abscissa) -> f64 {
        let x = p.x;
        if !(p.one_plus >= 0.0 && p.one_minus >= 0.0) {
            return 0.0;
        }
        match &self.repr {
            Repr::Fi { d, c } => {
                if x < 0.0 {
                    return 0.0;
                }
                c * x.powf(d - 1.0) * p.one_minus.powf(1.0 - 2.0 * d) * p.one_plus
            }
            Repr::Sfi { d, c } => {
                if x > 0.0 {
                    return 0.0;
                }
                c * (-x).powf(d - 1.0) * p.one_plus.powf(1.0 - 2.0 * d) * p.one_minus
            }
            Repr::ProductFi {
                d1, d2, c12, c21, ..
            } => {
                if x == 0.0 {
                    return f64::INFINITY;
                }
                if x > 0.0 {
                    let g = g_factor(-x, *d2).unwrap_or(f64::NAN);
                    c12 * x.powf(d1 - 1.0) * p.one_minus.powf(1.0 - 2.0 * d1) * g
                } else {
                    let g = g_factor(x, *d1).unwrap_or(f64::NAN);
                    c21 * (-x).powf(d2 - 1.0) * p.one_plus.powf(1.0 - 2.0 * d2) * g
                }
            }
            Repr::Uniform { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Repr::Semiparametric(s) => {
                if x < s.lo || x > s.hi {
                    return 0.0;
                }
                s.scale
                    * pow_or_one(p.one_minus, 1.0 - 2.0 * s.d1)
                    * pow_or_one(p.one_plus, 1.0 - 2.0 * s.d2)
                    * (s.psi)(x)
            }
            Repr::Tabulated(t) => t.eval(p),
        }
    }

    /// Pieces of the support with the power-law exponent of `φ` at each end.
    pub fn segments(&self) -> Vec<Segment> {
        match &self.repr {
            Repr::Fi { d, .. } => vec![Segment::new(0.0, 1.0, d - 1.0, 1.0 - 2.0 * d)],
            Repr::Sfi { d, .. } => vec![Segment::new(-1.0, 0.0, 1.0 - 2.0 * d, d - 1.0)],
            Repr::ProductFi { d1, d2, .. } => vec![
                Segment::new(-1.0, 0.0, 1.0 - 2.0 * d2, d1 + d2 - 1.0),
                Segment::new(0.0, 1.0, d1 + d2 - 1.0, 1.0 - 2.0 * d1),
            ],
            Repr::Uniform { a, b } => vec![Segment::regular(*a, *b)],
            Repr::Semiparametric(s) => {
                let exponent_at = |x: f64| -> f64 {
                    let mut e = 0.0;
                    for &(at, ex) in &s.singularities {
                        if at == x {
                            e += ex;
                        }
                    }
                    if x == 1.0 {
                        e += 1.0 - 2.0 * s.d1;
                    }
                    if x == -1.0 {
                        e += 1.0 - 2.0 * s.d2;
                    }
                    e
                };
                let mut cuts = vec![s.lo];
                for &(at, _) in &s.singularities {
                    if at > s.lo && at < s.hi && cuts.last() != Some(&at) {
                        cuts.push(at);
                    }
                }
                cuts.push(s.hi);
                cuts.windows(2)
                    .map(|w| Segment::new(w[0], w[1], exponent_at(w[0]), exponent_at(w[1])))
                    .collect()
            }
            Repr::Tabulated(t) => t.segments(),
        }
    }

    /// `∫ φ(x) g(x) dx` over the support, with the support pieces further
    /// cut at `breakpoints` and the exponents at `∓1` shifted by `shift`.
    pub fn integrate<G>(
        &self,
        g: G,
        shift: (f64, f64),
        breakpoints: &[f64],
        tol: Tolerance,
    ) -> Result<crate::quad::Estimate>
    where
        G: Fn(Abscissa) -> f64,
    {
        let segs: Vec<Segment> = self
            .segments()
            .into_iter()
            .map(|s| {
                let lo = if s.lo == -1.0 { shift.0 } else { 0.0 };
                let hi = if s.hi == 1.0 { shift.1 } else { 0.0 };
                s.with_shifted_exponents(lo, hi)
            })
            .collect();
        let segs = crate::quad::split_segments(&segs, breakpoints);
        integrate(
            |p| {
                let v = self.density_at(p);
                if v == 0.0 {
                    0.0
                } else {
                    v * g(p)
                }
            },
            &segs,
            tol,
        )
    }

    /// `∫ φ`, which is 1 for every constructed density up to quadrature error.
    pub fn total_mass(&self) -> Result<f64> {
        Ok(self
            .integrate(|_| 1.0, (0.0, 0.0), &[], Tolerance::relative(1e-12))?
            .value)
    }

    /// `E a^k`
    pub fn moment(&self, k: u32) -> Result<f64> {
        Ok(self
            .integrate(|p| p.powi(k), (0.0, 0.0), &[], Tolerance::relative(1e-12))?
            .value)
    }

    /// `P(a ≤ x)`
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if x <= lo {
            return Ok(0.0);
        }
        if x >= hi {
            return Ok(1.0);
        }
        let segs: Vec<Segment> = crate::quad::split_segments(&self.segments(), &[x])
            .into_iter()
            .filter(|s| s.hi <= x)
            .collect();
        let est = integrate(|p| self.density_at(p), &segs, Tolerance::relative(1e-12))?;
        Ok(est.value.clamp(0.0, 1.0))
    }

    /// A rejection sampler for this density.
    pub fn sampler(&self) -> Result<CoefficientSampler> {
        CoefficientSampler::new(self)
    }

    pub(crate) fn endpoint_exponents(&self) -> Result<(Option<Exponent>, Option<Exponent>)> {
        Ok(match &self.repr {
            Repr::Fi { d, .. } => (None, Some(Exponent::Known(1.0 - 2.0 * d))),
            Repr::Sfi { d, .. } => (Some(Exponent::Known(1.0 - 2.0 * d)), None),
            Repr::ProductFi { d1, d2, .. } => (
                Some(Exponent::Known(1.0 - 2.0 * d2)),
                Some(Exponent::Known(1.0 - 2.0 * d1)),
            ),
            Repr::Uniform { .. } => (None, None),
            Repr::Semiparametric(s) => {
                let plus = if s.hi < 1.0 {
                    None
                } else if (s.psi)(1.0) != 0.0 {
                    Some(Exponent::Known(1.0 - 2.0 * s.d1))
                } else {
                    Some(self.estimate_exponent(1.0, 1.0)?)
                };
                let minus = if s.lo > -1.0 {
                    None
                } else if (s.psi)(-1.0) != 0.0 {
                    Some(Exponent::Known(1.0 - 2.0 * s.d2))
                } else {
                    Some(self.estimate_exponent(-1.0, 1.0)?)
                };
                (minus, plus)
            }
            Repr::Tabulated(t) => {
                let (lo, hi) = t.support();
                let reach = 1.0 - 2f64.powi(-ESTIMATION_FIRST);
                let plus = if hi >= reach {
                    Some(self.estimate_exponent(1.0, 1.0 - hi)?)
                } else {
                    None
                };
                let minus = if lo <= -reach {
                    Some(self.estimate_exponent(-1.0, 1.0 + lo)?)
                } else {
                    None
                };
                (minus, plus)
            }
        })
    }

    /// Regression estimate of the exponent at `end = ±1`, using only
    /// distances at least `min_distance` from it.
    fn estimate_exponent(&self, end: f64, min_distance: f64) -> Result<Exponent> {
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for t in geometric_distances(ESTIMATION_FIRST, ESTIMATION_LAST) {
            if t < min_distance {
                continue;
            }
            let p = if end > 0.0 {
                Abscissa::below_one(t)
            } else {
                Abscissa::above_minus_one(t)
            };
            let v = self.density_at(p);
            if v > 0.0 {
                ts.push(t);
                vs.push(v);
            } else if v == 0.0 {
                // identically zero near the end: nothing to diverge
                return Ok(Exponent::Estimated(f64::INFINITY));
            }
        }
        if ts.len() < 3 {
            return Err(Error::Inconclusive {
                what: "endpoint exponent (too few points near the endpoint)",
                r_squared: f64::NAN,
                threshold: ADMISSIBILITY_R2,
            });
        }
        let fit = fit_checked(&ts, &vs, ADMISSIBILITY_R2, "endpoint exponent")?;
        Ok(Exponent::Estimated(fit.exponent))
    }
}

const ESTIMATION_FIRST: i32 = 8;
const ESTIMATION_LAST: i32 = 20;
const ADMISSIBILITY_R2: f64 = 0.99;
