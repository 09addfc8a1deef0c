//! Special functions: log-gamma, gamma, beta and the Gauss hypergeometric
//! function `2F1` on the real parameter range used by the mixture densities.
//!
//! `ln Γ` uses the Lanczos approximation (g = 7, nine coefficients) away from
//! its zeros at 1 and 2, and a Taylor series in `ζ(k) − 1` on `[0.5, 2.5)` so
//! that the relative error stays small where `ln Γ` itself vanishes.
//!
//! `2F1(a, b; c; x)` is summed from its power series for `|x| ≤ 0.7`. Larger
//! negative arguments go through the Pfaff transformation
//! `F(a,b;c;x) = (1−x)^(−a) F(a, c−b; c; x/(x−1))`, and `0.7 < x < 1` through
//! the `1 − x` connection formula. Arguments `x > 1` lie on the branch cut
//! and are rejected.

use std::f64::consts::PI;

use crate::error::{check_memory, Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `ζ(k) − 1` for `k = 2, 3, …, 40` (50-digit reference values rounded to f64).
const ZETA_MINUS_ONE: [f64; 39] = [
    6.449_340_668_482_264e-1,
    2.020_569_031_595_943e-1,
    8.232_323_371_113_819e-2,
    3.692_775_514_336_993e-2,
    1.734_306_198_444_914e-2,
    8.349_277_381_922_827e-3,
    4.077_356_197_944_34e-3,
    2.008_392_826_082_214e-3,
    9.945_751_278_180_853e-4,
    4.941_886_041_194_645e-4,
    2.460_865_533_080_483e-4,
    1.227_133_475_784_891e-4,
    6.124_813_505_870_483e-5,
    3.058_823_630_702_049e-5,
    1.528_225_940_865_187e-5,
    7.637_197_637_899_763e-6,
    3.817_293_264_999_84e-6,
    1.908_212_716_553_939e-6,
    9.539_620_338_727_962e-7,
    4.769_329_867_878_064e-7,
    2.384_505_027_277_33e-7,
    1.192_199_259_653_111e-7,
    5.960_818_905_125_948e-8,
    2.980_350_351_465_228e-8,
    1.490_155_482_836_504e-8,
    7.450_711_789_835_43e-9,
    3.725_334_024_788_457e-9,
    1.862_659_723_513_049e-9,
    9.313_274_324_196_682e-10,
    4.656_629_065_033_784e-10,
    2.328_311_833_676_505e-10,
    1.164_155_017_270_052e-10,
    5.820_772_087_902_701e-11,
    2.910_385_044_497_1e-11,
    1.455_192_189_104_198e-11,
    7.275_959_835_057_482e-12,
    3.637_979_547_378_651e-12,
    1.818_989_650_307_066e-12,
    9.094_947_840_263_888e-13,
];

/// `ln Γ(1 + z) + ln(1 + z)` for `|z| ≤ 1/2`, i.e. `ln Γ(2 + z)`.
fn ln_gamma_two_plus(z: f64) -> f64 {
    // ln Γ(1+z) = -ln(1+z) + (1-γ)z + Σ_{k≥2} (-1)^k (ζ(k)-1) z^k / k
    let mut sum = 0.0;
    let mut power = -z;
    for (i, zm1) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (i + 2) as f64;
        power *= -z;
        let term = zm1 * power / k;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    (1.0 - EULER_GAMMA) * z + sum
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("x", x, "x > 0"));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) = Γ(1 + x) / x
        ln_gamma_two_plus(x) - x.ln_1p() - x.ln()
    } else if x < 1.5 {
        let z = x - 1.0;
        ln_gamma_two_plus(z) - z.ln_1p()
    } else if x < 2.5 {
        ln_gamma_two_plus(x - 2.0)
    } else {
        ln_gamma_lanczos(x)
    }
}

/// `sin(πx)` with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).floor();
    // r in [0, 2)
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r <= 0.5 {
        (PI * r).sin()
    } else if r <= 1.5 {
        (PI * (1.0 - r)).sin()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Gamma function on the real line, excluding the poles at `0, −1, −2, …`.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("x", x, "finite"));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::domain("x", x, "not a non-positive integer"));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x > 0.0 {
        ln_gamma_pos(x).exp()
    } else {
        // reflection: Γ(x) Γ(1 − x) = π / sin(πx)
        PI / (sin_pi(x) * ln_gamma_pos(1.0 - x).exp())
    }
}

/// `1/Γ(x)`, which is entire: zero at the poles of Γ.
pub fn recip_gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else if x > 0.0 {
        (-ln_gamma_pos(x)).exp()
    } else {
        sin_pi(x) * ln_gamma_pos(1.0 - x).exp() / PI
    }
}

/// Euler beta function `B(a, b)` for `a, b > 0`.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp())
}

/// Parameters of `2F1(a, b; c; x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypergeometricParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x: f64,
}

impl HypergeometricParams {
    pub fn new(a: f64, b: f64, c: f64, x: f64) -> Self {
        HypergeometricParams { a, b, c, x }
    }

    pub fn eval(&self) -> Result<f64> {
        hyp2f1(self.a, self.b, self.c, self.x)
    }
}

const SERIES_MAX_TERMS: usize = 10_000;
const SERIES_RADIUS: f64 = 0.7;

fn hyp2f1_series(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        let ratio = (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * x;
        term *= ratio;
        sum += term;
        if term == 0.0 || (term.abs() < 1e-16 * sum.abs() && ratio.abs() < 1.0) {
            return Ok(sum);
        }
    }
    Err(Error::ConvergenceFailure {
        what: "hypergeometric series",
        iterations: SERIES_MAX_TERMS,
    })
}

/// `F(a, b; c; 1)` by Gauss's summation theorem; requires `c − a − b > 0`.
fn hyp2f1_at_one(a: f64, b: f64, c: f64) -> Result<f64> {
    let s = c - a - b;
    if !(s > 0.0) {
        return Err(Error::domain("c - a - b", s, "c - a - b > 0 at x = 1"));
    }
    Ok(gamma(c)? * gamma(s)? * recip_gamma(c - a) * recip_gamma(c - b))
}

/// Gauss hypergeometric function `2F1(a, b; c; x)` for real `x ≤ 1`.
///
/// Errors with [`Error::BranchCut`] for `x > 1`, and with [`Error::Domain`]
/// for `x = 1` when `c − a − b ≤ 0` or when `c` is a pole.
pub fn hyp2f1(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::domain("a, b, c", f64::NAN, "finite parameters"));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::domain("c", c, "c not a non-positive integer"));
    }
    if x.is_nan() {
        return Err(Error::domain("x", x, "x <= 1"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x == 1.0 {
        return hyp2f1_at_one(a, b, c);
    }
    if x > 1.0 {
        return Err(Error::BranchCut { argument: x });
    }
    if x.abs() <= SERIES_RADIUS {
        return hyp2f1_series(a, b, c, x);
    }
    if x < 0.0 {
        // Pfaff: maps (-inf, -0.7) onto (0.41, 1)
        let w = x / (x - 1.0);
        return Ok((1.0 - x).powf(-a) * hyp2f1(a, c - b, c, w)?);
    }
    hyp2f1_near_one(a, b, c, x)
}

/// `0.7 < x < 1` via the connection formula to `1 − x`.
fn hyp2f1_near_one(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let s = c - a - b;
    if (s - s.round()).abs() < 1e-12 {
        // logarithmic case; the series still converges for x < 1
        return hyp2f1_series(a, b, c, x);
    }
    let y = 1.0 - x;
    let first = gamma(c)? * gamma(s)? * recip_gamma(c - a) * recip_gamma(c - b);
    let second = gamma(c)? * gamma(-s)? * recip_gamma(a) * recip_gamma(b);
    let mut value = 0.0;
    if first != 0.0 {
        value += first * hyp2f1_series(a, b, 1.0 - s, y)?;
    }
    if second != 0.0 {
        value += second * y.powf(s) * hyp2f1_series(c - a, c - b, s + 1.0, y)?;
    }
    Ok(value)
}

/// `F(1, d, 2−d; 1/x)` for `x < 0`, through
/// `F(a,b;c;1/x) = (x/(x−1))^b F(b, c−a; c; 1/(1−x))`.
pub fn hyp2f1_reciprocal(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::BranchCut { argument: 1.0 / x });
    }
    Ok((x / (x - 1.0)).powf(b) * hyp2f1(b, c - a, c, 1.0 / (1.0 - x))?)
}

/// The combination `G(x; d) = F(1, d, 2−d; 1/x) − x F(1, d, 2−d; x)` that
/// enters the product mixture density, for `x ∈ [−1, 0)`.
///
/// For `0 < x ≤ 1` the first term sits on the branch cut of `2F1`, where the
/// continuation is complex; that case is reported as [`Error::BranchCut`].
/// At `x = 0` the function vanishes like `|x|^d` and the caller is expected
/// to use the asymptotic form instead.
pub fn g_factor(x: f64, d: f64) -> Result<f64> {
    check_memory("d", d)?;
    if x == 0.0 {
        return Err(Error::domain("x", x, "x != 0 (use the power-law limit)"));
    }
    if x > 0.0 && x <= 1.0 {
        return Err(Error::BranchCut { argument: 1.0 / x });
    }
    if !(x >= -1.0) {
        return Err(Error::domain("x", x, "-1 <= x < 0"));
    }
    let reciprocal = hyp2f1_reciprocal(1.0, d, 2.0 - d, x)?;
    let direct = hyp2f1(1.0, d, 2.0 - d, x)?;
    Ok(reciprocal - x * direct)
}

/// Leading coefficient of `G(−x; d) ~ k(d) x^d` as `x → 0+`:
/// `k(d) = Γ(2−d) Γ(1−d) / Γ(2−2d)`.
pub fn g_factor_origin_coefficient(d: f64) -> Result<f64> {
    check_memory("d", d)?;
    Ok((ln_gamma(2.0 - d)? + ln_gamma(1.0 - d)? - ln_gamma(2.0 - 2.0 * d)?).exp())
}
