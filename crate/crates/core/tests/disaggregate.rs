mod common;

use std::f64::consts::PI;

use common::{fractional_noise_acvf, rel_err, tanh_sinh};
use lmagg::disaggregate::*;
use lmagg::mixture::*;
use lmagg::spectral::*;
use lmagg::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

fn interior_frequencies() -> Vec<f64> {
    (0..64).map(|i| 0.1 + (PI - 0.2) * i as f64 / 63.0).collect()
}

#[test]
fn fi_sfi_round_trip() {
    let (d1, d2) = (0.2, 0.3);
    let (fi, n1) = fi_mixture(d1).unwrap();
    let (sfi, n2) = sfi_mixture(d2).unwrap();
    let r = product_mixture_numeric(&fi, n1, &sfi, n2).unwrap();
    let target = closed_spectral(ClosedForm::ProductFi { d1, d2 }).unwrap();
    for lambda in interior_frequencies() {
        let v = spectral_from_mixture(&r.phi, r.noise, lambda).unwrap();
        assert!(rel_err(v, target.eval(lambda).unwrap()) < 1e-4, "λ = {lambda}");
    }
}

#[test]
fn fi_uniform_round_trip() {
    let (fi, n1) = fi_mixture(0.3).unwrap();
    let u = uniform_mixture(-0.6, -0.2).unwrap();
    let n2 = NoiseSpec::new(0.8).unwrap();
    let r = product_mixture_numeric(&fi, n1, &u, n2).unwrap();
    let f1 = closed_spectral(ClosedForm::Fi { d: 0.3 }).unwrap();
    let f2 = closed_spectral(ClosedForm::Uniform { a: -0.6, b: -0.2, variance: 0.8 }).unwrap();
    for lambda in interior_frequencies() {
        let v = spectral_from_mixture(&r.phi, r.noise, lambda).unwrap();
        let w = f1.eval(lambda).unwrap() * f2.eval(lambda).unwrap();
        assert!(rel_err(v, w) < 1e-4, "λ = {lambda}");
    }
}

#[test]
fn result_invariants() {
    let (fi, n1) = fi_mixture(0.25).unwrap();
    let u = uniform_mixture(-0.5, -0.1).unwrap();
    let n2 = NoiseSpec::new(2.0).unwrap();
    let r = product_mixture_numeric(&fi, n1, &u, n2).unwrap();
    assert!((r.phi.total_mass().unwrap() - 1.0).abs() < 1e-6);
    assert!(r.c_star > 0.0 && r.c_star.is_finite());
    let noise = n1.variance() * 2.0 * r.c_star / (2.0 * PI);
    assert!(rel_err(r.noise.variance(), noise) < 1e-8);
    let table = r.phi.table().unwrap();
    assert!(table.points().iter().all(|&(_, v)| v >= 0.0));
    // C₊ by an independent double quadrature
    let c = fi_constant(0.25).unwrap();
    let outer = tanh_sinh(
        |x, from0, to1| {
            let inner = tanh_sinh(|y, _, _| 2.5 / (1.0 - x * y), -0.5, -0.1, 1e-12);
            c * from0.powf(-0.75) * to1.powf(0.5) * (1.0 + x) * inner
        },
        0.0,
        1.0,
        1e-11,
    );
    assert!(rel_err(r.c_star, outer) < 1e-9, "{} vs {outer}", r.c_star);
}

#[test]
fn closed_and_numeric_product_agree() {
    for (d1, d2) in [(0.2, 0.3), (0.25, 0.25), (0.4, 0.1)] {
        let (closed, closed_noise) = product_fi_mixture_closed(d1, d2).unwrap();
        let (fi, n1) = fi_mixture(d1).unwrap();
        let (sfi, n2) = sfi_mixture(d2).unwrap();
        let r = product_mixture_numeric(&fi, n1, &sfi, n2).unwrap();
        for i in 0..=80 {
            let t = 0.1 + 0.01 * i as f64;
            for x in [t, -t] {
                let a = closed.density(x);
                let b = r.phi.density(x);
                assert!((a - b).abs() < 1e-5 * a.max(1.0), "({d1}, {d2}) x = {x}: {a} vs {b}");
            }
        }
        assert!(rel_err(r.noise.variance(), closed_noise.variance()) < 1e-8);
        // C₊ = C(d1) C(d2) C*
        let cstar = compute_cstar(d1, d2).unwrap();
        let expect = fi_constant(d1).unwrap() * fi_constant(d2).unwrap() * cstar;
        assert!(rel_err(r.c_star, expect) < 1e-9);
    }
}

#[test]
fn closed_example_point() {
    let (closed, _) = product_fi_mixture_closed(0.2, 0.2).unwrap();
    let (fi, n1) = fi_mixture(0.2).unwrap();
    let (sfi, n2) = sfi_mixture(0.2).unwrap();
    let r = product_mixture_numeric(&fi, n1, &sfi, n2).unwrap();
    let a = closed.density(0.5);
    assert!((r.density_exact(0.5).unwrap() - a).abs() < 1e-6 * a);
    assert!((r.phi.density(0.5) - a).abs() < 1e-6 * a);
}

#[test]
fn cstar_symmetry_and_noise_identity() {
    for (d1, d2) in [(0.1, 0.45), (0.3, 0.2)] {
        let a = compute_cstar(d1, d2).unwrap();
        let b = compute_cstar(d2, d1).unwrap();
        assert!(rel_err(a, b) < 1e-13);
        let direct = (PI * d1).sin() * (PI * d2).sin() * a / (2.0 * PI.powi(3));
        let via = fi_noise_variance(d1).unwrap()
            * fi_noise_variance(d2).unwrap()
            * fi_constant(d1).unwrap()
            * fi_constant(d2).unwrap()
            * a
            / (2.0 * PI);
        assert!(rel_err(direct, via) < 1e-12);
    }
}

#[test]
fn cstar_monte_carlo() {
    let (d1, d2) = (0.25, 0.25);
    let value = compute_cstar(d1, d2).unwrap();
    let bx = Beta::new(d1, 2.0 - 2.0 * d1).unwrap();
    let by = Beta::new(d2, 2.0 - 2.0 * d2).unwrap();
    let norm = (common::ln_gamma_stirling(d1) + common::ln_gamma_stirling(2.0 - 2.0 * d1)
        - common::ln_gamma_stirling(2.0 - d1))
    .exp()
        * (common::ln_gamma_stirling(d2) + common::ln_gamma_stirling(2.0 - 2.0 * d2)
            - common::ln_gamma_stirling(2.0 - d2))
        .exp();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000_000usize;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x: f64 = bx.sample(&mut rng);
        let y: f64 = by.sample(&mut rng);
        let w = norm * (1.0 + x) * (1.0 + y) / (1.0 + x * y);
        s += w;
        s2 += w * w;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - value).abs() < 3.0 * se, "{mean} ± {se} vs {value}");
}

#[test]
fn support_and_admissibility_checks() {
    let (fi, n) = fi_mixture(0.2).unwrap();
    let straddle = uniform_mixture(-0.2, 0.3).unwrap();
    assert!(matches!(
        product_mixture_numeric(&fi, n, &straddle, n),
        Err(Error::SupportViolation(_))
    ));
    let (sfi, n2) = sfi_mixture(0.2).unwrap();
    assert!(matches!(
        product_mixture_numeric(&sfi, n2, &fi, n),
        Err(Error::SupportViolation(_))
    ));
    // φ₂ ∝ (1+x)^{-1/2} on [−1, 0] is not admissible
    let x: Vec<f64> = (0..=200).map(|i| -1.0 + 1e-9 + (1.0 - 1e-9) * i as f64 / 200.0).collect();
    let v: Vec<f64> = x.iter().map(|&t: &f64| (1.0 + t).powf(-0.5)).collect();
    let bad = MixtureDensity::from_table(Tabulated::from_points(&x[..200], &v[..200]).unwrap());
    assert!(product_mixture_numeric(&fi, n, &bad, n).is_err());
}

#[test]
fn fi_times_analytic_support_and_spectrum() {
    let d = 0.3;
    let g = uniform_mixture(-0.6, -0.2).unwrap();
    let gn = NoiseSpec::unit();
    let r = fi_times_analytic(d, &g, gn).unwrap();
    let (lo, hi) = r.phi.support();
    assert!(lo >= -0.6 && hi <= 1.0);
    let gclosed = closed_spectral(ClosedForm::Uniform { a: -0.6, b: -0.2, variance: 1.0 }).unwrap();
    let fi = closed_spectral(ClosedForm::Fi { d }).unwrap();
    for lambda in interior_frequencies() {
        let ratio = spectral_from_mixture(&r.phi, r.noise, lambda).unwrap() / fi.eval(lambda).unwrap();
        assert!(rel_err(ratio, gclosed.eval(lambda).unwrap()) < 1e-4);
    }
    assert!(matches!(
        fi_times_analytic(d, &uniform_mixture(-0.5, 0.1).unwrap(), gn),
        Err(Error::SupportViolation(_))
    ));
}

#[test]
fn fi_times_narrow_analytic_factor() {
    let g = uniform_mixture(-0.21, -0.2).unwrap();
    let r = fi_times_analytic(0.25, &g, NoiseSpec::unit()).unwrap();
    assert!((r.phi.total_mass().unwrap() - 1.0).abs() < 1e-6);
    // on (0, 1) the result is φ_FI reweighted by a smooth positive factor
    let (fi, _) = fi_mixture(0.25).unwrap();
    let w: Vec<f64> = [0.2, 0.5, 0.8, 0.99].iter().map(|&x| r.phi.density(x) / fi.density(x)).collect();
    assert!(w.iter().all(|&v| v > 0.0 && v.is_finite()));
}

#[test]
fn asymptotics_of_closed_product() {
    let (d1, d2) = (0.2, 0.3);
    let a = verify_product_asymptotics(d1, d2).unwrap();
    assert!((a.exponents[0] + 0.5).abs() < 0.02);
    assert!((a.exponents[2] - 0.6).abs() < 0.02);
    assert!(a.within(0.02, 0.02), "{a:?}");
    let ratio = a.prefactors[0] / a.prefactors[1];
    assert!(rel_err(ratio, (PI * d1).sin() / (PI * d2).sin()) < 0.02);
}

#[test]
fn product_behaves_like_factors_near_ends() {
    let (d1, d2) = (0.15, 0.35);
    let (p, _) = product_fi_mixture_closed(d1, d2).unwrap();
    let (fi, _) = fi_mixture(d1).unwrap();
    let (sfi, _) = sfi_mixture(d2).unwrap();
    let ratio = |a: f64, b: f64| a / b;
    let near_one: Vec<f64> = [1e-6, 1e-9].iter().map(|&t| ratio(p.density(1.0 - t), fi.density(1.0 - t))).collect();
    assert!(rel_err(near_one[0], near_one[1]) < 1e-3);
    let near_minus: Vec<f64> = [1e-6, 1e-9].iter().map(|&t| ratio(p.density(t - 1.0), sfi.density(t - 1.0))).collect();
    assert!(rel_err(near_minus[0], near_minus[1]) < 1e-3);
}

#[test]
fn acvf_convolution_with_analytic_factor() {
    let (fi, n1) = fi_mixture(0.3).unwrap();
    let u = uniform_mixture(-0.6, -0.2).unwrap();
    let r = product_mixture_numeric(&fi, n1, &u, NoiseSpec::unit()).unwrap();
    let gp = acvf_from_mixture(&r.phi, r.noise, 10).unwrap();
    let g2 = acvf_from_mixture(&u, NoiseSpec::unit(), 200).unwrap();
    let g1 = |k: i64| fractional_noise_acvf(0.3, k.unsigned_abs() as usize);
    for h in 0..=10 {
        // plain two-sided sum; γ₂ is below 1e−40 beyond lag 200
        let mut s = 0.0;
        for j in -200i64..=200 {
            s += g1(j + h as i64) * g2.values()[j.unsigned_abs() as usize];
        }
        let direct = s / (2.0 * PI);
        let (series, residual) = product_acvf_series(|k| g1(k as i64), |k| g2.values()[k.min(200)], h, 200);
        assert!((series - direct).abs() < 1e-14 + residual, "h = {h}");
        // the tabulated product density reproduces the series up to its
        // interpolation error
        let v = gp.values()[h];
        assert!((v - direct).abs() < 1e-6 * gp.values()[0], "h = {h}: {v} vs {direct}");
    }
}

#[test]
fn acvf_convolution_of_fi_and_sfi() {
    let (d1, d2) = (0.2, 0.3);
    let (p, pn) = product_fi_mixture_closed(d1, d2).unwrap();
    let gp = acvf_from_mixture(&p, pn, 10).unwrap();
    let g2 = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 } * fractional_noise_acvf(d2, k);
    for h in 0..=10 {
        let (series, residual) = product_acvf_series(|k| fractional_noise_acvf(d1, k), g2, h, 1_000_000);
        let v = gp.values()[h];
        assert!(residual < 1e-6 * gp.values()[0]);
        assert!((v - series).abs() < 1e-6 * gp.values()[0], "h = {h}: {v} vs {series}");
    }
}

#[test]
fn acvf_series_helper() {
    let g1 = |j: usize| 1.0 / (1.0 + j as f64);
    let g2 = |j: usize| 0.5f64.powi(j as i32);
    let (v, residual) = product_acvf_series(g1, g2, 2, 1_000);
    let mut direct = 0.0;
    for j in -200i64..=200 {
        direct += g1((j + 2).unsigned_abs() as usize) * g2(j.unsigned_abs() as usize);
    }
    direct /= 2.0 * PI;
    assert!(rel_err(v, direct) < 1e-11);
    assert!(residual < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cstar_symmetric(d1 in 0.02f64..0.48, d2 in 0.02f64..0.48) {
        let a = compute_cstar(d1, d2).unwrap();
        let b = compute_cstar(d2, d1).unwrap();
        prop_assert!(rel_err(a, b) < 1e-12);
    }

    #[test]
    fn closed_product_normalized(d1 in 0.05f64..0.45, d2 in 0.05f64..0.45) {
        let (p, _) = product_fi_mixture_closed(d1, d2).unwrap();
        prop_assert!((p.total_mass().unwrap() - 1.0).abs() < 1e-6);
    }
}
