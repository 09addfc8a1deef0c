use lmagg::mixture::*;
use lmagg::panel::*;
use lmagg::spectral::{acvf_lag, AcvfSequence};

fn uniform_config(series: usize, length: usize, replicates: usize, seed: u64) -> PanelConfig {
    let mut cfg = PanelConfig::new(uniform_mixture(-0.5, 0.5).unwrap(), NoiseSpec::unit(), series, length);
    cfg.replicates = replicates;
    cfg.seed = seed;
    cfg
}

#[test]
fn seed_determinism_and_thread_independence() {
    let (phi, noise) = fi_mixture(0.3).unwrap();
    let mut cfg = PanelConfig::new(phi, noise, 1000, 512);
    cfg.replicates = 3;
    cfg.seed = 42;
    let a = simulate_panel(&cfg).unwrap();
    let b = simulate_panel(&cfg).unwrap();
    assert_eq!(a.aggregates, b.aggregates);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = single.install(|| simulate_panel(&cfg).unwrap());
    assert_eq!(a.aggregates, c.aggregates);
    cfg.seed = 43;
    let d = simulate_panel(&cfg).unwrap();
    assert_ne!(a.aggregates, d.aggregates);
}

#[test]
fn single_series_recovers_ar1() {
    let mut cfg = PanelConfig::new(uniform_mixture(0.49, 0.51).unwrap(), NoiseSpec::unit(), 1, 100_000);
    cfg.seed = 3;
    cfg.max_lag = 1;
    let r = simulate_panel(&cfg).unwrap();
    let rho = r.sample_acvf[0][1] / r.sample_acvf[0][0];
    // sd of the lag-one autocorrelation is about √((1 − ρ²)/T) ≈ 0.003
    assert!((rho - 0.5).abs() < 0.015, "{rho}");
}

#[test]
fn noise_scale_is_linear() {
    let base = uniform_config(50, 256, 1, 8);
    let mut tiny = base.clone();
    tiny.noise = NoiseSpec::new(1e-20).unwrap();
    let x = simulate_panel(&base).unwrap();
    let y = simulate_panel(&tiny).unwrap();
    for (a, b) in x.aggregates[0].iter().zip(&y.aggregates[0]) {
        assert!((b - 1e-10 * a).abs() <= 1e-12 * 1e-10 * a.abs().max(1e-300) + 1e-300);
    }
    assert!(y.aggregates[0].iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn burn_in_keeps_the_stationary_law() {
    let mut cfg = uniform_config(200, 1024, 16, 5);
    cfg.burn_in = 100;
    let r = simulate_panel(&cfg).unwrap();
    let gamma0 = acvf_lag(&cfg.phi, cfg.noise, 0).unwrap();
    let se = r.mc_stderr[0] / (cfg.replicates as f64).sqrt();
    assert!((r.mean_acvf[0] - gamma0).abs() < 4.0 * se);
}

#[test]
fn variance_does_not_depend_on_panel_size() {
    let gamma0 = (3.0f64).ln();
    for (k, n) in [100, 1_000, 10_000].into_iter().enumerate() {
        let r = simulate_panel(&uniform_config(n, 2048, 8, 100 + k as u64)).unwrap();
        let se = r.mc_stderr[0] / 8f64.sqrt();
        assert!((r.mean_acvf[0] - gamma0).abs() < 4.0 * se, "N = {n}: {} ± {se}", r.mean_acvf[0]);
    }
}

#[test]
fn first_and_second_halves_agree() {
    let (fi, fin) = fi_mixture(0.3).unwrap();
    let mut cfgs = vec![uniform_config(200, 2048, 32, 17)];
    let mut f = PanelConfig::new(fi, fin, 200, 2048);
    f.replicates = 32;
    f.seed = 18;
    cfgs.push(f);
    for cfg in cfgs {
        let r = simulate_panel(&cfg).unwrap();
        let half = cfg.length / 2;
        let diffs: Vec<Vec<f64>> = r
            .aggregates
            .iter()
            .map(|x| {
                let a = sample_acvf(&x[..half], 10);
                let b = sample_acvf(&x[half..], 10);
                a.iter().zip(&b).map(|(u, v)| u - v).collect()
            })
            .collect();
        let n = diffs.len() as f64;
        for h in 0..=10 {
            let m = diffs.iter().map(|d| d[h]).sum::<f64>() / n;
            let sd = (diffs.iter().map(|d| (d[h] - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!(m.abs() < 4.0 * sd / n.sqrt(), "h = {h}: {m} vs sd {sd}");
        }
    }
}

#[test]
fn sample_statistics_are_well_formed() {
    let r = simulate_panel(&uniform_config(100, 1024, 2, 4)).unwrap();
    for row in &r.sample_acvf {
        let seq = AcvfSequence::new(row.clone(), NoiseSpec::unit(), false);
        assert!(seq.min_toeplitz_eigenvalue() >= -1e-8 * row[0]);
    }
    assert_eq!(r.periodogram.len(), 512);
    assert!(r.periodogram.iter().all(|&(_, v)| v >= 0.0));
    assert!(r.mc_stderr.iter().all(|s| s.is_finite() && *s > 0.0));
}

#[test]
fn log_periodogram_slopes() {
    // E I(λ) = f(λ) for any panel size, but the average converges slowly
    // because of coefficients near one: many short replicates work best
    let (fi, noise) = fi_mixture(0.25).unwrap();
    let mut cfg = PanelConfig::new(fi.clone(), noise, 100, 1024);
    cfg.replicates = 1000;
    cfg.seed = 1;
    let r = simulate_panel(&cfg).unwrap();
    let rep = compare_to_theory(&r, &fi, noise, 50).unwrap();
    assert!((rep.log_periodogram_slope + 0.5).abs() < 0.05, "{}", rep.log_periodogram_slope);

    let u = uniform_mixture(-0.5, 0.5).unwrap();
    let r = simulate_panel(&uniform_config(100, 1024, 200, 2)).unwrap();
    let rep = compare_to_theory(&r, &u, NoiseSpec::unit(), 50).unwrap();
    assert!(rep.log_periodogram_slope.abs() < 0.05, "{}", rep.log_periodogram_slope);
    assert!(rep.flagged_fraction() <= 0.01, "{}", rep.flagged_fraction());
    assert!(rep.normality.p_value > 0.01);
}

#[test]
fn theory_report_shapes() {
    let u = uniform_mixture(-0.5, 0.5).unwrap();
    let r = simulate_panel(&uniform_config(100, 512, 5, 6)).unwrap();
    let rep = compare_to_theory(&r, &u, NoiseSpec::unit(), 20).unwrap();
    assert_eq!(rep.lags.len(), 21);
    assert!(rep.lags.iter().all(|c| c.z.len() == 5));
    let c = &rep.lags[3];
    assert!((c.expected - c.theory * (512.0 - 3.0) / 512.0).abs() < 1e-15);
    assert!(compare_to_theory(&r, &u, NoiseSpec::unit(), 200).is_err());
}

#[test]
fn invalid_configurations() {
    let mut cfg = uniform_config(0, 10, 1, 0);
    assert!(simulate_panel(&cfg).is_err());
    cfg.series = 1;
    cfg.replicates = 0;
    assert!(simulate_panel(&cfg).is_err());
    // a tabulated density touching 1 like (1 − x)^{−1/2} is not admissible
    let x: Vec<f64> = (0..200).map(|i| 0.005 * i as f64).chain([1.0 - 1e-6]).collect();
    let v: Vec<f64> = x.iter().map(|&t: &f64| (1.0 - t).powf(-0.5)).collect();
    let bad = MixtureDensity::from_table(Tabulated::from_points(&x, &v).unwrap());
    let cfg = PanelConfig::new(bad, NoiseSpec::unit(), 10, 10);
    assert!(simulate_panel(&cfg).is_err());
}

#[test]
fn jarque_bera_detects_skew() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Exp1, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    let normal: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
    assert!(jarque_bera(&normal).p_value > 0.01);
    let skewed: Vec<f64> = (0..2000).map(|_| Exp1.sample(&mut rng)).collect();
    assert!(jarque_bera(&skewed).p_value < 1e-6);
}
