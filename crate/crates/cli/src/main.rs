mod output;
mod spec;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lmagg::disaggregate::{product_mixture_numeric_with, verify_product_asymptotics, GridOptions};
use lmagg::mixture::{check_admissibility, fi_constant, fi_constant_duplication_form};
use lmagg::panel::{compare_to_theory, simulate_panel, PanelConfig};
use lmagg::spectral::{acvf_from_mixture, closed_spectral, spectral_from_mixture, spectral_grid, ClosedForm, SpectralDensity};
use lmagg::wold::{fi_ma_coeffs, ma_from_spectrum, DEFAULT_GRID, DEFAULT_TRUNCATION};

use output::{write_csv, Cell, Run};
use spec::MixtureSpec;

#[derive(Parser)]
#[command(name = "lmagg", version, about = "Aggregation of random-coefficient AR(1) processes")]
struct Cli {
    /// worker threads; defaults to all cores
    #[arg(long, env = "AGG_THREADS", global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Out {
    /// output directory, created if missing
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a mixture density and report its admissibility
    Mixture {
        #[arg(long)]
        mixture: MixtureSpec,
        #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u32).range(2..=10_000_000))]
        grid: u32,
        #[command(flatten)]
        out: Out,
    },
    /// Aggregate spectral density on `grid` frequencies in [0, π], by quadrature over the mixture
    Spectrum {
        #[arg(long)]
        mixture: MixtureSpec,
        #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u32).range(2..=10_000_000))]
        grid: u32,
        #[command(flatten)]
        out: Out,
    },
    /// Autocovariances of the aggregate
    Acvf {
        #[arg(long)]
        mixture: MixtureSpec,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(0..=1_000_000))]
        lags: u32,
        #[command(flatten)]
        out: Out,
    },
    /// Mixture density of the product spectrum f1·f2
    Disaggregate {
        /// factor with support in [0, 1]
        #[arg(long)]
        f1: MixtureSpec,
        /// factor with support in [−1, 0]
        #[arg(long)]
        f2: MixtureSpec,
        /// Chebyshev points per lobe of the output table
        #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u32).range(8..=100_000))]
        per_lobe: u32,
        #[command(flatten)]
        out: Out,
    },
    /// MA(∞) coefficients and innovation variance of the aggregate
    Wold {
        #[arg(long)]
        mixture: MixtureSpec,
        #[arg(long, default_value_t = DEFAULT_TRUNCATION as u32, value_parser = clap::value_parser!(u32).range(1..=1 << 24))]
        truncation: u32,
        /// FFT size, a power of two of at least 4·truncation
        #[arg(long, default_value_t = DEFAULT_GRID as u32)]
        grid: u32,
        #[command(flatten)]
        out: Out,
    },
    /// Monte-Carlo panel of aggregated AR(1) series
    Simulate {
        #[arg(long)]
        mixture: MixtureSpec,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u32).range(1..))]
        series: u32,
        #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u32).range(2..))]
        length: u32,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        replicates: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_lag: u32,
        #[arg(long, default_value_t = 0)]
        burn_in: u32,
        #[command(flatten)]
        out: Out,
    },
    /// Check a family of theoretical statements numerically
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0.2)]
        d1: f64,
        #[arg(long, default_value_t = 0.3)]
        d2: f64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    /// power laws of the closed product mixture at 0±, 1− and −1+ (uses d1, d2)
    Asymptotics,
    /// FI mixture spectrum against the closed form (uses d1)
    FiSpectrum,
    /// FI Wold coefficients and innovation variance (uses d1)
    FiWold,
    /// the two forms of the FI normalizing constant (uses d1)
    FiConstant,
}

enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<lmagg::Error> for Failure {
    fn from(e: lmagg::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprint!("{}", e.render());
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Mixture { mixture, grid, out } => run_mixture(&mixture, grid as usize, out),
        Command::Spectrum { mixture, grid, out } => run_spectrum(&mixture, grid as usize, out),
        Command::Acvf { mixture, lags, out } => run_acvf(&mixture, lags as usize, out),
        Command::Disaggregate { f1, f2, per_lobe, out } => run_disaggregate(&f1, &f2, per_lobe as usize, out),
        Command::Wold { mixture, truncation, grid, out } => {
            run_wold(&mixture, truncation as usize, grid as usize, out)
        }
        Command::Simulate { mixture, series, length, replicates, seed, max_lag, burn_in, out } => {
            let mut cfg_args = SimArgs {
                series: series as usize,
                length: length as usize,
                replicates: replicates as usize,
                seed,
                max_lag: max_lag as usize,
                burn_in: burn_in as usize,
            };
            cfg_args.max_lag = cfg_args.max_lag.min(cfg_args.length - 1);
            run_simulate(&mixture, cfg_args, out)
        }
        Command::Verify { suite, d1, d2, out } => run_verify(suite, d1, d2, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run_mixture(spec: &MixtureSpec, grid: usize, out: Out) -> Outcome {
    let (phi, noise) = spec.mixture()?;
    let adm = check_admissibility(&phi)?;
    let mass = phi.total_mass()?;
    let mut run = Run::start("mixture", &out.out)?;
    run.param("mixture", spec);
    run.param("grid", grid);
    let (lo, hi) = phi.support();
    let rows = (0..grid).map(|i| {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / grid as f64;
        vec![Cell::from(x), Cell::from(phi.density(x))]
    });
    write_csv(&run.path("density.csv"), &["x", "phi"], rows)?;
    run.result("support", [lo, hi]);
    run.result("noise_variance", noise.variance());
    run.result("total_mass", mass);
    run.result("admissible", adm.admissible);
    run.result("long_memory", adm.long_memory);
    run.result("exponent_minus", adm.exponent_minus);
    run.result("exponent_plus", adm.exponent_plus);
    run.tolerance("total_mass", (mass - 1.0).abs());
    run.finish()?;
    Ok(())
}

fn run_spectrum(spec: &MixtureSpec, grid: usize, out: Out) -> Outcome {
    let (phi, noise) = spec.mixture()?;
    let f = SpectralDensity::FromMixture { phi, noise };
    let values = spectral_grid(&f, grid)?;
    let mut run = Run::start("spectrum", &out.out)?;
    run.param("mixture", spec);
    run.param("grid", grid);
    write_csv(
        &run.path("spectrum.csv"),
        &["lambda", "f"],
        values.iter().map(|&(l, v)| vec![Cell::from(l), Cell::from(v)]),
    )?;
    run.result("noise_variance", noise_of(&f));
    run.finish()?;
    Ok(())
}

fn noise_of(f: &SpectralDensity) -> f64 {
    match f {
        SpectralDensity::FromMixture { noise, .. } => noise.variance(),
        _ => f64::NAN,
    }
}

fn run_acvf(spec: &MixtureSpec, lags: usize, out: Out) -> Outcome {
    let (phi, noise) = spec.mixture()?;
    let g = acvf_from_mixture(&phi, noise, lags)?;
    let mut run = Run::start("acvf", &out.out)?;
    run.param("mixture", spec);
    run.param("lags", lags);
    write_csv(
        &run.path("acvf.csv"),
        &["h", "gamma"],
        g.values().iter().enumerate().map(|(h, &v)| vec![Cell::from(h), Cell::from(v)]),
    )?;
    run.result("long_memory", g.long_memory());
    run.result("noise_variance", noise.variance());
    run.finish()?;
    Ok(())
}

fn run_disaggregate(f1: &MixtureSpec, f2: &MixtureSpec, per_lobe: usize, out: Out) -> Outcome {
    let (phi1, n1) = f1.mixture()?;
    let (phi2, n2) = f2.mixture()?;
    let grid = GridOptions {
        per_lobe,
        ..GridOptions::default()
    };
    let r = product_mixture_numeric_with(&phi1, n1, &phi2, n2, grid)?;
    let mut run = Run::start("disaggregate", &out.out)?;
    run.param("f1", f1);
    run.param("f2", f2);
    run.param("per_lobe", per_lobe);
    r.phi
        .table()
        .expect("numeric product mixtures are tabulated")
        .write_csv(run.path("phi.csv"))
        .map_err(Failure::from)?;
    run.result("c_star", r.c_star);
    run.result("noise_variance", r.noise.variance());
    run.result("total_mass", r.phi.total_mass()?);
    run.tolerance("quadrature_relative", r.achieved_tolerance);
    run.finish()?;
    Ok(())
}

fn run_wold(spec: &MixtureSpec, truncation: usize, grid: usize, out: Out) -> Outcome {
    let f = spec.spectrum()?;
    let ma = ma_from_spectrum(&f, truncation, grid)?;
    let mut run = Run::start("wold", &out.out)?;
    run.param("mixture", spec);
    run.param("truncation", truncation);
    run.param("grid", grid);
    write_csv(
        &run.path("psi.csv"),
        &["j", "psi"],
        ma.coeffs.iter().enumerate().map(|(j, &v)| vec![Cell::from(j), Cell::from(v)]),
    )?;
    run.result("sigma2", ma.innovation_variance);
    run.result("fft_grid", ma.grid);
    run.result("tail_fraction", ma.tail_fraction());
    run.tolerance("alias_change", ma.alias_change);
    run.finish()?;
    Ok(())
}

struct SimArgs {
    series: usize,
    length: usize,
    replicates: usize,
    seed: u64,
    max_lag: usize,
    burn_in: usize,
}

fn run_simulate(spec: &MixtureSpec, args: SimArgs, out: Out) -> Outcome {
    let (phi, noise) = spec.mixture()?;
    let mut cfg = PanelConfig::new(phi.clone(), noise, args.series, args.length);
    cfg.replicates = args.replicates;
    cfg.seed = args.seed;
    cfg.max_lag = args.max_lag;
    cfg.burn_in = args.burn_in;
    let r = simulate_panel(&cfg)?;
    let report = compare_to_theory(&r, &phi, noise, args.max_lag)?;

    let mut run = Run::start("simulate", &out.out)?;
    run.param("mixture", spec);
    run.param("series", args.series);
    run.param("length", args.length);
    run.param("replicates", args.replicates);
    run.param("seed", args.seed);
    run.param("max_lag", args.max_lag);
    run.param("burn_in", args.burn_in);
    let aggregate_rows = r.aggregates.iter().enumerate().flat_map(|(rep, x)| {
        x.iter()
            .enumerate()
            .map(move |(t, &v)| vec![Cell::from(rep), Cell::from(t + 1), Cell::from(v)])
    });
    write_csv(&run.path("aggregate.csv"), &["replicate", "t", "x"], aggregate_rows)?;
    write_csv(
        &run.path("acf.csv"),
        &["h", "gamma_hat", "gamma_theory", "z"],
        report
            .lags
            .iter()
            .map(|c| vec![Cell::from(c.lag), Cell::from(c.sample), Cell::from(c.theory), Cell::from(c.mean_z)]),
    )?;
    write_csv(
        &run.path("periodogram.csv"),
        &["lambda", "periodogram"],
        r.periodogram.iter().map(|&(l, v)| vec![Cell::from(l), Cell::from(v)]),
    )?;
    run.result(
        "rng_scheme",
        "ChaCha8 seeded with `seed`; series j of replicate r uses stream (r << 32) | j",
    );
    run.result("flagged_fraction", report.flagged_fraction());
    run.result("log_periodogram_slope", report.log_periodogram_slope);
    run.result("normality_p_value", report.normality.p_value);
    run.finish()?;
    Ok(())
}

/// `(check, value, target, passed)`
type Check = (String, f64, f64, bool);

fn run_verify(suite: Suite, d1: f64, d2: f64, out: Out) -> Outcome {
    let checks: Vec<Check> = match suite {
        Suite::Asymptotics => {
            let a = verify_product_asymptotics(d1, d2)?;
            let ends = ["0+", "0-", "1-", "-1+"];
            let mut v = Vec::new();
            for i in 0..4 {
                let (e, pe) = (a.exponents[i], a.predicted_exponents[i]);
                let (p, pp) = (a.prefactors[i], a.predicted_prefactors[i]);
                v.push((format!("exponent {}", ends[i]), e, pe, (e - pe).abs() <= 0.02));
                v.push((format!("prefactor {}", ends[i]), p, pp, (p / pp - 1.0).abs() <= 0.02));
            }
            v
        }
        Suite::FiSpectrum => {
            let f = closed_spectral(ClosedForm::Fi { d: d1 })?;
            let (phi, noise) = lmagg::mixture::fi_mixture(d1)?;
            (0..64)
                .map(|i| {
                    let l = 0.05 + (PI - 0.05) * i as f64 / 63.0;
                    let v = spectral_from_mixture(&phi, noise, l)?;
                    let t = f.eval(l)?;
                    Ok((format!("f({l})"), v, t, (v / t - 1.0).abs() <= 1e-6))
                })
                .collect::<lmagg::Result<_>>()?
        }
        Suite::FiWold => {
            let f = closed_spectral(ClosedForm::Fi { d: d1 })?;
            let ma = ma_from_spectrum(&f, DEFAULT_TRUNCATION, DEFAULT_GRID)?;
            let exact = fi_ma_coeffs(d1, 50)?;
            let mut v = vec![(
                "sigma2".to_string(),
                ma.innovation_variance,
                1.0,
                (ma.innovation_variance - 1.0).abs() <= 1e-6,
            )];
            for (j, &e) in exact.iter().enumerate() {
                let c = ma.coeffs[j];
                v.push((format!("psi[{j}]"), c, e, (c - e).abs() <= 1e-4));
            }
            v
        }
        Suite::FiConstant => {
            let a = fi_constant(d1)?;
            let b = fi_constant_duplication_form(d1)?;
            vec![("C(d)".to_string(), a, b, (a / b - 1.0).abs() <= 1e-12)]
        }
    };
    let mut run = Run::start("verify", &out.out)?;
    let name = suite.to_possible_value().expect("suites have names").get_name().to_string();
    run.param("suite", &name);
    run.param("d1", d1);
    run.param("d2", d2);
    let mut body = String::from("check,value,target,passed\n");
    for (check, value, target, ok) in &checks {
        body.push_str(&format!("{check},{value},{target},{ok}\n"));
    }
    std::fs::write(run.path("checks.csv"), body)?;
    let failed = checks.iter().filter(|c| !c.3).count();
    run.result("checks", checks.len());
    run.result("failed", failed);
    run.finish()?;
    if failed > 0 {
        return Err(Failure::Numerical(format!(
            "{failed} of {} checks in suite `{name}` out of tolerance",
            checks.len()
        )));
    }
    Ok(())
}
