use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lmagg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmagg"))
        .args(args)
        .env_remove("AGG_THREADS")
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn spectrum_matches_fi_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = lmagg(&["spectrum", "--mixture", "fi:d=0.3", "--grid", "65", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let (header, rows) = read_csv(&out.join("spectrum.csv"));
    assert_eq!(header, "lambda,f");
    assert_eq!(rows.len(), 65);
    assert!(rows[0][1].is_infinite());
    for r in &rows[1..] {
        let exact = (2.0 * (r[0] / 2.0).sin()).powf(-0.6) / (2.0 * PI);
        assert!((r[1] / exact - 1.0).abs() < 1e-6, "{r:?}");
    }
    let m = manifest(&out);
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["parameters"]["mixture"], "fi:d=0.3");
    assert!(m["wall_time_ms"].is_u64());
    assert_eq!(fs::read_dir(&out).unwrap().count(), 2);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        let o = lmagg(&[
            "simulate", "--mixture", "uniform:a=-0.5,b=0.5", "--series", "300", "--length", "64",
            "--replicates", "2", "--seed", "7", "--max-lag", "10", "--threads", threads,
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["aggregate.csv", "acf.csv", "periodogram.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let (header, rows) = read_csv(&a.join("acf.csv"));
    assert_eq!(header, "h,gamma_hat,gamma_theory,z");
    assert_eq!(rows.len(), 11);
    assert!((rows[0][2] - 3f64.ln()).abs() < 1e-12);
    let (_, agg) = read_csv(&a.join("aggregate.csv"));
    assert_eq!(agg.len(), 128);
    assert!(manifest(&a)["results"]["rng_scheme"].is_string());
}

#[test]
fn floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = lmagg(&["acvf", "--mixture", "fi:d=0.25", "--lags", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("acvf.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cell = line.split(',').nth(1).unwrap();
        let v: f64 = cell.parse().unwrap();
        assert_eq!(format!("{v}"), cell);
    }
    assert!(text.ends_with('\n') && !text.contains('\r'));
    assert_eq!(manifest(&out)["results"]["long_memory"], true);
}

#[test]
fn disaggregate_writes_table_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = lmagg(&[
        "disaggregate", "--f1", "fi:d=0.2", "--f2", "sfi:d=0.3", "--per-lobe", "64",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("phi.csv"));
    assert_eq!(header, "x,phi");
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    let m = manifest(&out);
    let c = m["results"]["c_star"].as_f64().unwrap();
    assert!(c > 0.0 && c.is_finite());
    assert!(m["achieved_tolerances"]["quadrature_relative"].is_number());

    // the table feeds back in as a mixture spec
    let table = out.join("phi.csv");
    let spec = format!("table:{}", table.display());
    let back = dir.path().join("m");
    let o = lmagg(&["mixture", "--mixture", &spec, "--grid", "16", "--out", back.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&back);
    assert!((m["results"]["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(m["results"]["long_memory"], true);
}

#[test]
fn wold_and_verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let o = lmagg(&[
        "wold", "--mixture", "fi:d=0.2", "--truncation", "64", "--grid", "1024",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&out.join("psi.csv"));
    assert_eq!(rows.len(), 65);
    assert_eq!(rows[1][1], 0.2);
    assert!((manifest(&out)["results"]["sigma2"].as_f64().unwrap() - 1.0).abs() < 1e-10);

    for suite in ["asymptotics", "fi-spectrum", "fi-wold", "fi-constant"] {
        let out = dir.path().join(suite);
        let o = lmagg(&["verify", "--suite", suite, "--d1", "0.2", "--d2", "0.3", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(manifest(&out)["results"]["failed"], 0);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();

    let o = lmagg(&["spectrum", "--mixture", "fi:d=0.7", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("0 < d < 1/2"), "{err}");
    assert!(o.stdout.is_empty());

    let o = lmagg(&["spectrum", "--mixture", "fi:d=0.3", "--bogus", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    let o = lmagg(&["spectrum", "--mixture", "fi:d=0.3", "--grid", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2.."));
    let o = lmagg(&["acvf", "--mixture", "arma:p=1", "--out", out]);
    assert_eq!(o.status.code(), Some(1));

    // coefficients 0.99^j alias on a 512-point grid: a numerical failure
    let o = lmagg(&[
        "wold", "--mixture", "uniform:a=0.97,b=0.99", "--truncation", "64", "--grid", "512", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = Command::new(env!("CARGO_BIN_EXE_lmagg"))
        .args(["acvf", "--mixture", "uniform:a=0,b=0.5", "--lags", "3", "--out", out.to_str().unwrap()])
        .env("AGG_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_lmagg"))
        .args(["acvf", "--mixture", "uniform:a=0,b=0.5", "--lags", "3", "--out", out.to_str().unwrap()])
        .env("AGG_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
}
