// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SYSTEM: &str = r#""system": {"omega_fq": 2878.0, "omega_nv": 2878.0, "g": 12.95, "j": 3.46,
    "gamma_fq": 0.2, "gamma_b": 0.2, "gamma_d": 0.2, "lambda": 1.0}"#;

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("{{{body}}}")).unwrap();
    path
}

fn standard(dir: &Path) -> PathBuf {
    config(
        dir,
        "run.json",
        &format!(r#"{SYSTEM}, "grid": {{"start_mhz": 2848.0, "stop_mhz": 2908.0, "n_points": 601}}"#),
    )
}

fn fqnv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fqnv")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn local_maxima(ys: &[f64], floor: f64) -> usize {
    ys.windows(3).filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > floor).count()
}

#[test]
fn thom_simulation_shows_three_peaks() {
    let tmp = TempDir::new().unwrap();
    let cfg = standard(tmp.path());
    let out = tmp.path().join("out");
    let o = fqnv(&["--config", s(&cfg), "--out", s(&out), "simulate", "--model", "thom"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out.join("spectrum.csv"));
    assert_eq!(rows.len(), 601);
    let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let max = ys.iter().cloned().fold(0.0, f64::max);
    assert_eq!(local_maxima(&ys, 0.01 * max), 3);
    let meta: Value = serde_json::from_slice(&std::fs::read(out.join("spectrum.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["details"]["model"], "thom");
}

#[test]
fn missing_coupling_exits_with_config_error_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        "bad.json",
        r#""system": {"omega_fq": 2878.0, "omega_nv": 2878.0, "j": 3.46,
            "gamma_fq": 0.2, "gamma_b": 0.2, "gamma_d": 0.2, "lambda": 1.0},
           "grid": {"start_mhz": 2848.0, "stop_mhz": 2908.0, "n_points": 61}"#,
    );
    let out = tmp.path().join("out");
    let o = fqnv(&["--config", s(&cfg), "--out", s(&out), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`g`"));
    assert!(!out.exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        "mhom.json",
        &format!(
            r#"{SYSTEM}, "grid": {{"start_mhz": 2848.0, "stop_mhz": 2908.0, "n_points": 301}},
            "model": "mhom",
            "ensemble": {{"n_packets": 500, "mean_zeeman": 0.0, "fwhm_zeeman": 3.1, "fwhm_strain": 4.4,
                "fwhm_zfs": 0.2, "collective_g": 13.0, "omega_nv": 2878.0, "seed": 3}}"#
        ),
    );
    let run = |dir: &str, extra: &[&str]| {
        let out = tmp.path().join(dir);
        let mut args = vec!["--config", s(&cfg), "--out", s(&out)];
        args.extend_from_slice(extra);
        args.push("simulate");
        let args: Vec<String> = args.into_iter().map(String::from).collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert!(fqnv(&args).status.success());
        std::fs::read(out.join("spectrum.csv")).unwrap()
    };
    let a = run("a", &[]);
    let b = run("b", &["--threads", "1"]);
    assert_eq!(a, b);
    let c = run("c", &["--seed", "4"]);
    assert_ne!(a, c);
    let header = String::from_utf8_lossy(&a).lines().next().unwrap().to_string();
    assert!(header.ends_with("seed=3"), "{header}");
}

#[test]
fn config_hash_follows_config_content() {
    let tmp = TempDir::new().unwrap();
    let first = standard(tmp.path());
    let o1 = fqnv(&["--config", s(&first), "--out", s(&tmp.path().join("a")), "simulate"]);
    assert!(o1.status.success());
    let second = config(
        tmp.path(),
        "other.json",
        &format!(r#"{SYSTEM}, "grid": {{"start_mhz": 2848.0, "stop_mhz": 2908.0, "n_points": 603}}"#),
    );
    let o2 = fqnv(&["--config", s(&second), "--out", s(&tmp.path().join("b")), "simulate"]);
    assert!(o2.status.success());
    let hash = |d: &str| {
        let text = std::fs::read_to_string(tmp.path().join(d).join("spectrum.csv")).unwrap();
        let line = text.lines().next().unwrap().to_string();
        line.split("config_sha256=").nth(1).unwrap().split(' ').next().unwrap().to_string()
    };
    assert_eq!(hash("a").len(), 64);
    assert_ne!(hash("a"), hash("b"));
}

#[test]
fn sweep_rejects_single_value_and_writes_long_format() {
    let tmp = TempDir::new().unwrap();
    let cfg = standard(tmp.path());
    let out = tmp.path().join("out");
    let o = fqnv(&["--config", s(&cfg), "--out", s(&out), "sweep", "--axis", "power", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = fqnv(&["--config", s(&cfg), "--out", s(&out), "sweep", "--axis", "detuning", "--values", "-5,0,5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 3 * 601);
    assert_eq!(rows[0][0], -5.0);
    assert_eq!(rows[601][0], 0.0);
}

#[test]
fn me_power_broadening_through_cli() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        "me.json",
        &format!(
            r#"{SYSTEM}, "grid": {{"start_mhz": 2868.0, "stop_mhz": 2888.0, "n_points": 201}},
            "model": "me", "me_options": {{"n_max_bright": 3, "n_max_dark": 3}}"#
        ),
    );
    let out = tmp.path().join("out");
    let o = fqnv(&["--config", s(&cfg), "--out", s(&out), "sweep-power", "--lambdas", "1,20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out.join("fwhm.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows[1][1] > 1.5 * rows[0][1], "{rows:?}");
}

#[test]
fn plot_scripts_reference_the_csv() {
    let tmp = TempDir::new().unwrap();
    let cfg = standard(tmp.path());
    let out = tmp.path().join("out");
    assert!(fqnv(&["--config", s(&cfg), "--out", s(&out), "simulate"]).status.success());
    let csv = out.join("spectrum.csv");
    let o = fqnv(&["--config", s(&cfg), "plot-script", "--csv", s(&csv), "--kind", "spectrum"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let script = std::fs::read_to_string(out.join("spectrum.gp")).unwrap();
    assert!(script.starts_with("# fqnv"));
    assert!(script.contains("'spectrum.csv'"));

    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "x,y\n1,2\n").unwrap();
    let o = fqnv(&["plot-script", "--csv", s(&bad), "--kind", "heatmap"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("bad.gp").exists());
}

#[test]
fn fit_lorentzian_recovers_middle_linewidth() {
    let tmp = TempDir::new().unwrap();
    let cfg = standard(tmp.path());
    let out = tmp.path().join("out");
    assert!(fqnv(&["--config", s(&cfg), "--out", s(&out), "simulate"]).status.success());
    let csv = out.join("spectrum.csv");
    let o = fqnv(&["fit-lorentzian", "--input", s(&csv), "--window", "2876", "2880"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["fit"]["converged"], true);
    let center = v["fit"]["omega_center"].as_f64().unwrap();
    assert!((center - 2878.0).abs() < 1e-6, "{center}");

    let o = fqnv(&["fit-lorentzian", "--input", s(&csv), "--window", "2880", "2876"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eigen_prints_sorted_energies() {
    let tmp = TempDir::new().unwrap();
    let cfg = standard(tmp.path());
    let o = fqnv(&["--config", s(&cfg), "eigen", "--method", "exact"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let e: Vec<f64> = v["energies"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[0] < w[1]));
    let split = (12.95f64.powi(2) + 3.46f64.powi(2)).sqrt();
    assert!((e[2] - e[0] - 2.0 * split).abs() < 1e-9);
}
