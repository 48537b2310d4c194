//! End-to-end runs of the `rootgas` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rootgas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rootgas")).args(args).env_remove("ROOTGAS_OUT").output().expect("binary runs")
}

fn data_dir(out: &Output) -> PathBuf {
    let line = String::from_utf8_lossy(&out.stdout).lines().last().unwrap_or_default().to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap_or_else(|e| panic!("{e}: {line}"));
    PathBuf::from(v["data_dir"].as_str().expect("data_dir"))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn failure_json(out: &Output) -> serde_json::Value {
    let err = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(err.lines().last().unwrap()).unwrap_or_else(|e| panic!("{e}: {err}"))
}

#[test]
fn degree_one_root_is_minus_a0_over_a1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rootgas(&["sample", "--out", tmp.path().to_str().unwrap(), "--n", "1", "--seeds", "1", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = data_dir(&out);
    let c = csv_rows(&dir.join("coefficients_n1_s5.csv"));
    let (a0, a1) = ((num(&c[0][3]), num(&c[0][4])), (num(&c[1][3]), num(&c[1][4])));
    let d = a1.0 * a1.0 + a1.1 * a1.1;
    let want = (-(a0.0 * a1.0 + a0.1 * a1.1) / d, -(a0.1 * a1.0 - a0.0 * a1.1) / d);
    let r = csv_rows(&dir.join("roots_n1_s5.csv"));
    assert_eq!(r.len(), 1);
    let got = (num(&r[0][1]), num(&r[0][2]));
    let scale = (want.0 * want.0 + want.1 * want.1).sqrt().max(1.0);
    assert!((got.0 - want.0).abs() <= 1e-12 * scale && (got.1 - want.1).abs() <= 1e-12 * scale, "{got:?} {want:?}");
    assert_eq!(csv_rows(&dir.join("measure_n1_s5.csv"))[0][5], "1.0000000000000000e0");
}

#[test]
fn unwritable_output_root_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("not_a_dir");
    fs::write(&file, "x").unwrap();
    let out = rootgas(&["sample", "--out", file.to_str().unwrap(), "--n", "4", "--seeds", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let j = failure_json(&out);
    assert_eq!(j["status"], "failure");
    assert_eq!(j["kind"], "io");
    assert!(j["path"].as_str().unwrap().contains("not_a_dir"));
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().to_str().unwrap();
    for args in [
        vec!["sample", "--out", o, "--set", "bogus=1"],
        vec!["sample", "--out", o, "--n", ""],
        vec!["rate", "--out", o, "--grid", "disk:4"],
        vec!["validate", "--out", o, "--set", "criteria=99"],
        vec!["nonsense"],
    ] {
        let out = rootgas(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let j = failure_json(&rootgas(&["sample", "--out", o, "--set", "bogus=1"]));
    assert_eq!(j["kind"], "usage");
}

#[test]
fn rate_vanishes_at_the_circle_measure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rootgas(&["rate", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&data_dir(&out).join("rate.csv"));
    assert_eq!(rows[0][0], "reference");
    assert!(num(&rows[0][2]).abs() <= 1e-3, "{:?}", rows[0]);
    // Along the circle family, r = 1 is the minimum.
    let family: Vec<(f64, f64)> = rows[1..].iter().map(|r| (num(&r[1]), num(&r[2]))).collect();
    let at_one = family.iter().find(|(r, _)| *r == 1.0).unwrap().1;
    assert!(family.iter().all(|&(_, v)| v >= at_one - 1e-9), "{family:?}");
}

#[test]
fn reruns_are_byte_identical_and_append_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# two degrees\nmodel = elliptic\nn = 4, 9\nseeds = 2\nseed = 11\n").unwrap();
    let args = ["sample", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()];
    let a = data_dir(&rootgas(&args));
    let b = data_dir(&rootgas(&args));
    assert_ne!(a, b);
    assert_eq!(a.parent(), b.parent());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let csvs: Vec<_> = names.iter().filter(|n| n.to_string_lossy().ends_with(".csv")).collect();
    assert_eq!(csvs.len(), 3 * 4 + 2);
    for n in csvs {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n:?}");
    }
    let records = fs::read_to_string(a.parent().unwrap().join("records.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = records.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["config_hash"], lines[1]["config_hash"]);
    assert_eq!(lines[0]["status"], "ok");
    assert!(a.join("record.json").exists());
}

#[test]
fn cli_flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "n = 3\nseeds = 1\n").unwrap();
    let out = rootgas(&["sample", "-c", cfg.to_str().unwrap(), "--n", "2", "--out", tmp.path().to_str().unwrap()]);
    let dir = data_dir(&out);
    assert!(dir.join("roots_n2_s0.csv").exists());
    assert!(!dir.join("roots_n3_s0.csv").exists());
}

#[test]
fn gibbs_n2_complex_matches_direct_sampling() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rootgas(&["gibbs", "--out", tmp.path().to_str().unwrap(), "--n", "2", "--steps", "100000", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = data_dir(&out);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report_n2.json")).unwrap()).unwrap();
    for e in report["ks"].as_array().unwrap() {
        assert!(e["p_value"].as_f64().unwrap() > 0.01, "{e}");
    }
    assert!(report["max_cache_drift"].as_f64().unwrap() <= 1e-9);
    assert_eq!(csv_rows(&dir.join("h_trace_n2.csv")).len(), 80_000);
}

#[test]
fn gibbs_real_field_writes_k_histogram() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rootgas(&["gibbs", "--out", tmp.path().to_str().unwrap(), "--field", "real", "--n", "3", "--steps", "50000", "--set", "direct=2000"]);
    let dir = data_dir(&out);
    let hist = csv_rows(&dir.join("k_histogram_n3.csv"));
    assert_eq!(hist.len(), 2);
    let total: f64 = hist.iter().map(|r| num(&r[2])).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn equilibrium_on_the_equator_recovers_the_circle_measure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rootgas(&["equilibrium", "--out", tmp.path().to_str().unwrap(), "--grid", "equator:64"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = data_dir(&out);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["converged"], true);
    assert!(s["value"].as_f64().unwrap().abs() < 1e-2, "{s}");
    let w: Vec<f64> = csv_rows(&dir.join("minimizer.csv")).iter().map(|r| num(&r[6])).collect();
    assert!(w.iter().all(|&x| (x - 1.0 / 64.0).abs() < 1e-3), "{w:?}");
    let trace: Vec<f64> = csv_rows(&dir.join("trace.csv")).iter().map(|r| num(&r[1])).collect();
    assert!(trace.windows(2).all(|p| p[1] <= p[0] + 1e-12));
}

#[test]
fn validate_runs_selected_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rootgas(&["validate", "--out", tmp.path().to_str().unwrap(), "--set", "criteria=2,8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion") && l.contains("PASS")).count(), 2);
    assert!(data_dir(&out).join("acceptance.csv").exists());
}

#[test]
fn default_output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rootgas"))
        .args(["rate", "--set", "radii=1"])
        .env("ROOTGAS_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(data_dir(&out).starts_with(tmp.path()));
}

#[test]
fn orthogonal_model_from_a_support_file() {
    let tmp = tempfile::tempdir().unwrap();
    let support = tmp.path().join("support.csv");
    let mut text = String::from("re,im,nu_weight,phi\n");
    for j in 0..48 {
        let a = std::f64::consts::TAU * j as f64 / 48.0;
        text.push_str(&format!("{},{},{},0\n", 1.5 * a.cos(), 1.5 * a.sin(), 1.0 / 48.0));
    }
    fs::write(&support, text).unwrap();
    let o = tmp.path().to_str().unwrap();
    let s = support.to_str().unwrap();
    let out = rootgas(&["sample", "--out", o, "--model", "orthogonal", "--set", &format!("support={s}"), "--n", "6", "--seeds", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_rows(&data_dir(&out).join("roots_n6_s1.csv")).len(), 6);
    let out = rootgas(&["rate", "--out", o, "--model", "orthogonal", "--set", &format!("support={s}")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&data_dir(&out).join("rate.csv"));
    assert!(num(&rows[0][2]).is_finite());
    let missing = rootgas(&["sample", "--out", o, "--model", "orthogonal"]);
    assert_eq!(missing.status.code(), Some(2));
    let absent = rootgas(&["sample", "--out", o, "--model", "orthogonal", "--set", "support=/nonexistent.csv"]);
    assert_eq!(absent.status.code(), Some(3));
}
