use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smoothmean"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn smoothmean")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write_series(dir: &Path, name: &str, values: impl IntoIterator<Item = f64>) -> PathBuf {
    let mut text = String::from("y\n");
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn strip_timestamp(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec())
        .unwrap()
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"generatedAtUnix\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn ci_on_constant_data_centres_at_density_ratio() {
    let dir = TempDir::new().unwrap();
    let path = write_series(dir.path(), "c.csv", std::iter::repeat_n(3.0, 1000));
    let p = path.to_str().unwrap();
    let f0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut hits = 0;
    let seeds = 200;
    for seed in 0..seeds {
        let v = json(&run(&["ci", p, "--h", "0.1", "--seed", &seed.to_string()]));
        let r = &v["report"];
        let f_hat = r["estimate"]["fHatZero"].as_f64().unwrap();
        let center = r["interval"]["center"].as_f64().unwrap();
        assert!((center - 3.0 * f_hat / f0).abs() < 1e-12);
        assert!((r["estimate"]["mHat"].as_f64().unwrap() - 3.0).abs() < 1e-12);
        let (lo, hi) = (
            r["interval"]["lower"].as_f64().unwrap(),
            r["interval"]["upper"].as_f64().unwrap(),
        );
        if lo <= 3.0 && 3.0 <= hi {
            hits += 1;
        }
    }
    // sd(r̂) = 3 sd(f̂)/f0 with var(f̂) = (f0 B/h - f0²)/n; half-width 1.96·sqrt(9 B/(n h f0))
    let b = 0.5 / std::f64::consts::PI.sqrt();
    let sd = 3.0 * ((f0 * b / 0.1 - f0 * f0) / 1000.0).sqrt() / f0;
    let hw = 1.959963984540054 * (9.0 * b / (1000.0 * 0.1 * f0)).sqrt();
    let z = hw / sd;
    let expected = 1.0 - statrs::function::erf::erfc(z / 2f64.sqrt());
    let rate = hits as f64 / seeds as f64;
    let tol = 3.0 * (expected * (1.0 - expected) / seeds as f64).sqrt();
    assert!(
        (rate - expected).abs() <= tol,
        "rate {rate}, expected {expected}"
    );
}

#[test]
fn ci_writes_to_out_file() {
    let dir = TempDir::new().unwrap();
    let path = write_series(dir.path(), "d.csv", (1..=200).map(|i| 1.0 + (i % 7) as f64));
    let out = dir.path().join("r.json");
    let o = run(&[
        "ci",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "0x2a",
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["config"]["masterSeed"], 42);
    assert_eq!(v["config"]["bandwidth"]["kind"], "plugInOptimal");
}

#[test]
fn empty_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("e.csv");
    fs::write(&path, "").unwrap();
    let o = run(&["ci", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_row_reports_line_number() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("b.csv");
    fs::write(&path, "y\n1.0\nabc\n2.0\n").unwrap();
    let o = run(&["ci", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn level_out_of_range_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = write_series(dir.path(), "c.csv", [1.0, 2.0, 3.0]);
    let o = run(&["ci", path.to_str().unwrap(), "--level", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "coverage",
        "--n",
        "100",
        "--replicates",
        "5",
        "--level",
        "1.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ci_with_zero_mean_plug_in_exits_3() {
    let dir = TempDir::new().unwrap();
    let path = write_series(dir.path(), "z.csv", [1.0, -1.0, 2.0, -2.0]);
    let o = run(&["ci", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&[
            "simulate",
            "--arfima-d",
            "0.09",
            "--shift",
            "3",
            "--n",
            "100",
            "--seed",
            "7",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "y");
    assert_eq!(lines.len(), 101);
    for l in &lines[1..] {
        assert!(l.parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn simulated_series_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("s.csv");
    run(&[
        "simulate",
        "--n",
        "50",
        "--seed",
        "3",
        "--innovation",
        "chisq2",
        "--out",
        p.to_str().unwrap(),
    ]);
    let o = json(&run(&["bandwidth", p.to_str().unwrap()]));
    let ys: Vec<f64> = fs::read_to_string(&p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(ys.len(), 50);
    assert_eq!(o["report"]["n"], 50);
}

#[test]
fn chain_simulation_is_signs() {
    let o = run(&[
        "simulate",
        "--chain-alpha",
        "1.5",
        "--n",
        "50",
        "--seed",
        "1",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| *r == "1" || *r == "-1"));
}

#[test]
fn arfima_d_out_of_range_exits_2() {
    let o = run(&["simulate", "--arfima-d", "0.6", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn conflicting_process_flags_exit_2() {
    let o = run(&[
        "simulate",
        "--arfima-d",
        "0.2",
        "--chain-alpha",
        "1.5",
        "--n",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plug_in_refused_for_strong_memory() {
    let o = run(&[
        "coverage",
        "--plug-in",
        "--arfima-d",
        "0.49",
        "--n",
        "500",
        "--replicates",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n^-4/5"));
}

#[test]
fn default_bandwidth_falls_back_to_power_law() {
    let v = json(&run(&[
        "coverage",
        "--arfima-d",
        "0.3",
        "--n",
        "200",
        "--replicates",
        "10",
        "--seed",
        "1",
    ]));
    let bw = &v["config"]["bandwidth"];
    assert_eq!(bw["kind"], "powerLaw");
    assert!((bw["exponent"].as_f64().unwrap() - 0.6).abs() < 1e-15);
    let v = json(&run(&[
        "coverage",
        "--arfima-d",
        "0.09",
        "--n",
        "200",
        "--replicates",
        "10",
    ]));
    assert_eq!(v["config"]["bandwidth"]["kind"], "plugInOptimal");
}

#[test]
fn chain_without_bandwidth_exits_2() {
    let o = run(&[
        "coverage",
        "--chain-alpha",
        "1.5",
        "--n",
        "200",
        "--replicates",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coverage_is_independent_of_workers() {
    let args = [
        "coverage",
        "--arfima-d",
        "0.09",
        "--shift",
        "3",
        "--n",
        "300",
        "--replicates",
        "64",
        "--seed",
        "11",
        "--per-replicate",
    ];
    let one = run(&[&args[..], &["--workers", "1"]].concat());
    let eight = run(&[&args[..], &["--workers", "8"]].concat());
    assert!(one.status.success() && eight.status.success());
    assert_eq!(strip_timestamp(&one.stdout), strip_timestamp(&eight.stdout));
    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    let r = &v["report"];
    assert_eq!(r["perReplicate"].as_array().unwrap().len(), 64);
    assert_eq!(r["validCount"], 64);
    assert_eq!(v["config"]["masterSeed"], 11);
    assert!(v["config"].get("workers").is_none());
}

#[test]
fn config_file_merges_with_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "arfima-d = 0.09\nshift = 3.0\nn = 250\nreplicates = 20\nseed = \"0x10\"\nlevel = 0.9\n",
    )
    .unwrap();
    let v = json(&run(&[
        "coverage",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "300",
    ]));
    let c = &v["config"];
    assert_eq!(c["n"], 300);
    assert_eq!(c["replicates"], 20);
    assert_eq!(c["masterSeed"], 16);
    assert_eq!(c["level"], 0.9);
    assert_eq!(c["process"]["kind"], "arfima");
    fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = run(&["coverage", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn random_seed_is_recorded() {
    let v = json(&run(&[
        "coverage",
        "--n",
        "100",
        "--replicates",
        "5",
        "--random-seed",
    ]));
    let seed = v["config"]["masterSeed"].as_u64().unwrap();
    let again = json(&run(&[
        "coverage",
        "--n",
        "100",
        "--replicates",
        "5",
        "--seed",
        &seed.to_string(),
    ]));
    assert_eq!(v["report"], again["report"]);
}

#[test]
fn bandwidth_reference_value() {
    // two-point data with ȳ = 1, ȳ₂ = 2
    let dir = TempDir::new().unwrap();
    let path = write_series(
        dir.path(),
        "m.csv",
        (0..1000).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 }),
    );
    let v = json(&run(&["bandwidth", path.to_str().unwrap()]));
    let r = &v["report"];
    assert!((r["hO"].as_f64().unwrap() - 0.2692173218196956).abs() < 1e-9);
    assert_eq!(r["yBar"], 1.0);
    assert_eq!(r["ySqBar"], 2.0);
    assert!(r["admissible"].is_null());
    let v = json(&run(&[
        "bandwidth",
        path.to_str().unwrap(),
        "--beta",
        "0.5",
    ]));
    assert_eq!(v["report"]["admissible"], false);
    assert!(v["report"]["verdict"]
        .as_str()
        .unwrap()
        .starts_with("inadmissible"));
    let v = json(&run(&["bandwidth", path.to_str().unwrap(), "--beta", "1"]));
    assert_eq!(v["report"]["admissible"], true);
}

#[test]
fn bandwidth_on_zero_data_exits_3() {
    let dir = TempDir::new().unwrap();
    let zeros = write_series(dir.path(), "z.csv", [0.0; 20]);
    let o = run(&["bandwidth", zeros.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let centred = write_series(dir.path(), "c.csv", [1.0, -1.0]);
    let o = run(&["bandwidth", centred.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("undefined"));
}

#[test]
fn probe_reports_slope() {
    let v = json(&run(&[
        "probe",
        "--sizes",
        "128,256,512,1024",
        "--replicates",
        "200",
        "--seed",
        "2",
    ]));
    let r = &v["report"];
    assert_eq!(r["varianceEstimates"].as_array().unwrap().len(), 4);
    let slope = r["logLogSlope"].as_f64().unwrap();
    assert!((slope + 1.0).abs() < 0.2, "{slope}");
    let o = run(&["probe", "--sizes", "128,256", "--replicates", "200"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn normality_report_shape() {
    let v = json(&run(&[
        "normality",
        "--n",
        "400",
        "--replicates",
        "100",
        "--power-law-exp",
        "0.2",
        "--seed",
        "4",
    ]));
    let r = &v["report"];
    assert_eq!(r["standardizedStats"].as_array().unwrap().len(), 100);
    assert_eq!(r["decileDeviations"].as_array().unwrap().len(), 9);
    assert_eq!(v["command"], "normality");
}
