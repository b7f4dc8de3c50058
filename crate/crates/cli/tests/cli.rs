use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semispec_cli::config::RunConfig;
use semispec_cli::plots::{script, Axes, Curve, Plot};
use semispec_cli::{CliError, EXIT_CONFIG, EXIT_SOLVER};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_semispec")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const HARMONIC: &str = r#"{
  "potential": { "kind": "harmonic", "coefficients": [1.0] },
  "window": [0.0, 1.0],
  "eps": 0.05,
  "spectrum": { "h": 0.1 },
  "scan": { "h": 0.02, "points": 81 }
}"#;

#[test]
fn spectrum_of_harmonic_oscillator() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "h.json", HARMONIC);
    let out = tmp.path().join("out");
    let o = run(&["spectrum"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("# semispec-cli"));
    assert!(csv.contains("# config_sha256 "));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 5);
    for (j, row) in rows.iter().enumerate() {
        let lambda: f64 = row[1].parse().unwrap();
        assert!((lambda - (2 * j + 1) as f64 * 0.1).abs() < 1e-6, "lambda_{j} = {lambda}");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(json["data"]["in_window"], 5);
    assert_eq!(json["provenance"]["command"], "spectrum");
    assert!(out.join("spectrum.gp").exists());
}

#[test]
fn empty_window_gives_header_only_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let body = HARMONIC.replace("[0.0, 1.0]", "[-1.0, -0.5]");
    let cfg = write_config(tmp.path(), "h.json", &body);
    let out = tmp.path().join("out");
    let o = run(&["spectrum"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(data_rows(&csv).is_empty());
    assert!(csv.lines().any(|l| l == "j,lambda,convergence"));
    let gp = fs::read_to_string(out.join("spectrum.gp")).unwrap();
    assert!(gp.starts_with("# empty dataset"));
    assert!(!gp.contains("\nplot "));
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        ("unknown_field.json", HARMONIC.replace("\"eps\"", "\"epsilon_margin\"")),
        ("bad_window.json", HARMONIC.replace("[0.0, 1.0]", "[1.0, 0.0]")),
        ("bad_kind.json", HARMONIC.replace("\"harmonic\"", "\"quartic\"")),
        ("not_json.json", "{ potential".to_string()),
        ("no_h.json", HARMONIC.replace("\"spectrum\": { \"h\": 0.1 },", "")),
        ("resolution.json", HARMONIC.replace("\"eps\": 0.05,", "\"eps\": 0.05, \"solver\": { \"n_points\": 10 },")),
    ];
    for (name, body) in cases {
        let cfg = write_config(tmp.path(), name, &body);
        let o = run(&["spectrum"], Some(&cfg), &out);
        assert_eq!(o.status.code(), Some(EXIT_CONFIG), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let err: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
        assert_eq!(err["code"], EXIT_CONFIG);
        assert!(!err["message"].as_str().unwrap().is_empty());
    }
    let o = run(&["scan"], None, &out);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let o = run(&["spectrum"], Some(&tmp.path().join("missing.json")), &out);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let o = run(&["frobnicate"], None, &out);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn resolution_error_names_the_solver() {
    let tmp = tempfile::tempdir().unwrap();
    let body = HARMONIC.replace("\"eps\": 0.05,", "\"eps\": 0.05, \"solver\": { \"n_points\": 10 },");
    let cfg = write_config(tmp.path(), "r.json", &body);
    let out = tmp.path().join("out");
    let o = run(&["scan"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let err: serde_json::Value = serde_json::from_str(&String::from_utf8_lossy(&o.stderr)).unwrap();
    assert_eq!(err["module"], "quantum1d");
    assert!(err["message"].as_str().unwrap().contains("resolution"));
}

#[test]
fn library_errors_map_to_exit_codes() {
    use semispec::{Error, ErrorKind, Module};
    let input = CliError::from(Error::new(Module::Quantum1d, ErrorKind::Resolution("N too small".into())));
    assert_eq!(input.code, EXIT_CONFIG);
    assert_eq!(input.module, "quantum1d");
    let numeric = CliError::from(Error::new(Module::Detector, ErrorKind::NoFit("singular".into())));
    assert_eq!(numeric.code, EXIT_SOLVER);
    let nonfinite = CliError::from(Error::new(Module::SpecDist, ErrorKind::NonFinite("nan".into())));
    assert_eq!(nonfinite.code, EXIT_SOLVER);
}

#[test]
fn scan_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "h.json", HARMONIC);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = run(&["scan", "--workers", "1"], Some(&cfg), &a);
    let ob = run(&["scan", "--workers", "2"], Some(&cfg), &b);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    for f in ["scan.csv", "scan.json", "scan.gp"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"{
      "potential": { "kind": "double_well" },
      "window": [0.9, 1.1],
      "h_list": { "max": 0.04, "min": 0.01, "count": 6 },
      "sweep": { "energy": 1.0 }
    }"#;
    let cfg = write_config(tmp.path(), "dw.json", body);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["sweep", "--workers", "1"], Some(&cfg), &a).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--workers", "3"], Some(&cfg), &b).status.code(), Some(0));
    for f in ["sweep.csv", "sweep.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let gp = fs::read_to_string(a.join("sweep.gp")).unwrap();
    assert!(gp.contains("set logscale xy"));
    assert!(gp.contains("'sweep.csv' using 1:4"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("sweep.json")).unwrap()).unwrap();
    assert!(json["provenance"]["max_tail_bound"].as_f64().unwrap() >= 0.0);
    assert_eq!(json["provenance"]["h_list"].as_array().unwrap().len(), 6);
}

#[test]
fn toml_and_json_configs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let json = write_config(tmp.path(), "c.json", HARMONIC);
    let toml = write_config(
        tmp.path(),
        "c.toml",
        "window = [0.0, 1.0]\neps = 0.05\nworkers = 4\n[potential]\nkind = \"harmonic\"\ncoefficients = [1.0]\n\
         [spectrum]\nh = 0.1\n[scan]\nh = 0.02\npoints = 81\n",
    );
    let a = RunConfig::load(&json).unwrap();
    let b = RunConfig::load(&toml).unwrap();
    assert_ne!(a, b);
    assert_eq!(a.hash(), b.hash());
    let mut c = a.clone();
    c.scan.points = 82;
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn tables_need_no_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["tables"], None, &out);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("exponents.csv")).unwrap();
    assert!(csv.contains("# config_sha256 none"));
    assert_eq!(data_rows(&csv).len(), 4 * 5);

    let cfg = write_config(tmp.path(), "t.json", &HARMONIC.replace("\"eps\": 0.05,", "\"tables\": {\"n_max\": 2, \"k_max\": 3},"));
    let o = run(&["tables"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("exponents.csv")).unwrap();
    assert_eq!(data_rows(&csv).len(), 6);
}

#[test]
fn inconclusive_only_exits_with_code_four() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"{
      "potential": { "kind": "harmonic", "coefficients": [1.0] },
      "h_list": { "max": 0.05, "min": 0.01, "count": 6 },
      "thresholds": { "max_residual": 0.0 },
      "invert": { "energies": [0.0], "calibrate": false }
    }"#;
    let cfg = write_config(tmp.path(), "i.json", body);
    let out = tmp.path().join("out");
    let o = run(&["invert"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("inconclusive"));
    assert!(out.join("report.json").exists());
}

#[test]
fn detect_finds_both_double_well_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/double_well.toml");
    let out = tmp.path().join("out");
    let o = run(&["detect"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&fs::read_to_string(out.join("levels.csv")).unwrap());
    let levels: Vec<(f64, &str)> = rows.iter().map(|r| (r[1].parse().unwrap(), r[2].as_str())).collect();
    assert_eq!(levels.len(), 2, "{levels:?}");
    assert!(levels.iter().any(|(e, v)| e.abs() < 1e-9 && *v == "critical"));
    assert!(levels.iter().any(|(e, v)| (e - 1.0).abs() < 1e-9 && *v == "critical"));
}

#[test]
fn example_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let cfg = RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        cfg.build_potential().unwrap();
        cfg.build_test_function().unwrap();
        n += 1;
    }
    assert!(n >= 3);
}

#[test]
fn plot_script_requires_data_file() {
    let tmp = tempfile::tempdir().unwrap();
    let plot = Plot {
        title: "t".into(),
        xlabel: "x".into(),
        ylabel: "y".into(),
        axes: Axes::Linear,
        curves: vec![Curve::line(1, 2, "y")],
    };
    let missing = tmp.path().join("none.csv");
    assert!(script(&missing, &plot).is_err());
    let data = write_config(tmp.path(), "d.csv", "# note\nx,y\n1,2\n2,3\n");
    let s = script(&data, &plot).unwrap();
    assert!(s.contains("set datafile separator ','"));
    assert!(s.contains("plot 'd.csv' using 1:2 with lines"));
    assert!(!s.contains("logscale"));
}
