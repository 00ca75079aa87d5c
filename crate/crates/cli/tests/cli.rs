use std::path::{Path, PathBuf};
use std::process::Command as Process;

use nonlinear_levy::sim::{read_estimates_csv, McEstimate};
use nonlinear_levy::solver::ValueSurface;
use nonlinear_levy::validation::CheckReport;
use nonlinear_levy_cli::{run, CliError, Command, ComparisonRow, Manifest, RunConfig, SolveSummary};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&configs_dir().join(name)).unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

fn config_key(err: CliError) -> String {
    match err {
        CliError::Config { key, .. } => key,
        other => panic!("expected a config error, got {other}"),
    }
}

const POISSON: &str = r#"{
  "theta": {
    "drift_range": [0.0, 0.0],
    "diffusion_range": [0.0, 0.0],
    "jump_family": { "kind": "poisson_intensity", "params": { "intensity": [1.0, 2.0], "atom": 1.0 } },
    "truncation": "canonical_open"
  },
  "psi": { "kind": "indicator_ramp" }
}"#;

#[test]
fn shipped_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg, "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn defaults_fill_missing_sections() {
    let cfg = RunConfig::from_json(POISSON).unwrap();
    assert_eq!(cfg.grid.horizon, 1.0);
    assert_eq!(cfg.mc.x_points, vec![0.0]);
    assert_eq!(cfg.out, PathBuf::from("out"));
    assert_eq!(cfg.command, None);
}

#[test]
fn errors_name_the_offending_key() {
    let with = |patch: &str| POISSON.replacen("\"psi\"", &format!("{patch}, \"psi\""), 1);
    let cases = [
        (with(r#""grid": { "dxx": 0.1 }"#), "grid.dxx"),
        (with(r#""grid": { "dx": -0.1 }"#), "grid.dx"),
        (with(r#""mc": { "n_paths": 0 }"#), "mc.n_paths"),
        (with(r#""validation": { "u": 5.0 }"#), "validation.u"),
        (POISSON.replace("[1.0, 2.0]", "[2.0, 1.0]"), "theta.jump_family.params.intensity"),
        (POISSON.replace("canonical_open", "open"), "theta.truncation"),
        (POISSON.replace("indicator_ramp\"", "indicator_ramp\", \"width\": 0"), "psi.width"),
    ];
    for (text, key) in cases {
        let err = RunConfig::from_json(&text).and_then(|c| c.psi.build(Path::new(".")).map(|_| c));
        assert_eq!(config_key(err.unwrap_err()), key, "{text}");
    }
}

#[test]
fn csv_psi_checks_declared_constants() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("x,psi\n");
    for i in 0..=40 {
        let x = -2.0 + 0.1 * i as f64;
        text += &format!("{x},{}\n", x.clamp(0.0, 1.0));
    }
    std::fs::write(dir.path().join("ramp.csv"), text).unwrap();
    let spec = |lip: f64| {
        POISSON.replace(
            r#"{ "kind": "indicator_ramp" }"#,
            &format!(r#"{{ "kind": "csv", "path": "ramp.csv", "sup": 1.0, "lip": {lip} }}"#),
        )
    };
    let cfg = RunConfig::from_json(&spec(1.0)).unwrap();
    let psi = cfg.psi.build(dir.path()).unwrap();
    assert!((psi.function.value(0.45) - 0.45).abs() < 1e-12);
    let tight = RunConfig::from_json(&spec(0.5)).unwrap();
    assert_eq!(config_key(tight.psi.build(dir.path()).unwrap_err()), "psi.lip");
}

#[test]
fn solve_matches_the_poisson_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load("poisson.json", dir.path());
    let outcome = run(&cfg, Command::Solve, &configs_dir()).unwrap();
    assert!(outcome.passed);
    // the ramp is nondecreasing, so the largest intensity is optimal: 1 − e^{−2}
    let exact = 1.0 - (-2.0f64).exp();
    let summary: SolveSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!((summary.value - exact).abs() < 3e-3, "{} vs {exact}", summary.value);
    assert!(summary.conditions.passes());
    let surface = ValueSurface::read_csv(std::fs::File::open(dir.path().join("surface.csv")).unwrap()).unwrap();
    assert!((surface.evaluate(1.0, 0.0).unwrap() - summary.value).abs() < 1e-12);
}

#[test]
fn compare_uncertain_volatility_is_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load("uncertain_volatility.json", dir.path());
    let outcome = run(&cfg, Command::Compare, &configs_dir()).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("comparison.csv")).unwrap();
    let rows: Vec<ComparisonRow> = reader.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.len(), cfg.mc.x_points.len());
    assert!(rows.iter().all(|r| r.within), "{rows:?}");
    assert!(outcome.passed);
}

#[test]
fn scaling_with_unit_lambda_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load("scaling_identity.json", dir.path());
    let outcome = run(&cfg, Command::Scaling, &configs_dir()).unwrap();
    assert!(outcome.passed);
    assert_eq!(outcome.reports.len(), 2);
    for r in &outcome.reports {
        assert_eq!(r.discrepancy, 0.0, "{}", r.name);
    }
    let text = std::fs::read_to_string(dir.path().join("reports.json")).unwrap();
    let reloaded: Vec<CheckReport> = serde_json::from_str(&text).unwrap();
    assert_eq!(reloaded, outcome.reports);
}

#[test]
fn scaling_rejects_non_stable_families() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load("poisson.json", dir.path());
    assert_eq!(config_key(run(&cfg, Command::Scaling, &configs_dir()).unwrap_err()), "theta");
}

#[test]
fn command_in_config_must_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load("stable_scaling.json", dir.path());
    assert_eq!(config_key(run(&cfg, Command::Solve, &configs_dir()).unwrap_err()), "command");
}

#[test]
fn simulate_is_reproducible_and_reloadable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = load("poisson.json", a.path());
    cfg.mc.n_paths = 4000;
    run(&cfg, Command::Simulate, &configs_dir()).unwrap();
    cfg.out = b.path().to_path_buf();
    run(&cfg, Command::Simulate, &configs_dir()).unwrap();
    let bytes = |d: &Path| std::fs::read(d.join("estimates.csv")).unwrap();
    assert_eq!(bytes(a.path()), bytes(b.path()));

    let estimates: Vec<McEstimate> = read_estimates_csv(&bytes(a.path())[..]).unwrap();
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config, RunConfig { out: a.path().to_path_buf(), ..cfg.clone() });
    assert_eq!(estimates.len(), manifest.n_policies * cfg.mc.x_points.len());
    for best in &manifest.best {
        let same_x = estimates.iter().filter(|e| e.x0 == best.x0);
        assert_eq!(same_x.map(|e| e.mean).fold(f64::MIN, f64::max), best.mean);
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_nlevy");
    let dir = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| Process::new(bin).args(args).output().unwrap().status.code();
    let out = dir.path().to_str().unwrap();
    let config = configs_dir().join("scaling_identity.json");
    let config = config.to_str().unwrap();
    assert_eq!(status(&["scaling", "--config", config, "--out", out, "--threads", "2"]), Some(0));
    assert!(dir.path().join("reports.json").exists());
    assert_eq!(status(&["solve", "--config", config, "--out", out]), Some(2));
    assert_eq!(status(&["solve", "--config", "/nonexistent.json"]), Some(2));
}
