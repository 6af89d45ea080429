use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use taxed_ruin::{LevyModel, ScaleEngine, ScaleFunction};
use taxed_ruin_cli::config::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_taxed-ruin"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

/// Data rows of a CSV table: comment lines and the header are skipped.
fn table(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const CL: &str = r#"{"variant": "cramer_lundberg", "premium": 1.5, "jump_rate": 1.0, "claims": [[1.0, 1.0]]}"#;

#[test]
fn shipped_configs_round_trip() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        let again = RunConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        assert_eq!(cfg.to_json(), again.to_json());
    }
}

#[test]
fn config_errors_name_the_field() {
    let bad = r#"{"model": {"variant": "cramer_lundberg", "premium": "fast", "jump_rate": 1.0, "claims": []}}"#;
    let err = RunConfig::parse(bad).unwrap_err().to_string();
    assert!(
        err.contains("model") && err.contains("\"fast\"") && err.contains("column"),
        "{err}"
    );
    let nested = r#"{"sim": {"n_paths": -3}}"#;
    assert!(RunConfig::parse(nested)
        .unwrap_err()
        .to_string()
        .contains("sim.n_paths"));
    let unknown = r#"{"tax": {"x": 2.0, "pieces": [[0.0, 0.1]], "rate": 3}}"#;
    assert!(RunConfig::parse(unknown).unwrap_err().to_string().contains("tax"));
    let mismatch = format!(
        r#"{{"model": {CL}, "tax": {{"x": 2.0, "pieces": [[0.0, 0.1]]}}, "query": {{"functional": "npv", "q": [0.1], "x": 3.0}}}}"#
    );
    assert!(RunConfig::parse(&mismatch).unwrap_err().to_string().contains("query.x"));
}

#[test]
fn untaxed_exit_column_is_the_scale_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exit.json",
        &format!(
            r#"{{"model": {CL}, "tax": {{"x": 2.0, "pieces": [[0.0, 0.0]]}},
                "query": {{"functional": "exit", "q": [0.0, 0.3], "a": {{"from": 2.5, "to": 9.0, "n": 5}}}}}}"#
        ),
    );
    let out = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let model = LevyModel::cramer_lundberg_exp(1.5, 1.0, 1.0).unwrap();
    let rows = table(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 10);
    for r in rows {
        let (q, a, v) = (num(&r[0]), num(&r[1]), num(&r[2]));
        let e = ScaleEngine::new(&model, q).unwrap();
        assert!((v - e.w(2.0).unwrap() / e.w(a).unwrap()).abs() < 1e-8);
        // constant (zero) rate: oracle column present and equal
        assert!((v - num(&r[3])).abs() < 1e-8);
    }
}

#[test]
fn constant_rate_columns_match_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    for query in [
        r#"{"functional": "exit", "q": [0.05], "a": [3.0, 6.0]}"#,
        r#"{"functional": "npv", "q": [0.1, 0.5]}"#,
        r#"{"functional": "gs_density", "alpha": 0.1, "beta": 0.2, "theta": [2.0, 3.0], "y": [0.5, 1.5], "z": [1.0]}"#,
        r#"{"functional": "gs_creep", "alpha": 0.1, "beta": 0.2, "theta": [2.0, 3.0]}"#,
    ] {
        let model = r#"{"variant": "brownian_perturbed_cl", "premium": 1.5, "sigma": 0.5, "jump_rate": 1.0, "claims": [[1.0, 1.0]]}"#;
        let cfg = write_config(
            dir.path(),
            "c.json",
            &format!(r#"{{"model": {model}, "tax": {{"x": 2.0, "pieces": [[0.0, 0.4]]}}, "query": {query}}}"#),
        );
        let out = run(&["eval", "--config", cfg.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        for r in table(&String::from_utf8(out.stdout).unwrap()) {
            let n = r.len();
            let (v, o) = (num(&r[n - 2]), num(&r[n - 1]));
            assert!((v - o).abs() <= 1e-7 * o.abs().max(1.0), "{query}: {v} vs {o}");
        }
    }
}

#[test]
fn density_grid_is_nonnegative() {
    let out = run(&["eval", "--config", configs().join("gs_density.json").to_str().unwrap()]);
    assert!(out.status.success());
    let rows = table(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 5 * 4 * 3);
    assert!(rows.iter().all(|r| num(&r[3]) >= 0.0));
}

fn simulate(dir: &Path, n: u64, seed: u64, tax: &str) -> String {
    let cfg = write_config(
        dir,
        "sim.json",
        &format!(
            r#"{{"model": {CL}, "tax": {{"x": 2.0, "pieces": {tax}}},
                "query": {{"functional": "npv", "q": [0.1]}},
                "sim": {{"n_paths": {n}, "seed": {seed}, "horizon": 100.0, "dump_paths": true}}}}"#
        ),
    );
    let out_dir = dir.join(format!("out-{n}-{seed}"));
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read_to_string(out_dir.join("simulate.csv")).unwrap()
}

#[test]
fn simulation_is_reproducible_and_scales() {
    let dir = tempfile::tempdir().unwrap();
    let tax = "[[0.0, 0.2], [3.0, 0.5]]";
    let a = simulate(dir.path(), 20_000, 3, tax);
    let first_paths = std::fs::read(dir.path().join("out-20000-3/paths.csv")).unwrap();
    std::fs::remove_dir_all(dir.path().join("out-20000-3")).unwrap();
    let b = simulate(dir.path(), 20_000, 3, tax);
    assert_eq!(a, b);
    assert_eq!(
        first_paths,
        std::fs::read(dir.path().join("out-20000-3/paths.csv")).unwrap()
    );

    let se = |text: &str| num(&table(text)[0][2]);
    let doubled = simulate(dir.path(), 40_000, 3, tax);
    let ratio = se(&doubled) / se(&a);
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");

    let header = std::fs::read_to_string(dir.path().join("out-20000-3/paths.csv")).unwrap();
    assert!(header.starts_with(taxed_ruin::montecarlo::PATH_CSV_HEADER));
}

#[test]
fn untaxed_npv_simulation_is_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = simulate(dir.path(), 2_000, 1, "[[0.0, 0.0]]");
    let row = &table(&text)[0];
    assert_eq!(num(&row[1]), 0.0);
    assert_eq!(num(&row[5]), 0.0);
}

#[test]
fn seed_flag_overrides_config() {
    let cfg = configs().join("npv.json");
    let go = |seed: &str| {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--threads",
            "2",
        ]);
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(go("11"), go("11"));
    assert_ne!(go("11"), go("12"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // 1: configuration
    let missing = write_config(dir.path(), "m.json", r#"{"tax": {"x": 2.0, "pieces": [[0.0, 0.1]]}}"#);
    assert_eq!(
        run(&["eval", "--config", missing.to_str().unwrap()]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["eval", "--config", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(run(&["eval"]).status.code(), Some(1));
    // 2: the tax stream of a profitable model is not summable at q = 0
    let divergent = write_config(
        dir.path(),
        "d.json",
        &format!(
            r#"{{"model": {CL}, "tax": {{"x": 2.0, "pieces": [[0.0, 0.3]]}}, "query": {{"functional": "npv", "q": [0.0]}}}}"#
        ),
    );
    assert_eq!(
        run(&["eval", "--config", divergent.to_str().unwrap()]).status.code(),
        Some(2)
    );
    // 3: a check fails when the quadrature is made far too coarse
    let coarse = write_config(
        dir.path(),
        "v.json",
        r#"{"verify": {"scenario": "quick", "checks": ["npv"]}}"#,
    );
    let out = run(&["verify", "--config", coarse.to_str().unwrap(), "--tolerance", "1e-2"]);
    assert_eq!(out.status.code(), Some(3));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(
        report
            .lines()
            .any(|l| l.starts_with("npv_constant_rate") && l.ends_with("FAIL")),
        "{report}"
    );
}

#[test]
fn scale_table_has_boundary_values() {
    let out = run(&["scale", "--config", configs().join("scale.json").to_str().unwrap()]);
    assert!(out.status.success());
    let rows = table(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 22);
    // Gaussian part: W(0) = 0, W'(0+) = 2/σ²
    assert_eq!(num(&rows[0][3]), 0.0);
    assert!((num(&rows[0][4]) - 8.0).abs() < 1e-12);
}
