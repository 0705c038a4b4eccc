use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const COVARIATES: &str = "sqrt(prior_papers),sqrt(paper_citation_popularity),sqrt(author_citation_popularity)";

fn rhem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rhem")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rhem(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/aminer10.jsonl")
}

fn simulate(dir: &Path, events: &str, seed: &str) -> PathBuf {
    let out = dir.join("sim");
    ok(&[
        "simulate", "--events", events, "--covariates", COVARIATES, "--beta", "0.8,0.6,-0.5", "--seed", seed,
        "--out-dir", path(&out),
    ]);
    out
}

#[test]
fn simulate_covariates_fit_recovers_beta() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), "3000", "21");
    let table = dir.path().join("instances.csv");
    ok(&[
        "covariates", "--input", path(&sim.join("events.tsv")), "--covariates", COVARIATES, "--q", "5", "--seed",
        "21", "--out", path(&table),
    ]);
    let fit_dir = dir.path().join("fit");
    ok(&["fit", "--instances", path(&table), "--out-dir", path(&fit_dir)]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(fit_dir.join("fit.json")).unwrap()).unwrap();
    let truth = [0.8, 0.6, -0.5];
    let rows = report["coefficients"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (row, t) in rows.iter().zip(truth) {
        let b = row["estimate"].as_f64().unwrap();
        let se = row["se_robust"].as_f64().unwrap();
        assert!((b - t).abs() <= 3.0 * se, "{row}");
    }
    // The simulator's own choice sets are the tail of the sampled table.
    let choice = fs::read_to_string(sim.join("choice_instances.csv")).unwrap();
    let sampled = fs::read_to_string(&table).unwrap();
    let tail: Vec<&str> = sampled.lines().skip(1).skip(500 * 6).collect();
    let head: Vec<&str> = choice.lines().skip(1).collect();
    assert_eq!(tail, head);
}

#[test]
fn run_is_deterministic_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), "500", "4");
    let input = sim.join("events.tsv");
    for name in ["a", "b"] {
        ok(&[
            "run", "--input", path(&input), "--format", "event-tsv", "--covariates", COVARIATES, "--seed", "4",
            "--bootstrap", "3", "--out-dir", path(&dir.path().join(name)),
        ]);
    }
    for file in ["instances.csv", "fit.json", "fit.txt", "contrib.csv", "bootstrap.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = serde_json::json!({
        "schema_version": 1,
        "input_path": fixture(),
        "input_format": "aminer-json",
        "covariates": ["sqrt(paper_citation_popularity)"],
        "q": 2,
        "seed": 0,
        "contributions": false,
        "output_dir": out,
    });
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, config.to_string()).unwrap();
    let text = ok(&["run", "--config", path(&cfg), "--seed", "7"]);
    assert!(text.contains("sqrt(paper_citation_popularity)"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ingest.json")).unwrap()).unwrap();
    assert_eq!(report["events_kept"], 7);
}

#[test]
fn ingest_writes_tsv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("events.tsv");
    let report = dir.path().join("ingest.json");
    ok(&[
        "ingest", "--input", path(&fixture()), "--format", "aminer-json", "--out", path(&tsv), "--report",
        path(&report),
    ]);
    assert_eq!(fs::read_to_string(&tsv).unwrap().lines().count(), 7);
    let again = dir.path().join("again.tsv");
    ok(&["ingest", "--input", path(&tsv), "--out", path(&again)]);
    assert_eq!(fs::read(&tsv).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn contrib_and_bootstrap_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), "400", "2");
    let choice = sim.join("choice_instances.csv");
    let stdout = ok(&["contrib", "--instances", path(&choice), "--out-dir", path(dir.path())]);
    assert_eq!(stdout.lines().count(), 3);
    assert_eq!(fs::read_to_string(dir.path().join("contrib.csv")).unwrap().lines().count(), 4);
    let boot = dir.path().join("boot.csv");
    ok(&["bootstrap", "--instances", path(&choice), "--replicates", "4", "--seed", "1", "--out", path(&boot)]);
    assert_eq!(fs::read_to_string(&boot).unwrap().lines().count(), 5);
}

#[test]
fn seed_is_mandatory_and_errors_exit_nonzero() {
    let out = rhem(&["run", "--input", "x.tsv", "--format", "event-tsv", "--out-dir", "o"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    let out = rhem(&["covariates", "--input", "x.tsv", "--out", "o.csv"]);
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let out = rhem(&[
        "run", "--input", path(&dir.path().join("missing.tsv")), "--format", "event-tsv", "--seed", "1",
        "--out-dir", path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
}
