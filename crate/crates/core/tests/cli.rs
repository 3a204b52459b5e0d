use std::path::{Path, PathBuf};

use regret_dynamics::experiment::cli::{run, EXIT_CERTIFICATE, EXIT_OK, EXIT_USAGE};
use regret_dynamics::experiment::{evaluate, load_config, load_trace, run_experiment, write_report_csv};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["regret-dynamics"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("test.cfg");
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = "\
[experiment]
name = small
rounds = 50
seed = 3

[game]
type = matrix
rows = 1,0;0,1

[learner]
algorithm = optimistic_hedge
eta = 0.5

[arm.hedge]
algorithm = hedge

[arm.optimistic]
";

#[test]
fn report_rebuilds_the_written_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = load_config(&configs().join("auction_smooth.cfg")).unwrap();
    let outcome = run_experiment(&spec, dir.path()).unwrap();
    for arm in &outcome.arms {
        let (trace, meta) = load_trace(&arm.trace_path).unwrap();
        let report = evaluate(&trace, meta.smoothness.as_ref()).unwrap();
        let mut bytes = Vec::new();
        write_report_csv(&report, &mut bytes).unwrap();
        assert_eq!(bytes, std::fs::read(&arm.report_path).unwrap(), "{}", arm.name);
    }
}

#[test]
fn simulate_writes_traces_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_root = dir.path().join("out");
    let (code, out, err) = cli(&["simulate", cfg.to_str().unwrap(), "--out", out_root.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("optimistic: T=50"));
    assert!(out.contains("hedge: T=50"));
    let run_dir = out_root.join("small");
    for f in ["optimistic_trace.csv", "optimistic_trace.csv.meta", "hedge_report.csv", "regret.svg"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let svg = std::fs::read_to_string(run_dir.join("regret.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count() >= 2);
}

#[test]
fn report_and_plot_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let spec = load_config(&configs().join("auction_smooth.cfg")).unwrap();
    let outcome = run_experiment(&spec, dir.path()).unwrap();
    let trace = outcome.arms[0].trace_path.to_str().unwrap().to_owned();

    let (code, out, _) = cli(&["report", &trace]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("name,value,bound,status,note\n"));
    assert!(out.contains("\nsmoothness,"));

    for kind in ["regret", "bids"] {
        let target = dir.path().join(format!("{kind}.svg"));
        let (code, _, err) = cli(&["plot", &trace, "--kind", kind, "--out", target.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK, "{err}");
        let svg = std::fs::read_to_string(&target).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let panels = doc.descendants().filter(|n| n.attribute("class") == Some("panel")).count();
        let lines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
        assert!(panels >= 1);
        assert!(lines >= panels, "{kind}: {lines} polylines in {panels} panels");
    }
}

#[test]
fn plot_bids_needs_an_auction() {
    let dir = tempfile::tempdir().unwrap();
    let spec = load_config(&configs().join("matching_pennies.cfg")).unwrap();
    let outcome = run_experiment(&spec, dir.path()).unwrap();
    let trace = outcome.arms[0].trace_path.to_str().unwrap().to_owned();
    let (code, _, err) = cli(&["plot", &trace, "--kind", "bids"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("error"));
}

#[test]
fn lowerbound_prints_every_quantity() {
    let (code, out, _) = cli(&["lowerbound", "--eta", "1", "--T", "100"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("r(T) on A = 11.55292"));
    assert!(out.contains("(T/2)(e^eta-1)/(e^eta+1) = 23.10585"));
    assert!(out.contains("sqrt(T(1-1/e)/(e+1)) - 1"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cli(&[]).0, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(cli(&["lowerbound", "--eta", "x", "--T", "10"]).0, EXIT_USAGE);
    assert_eq!(cli(&["lowerbound", "--eta", "1", "--T", "7"]).0, EXIT_USAGE);
    assert_eq!(cli(&["report", "/nonexistent/trace.csv"]).0, EXIT_USAGE);
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
}

#[test]
fn invalid_config_lists_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[experiment]\nname = x\nrounds = -3\n\n[learner]\nalgorithm = hedge\neta = abc\ncolour = red\n");
    let (code, _, err) = cli(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    for needle in ["experiment.rounds", "learner.eta", "learner.colour", "game.type", "line 3", "line 7"] {
        assert!(err.contains(needle), "missing {needle} in {err}");
    }
}

#[test]
fn failed_smoothness_claim_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = "\
[experiment]
name = bad_claim
rounds = 20
seed = 1

[game]
type = auction
players = 2
items = 1
value = 20
max_bid = 20
lambda = 0.6321205588285577
mu = 0
s_star = 0,0

[learner]
algorithm = hedge
eta = 0.1
";
    let cfg = write_config(dir.path(), body);
    let (code, out, _) = cli(&["verify-smooth", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_CERTIFICATE);
    assert!(out.contains("verified = false"));

    let out_root = dir.path().join("out");
    let (code, _, err) = cli(&["simulate", cfg.to_str().unwrap(), "--out", out_root.to_str().unwrap()]);
    assert_eq!(code, EXIT_CERTIFICATE);
    assert!(err.contains("smoothness"));
}

#[test]
fn verify_smooth_accepts_the_shipped_claim() {
    let cfg = configs().join("auction_smooth.cfg");
    let (code, out, _) = cli(&["verify-smooth", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("verified = true"));
}

#[test]
fn binary_honours_the_output_root_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_regret-dynamics"))
        .arg("simulate")
        .arg(&cfg)
        .env("REGRET_DYNAMICS_OUT", dir.path().join("root"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    assert!(dir.path().join("root/small/hedge_trace.csv").exists());
    let bad = std::process::Command::new(env!("CARGO_BIN_EXE_regret-dynamics")).arg("simulate").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
