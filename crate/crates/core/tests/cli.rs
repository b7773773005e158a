use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use noisealloc::cli::{OracleReport, RunRecord, GAP_CURVE_FILE, LAMBDA_TRAJECTORY_FILE, REPORT_FILE, ROUNDS_FILE};

const BIN: &str = env!("CARGO_BIN_EXE_noisealloc");

fn example_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/linear_p1.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn small(problem: &str, epsilon: &str, extra: &str) -> String {
    format!(
        "backend = \"analytic-linear\"\nproblem = \"{problem}\"\n{epsilon}output_dir = \"unused\"\n\
         [model]\nsigma_y = 10.0\n[grid]\nsigma_min = 0.0\nsigma_max = 20.0\nbin_count = 40\n{extra}"
    )
}

#[test]
fn example_config_solves_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&["solve", "--config", example_config().to_str().unwrap(), "--out", out]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in [ROUNDS_FILE, REPORT_FILE, GAP_CURVE_FILE, LAMBDA_TRAJECTORY_FILE] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let record = RunRecord::read(dir.path()).unwrap();
    assert!(record.summary.converged);
    assert!(record.summary.max_gap <= 9.0 + 1e-3);

    let before = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    fs::remove_file(dir.path().join(REPORT_FILE)).unwrap();
    let res = run(&["report", "--out", out]);
    assert_eq!(code(&res), 0);
    assert_eq!(fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap(), before);
    assert_eq!(String::from_utf8_lossy(&res.stdout), before);
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&["solve", "--config", example_config().to_str().unwrap(), "--out", out, "--seed", "77"]);
    assert_eq!(code(&res), 0);
    assert_eq!(RunRecord::read(dir.path()).unwrap().config.seed, 77);
}

#[test]
fn infeasible_epsilon_exits_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small("p1", "epsilon = 9.0\n", ""));
    let out = dir.path().join("run");
    let res = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 3);
    // the record is still written, with an advisory
    let record = RunRecord::read(&out).unwrap();
    assert!(!record.summary.converged);
    assert!(record.summary.advisory.is_some());

    let res = run(&["oracle", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 3);
    let rep = OracleReport::read(&out).unwrap();
    assert!(!rep.feasible);
    assert!((rep.epsilon_min - 30.03).abs() < 0.05);
}

#[test]
fn oracle_on_feasible_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&["oracle", "--config", example_config().to_str().unwrap(), "--out", out]);
    assert_eq!(code(&res), 0);
    let rep = OracleReport::read(dir.path()).unwrap();
    assert!(rep.feasible);
    assert!((rep.gain.unwrap() - 0.7197).abs() < 1e-3);
}

#[test]
fn p2_run_reports_epsilon_min() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small("p2", "", "[solver]\nstep = 0.1\nmax_rounds = 5000\n"));
    let out = dir.path().join("run");
    let res = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let eps = RunRecord::read(&out).unwrap().summary.epsilon_min.unwrap();
    assert!((eps - 30.03).abs() < 0.3, "{eps}");
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        small("p1", "", ""),                            // missing epsilon
        small("p2", "epsilon = 1.0\n", ""),             // epsilon on p2
        small("p1", "epsilon = 1.0\n", "bogus = 1\n"),  // unknown key
        small("p1", "epsilon = 1.0\n", "[p]\nkind = \"weights\"\nweights = [1.0]\n"),
        "problem = ".to_string(),
    ];
    for body in cases {
        let cfg = write_config(dir.path(), &body);
        let res = run(&["solve", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&res), 2, "{body}\n{}", String::from_utf8_lossy(&res.stderr));
    }
    let res = run(&["solve", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code(&res), 2);
}

#[test]
fn io_failures_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("run");
    let res = run(&["solve", "--config", example_config().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 4);

    let res = run(&["report", "--out", dir.path().join("empty").to_str().unwrap()]);
    assert_eq!(code(&res), 4);
}
