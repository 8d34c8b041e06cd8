use std::path::Path;
use std::process::Command;

fn sgl(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sgl")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// Drops the `elapsed_ns` column.
fn without_timing(trace: &str) -> String {
    trace
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

const SMALL: [&str; 6] = ["--set", "n=60", "--set", "p=120", "--set", "group_size=6"];

#[test]
fn solve_writes_trace_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["solve", "--solver", "fista", "--output-dir", out.to_str().unwrap()];
    args.extend(SMALL);
    let (code, stdout, _) = sgl(&args);
    assert_eq!(code, 0);
    assert!(stdout.contains("solver=fista"));
    let trace = read(&out.join("trace.csv"));
    assert!(trace.starts_with("iter,cost,opt_mse,elapsed_ns\n"));
    assert!(!trace.contains('\r'));
    let cfg = read(&out.join("resolved.cfg"));
    assert!(cfg.contains("solver=fista\n") && cfg.contains("p=120\n"));
    assert!(out.join("beta.vec").exists());
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}"));
        let mut args = vec!["solve", "--output-dir", out.to_str().unwrap()];
        args.extend(SMALL);
        assert_eq!(sgl(&args).0, 0);
        traces.push(without_timing(&read(&out.join("trace.csv"))));
        assert_eq!(std::fs::read(out.join("beta.vec")).unwrap(), std::fs::read(dir.path().join("r0/beta.vec")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn huge_lambda_gives_zero_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z");
    let mut args = vec!["solve", "--solver", "amp", "--lambda", "1e9", "--output-dir", out.to_str().unwrap()];
    args.extend(SMALL);
    let (code, stdout, _) = sgl(&args);
    assert_eq!(code, 0);
    assert!(stdout.contains("nonzeros=0"));
    let beta = sgl::format::read_vector(&out.join("beta.vec")).unwrap();
    assert!(beta.iter().all(|v| *v == 0.0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = sgl(&["solve", "--set", "lamda=1", "--output-dir", out]);
    assert_eq!(code, 2);
    assert!(err.contains("lamda"));
    let (code, _, _) = sgl(&["solve", "--set", "gamma=3", "--output-dir", out]);
    assert_eq!(code, 2);
    let mut args = vec!["solve", "--solver", "ista", "--set", "step_size=500", "--output-dir", out];
    args.extend(SMALL);
    assert_eq!(sgl(&args).0, 3);
    assert_eq!(sgl(&["frobnicate"]).0, 2);
    let missing = dir.path().join("nope.cfg");
    assert_eq!(sgl(&["se", "--config", missing.to_str().unwrap()]).0, 1);
}

#[test]
fn dry_run_prints_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dry");
    let (code, stdout, _) = sgl(&["path", "--dry-run", "--set", "lambda_points=3", "--output-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("lambda_points=3\n"));
    assert!(!out.exists());
}

#[test]
fn gen_then_solve_from_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle");
    let mut args = vec!["gen", "--output-dir", bundle.to_str().unwrap()];
    args.extend(SMALL);
    assert_eq!(sgl(&args).0, 0);
    let out = dir.path().join("solved");
    let (code, _, _) = sgl(&["solve", "--instance", bundle.to_str().unwrap(), "--solver", "blockwise", "--output-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    // the bundle carries the truth, so opt_mse is filled in
    let trace = read(&out.join("trace.csv"));
    assert!(trace.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse::<f64>().is_ok());
}

#[test]
fn calibrate_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig3.cfg");
    let (code, stdout, _) = sgl(&["calibrate", "--alpha", "1.0", "--config", cfg.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let lambda: f64 = stdout.lines().find_map(|l| l.strip_prefix("lambda=")).unwrap().parse().unwrap();
    assert!((lambda - 0.32).abs() <= 0.05, "{lambda}");
    let se = read(&dir.path().join("se.txt"));
    assert!(se.contains("tau_star="));
    assert!(read(&dir.path().join("tau_schedule.csv")).starts_with("iter,tau\n"));
}

#[test]
fn path_and_qq_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "--set", "n=50", "--set", "p=200", "--set", "signal=point_mass", "--set", "eps=0.5", "--set", "value=1",
        "--set", "group_mode=perfect", "--set", "mc_samples=20000", "--set", "lambda_grid=0.2,0.5,1e6",
        "--set", "lambda=0.5", "--set", "max_iters=5000",
    ];
    let out = dir.path().join("path");
    let mut args = vec!["path", "--output-dir", out.to_str().unwrap()];
    args.extend(common);
    let (code, _, err) = sgl(&args);
    assert_eq!(code, 0, "{err}");
    let csv = read(&out.join("path.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "lambda,empirical_mse,predicted_mse,tpp,tpp_inf,fdp,fdp_inf,n_selected");
    assert_eq!(lines.len(), 4);
    // beyond lambda_max the predicted columns are empty
    assert_eq!(lines[3].split(',').nth(2), Some(""));

    let out = dir.path().join("qq");
    let mut args = vec!["qq", "--output-dir", out.to_str().unwrap()];
    args.extend(common);
    assert_eq!(sgl(&args).0, 0);
    let qq = read(&out.join("qq.csv"));
    assert!(qq.starts_with("prob,empirical_q,predicted_q\n"));
    assert_eq!(qq.lines().count(), 100);
}

#[test]
fn bench_reports_every_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let (code, stdout, _) = sgl(&[
        "bench", "--output-dir", out.to_str().unwrap(), "--set", "n=100", "--set", "p=200", "--set", "repetitions=2",
        "--set", "max_iters=5000", "--set", "bench_solvers=amp,fista,ista,blockwise", "--parallel-seeds",
    ]);
    assert_eq!(code, 0);
    let csv = read(&out.join("bench.csv"));
    assert_eq!(csv, stdout);
    assert!(csv.starts_with("solver,target_mse,iters,wall_ns\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 4);
}
