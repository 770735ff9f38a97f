use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], env_root: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tensor-bench"));
    cmd.args(args);
    match env_root {
        Some(root) => cmd.env("TENSOR_BENCH_OUT", root),
        None => cmd.env_remove("TENSOR_BENCH_OUT"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, method: &str, nu: f64, extra: &str) -> String {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(
        &path,
        format!(
            r#"{{"name": "{name}", "instance": {{"kind": "hard", "n": 11, "k": 5, "p": 2, "nu": 1.0}},
                "method": "{method}", "params": {{"p": 2, "nu": {nu}, "eps": 1e-6 {extra}}}}}"#
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_fit_compare_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "aat", "adaptive-accelerated", 1.0, "");
    let out = bench(&["run", &cfg], Some(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = dir.path().join("runs/aat");
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(run_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);

    let trace = run_dir.join("trace.csv");
    let trace = trace.to_str().unwrap();
    let fit = bench(&["fit", trace], None);
    assert!(fit.status.success());
    let fit: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    assert!(fit["exponent"].as_f64().unwrap() > 0.0);

    let cmp = bench(
        &["compare", trace, "--instance", "hard:n=11,k=5,p=2,nu=1", "--method", "adaptive-accelerated"],
        None,
    );
    assert!(cmp.status.success());
    let report: serde_json::Value = serde_json::from_slice(&cmp.stdout).unwrap();
    assert_eq!(report["violations"], 0);
    assert_eq!(report["partial"], false);

    let plots = dir.path().join("plots");
    let out = bench(
        &["plot", trace, "-o", plots.to_str().unwrap(), "--instance", "hard:n=11,k=5,p=2,nu=1", "--method", "adaptive-accelerated"],
        None,
    );
    assert!(out.status.success());
    let svg = std::fs::read_to_string(plots.join("aat.svg")).unwrap();
    assert!(svg.contains("series data") && svg.contains("series upper") && svg.contains("series lower"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad", "tensor", 1.5, "");
    assert_eq!(bench(&["run", &bad], Some(dir.path())).status.code(), Some(2));

    let unknown_key = dir.path().join("typo.json");
    std::fs::write(
        &unknown_key,
        r#"{"name": "typo", "instance": {"kind": "hard", "n": 5, "k": 3, "p": 2, "nu": 1.0},
            "method": "tensor", "params": {"p": 2, "nu": 1.0, "eps": 1e-6, "thetta": 0.1}}"#,
    )
    .unwrap();
    assert_eq!(bench(&["run", unknown_key.to_str().unwrap()], Some(dir.path())).status.code(), Some(2));

    // Two iterations cannot reach 1e-6: the run is written but reported as a failure.
    let short = write_config(dir.path(), "short", "accelerated", 1.0, r#", "max_outer_iters": 2"#);
    let out = bench(&["run", &short], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("runs/short/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "max-iterations");
    assert_eq!(summary["converged"], false);

    assert_eq!(bench(&["constants", "--p", "2", "--nu", "1.5", "--theta", "0.1", "--Hf", "1"], None).status.code(), Some(2));
    assert_eq!(bench(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn output_root_flag_overrides_environment() {
    let env_root = tempfile::tempdir().unwrap();
    let flag_root = tempfile::tempdir().unwrap();
    let cfg = write_config(env_root.path(), "where", "adaptive-tensor", 1.0, "");
    let out = bench(&["run", &cfg, "--out-root", flag_root.path().to_str().unwrap()], Some(env_root.path()));
    assert!(out.status.success());
    assert!(flag_root.path().join("runs/where/trace.csv").is_file());
    assert!(!env_root.path().join("runs/where").exists());
}

#[test]
fn constants_prints_thresholds() {
    let out = bench(
        &["constants", "--p", "2", "--nu", "0.5", "--theta", "0.1", "--Hf", "2", "--eps", "1e-4", "--R", "3"],
        None,
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["m_nu"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!((v["accelerated_threshold"].as_f64().unwrap() - 1.5 * 2.1).abs() < 1e-12);
    // (3)^{2/1.5} (4·3/1e-4)^{0.5/1.5}
    let want = 3f64.powf(2.0 / 1.5) * (12.0e4f64).powf(1.0 / 3.0);
    assert!((v["n_universal"].as_f64().unwrap() - want).abs() < 1e-9 * want);
}

#[test]
fn concurrent_runs_match_sequential() {
    let cfgs = tempfile::tempdir().unwrap();
    let a = write_config(cfgs.path(), "one", "adaptive-tensor", 1.0, "");
    let b = write_config(cfgs.path(), "two", "accelerated", 1.0, "");
    let seq = tempfile::tempdir().unwrap();
    let par = tempfile::tempdir().unwrap();
    assert!(bench(&["run", &a, &b], Some(seq.path())).status.success());
    assert!(bench(&["run", &a, &b, "--jobs", "2"], Some(par.path())).status.success());
    for name in ["one", "two"] {
        let read = |root: &Path| std::fs::read(root.join("runs").join(name).join("trace.csv")).unwrap();
        assert_eq!(read(seq.path()), read(par.path()));
    }
}

#[test]
fn shipped_configs_run() {
    let root = tempfile::tempdir().unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut paths: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path().to_string_lossy().into_owned())
        .collect();
    paths.sort();
    assert!(paths.len() >= 3);
    let mut args = vec!["run", "--jobs", "3"];
    args.extend(paths.iter().map(String::as_str));
    let out = bench(&args, Some(root.path()));
    assert!(out.status.success(), "{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
}
