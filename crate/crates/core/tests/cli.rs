use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_critgraph"))
}

#[test]
fn usage_errors_exit_with_one() {
    let out = bin().arg("experiment").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["experiment", "nope", "--seed", "1", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["experiment", "zeta_convergence", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "missing seed");
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn passing_experiment_exits_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["experiment", "zeta_convergence", "--seed", "1", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("criterion  1 zeta expansion of nu_n: PASS"));
    let csv = std::fs::read_to_string(dir.path().join("samples_zeta_convergence.csv")).unwrap();
    assert!(csv.starts_with("n,scaled_nu_minus_one,zeta,abs_difference\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn failing_acceptance_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": [1000, 10000], "tolerances": {"final_rel": 1e-9}}"#).unwrap();
    let out = bin()
        .args(["experiment", "zeta_convergence", "--seed", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulation_subcommands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let out = bin().args(args).args(["--seed", "3", "--out"]).arg(d).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["gen", "--n", "2000"]);
    run(&["gen", "--n", "500", "--kernel", "chung_lu"]);
    run(&["explore", "--n", "10000", "--start", "1"]);
    run(&["levy", "--truncation", "1000"]);
    run(&["coalesce", "--n", "5000", "--lambda", "-1.5", "--t", "0,1,2"]);
    run(&["bp", "--n", "1000", "--reps", "2000"]);
    for f in ["edges.csv", "components.csv", "trace.csv", "path.csv", "coalescent.csv", "moments.csv"] {
        let text = std::fs::read_to_string(d.join(f)).unwrap();
        assert!(text.lines().count() >= 1, "{f}");
    }
    assert!(std::fs::read_to_string(d.join("edges.csv")).unwrap().starts_with("i,j\n"));
    let out = bin().args(["gen", "--n", "10", "--kernel", "bogus", "--seed", "1", "--out"]).arg(d).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
