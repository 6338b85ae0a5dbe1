use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use riskmdp::model_file::ModelFile;
use riskmdp::report::RunReport;
use riskmdp_core::MdpModel;

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskmdp")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_report(p: &Path) -> RunReport {
    RunReport::from_json(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_model(dir: &Path, name: &str, model: &MdpModel) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, ModelFile::from_model(model).to_json()).unwrap();
    path
}

#[test]
fn bad_row_sum_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"states":["a","b"],"actions":["u"],"transitions":{"u":[[0.5,0.4],[0.0,1.0]]},"costs":[[0.0],[1.0]]}"#,
    )
    .unwrap();
    let out = run(&["solve", "--model", path_str(&path)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"a\""), "{err}");
}

#[test]
fn enumeration_guard_exits_3() {
    let s = 21;
    let kernel = vec![(0..s).map(|i| (0..s).map(|j| if j == (i + 1) % s { 1.0 } else { 0.0 }).collect()).collect(); 2];
    let cost = vec![vec![0.0, 1.0]; s];
    let model = MdpModel::unlabeled(kernel, cost).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write_model(dir.path(), "big.json", &model);
    let out = run(&["solve", "--model", path_str(&path)]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&run(&["oracle", "--model", path_str(&path)])), 3);
}

#[test]
fn example_rejects_rho_outside_unit_interval() {
    assert_eq!(code(&run(&["example", "--rho", "1.5"])), 2);
    assert_eq!(code(&run(&["example", "--rho", "-0.5"])), 2);
}

#[test]
fn example_reports_both_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("e.json");
    let out = run(&["example", "--rho", "0.8", "--out", path_str(&out_path)]);
    assert_eq!(code(&out), 0);
    let ex = read_report(&out_path).example.unwrap();
    assert!((ex.lambda_bar - (1.0 + 0.8f64.ln())).abs() < 1e-12);
    assert_eq!(ex.q22, 1.0);
    assert!(ex.poisson.unwrap().insolvable);
    assert!(ex.lp_gap < 1e-6);

    let out = run(&["example", "--rho", "0.1353", "--out", path_str(&out_path)]);
    assert_eq!(code(&out), 0);
    let ex = read_report(&out_path).example.unwrap();
    assert_eq!(ex.lambda_bar, 0.0);
    assert!(ex.q22 > 0.0 && ex.q22 < 1.0);
    assert!(ex.poisson.is_none());
    assert!(ex.lp_value.abs() < 1e-6);
}

#[test]
fn verify_round_trip_and_perturbation() {
    let model = models_dir().join("two_state_rho_0.8.json");
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("s.json");
    let out = run(&["solve", "--model", path_str(&model), "--out", path_str(&sol)]);
    assert_eq!(code(&out), 0);
    let report = read_report(&sol);
    assert!((report.value.unwrap() - (1.0 + 0.8f64.ln())).abs() < 1e-4);

    assert_eq!(code(&run(&["verify", "--model", path_str(&model), "--solution", path_str(&sol)])), 0);

    let mut bumped = report.clone();
    *bumped.solution.as_mut().unwrap().phi.get_mut("2").unwrap() += 0.1;
    let bad = dir.path().join("bumped.json");
    std::fs::write(&bad, bumped.to_json()).unwrap();
    let out = run(&["verify", "--model", path_str(&model), "--solution", path_str(&bad)]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("state 2"));
    assert_eq!(code(&run(&["verify", "--model", path_str(&model), "--solution", path_str(&bad), "--tol", "10"])), 0);
}

#[test]
fn verify_rejects_a_report_for_another_model() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("s.json");
    let two = models_dir().join("two_state_rho_0.8.json");
    let repair = models_dir().join("repair.json");
    assert_eq!(code(&run(&["solve", "--model", path_str(&two), "--out", path_str(&sol)])), 0);
    assert_eq!(code(&run(&["verify", "--model", path_str(&repair), "--solution", path_str(&sol)])), 2);
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let model = models_dir().join("repair.json");
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let mut texts = Vec::new();
    for _ in 0..2 {
        assert_eq!(code(&run(&["solve", "--model", path_str(&model), "--out", path_str(&out_path)])), 0);
        let mut r = read_report(&out_path);
        r.timings.clear();
        texts.push(r.to_json());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn oracle_gap_matches_recomputation() {
    let model = models_dir().join("repair.json");
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    for method in ["grid", "congen"] {
        let out = run(&["solve", "--model", path_str(&model), "--method", method, "--out", path_str(&out_path)]);
        assert_eq!(code(&out), 0);
        let r = read_report(&out_path);
        let oracle = r.oracle.unwrap();
        assert_eq!(oracle.gap.unwrap(), (r.value.unwrap() - oracle.brute_force_value.unwrap()).abs());
        assert_eq!(r.method.as_deref(), Some(method));
    }
}

#[test]
fn oracle_with_policy_file() {
    let dir = models_dir();
    let out = run(&[
        "oracle",
        "--model",
        path_str(&dir.join("two_state_rho_0.8.json")),
        "--policy",
        path_str(&dir.join("policy_two_state.json")),
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("lambda[1] = 0.000000000"), "{text}");
    assert!(text.contains(&format!("lambda[2] = {:.9}", 1.0 + 0.8f64.ln())), "{text}");
}
