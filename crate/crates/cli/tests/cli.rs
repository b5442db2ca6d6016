use std::path::Path;
use std::process::{Command, Output};

use mkdv_core::hierarchy::FlowSpec;
use mkdv_core::{AlgebraCtx, Hierarchy};
use tempfile::TempDir;

fn mkdv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkdv"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_writes_one_json_and_latex_per_flow() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = mkdv(&["generate", "--rank", "1", "--flows", "1,3,5", "--degree", "8", "--out", out]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let hier = Hierarchy::new(AlgebraCtx::new(1).unwrap());
    for n in [1u32, 3, 5] {
        let v = json(&dir.path().join(format!("flow_r1_n{n}.json")));
        let (rank, m, rhs) = FlowSpec::rhs_from_json(&v).unwrap();
        assert_eq!((rank, m), (1, n));
        assert_eq!(rhs, hier.flow(n, 8).unwrap().rhs);
        assert_eq!(v["degree"], 8);
        assert!(v["normalization"]["generators"].is_string());
        assert!(dir.path().join(format!("flow_r1_n{n}.tex")).exists());
    }

    let dir2 = TempDir::new().unwrap();
    let res = mkdv(&["generate", "--rank", "2", "--flows", "1,2", "--out", dir2.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let jsons = std::fs::read_dir(dir2.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "json"))
        .count();
    assert_eq!(jsons, 2);
}

#[test]
fn generate_is_byte_for_byte_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let res = mkdv(&["generate", "--rank", "2", "--flows", "1,2,4", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&res), 0);
    }
    for name in ["flow_r2_n4.json", "flow_r2_n4.tex"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap()
        );
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let res = mkdv(&["generate", "--rank", "1", "--flows", "2"]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("not an exponent"));
    assert_eq!(code(&mkdv(&["check", "--flows", "1,3", "--degree", "4"])), 2);
    assert_eq!(code(&mkdv(&["check", "--checks", "curvature"])), 2);
    assert_eq!(code(&mkdv(&["check", "--format", "csv"])), 2);
    assert_eq!(code(&mkdv(&["simulate", "--flows", "1,3"])), 2);
    assert_eq!(code(&mkdv(&["simulate", "--grid-n", "7"])), 2);
    assert_eq!(code(&mkdv(&["simulate", "--profile", "triangle"])), 2);
    assert_eq!(code(&mkdv(&["frobnicate"])), 2);
}

#[test]
fn default_rank_one_suite_passes() {
    let res = mkdv(&["check"]);
    assert_eq!(code(&res), 0, "{}", stdout(&res));
    let text = stdout(&res);
    assert!(text.contains("0 failed"));
    assert!(text.contains("screening scale"));
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn perturbed_flow_fails_the_suite() {
    let res = mkdv(&["check", "--flows", "1,3", "--perturb-flow", "3", "--format", "json"]);
    assert_eq!(code(&res), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(report["perturbed"], true);
    let failed: Vec<_> = report["items"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|i| i["status"] == "fail")
        .collect();
    assert!(failed.iter().any(|i| i["check"] == "zero-curvature"));
    // Residuals are reported verbatim, not just flagged.
    assert!(failed.iter().any(|i| i["residual"].as_str().unwrap().contains('u')));
}

#[test]
fn check_selection_runs_only_the_named_check() {
    let res = mkdv(&["check", "--checks", "equivalence", "--flows", "3", "--format", "json"]);
    assert_eq!(code(&res), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    let items = report["items"].as_array().unwrap();
    assert_eq!(items.len(), 1);
    assert_eq!(items[0]["check"], "equivalence");
    assert_eq!(items[0]["status"], "pass");
}

#[test]
fn default_simulation_conserves_the_densities() {
    let dir = TempDir::new().unwrap();
    let res = mkdv(&["simulate", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}{}", stdout(&res), stderr(&res));
    let report = json(&dir.path().join("conservation_r1_n3.json"));
    let densities = report["densities"].as_array().unwrap();
    assert_eq!(densities.len(), 2);
    for d in densities {
        assert!(d["max_rel_drift"].as_f64().unwrap() < 1e-6, "{d}");
        for key in ["density", "initial", "final"] {
            assert!(!d[key].is_null());
        }
    }
    let csv = std::fs::read_to_string(dir.path().join("trajectory_r1_n3.csv")).unwrap();
    assert!(csv.starts_with("t,z,u1\n"));
    // 101 frames of 256 points plus the header.
    assert_eq!(csv.lines().count(), 101 * 256 + 1);
}

#[test]
fn oversized_time_step_warns_then_aborts() {
    let dir = TempDir::new().unwrap();
    let res = mkdv(&["simulate", "--dt", "0.01", "--steps", "500", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 1);
    let err = stderr(&res);
    assert!(err.contains("stability limit"), "{err}");
    assert!(err.contains("at step"), "{err}");
}

#[test]
fn zero_data_has_zero_drift() {
    let dir = TempDir::new().unwrap();
    let res = mkdv(&["simulate", "--profile", "zero", "--steps", "50", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let report = json(&dir.path().join("conservation_r1_n3.json"));
    for d in report["densities"].as_array().unwrap() {
        assert_eq!(d["max_rel_drift"], 0.0);
        assert_eq!(d["final"], 0.0);
    }
}

#[test]
fn tight_drift_threshold_fails_the_run() {
    let dir = TempDir::new().unwrap();
    let res = mkdv(&[
        "simulate", "--steps", "2000", "--drift-tol", "1e-14", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 1);
    assert!(stdout(&res).contains("FAIL"));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# rank-two run\nrank = 2\nflows = 1,2\nformat = json\n").unwrap();
    let conf = conf.to_str().unwrap();
    let res = mkdv(&["export", "--config", conf]);
    assert_eq!(code(&res), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(doc["algebra"], "A_2^1");
    assert_eq!(doc["flows"].as_array().unwrap().len(), 2);

    let res = mkdv(&["export", "--config", conf, "--rank", "1", "--flows", "3"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(doc["algebra"], "A_1^1");
    assert_eq!(doc["flows"][0]["n"], 3);

    std::fs::write(dir.path().join("bad.conf"), "colour = red\n").unwrap();
    let res = mkdv(&["check", "--config", dir.path().join("bad.conf").to_str().unwrap()]);
    assert_eq!(code(&res), 2);
}

#[test]
fn export_formats() {
    let res = mkdv(&["export", "--flows", "3", "--format", "csv"]);
    assert_eq!(code(&res), 0);
    let text = stdout(&res);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind,n,field,coefficient,monomial"));
    assert!(text.contains("rhs,3,1,1/4,u'''"));
    assert!(text.contains("rhs,3,1,-3/8,u^2 u'"));

    let res = mkdv(&["export", "--flows", "3", "--format", "latex"]);
    assert!(stdout(&res).contains("\\frac{1}{4} u'''"));
}

#[test]
fn export_converts_a_generated_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&mkdv(&["generate", "--flows", "5", "--format", "json", "--out", out])), 0);
    let input = dir.path().join("flow_r1_n5.json");
    let res = mkdv(&["export", "--input", input.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&res), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    let original = json(&input);
    assert_eq!(doc["flows"][0]["rhs"], original["rhs"]);
    assert_eq!(doc["flows"][0]["hamiltonian_density"], original["hamiltonian_density"]);

    std::fs::write(dir.path().join("junk.json"), "{\"n\": 3}").unwrap();
    let res = mkdv(&["export", "--input", dir.path().join("junk.json").to_str().unwrap()]);
    assert_eq!(code(&res), 2);
}
