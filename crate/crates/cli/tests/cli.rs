use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn kontact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kontact")).args(args).env_remove("KONTACT_SEED").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json_report(args: &[&str]) -> (i32, Value, String) {
    let mut all = args.to_vec();
    all.extend(["--json", "-", "--no-timestamp"]);
    let out = kontact(&all);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    (code(&out), serde_json::from_str(&text).unwrap(), text)
}

#[test]
fn canonical_file_passes() {
    let f = data("canonical_2_2.json");
    let (c, r, _) = json_report(&["verify-structure", f.to_str().unwrap()]);
    assert_eq!(c, 0, "{r:#}");
    assert_eq!(r["status"], "pass");
    assert_eq!(r["data"]["k"], 2);
    assert_eq!(r["data"]["reeb"][0]["s_1"], "1");
}

#[test]
fn malformed_expression_exits_2_with_position() {
    let out = kontact(&["verify-structure", data("malformed.json").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 1, column 5"), "{err}");
    assert!(err.contains("coeffs[\"1\"]"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&kontact(&["verify-structure"])), 2);
    assert_eq!(code(&kontact(&["verify-structure", "--builtin", "sphere"])), 2);
    assert_eq!(code(&kontact(&["hddw", "--builtin", "hydro4", "--hamiltonian", "q+1"])), 2);
    assert_eq!(code(&kontact(&["ideal-gas", "--dt", "0"])), 2);
    assert_eq!(code(&kontact(&["bjorken", "--I", "T^("])), 2);
    assert_eq!(code(&kontact(&["reeb", "--builtin", "thermo", "--samples", "0"])), 2);
    assert_eq!(code(&kontact(&["frobnicate"])), 2);
    assert_eq!(code(&kontact(&["--help"])), 0);
}

#[test]
fn failing_check_exits_1() {
    let f = data("hydro_xi_gradient.json");
    let (c, r, _) = json_report(&["hddw", "--builtin", "hydro4", "--section", f.to_str().unwrap()]);
    assert_eq!(c, 1);
    let failing: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["verdict"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["family_d_xi"]);
}

#[test]
fn constant_hydro_section_passes() {
    let f = data("hydro_constant_section.json");
    let (c, r, _) = json_report(&["hddw", "--builtin", "hydro4", "--section", f.to_str().unwrap()]);
    assert_eq!(c, 0);
    assert_eq!(r["data"]["equilibrium"]["families"].as_array().unwrap().len(), 7);
}

#[test]
fn hydro_nullspace_dimension() {
    let (c, r, _) = json_report(&["hddw", "--builtin", "hydro4", "--point", "random", "--points", "2"]);
    assert_eq!(c, 0);
    assert_eq!(r["data"]["expected_nullspace_dim"], 105);
    assert_eq!(r["data"]["dim"], 34);
}

#[test]
fn explicit_point() {
    let (c, r, _) = json_report(&["hddw", "--builtin", "thermo", "--hamiltonian", "P*V", "--point", "V=2,T=1"]);
    assert_eq!(c, 0);
    assert_eq!(r["data"]["points"][0]["point"]["V"], 2.0);
    assert_eq!(r["data"]["points"][0]["point"]["E"], 0.0);
}

#[test]
fn named_map_as_section() {
    let f = data("canonical_2_2.json");
    let (c, r, _) = json_report(&["hddw", f.to_str().unwrap(), "--map", "zero_section"]);
    assert_eq!(c, 0, "{r:#}");
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["name"] == "section_first_equation"));
}

#[test]
fn kfunction_file() {
    let f = data("kfunction_k4.json");
    let (c, r, _) = json_report(&["legendrian", "--kfunction", f.to_str().unwrap()]);
    assert_eq!(c, 0);
    assert_eq!(r["data"]["dimension"], 9);
    assert_eq!(r["data"]["certificate"], "found");
}

#[test]
fn ideal_gas_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = kontact(&["ideal-gas", "--cv", "3/2", "--t-end", "1", "--dt", "1e-3", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "t");
    let s_col = header.iter().position(|h| *h == "S").unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 1001);
    assert!(rows.iter().all(|r| (r[s_col] - 1.0).abs() <= 1e-6));
}

#[test]
fn bjorken_entropy_after_passes() {
    let (c, r, _) = json_report(&["bjorken", "--gamma", "1", "--I", "T^3"]);
    assert_eq!(c, 0);
    let demo = &r["data"]["demo"];
    for key in ["theta_identity", "sigma_identity", "antisymmetry", "divergence_free_shift", "entropy_before", "entropy_after"] {
        assert_eq!(demo[key]["verdict"], "zero", "{key}");
    }
    assert_eq!(demo["seed"], 42);
    // the alias reaches the same command
    let (c2, r2, _) = json_report(&["bjorken-demo", "--gamma", "1", "--I", "T^3"]);
    assert_eq!((c2, &r2), (0, &r));
}

#[test]
fn json_is_deterministic_and_seeded() {
    let args = ["verify-structure", "--builtin", "hydro4", "--points", "10"];
    let (_, _, a) = json_report(&args);
    let (_, _, b) = json_report(&args);
    assert_eq!(a, b);
    let out = Command::new(env!("CARGO_BIN_EXE_kontact"))
        .args(["reeb", "--builtin", "thermo", "--json", "-", "--no-timestamp"])
        .env("KONTACT_SEED", "7")
        .output()
        .unwrap();
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["config"]["seed"], 7);
}

#[test]
fn timestamp_only_when_asked() {
    let out = kontact(&["reeb", "--builtin", "thermo", "--json", "-"]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["timestamp"].is_u64() && r["wall_time_s"].is_f64());
    let (_, r, _) = json_report(&["reeb", "--builtin", "thermo"]);
    assert!(r.get("timestamp").is_none());
}

#[test]
fn json_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = kontact(&["legendrian", "--builtin", "hydro-equilibrium", "--samples", "4", "--json", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r["data"]["constrained"]["constrained_nullity"][0], 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("legendrian: PASS"));
}
