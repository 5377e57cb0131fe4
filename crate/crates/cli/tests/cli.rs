use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spinthermo_core::analysis::ScalingCurve;
use spinthermo_core::thermo::c_opt;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn spinthermo(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinthermo"))
        .args(args)
        .env("SPINTHERMO_OUT", out)
        .current_dir(root())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().to_string()))
        .unwrap_or_else(|| panic!("no {key:?} in {text}"))
}

fn archive_of(o: &Output) -> PathBuf {
    PathBuf::from(field(&stdout(o), "archive"))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn shipped_models_pass_the_tripwire() {
    let tmp = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(root().join("models")).unwrap() {
        let path = entry.unwrap().path();
        let o = spinthermo(tmp.path(), &["evaluate", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn star7_lies_in_the_sandwich() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["evaluate", "models/star7.json"]);
    let c: f64 = field(&stdout(&o), "C ").parse().unwrap();
    assert!(c >= c_opt(64).unwrap() && c <= c_opt(128).unwrap(), "{c}");
}

#[test]
fn zero_model_has_zero_heat_capacity() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["evaluate", "models/zero3.json", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["stats"]["heat_capacity"].as_f64(), Some(0.0));
}

#[test]
fn star12_dual_path_agrees() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["evaluate", "models/star12.json", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["method"], "analytic+enumerate");
    assert!(v["cross_check_rel_diff"].as_f64().unwrap() < 1e-10);
    let e = spinthermo(tmp.path(), &["evaluate", "models/star12.json", "--method", "enumerate", "--json"]);
    let a = spinthermo(tmp.path(), &["evaluate", "models/star12.json", "--method", "analytic", "--json"]);
    let ce = serde_json::from_slice::<Value>(&e.stdout).unwrap()["stats"]["heat_capacity"].as_f64().unwrap();
    let ca = serde_json::from_slice::<Value>(&a.stdout).unwrap()["stats"]["heat_capacity"].as_f64().unwrap();
    assert!((ce - ca).abs() <= 1e-10 * ca);
}

#[test]
fn spectrum_export() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s.json");
    let o = spinthermo(tmp.path(), &["evaluate", "models/triangle_path.json", "--spectrum", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json(&out);
    let levels = v.as_array().unwrap();
    let total: u64 = levels.iter().map(|l| l[1].as_u64().unwrap()).sum();
    assert_eq!(total, 8);
    assert_eq!(levels[0][0].as_f64(), Some(0.0));
}

#[test]
fn analytic_method_on_generic_model_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["evaluate", "models/zero3.json", "--method", "analytic"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configs_exit_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#""name": "x", "task": {"kind": "direct", "n_spins": 3},
        "optimizer": {"steps": 5, "learning_rate": 0.01, "init": {"kind": "uniform", "lo": -1.0, "hi": 0.0}}"#;
    let cases = [
        format!("{{{base}}}"),
        format!("{{\"schema_version\": 9, {base}}}"),
        format!("{{\"schema_version\": 1, \"colour\": 3, {base}}}"),
        r#"{"schema_version": 1, "name": "x", "task": {"kind": "direct", "n_spins": 3},
            "optimizer": {"steps": 5, "learning_rate": -1.0, "init": {"kind": "uniform", "lo": -1.0, "hi": 0.0}}}"#
            .to_string(),
        r#"{"schema_version": 1, "name": "x", "task": {"kind": "direct", "n_spins": 31},
            "optimizer": {"steps": 5, "learning_rate": 0.1, "init": {"kind": "uniform", "lo": -1.0, "hi": 0.0}}}"#
            .to_string(),
    ];
    for (k, body) in cases.iter().enumerate() {
        let p = write_config(tmp.path(), &format!("c{k}.json"), body);
        let o = spinthermo(tmp.path(), &["optimize", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "case {k}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn unknown_target_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["reproduce", "table9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn three_unit_chimera_is_gated() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["chimera", "--units", "3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--long"));
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn zero_steps_evaluates_the_initial_point() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(
        tmp.path(),
        "zero.json",
        r#"{"schema_version": 1, "name": "zero-steps", "task": {"kind": "direct", "n_spins": 5},
            "optimizer": {"steps": 0, "learning_rate": 0.01, "init": {"kind": "uniform", "lo": -1.0, "hi": 0.0}}}"#,
    );
    let o = spinthermo(tmp.path(), &["optimize", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = archive_of(&o);
    let r = json(&dir.join("result.json"));
    let run = &r["runs"][0];
    assert_eq!(run["best_step"], 0);
    assert_eq!(run["initial_theta"], run["best_theta"]);
    for f in ["config.json", "log.txt", "provenance.json", "curves/trajectory.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn archived_config_reproduces_the_result() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(
        tmp.path(),
        "c.json",
        r#"{"schema_version": 1, "name": "repro", "task": {"kind": "direct", "n_spins": 6},
            "optimizer": {"steps": 400, "learning_rate": 0.02, "init": {"kind": "uniform", "lo": -1.0, "hi": 0.0},
                          "seed": 5, "restarts": 3}}"#,
    );
    let first = archive_of(&spinthermo(tmp.path(), &["optimize", p.to_str().unwrap(), "--seed", "11"]));
    let cfg = first.join("config.json");
    assert_eq!(json(&cfg)["optimizer"]["seed"], 11);
    let mut results = vec![fs::read(first.join("result.json")).unwrap()];
    for threads in ["1", "2", "8"] {
        let o = spinthermo(tmp.path(), &["optimize", cfg.to_str().unwrap(), "--threads", threads]);
        results.push(fs::read(archive_of(&o).join("result.json")).unwrap());
    }
    assert!(results.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn direct_n4_config_finds_all_to_all() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["optimize", "configs/direct-n4.json"]);
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "verdict"), "all-to-all");
    let r = json(&archive_of(&o).join("result.json"));
    for v in r["runs"][0]["best_theta"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() + 0.377).abs() < 0.005);
    }
}

#[test]
fn one_unit_chimera_matches_tied_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["chimera", "--units", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c: f64 = field(&stdout(&o), "best C").parse().unwrap();
    assert!((c - 6.0416).abs() < 0.01 * 6.0416, "{c}");
    let r = json(&archive_of(&o).join("result.json"));
    assert_eq!(r["chimera"]["units"], 1);
}

#[test]
fn star_chain_sweep_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["optimize", "configs/star-chain-sweep.json"]);
    assert!(o.status.success());
    let dir = archive_of(&o);
    let curve = ScalingCurve::read_csv("best_c", "", fs::File::open(dir.join("curves/best_c.csv")).unwrap()).unwrap();
    let last = curve.points.last().unwrap();
    assert_eq!(last.n, 24);
    assert!((last.a.unwrap() - 6.164).abs() < 0.005);
    assert!((last.b.unwrap() - 2.411).abs() < 0.005);
    assert!((last.j.unwrap() + 2.903).abs() < 0.005);
}

#[test]
fn reproduce_table2_emits_parseable_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["reproduce", "table2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = archive_of(&o);
    let prov = json(&dir.join("provenance.json"));
    for name in ["star_unconstrained", "star_constrained", "star_chain_m3"] {
        let file = format!("{name}.csv");
        let text = fs::read(dir.join("curves").join(&file)).unwrap();
        assert!(!text.contains(&b'\r'));
        let c = ScalingCurve::read_csv(name, "", text.as_slice()).unwrap();
        let mut again = Vec::new();
        c.write_csv(&mut again).unwrap();
        assert_eq!(again, text);
        assert!(prov[&file]["method"].is_string());
    }
    let unc = ScalingCurve::read_csv("u", "", fs::File::open(dir.join("curves/star_unconstrained.csv")).unwrap()).unwrap();
    let n7 = unc.points.iter().find(|p| p.n == 7).unwrap();
    assert!((n7.a.unwrap() - 5.070).abs() < 0.005 && (n7.b.unwrap() - 1.267).abs() < 0.005);
    let rerun = spinthermo(tmp.path(), &["reproduce", "--config", dir.join("config.json").to_str().unwrap()]);
    assert_eq!(
        fs::read(archive_of(&rerun).join("result.json")).unwrap(),
        fs::read(dir.join("result.json")).unwrap()
    );
}

#[test]
fn reproduce_fig1_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["reproduce", "fig1"]);
    assert!(o.status.success());
    let dir = archive_of(&o).join("curves");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["c_opt.csv", "ising_1d.csv", "non_interacting.csv", "star.csv"]);
}

#[test]
fn reproduce_rejects_other_temperatures() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spinthermo(tmp.path(), &["reproduce", "table1", "--beta", "2"]);
    assert_eq!(o.status.code(), Some(2));
}
