use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use osf::balanced::min_delta;
use osf::greedy::ContractionRule;
use osf::ExactInstance;
use serde_json::Value;
use tempfile::TempDir;

fn osf_cmd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_osf"));
    c.env_remove("STEINER_CAP_PAIRS");
    c
}

fn run_ok(args: &[&str]) -> String {
    let out = osf_cmd().args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn run_raw(args: &[&str]) -> Output {
    osf_cmd().args(args).output().expect("binary runs")
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn load(path: &Path) -> ExactInstance {
    ExactInstance::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Smallest admissible `δ` at `α = 1` for `K = max(k, 2^M)`.
fn admissible_delta(classes: usize, per: usize) -> u64 {
    let k_bound = ((classes * per) as u64).max(1 << classes);
    min_delta(&osf::Weight::from_integer(1.into()), k_bound)
}

fn gen_cage(dir: &TempDir, cage: &str) -> PathBuf {
    let f = p(dir, &format!("{cage}.json"));
    run_ok(&["generate", "girth", "--cage", cage, "--out", s(&f)]);
    f
}

fn gen_canonical(dir: &TempDir, classes: usize, per: usize, delta: u64, seed: u64) -> PathBuf {
    let f = p(dir, &format!("canon_{classes}_{per}_{seed}.json"));
    let (c, k, d, sd) = (classes.to_string(), per.to_string(), delta.to_string(), seed.to_string());
    run_ok(&["generate", "canonical", "--classes", &c, "--per-class", &k, "--delta", &d, "--seed", &sd, "--out", s(&f)]);
    f
}

#[test]
fn generate_petersen_prints_digest() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "p.json");
    let out = run_ok(&["generate", "girth", "--cage", "petersen", "--out", s(&f)]);
    let inst = load(&f);
    assert_eq!(inst.graph.vertex_count(), 10);
    assert_eq!(inst.graph.edge_count(), 15);
    assert_eq!(out.split_whitespace().next(), Some(inst.digest().as_str()));
}

#[test]
fn generate_random_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.json"), p(&dir, "b.json"));
    let args = |f: &Path| {
        run_ok(&["generate", "random", "--n", "8", "--m", "14", "--k", "4", "--seed", "1", "--out", s(f)])
    };
    let (da, db) = (args(&a), args(&b));
    assert_eq!(da, db);
    assert!(da.contains("seed=1"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let inst = load(&a);
    assert_eq!((inst.graph.vertex_count(), inst.graph.edge_count(), inst.pair_count()), (8, 14, 4));
}

#[test]
fn generate_rejects_unknown_cage() {
    let out = run_raw(&["generate", "girth", "--cage", "dodecahedron"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown cage"));
}

#[test]
fn generate_canonical_small_delta() {
    let dir = TempDir::new().unwrap();
    let f = gen_canonical(&dir, 2, 3, 20, 2);
    assert_eq!(load(&f).pair_count(), 6);
}

#[test]
fn run_writes_trace_and_row() {
    let dir = TempDir::new().unwrap();
    let f = gen_cage(&dir, "petersen");
    let csv = p(&dir, "rows.csv");
    for rule in ContractionRule::ALL {
        let trace = p(&dir, &format!("{rule}.json"));
        run_ok(&["run", "--instance", s(&f), "--rule", rule.name(), "--trace-out", s(&trace), "--csv", s(&csv), "--seed", "7"]);
        let t: Value = serde_json::from_str(&fs::read_to_string(&trace).unwrap()).unwrap();
        assert_eq!(t["total"], "15/2");
        for pair in t["pairs"].as_array().unwrap() {
            assert_eq!(pair["cost"], "5/2");
            assert_eq!(pair["contraction"], "1/1");
        }
    }
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("seed,digest,rule,k,greedy"));
    assert!(lines[1].starts_with("7,"));
    assert!(lines[1].contains(",rule1,3,15/2,7.500000,"));
    assert!(lines[3].contains(",rule3,"));
}

#[test]
fn run_is_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let f = gen_cage(&dir, "heawood");
    let a = run_ok(&["run", "--instance", s(&f), "--rule", "rule2"]);
    let b = run_ok(&["run", "--instance", s(&f), "--rule", "rule2"]);
    assert_eq!(a, b);
    assert!(a.contains(",rule2,4,12/1,12.000000,"));
}

#[test]
fn cap_env_blanks_optimum_columns() {
    let dir = TempDir::new().unwrap();
    let f = gen_cage(&dir, "petersen");
    let out = osf_cmd()
        .args(["run", "--instance", s(&f)])
        .env("STEINER_CAP_PAIRS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[6], "");
    assert_eq!(row[10], "");
    assert_eq!(row[17], "");
}

#[test]
fn certify_dual_lb_on_petersen() {
    let dir = TempDir::new().unwrap();
    let f = gen_cage(&dir, "petersen");
    let v: Value = serde_json::from_str(&run_ok(&["certify", "--instance", s(&f), "--kind", "dual-lb"])).unwrap();
    assert_eq!(v["bound_holds"], true);
    assert_eq!(v["verdict"], "pass");
}

#[test]
fn class_duals_round_trip_and_corruption() {
    let dir = TempDir::new().unwrap();
    let f = gen_cage(&dir, "heawood");
    let cert = p(&dir, "cd.json");
    run_ok(&["certify", "--instance", s(&f), "--kind", "class-duals", "--out", s(&cert)]);
    let v: Value =
        serde_json::from_str(&run_ok(&["certify", "--instance", s(&f), "--kind", "class-duals", "--certificate", s(&cert)]))
            .unwrap();
    assert_eq!(v["verdict"], "pass");

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    doc[0]["certificate"]["radius"] = Value::String("100/1".into());
    fs::write(&cert, doc.to_string()).unwrap();
    let out = run_raw(&["certify", "--instance", s(&f), "--kind", "class-duals", "--certificate", s(&cert)]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["classes"][0]["clauses"]["uniform_radius"], false);
}

#[test]
fn certify_balanced_on_canonical_corpus() {
    let dir = TempDir::new().unwrap();
    for (m, per) in [(1, 2), (2, 2), (2, 3), (3, 1)] {
        let delta = admissible_delta(m, per);
        for seed in 0..2 {
            let f = gen_canonical(&dir, m, per, delta, seed);
            let v: Value = serde_json::from_str(&run_ok(&["certify", "--instance", s(&f), "--kind", "balanced"])).unwrap();
            assert_eq!(v["verdict"], "pass", "M={m} per={per} seed={seed}: {v}");
            assert_eq!(v["delta"], delta);
            let v: Value =
                serde_json::from_str(&run_ok(&["certify", "--instance", s(&f), "--kind", "induction-bound"])).unwrap();
            assert_eq!(v["verdict"], "pass");
        }
    }
}

#[test]
fn certify_balanced_refuses_non_canonical() {
    let dir = TempDir::new().unwrap();
    let f = gen_cage(&dir, "petersen");
    let out = run_raw(&["certify", "--instance", s(&f), "--kind", "balanced", "--delta", "300"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c_schedule_exact"));
}

fn corrupted(edit: impl Fn(&mut Value)) -> (Output, Value) {
    let dir = TempDir::new().unwrap();
    let f = gen_canonical(&dir, 2, 2, admissible_delta(2, 2), 1);
    let cert = p(&dir, "bd.json");
    run_ok(&["certify", "--instance", s(&f), "--kind", "balanced", "--out", s(&cert)]);
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    edit(&mut doc);
    fs::write(&cert, doc.to_string()).unwrap();
    let out = run_raw(&["certify", "--instance", s(&f), "--kind", "balanced", "--certificate", s(&cert)]);
    let v = serde_json::from_slice(&out.stdout).unwrap();
    (out, v)
}

#[test]
fn corrupted_charge_fails_caps() {
    let (out, v) = corrupted(|doc| {
        doc["charges"][0] = Value::String("1000000/1".into());
    });
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(v["clauses"]["e_charge_caps"], false);
    assert_eq!(v["verdict"], "fail");
}

#[test]
fn inflated_radius_fails_radii() {
    let (out, v) = corrupted(|doc| {
        doc["balls"][0]["radius"] = Value::String("1/1".into());
    });
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(v["clauses"]["b_radii"], false);
}

#[test]
fn transform_rule3_preserves_cost() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "r.json");
    run_ok(&["generate", "random", "--n", "9", "--m", "16", "--k", "5", "--seed", "4", "--out", s(&f)]);
    let trace = p(&dir, "t.json");
    run_ok(&["run", "--instance", s(&f), "--rule", "rule3", "--trace-out", s(&trace), "--no-opt"]);
    let (out, receipt) = (p(&dir, "sub.json"), p(&dir, "receipt.json"));
    let digest = run_ok(&[
        "transform", "--instance", s(&f), "--trace", s(&trace), "--kind", "rule3", "--out", s(&out), "--receipt", s(&receipt),
    ]);
    let r: Value = serde_json::from_str(&fs::read_to_string(&receipt).unwrap()).unwrap();
    assert_eq!(r["metrics"]["cost_in"], r["metrics"]["cost_out"]);
    assert_eq!(r["target_digest"].as_str(), Some(digest.trim()));
    assert_eq!(load(&out).digest(), digest.trim());
}

#[test]
fn transform_rule3_needs_rule3_trace() {
    let dir = TempDir::new().unwrap();
    let f = gen_cage(&dir, "petersen");
    let out = run_raw(&["transform", "--instance", s(&f), "--kind", "rule3", "--rule", "rule1", "--out", s(&p(&dir, "x.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mismatched_trace_is_rejected() {
    let dir = TempDir::new().unwrap();
    let a = gen_cage(&dir, "petersen");
    let b = gen_cage(&dir, "heawood");
    let trace = p(&dir, "t.json");
    run_ok(&["run", "--instance", s(&b), "--trace-out", s(&trace), "--no-opt"]);
    let out = run_raw(&["certify", "--instance", s(&a), "--trace", s(&trace), "--kind", "class-duals"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audit_checks_canonicity() {
    let dir = TempDir::new().unwrap();
    let f = gen_canonical(&dir, 2, 2, 40, 0);
    let v: Value = serde_json::from_str(&run_ok(&["audit", "--instance", s(&f), "--delta", "40"])).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["rules"]["rule2"]["canonical"]["c_schedule_exact"], true);
    let out = run_raw(&["audit", "--instance", s(&f), "--delta", "41"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rules"]["rule1"]["canonical"]["a_well_separated"], false);
}

#[test]
fn report_single_row_round_trips() {
    let dir = TempDir::new().unwrap();
    let f = gen_cage(&dir, "petersen");
    let csv = p(&dir, "rows.csv");
    run_ok(&["run", "--instance", s(&f), "--csv", s(&csv)]);
    let out = run_ok(&["report", "--input", s(&csv)]);
    assert_eq!(out, fs::read_to_string(&csv).unwrap());
}

#[test]
fn report_sorts_by_k_and_buckets_contraction() {
    let dir = TempDir::new().unwrap();
    let csv = p(&dir, "rows.csv");
    for cage in ["heawood", "petersen"] {
        let f = gen_cage(&dir, cage);
        run_ok(&["run", "--instance", s(&f), "--csv", s(&csv)]);
    }
    let (table, hist) = (p(&dir, "table.csv"), p(&dir, "hist.csv"));
    run_ok(&["report", "--input", s(&csv), "--out", s(&table), "--histogram", s(&hist)]);
    let text = fs::read_to_string(&table).unwrap();
    let ks: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(ks, ["3", "4"]);
    assert_eq!(fs::read_to_string(&hist).unwrap(), "bucket_lo,bucket_hi,count\n1/1,2/1,2\n");
}

#[test]
fn report_rejects_schema_mismatch() {
    let dir = TempDir::new().unwrap();
    let csv = p(&dir, "bad.csv");
    fs::write(&csv, "digest,k,ratio\nabc,3,1/1\n").unwrap();
    let out = run_raw(&["report", "--input", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema mismatch"));
    let out = run_raw(&["run", "--instance", s(&gen_cage(&dir, "petersen")), "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));
}
