use std::path::Path;
use std::process::{Command, Output};

use rug::Float;
use serde_json::Value;
use tateperiods::kz::drinfeld_associator;
use tateperiods::{NCSeries, PeriodElem, PeriodSeries, SeriesDoc};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tateperiods")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("output is JSON")
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn mzv_two() {
    let doc = json(&run(&["mzv", "2", "--precision", "30"]));
    assert_eq!(doc["results"]["symbol"], "zeta(2)");
    assert_eq!(doc["inputs"]["precision"], 30);
    let value = Float::with_val(128, Float::parse(doc["results"]["value"].as_str().unwrap()).unwrap());
    let reference = Float::with_val(128, Float::parse("1.644934066848226436472415167").unwrap());
    assert!(Float::with_val(128, value - reference).abs() < 1e-27);
}

#[test]
fn associator_document_round_trips() {
    let doc = json(&run(&["associator", "--weight", "2"]));
    let series: SeriesDoc = serde_json::from_value(doc["results"]["series"].clone()).unwrap();
    let phi = NCSeries::<PeriodElem>::from_doc(&series).unwrap();
    assert_eq!(phi, drinfeld_associator(2));
    assert_eq!(phi.coeff_of(&["x1", "x0"]).unwrap().to_string(), "zeta(2)");
    assert_eq!(phi.coeff_of(&["x0", "x1"]).unwrap().to_string(), "-1 * zeta(2)");
}

#[test]
fn exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"vertices\": [\"a\",\n  \"b\" \"c\"]}").unwrap();
    let out = run(&["graph", "validate", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:2:"));

    assert_eq!(run(&["mzv", "2,1"]).status.code(), Some(3));
    assert_eq!(run(&["mzv", "two"]).status.code(), Some(2));
    assert_eq!(run(&["associator", "--weight", "7"]).status.code(), Some(4));
    assert_eq!(run(&["mzv", "3", "--precision", "101"]).status.code(), Some(4));
    assert_eq!(run(&["mzv", "7,7"]).status.code(), Some(4));
    assert_eq!(run(&["eisenstein", "--weight", "4", "--order", "201"]).status.code(), Some(4));
}

#[test]
fn seeded_output_is_deterministic() {
    let a = run(&["graph", "random", "--tails", "4", "--seed", "3"]);
    let b = run(&["graph", "random", "--tails", "4", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    assert_eq!(doc["seed"], 3);
    assert_eq!(doc["results"]["report"]["trivalent"], true);
}

#[test]
fn graph_moebius_and_period_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let g0 = dir.path().join("g0.json");
    let g1 = dir.path().join("g1.json");
    assert!(run(&["graph", "basic", "--tails", "3", "--out", p(&g0)]).status.success());
    assert!(run(&["graph", "expand", p(&g0), "--vertex", "v0", "--branches", "t1,t2", "--out", p(&g1)]).status.success());
    let expanded = read(&g1);
    assert_eq!(expanded["results"]["new_edge"], "[t1|t2]");
    assert_eq!(expanded["results"]["report"]["trivalent"], true);
    assert_eq!(json(&run(&["graph", "validate", p(&g1)]))["results"]["construction"], "reproduces the graph");

    let path = dir.path().join("path.json");
    std::fs::write(
        &path,
        r#"{"moves": [{"rotation": {"branch": "e", "k": 1}}, {"vertex_fusing": {"edge": "e", "param": "s"}}]}"#,
    )
    .unwrap();
    let per = dir.path().join("period.json");
    let args = ["period", "assemble", "--graph", p(&g1), "--path", p(&path), "--weight", "2", "--order", "1"];
    assert!(run(&[&args[..], &["--out", p(&per)]].concat()).status.success());
    let doc = read(&per);
    assert_eq!(doc["results"]["in_ring"], true);
    let series: SeriesDoc = serde_json::from_value(doc["results"]["series"].clone()).unwrap();
    let parsed = PeriodSeries::from_doc(&series).unwrap();
    assert_eq!(parsed.to_doc(), series);

    let assign = dir.path().join("assign.json");
    std::fs::write(&assign, r#"{"params": {"s": "1/10"}}"#).unwrap();
    let values = json(&run(&["period", "eval", p(&per), "--assign", p(&assign), "--precision", "20"]));
    assert_eq!(values["results"]["values"]["terms"][0]["word"], Value::Array(vec![]));

    std::fs::write(&assign, r#"{"params": {"s": "1/2"}}"#).unwrap();
    assert_eq!(run(&["period", "eval", p(&per), "--assign", p(&assign)]).status.code(), Some(3));

    let gr = dir.path().join("gr.json");
    assert!(run(&["graph", "random", "--tails", "3", "--seed", "5", "--out", p(&gr)]).status.success());
    let fix = json(&run(&["moebius", "fix", p(&gr), "--path", "l", "--order", "3"]));
    assert_eq!(fix["results"]["verified"], true);
    let edge = read(&gr)["results"]["graph"]["construction"]["moves"][0]["expand"].clone();
    let (first, second) = (edge["first"].as_str().unwrap(), edge["second"].as_str().unwrap());
    let name = format!("[{}|{}]", first.min(second), first.max(second));
    let branches = format!("{first},{second}");
    let check = json(&run(&["check", "contraction", p(&gr), "--edge", &name, "--branches", &branches]));
    assert_eq!(check["results"]["passed"], true);
}

#[test]
fn selftest_passes() {
    let doc = json(&run(&["selftest", "--seed", "1"]));
    assert_eq!(doc["results"]["passed"], true);
    assert_eq!(doc["seed"], 1);
}
