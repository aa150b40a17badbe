use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use exdecomp::exceptional::SystemKind;
use exdecomp::generate::{generate, GeneratorSpec};
use exdecomp::verify::verify_certificate;
use exdecomp::{run_pipeline, Certificate, Regime};

fn exdecomp(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_exdecomp")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let summary = serde_json::from_str(stdout.trim()).unwrap_or_else(|e| panic!("summary {stdout:?}: {e}"));
    (out.status.code().unwrap(), summary)
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn generate_run_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    for regime in ["noncritical", "critical", "few_edges"] {
        let inst = path(&dir, &format!("{regime}.json"));
        let cert = path(&dir, &format!("{regime}.cert.json"));
        let (code, s) = exdecomp(&["generate", "--regime", regime, "--seed", "3", "--out", &inst]);
        assert_eq!(code, 0, "{s}");
        let (code, s) = exdecomp(&["run", &inst, "--out", &cert]);
        assert_eq!(code, 0, "{s}");
        assert_eq!(s["regime"], regime);
        let (code, s) = exdecomp(&["verify", &inst, &cert]);
        assert_eq!(code, 0, "{s}");
    }
}

#[test]
fn batch_writes_one_certificate_per_instance() {
    let dir = TempDir::new().unwrap();
    for seed in ["1", "2"] {
        let out = path(&dir, &format!("g{seed}.json"));
        assert_eq!(exdecomp(&["generate", "--regime", "few_edges", "--seed", seed, "--out", &out]).0, 0);
    }
    let (code, s) = exdecomp(&["run", "--batch", &dir.path().to_string_lossy()]);
    assert_eq!(code, 0, "{s}");
    assert_eq!(s["succeeded"], 2);
    assert!(Path::new(&path(&dir, "g1.cert.json")).exists());
}

#[test]
fn tampered_certificate_exits_3() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "i.json");
    let cert = path(&dir, "c.json");
    assert_eq!(exdecomp(&["generate", "--regime", "critical", "--out", &inst]).0, 0);
    assert_eq!(exdecomp(&["run", &inst, "--out", &cert]).0, 0);
    let mut c: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    c["systems"][0]["edges"].as_array_mut().unwrap().pop();
    std::fs::write(&cert, c.to_string()).unwrap();
    let (code, s) = exdecomp(&["verify", &inst, &cert]);
    assert_eq!(code, 3, "{s}");
    assert_eq!(s["status"], "verification");
    assert_eq!(s["failure"]["clause"], "a.cover");
}

#[test]
fn odd_crossing_parity_exits_1() {
    // Prism on A' = {0,2,3}, B' = {1,4,5}: three crossing edges, none in G0.
    let instance = serde_json::json!({
        "n": 6,
        "edges": [[0,2],[0,3],[2,3],[1,4],[1,5],[4,5],[0,1],[2,4],[3,5]],
        "partition": {"K": 1, "m": 2, "eps0": "1/2", "A0": [0], "B0": [1], "A": [[2,3]], "B": [[4,5]]},
        "g0": [[0,2],[1,4]]
    });
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "odd.json");
    std::fs::write(&inst, instance.to_string()).unwrap();
    let params = r#"{"D":3,"phi_n":1,"lambda_n":0,"eps":"1/10"}"#;
    let (code, s) = exdecomp(&["run", &inst, "--params", params, "--regime", "noncritical", "--out", &path(&dir, "c.json")]);
    assert_eq!(code, 1, "{s}");
    assert_eq!(s["status"], "precondition");
    assert_eq!(s["failure"]["clause"], "iv");
}

#[test]
fn missing_instance_is_an_input_error() {
    let (code, s) = exdecomp(&["verify", "/nonexistent/i.json", "/nonexistent/c.json"]);
    assert_eq!(code, 1);
    assert_eq!(s["status"], "input");
}

fn certified(regime: Regime) -> (exdecomp::Instance, Certificate) {
    let inst = generate(&GeneratorSpec::default_for(regime, 11)).unwrap();
    let cert = run_pipeline(&inst, inst.params.as_ref().unwrap(), None).unwrap();
    (inst, cert)
}

#[test]
fn deleting_an_edge_breaks_the_cover() {
    let (inst, mut cert) = certified(Regime::Noncritical);
    assert!(verify_certificate(&inst, &cert).passed());
    cert.systems[0].system.ps.edges.pop();
    let r = verify_certificate(&inst, &cert);
    assert_eq!(r.first_failure().unwrap().clause, "a.cover");
}

#[test]
fn relabelling_a_hamilton_system_breaks_es2() {
    let (inst, mut cert) = certified(Regime::Critical);
    let s = &mut cert.systems[0].system;
    assert_eq!(s.kind, SystemKind::Hamilton);
    s.kind = SystemKind::Matching;
    let r = verify_certificate(&inst, &cert);
    assert!(r.get("ES2").is_some_and(|c| !c.pass), "{r:?}");
}
