// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gaitlift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitlift"))
        .args(args)
        .env("GAITLIFT_THREADS", "2")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_params(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_walk_writes_pattern_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(
        dir.path(),
        "walk.json",
        r#"{"epsilon":0.67,"g":1.8,"I":1.1,"alpha":0.5,"beta":-0.6,"gamma":-0.8}"#,
    );
    let out_dir = dir.path().join("run");
    let out = gaitlift(&[
        "simulate",
        "--net",
        "biped4",
        "--params",
        &params,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let report = json(&out);
    assert_eq!(report["gait"], "walk");
    assert_eq!(report["provenance"]["seed"], 1);
    assert_eq!(report["provenance"]["step"], 0.001);
    assert_eq!(report["provenance"]["transient"], 300.0);
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x1E,x2E,x3E,x4E,x1H,x2H,x3H,x4H\n"));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("pattern.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
}

#[test]
fn simulate_chain_period_and_synchrony() {
    let report = json(&gaitlift(&["simulate", "--net", "chain7", "--params", "chain7-set1"]));
    let period = report["period"].as_f64().unwrap();
    assert!((period - 5.783).abs() / 5.783 < 0.005, "{period}");
    assert_eq!(report["synchrony"]["synchronous"], true);
}

#[test]
fn equilibrium_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let params = write_params(
        dir.path(),
        "rest.json",
        r#"{"epsilon":0.67,"g":1.8,"I":0.1,"alpha":0,"beta":0,"gamma":0}"#,
    );
    for cmd in ["simulate", "floquet", "stability"] {
        let out = gaitlift(&[cmd, "--params", &params]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("no oscillation"));
    }
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write_params(dir.path(), "broken.json", "{\"epsilon\": ");
    assert_eq!(gaitlift(&["simulate", "--params", &broken]).status.code(), Some(1));
    assert_eq!(
        gaitlift(&["simulate", "--params", "hop", "--net", "nonesuch"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        gaitlift(&["floquet", "--params", "hop", "--module-kind", "3node"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(gaitlift(&["bogus"]).status.code(), Some(1));
}

#[test]
fn floquet_reports_are_reproducible() {
    let args = ["floquet", "--params", "hop", "--module-kind", "1node", "--seed", "3"];
    let (a, b) = (gaitlift(&args), gaitlift(&args));
    assert_eq!(a.stdout, b.stdout);
    let report = json(&a);
    assert_eq!(report["verdict"], "stable");
    assert_eq!(report["provenance"]["seed"], 3);
    let transverse: Vec<f64> = report["multipliers"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["block"] == "transverse:1")
        .map(|m| m["abs"].as_f64().unwrap())
        .collect();
    assert_eq!(transverse.len(), 2);
    assert!((transverse[0] - 0.00172).abs() / 0.00172 < 0.15, "{transverse:?}");
}

#[test]
fn floquet_without_module_has_one_trivial_multiplier() {
    let report = json(&gaitlift(&["floquet", "--params", "run"]));
    let multipliers = report["multipliers"].as_array().unwrap();
    assert_eq!(multipliers.len(), 8);
    assert!(multipliers.iter().all(|m| m["block"] == "cpg"));
    let near = multipliers
        .iter()
        .filter(|m| (m["abs"].as_f64().unwrap() - 1.0).abs() < 0.02)
        .count();
    assert_eq!(near, 1);
}

#[test]
fn floquet_two_node_uses_h() {
    let report = json(&gaitlift(&[
        "floquet",
        "--params",
        "run",
        "--module-kind",
        "2node",
        "--h",
        "-0.6",
    ]));
    assert_eq!(report["h"], -0.6);
    let n = report["multipliers"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["block"] == "transverse:1")
        .count();
    assert_eq!(n, 4);
}

#[test]
fn full_lift_split() {
    let report = json(&gaitlift(&[
        "floquet",
        "--net",
        "biped-ff(2)",
        "--params",
        "hop",
        "--full",
    ]));
    assert!(report["module_spread"].as_f64().unwrap() < 0.01);
    assert_eq!(report["multipliers"].as_array().unwrap().len(), 12);
}

fn condition(report: &Value, name: &str) -> bool {
    report["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["condition"] == name)
        .unwrap()["holds"]
        .as_bool()
        .unwrap()
}

#[test]
fn stability_conditions() {
    let refined = json(&gaitlift(&["stability", "--params", "refined-hop"]));
    assert!(condition(&refined, "liap2"));
    assert!((refined["activity_bound"]["g_bound"].as_f64().unwrap() - 1.52).abs() < 0.05);
    let strong = json(&gaitlift(&["stability", "--params", "hop"]));
    assert!(!condition(&strong, "liap1"));

    let dir = tempfile::tempdir().unwrap();
    let params = write_params(
        dir.path(),
        "g0.json",
        r#"{"epsilon":0.5,"g":0,"I":0.7,"alpha":0.5,"beta":0.6,"gamma":0.8}"#,
    );
    let uncoupled = json(&gaitlift(&["stability", "--params", &params, "--global-bounds"]));
    for name in ["liap1", "floquet_bound", "liap2"] {
        assert!(condition(&uncoupled, name), "{name}");
    }
}

#[test]
fn sweep_labels_sign_corners() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let args = [
        "sweep",
        "--alpha=-0.5:0.5:2",
        "--beta=-0.6:0.6:2",
        "--gamma=-0.8:0.8:2",
        "--g",
        "1.8",
        "--epsilon",
        "0.67",
        "--I",
        "1.1",
    ];
    let out = gaitlift(&args);
    assert!(out.status.success());
    let mut with_file = args.to_vec();
    with_file.extend(["--out", path.to_str().unwrap()]);
    assert!(gaitlift(&with_file).status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);

    let label = |a: &str, b: &str, c: &str| {
        text.lines()
            .find(|l| l.starts_with(&format!("{a},{b},{c},")))
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .to_string()
    };
    assert_eq!(text.lines().count(), 9);
    assert_eq!(label("0.5", "0.6", "0.8"), "hop");
    assert_eq!(label("-0.5", "-0.6", "0.8"), "run");
    assert_eq!(label("-0.5", "0.6", "-0.8"), "jump");
    assert_eq!(label("0.5", "-0.6", "-0.8"), "walk");

    let rest = gaitlift(&[
        "sweep",
        "--alpha",
        "0",
        "--beta",
        "0",
        "--gamma",
        "0",
        "--g",
        "1.8",
        "--epsilon",
        "0.67",
        "--I",
        "1.1",
    ]);
    assert_eq!(
        String::from_utf8(rest.stdout).unwrap(),
        "alpha,beta,gamma,gait,period\n0,0,0,equilibrium,\n"
    );
}

#[test]
fn export_builtin() {
    let out = gaitlift(&["net", "export", "chain7"]);
    let doc = json(&out);
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["nodes"].as_array().unwrap().len(), 7);
}

#[test]
fn repro_gait_bounds() {
    let report = json(&gaitlift(&["repro", "gait-bounds"]));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let (c, r) = (&row["computed"], &row["reference"]);
        let (got, want) = (c[1].as_f64().unwrap(), r[1].as_f64().unwrap());
        assert!((got - want).abs() / want < 0.05, "{row}");
    }
}
