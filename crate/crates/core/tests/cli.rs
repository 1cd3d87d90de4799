//! End-to-end tests of the `abc-gbi` binary and the subprocess simulator
//! protocol.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Duration;

use abc_gbi::cli::{named_discrepancy, ExternalProtocol, ExternalSimulator};
use abc_gbi::{Dataset, ParameterBox, ParameterPoint};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abc-gbi"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

const ECHO_SIM: &str = r#"
import sys, json
req = json.loads(sys.stdin.readline())
print(json.dumps({"data": req["theta"]}))
"#;

const SEEDED_NOISE_SIM: &str = r#"
import sys, json, random
req = json.loads(sys.stdin.readline())
rng = random.Random(req["seed"])
print(json.dumps({"data": [t + rng.gauss(0, 0.05) for t in req["theta"]]}))
"#;

const NONDETERMINISTIC_SIM: &str = r#"
import sys, json, os
req = json.loads(sys.stdin.readline())
noise = int.from_bytes(os.urandom(4), "little") / 2**32
print(json.dumps({"data": [t + noise for t in req["theta"]]}))
"#;

const FAILING_SIM: &str = r#"
import sys
print("simulator blew up", file=sys.stderr)
sys.exit(1)
"#;

fn python_sim(script: &str, timeout_s: f64) -> ExternalSimulator {
    ExternalSimulator::new(
        vec!["python3".into(), "-c".into(), script.into()],
        ExternalProtocol::Stdin,
        Duration::from_secs_f64(timeout_s),
    )
    .unwrap()
}

#[test]
fn fig1_config_produces_six_posteriors_and_distances() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig1");
    let status = bin()
        .args(["run"])
        .arg(configs_dir().join("example1_fig1.json"))
        .arg("--output-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let artifacts = manifest["artifacts"].as_array().unwrap();
    let posteriors: Vec<&str> = artifacts
        .iter()
        .filter(|a| a["kind"] == "posterior")
        .map(|a| a["file"].as_str().unwrap())
        .collect();
    assert_eq!(posteriors.len(), 6, "expected six posterior grids");
    // manifest completeness both ways
    for artifact in artifacts {
        assert!(out.join(artifact["file"].as_str().unwrap()).exists());
    }
    let listed: std::collections::HashSet<String> = artifacts
        .iter()
        .map(|a| a["file"].as_str().unwrap().to_string())
        .collect();
    for entry in std::fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().to_string();
        if name != "manifest.json" {
            assert!(listed.contains(&name), "unlisted artifact {name}");
        }
    }

    // distances.csv covers all 15 pairs
    let distances = std::fs::read_to_string(out.join("distances.csv")).unwrap();
    assert_eq!(distances.lines().count(), 16);
    assert!(distances.lines().next().unwrap() == "a,b,tv,hellinger");

    // posterior CSV header contract
    let posterior = std::fs::read_to_string(out.join("cf_exponential_posterior.csv")).unwrap();
    assert!(posterior.starts_with("theta_1,log_unnormalized,density\n"));

    // report: 6x6 TV matrix with zero diagonal, --json round-trips
    let output = bin().args(["report"]).arg(&out).arg("--json").output().unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let tv = report["tv_matrix"].as_array().unwrap();
    assert_eq!(tv.len(), 6);
    for (i, row) in tv.iter().enumerate() {
        let row = row.as_array().unwrap();
        assert_eq!(row.len(), 6);
        assert_eq!(row[i].as_f64().unwrap(), 0.0);
    }
    // rejection ABC and the Monte Carlo ABC grid agree closely
    let names: Vec<&str> = report["compared"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let i = names.iter().position(|n| *n == "rejection_abc").unwrap();
    let j = names.iter().position(|n| *n == "abc_uniform_mc").unwrap();
    assert!(tv[i][j].as_f64().unwrap() < 0.05);

    let text = bin().args(["report"]).arg(&out).output().unwrap();
    assert!(text.status.success());
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("pairwise total variation"));
    assert!(text.contains("rejection_abc"));
}

#[test]
fn calibrate_verb_reproduces_reported_arithmetic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cal");
    let output = bin()
        .args(["calibrate"])
        .arg(configs_dir().join("calibration_daycare_arith.json"))
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("w = 1/h"), "{stdout}");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("calibration.json")).unwrap())
            .unwrap();
    let w = report["w"].as_f64().unwrap();
    assert!((13.0..=16.0).contains(&w), "w = {w}");
    assert!((report["delta0"].as_f64().unwrap() - 0.8844).abs() < 1e-10);
}

#[test]
fn calibration_gate_violation_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("cal.json");
    std::fs::write(
        &config,
        r#"{
            "seed": 1, "output_dir": "unused",
            "calibrate": {"epsilon": 1.0, "m_star": 1.1, "sd_star": 0.11,
                          "assert_w": [100.0, 200.0]}
        }"#,
    )
    .unwrap();
    let output = bin()
        .args(["calibrate"])
        .arg(&config)
        .arg("--output-dir")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("calibration gate"), "{stderr}");
}

#[test]
fn unknown_weight_family_exits_2_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{
            "seed": 3, "output_dir": "unused",
            "model": {"builtin": "example1"},
            "grid": {"lower": [0.0], "upper": [10.0], "resolution": [11]},
            "method": "grid",
            "loss": {"kind": "abc_mc", "n_sim": 5},
            "weight": {"family": "triangle", "h": 0.2}
        }"#,
    )
    .unwrap();
    let output = bin()
        .args(["run"])
        .arg(&config)
        .arg("--output-dir")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("weight.family"), "{stderr}");
    assert!(stderr.contains("triangle"), "{stderr}");
}

#[test]
fn report_on_missing_dir_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["report"])
        .arg(tmp.path().join("does_not_exist"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn match_kernel_verb() {
    let output = bin()
        .args(["match-kernel", "--epsilon", "2.0"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("h/epsilon ratio = 0.59"), "{stdout}");

    let json_out = bin()
        .args(["match-kernel", "--epsilon", "2.0", "--json"])
        .output()
        .unwrap();
    let value: serde_json::Value = serde_json::from_slice(&json_out.stdout).unwrap();
    let ratio = value["ratio_a"].as_f64().unwrap();
    assert!((0.585..0.595).contains(&ratio));
    assert!((value["h"].as_f64().unwrap() - 2.0 * ratio).abs() < 1e-12);
}

#[test]
fn external_echo_simulator_round_trips_theta() {
    let sim = python_sim(ECHO_SIM, 30.0);
    let theta = ParameterPoint(vec![1.5, -2.25]);
    let data = sim.run(&theta, 42).unwrap();
    assert_eq!(data.values(), &[1.5, -2.25]);
}

#[test]
fn external_simulator_failure_carries_stderr() {
    let sim = python_sim(FAILING_SIM, 30.0);
    let err = sim.run(&ParameterPoint::scalar(1.0), 1).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("simulator blew up"), "{msg}");
}

#[test]
fn external_simulator_determinism_contract() {
    let sim = python_sim(SEEDED_NOISE_SIM, 30.0);
    let theta = ParameterPoint::scalar(2.0);
    let a = sim.run(&theta, 7).unwrap();
    let b = sim.run(&theta, 7).unwrap();
    assert_eq!(a, b);
    let c = sim.run(&theta, 8).unwrap();
    assert_ne!(a, c);
}

#[test]
fn external_simulator_timeout() {
    let sim = ExternalSimulator::new(
        vec![
            "python3".into(),
            "-c".into(),
            "import time; time.sleep(60)".into(),
        ],
        ExternalProtocol::Stdin,
        Duration::from_secs_f64(0.5),
    )
    .unwrap();
    let err = sim.run(&ParameterPoint::scalar(0.0), 0).unwrap_err();
    assert!(err.to_string().contains("timed out"), "{err}");
}

#[test]
fn external_arg_protocol() {
    let script = r#"
import sys, json
req = json.loads(sys.argv[1])
print(json.dumps({"data": [sum(req["theta"])]}))
"#;
    let sim = ExternalSimulator::new(
        vec!["python3".into(), "-c".into(), script.into()],
        ExternalProtocol::Arg,
        Duration::from_secs(30),
    )
    .unwrap();
    let data = sim.run(&ParameterPoint(vec![1.0, 2.5]), 0).unwrap();
    assert_eq!(data.values(), &[3.5]);
}

#[test]
fn external_model_drives_rejection_through_the_runner() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("external.json");
    let script = ECHO_SIM.replace('\n', "\\n").replace('"', "\\\"");
    std::fs::write(
        &config,
        format!(
            r#"{{
                "seed": 9, "output_dir": "unused",
                "model": {{"external": {{
                    "command": ["python3", "-c", "{script}"],
                    "observed": [2.0],
                    "prior": {{"lower": [0.0], "upper": [10.0]}},
                    "discrepancy": "abs",
                    "timeout_s": 30.0
                }}}},
                "grid": {{"lower": [0.0], "upper": [10.0], "resolution": [20], "layout": "cells"}},
                "method": "rejection",
                "weight": {{"family": "uniform-onesided", "h": 0.5}},
                "sampler": {{"n_prior_draws": 400}}
            }}"#
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let output = bin()
        .args(["run"])
        .arg(&config)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    // the echo model is deterministic: accepted draws live in [1.5, 2.5]
    let chain = std::fs::read_to_string(out.join("run_chain.csv")).unwrap();
    for line in chain.lines().skip(1) {
        let theta: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((1.5..=2.5).contains(&theta), "accepted {theta}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn nondeterministic_external_simulator_warns_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("nondet.json");
    let script = NONDETERMINISTIC_SIM.replace('\n', "\\n").replace('"', "\\\"");
    std::fs::write(
        &config,
        format!(
            r#"{{
                "seed": 9, "output_dir": "unused",
                "model": {{"external": {{
                    "command": ["python3", "-c", "{script}"],
                    "observed": [2.0],
                    "prior": {{"lower": [0.0], "upper": [10.0]}},
                    "discrepancy": "abs",
                    "timeout_s": 30.0
                }}}},
                "method": "rejection",
                "weight": {{"family": "uniform-onesided", "h": 5.0}},
                "sampler": {{"n_prior_draws": 50}}
            }}"#
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let output = bin()
        .args(["run"])
        .arg(&config)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let warnings = manifest["warnings"].as_array().unwrap();
    assert!(
        warnings
            .iter()
            .any(|w| w.as_str().unwrap().contains("determinism")),
        "{warnings:?}"
    );
}

#[test]
fn failing_external_simulator_surfaces_simulation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("fail.json");
    let script = FAILING_SIM.replace('\n', "\\n").replace('"', "\\\"");
    std::fs::write(
        &config,
        format!(
            r#"{{
                "seed": 9, "output_dir": "unused",
                "model": {{"external": {{
                    "command": ["python3", "-c", "{script}"],
                    "observed": [2.0],
                    "prior": {{"lower": [0.0], "upper": [10.0]}},
                    "discrepancy": "abs",
                    "timeout_s": 30.0
                }}}},
                "method": "rejection",
                "weight": {{"family": "uniform-onesided", "h": 0.5}},
                "sampler": {{"n_prior_draws": 10}}
            }}"#
        ),
    )
    .unwrap();
    let output = bin()
        .args(["run"])
        .arg(&config)
        .arg("--output-dir")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("simulator"), "{stderr}");
}

#[test]
fn library_level_external_model_wrapper() {
    let sim = python_sim(SEEDED_NOISE_SIM, 30.0);
    let (model, _errors) = abc_gbi::cli::external_model(
        sim,
        Dataset::scalar(2.0),
        ParameterBox::new(vec![0.0], vec![4.0]).unwrap(),
        named_discrepancy("abs").unwrap(),
    );
    let theta = ParameterPoint::scalar(2.0);
    let mut rng = abc_gbi::RngStream::from_seed(5).rng();
    let d = model.draw_discrepancy(&theta, &mut rng).unwrap();
    assert!(d >= 0.0 && d < 1.0, "discrepancy {d}");
    // same stream, same subprocess seeds, identical results
    let mut rng2 = abc_gbi::RngStream::from_seed(5).rng();
    let d2 = model.draw_discrepancy(&theta, &mut rng2).unwrap();
    assert_eq!(d, d2);
}

#[test]
fn discrepancy_names() {
    let euclid = named_discrepancy("euclidean").unwrap();
    let a = Dataset(vec![0.0, 3.0]);
    let b = Dataset(vec![4.0, 0.0]);
    assert_eq!(euclid(&a, &b), 5.0);
    let manhattan = named_discrepancy("manhattan").unwrap();
    assert_eq!(manhattan(&a, &b), 7.0);
    assert!(named_discrepancy("cosine").is_err());
    let _unused = Arc::strong_count(&euclid);
}
