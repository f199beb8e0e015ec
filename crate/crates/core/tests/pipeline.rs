mod common;

use std::fs;

use autoqec::lindblad::{integrate, SimulationConfig};
use autoqec::linalg::{RealMatrix, MAX_QUBITS};
use autoqec::noise::NoiseModel;
use autoqec::scenario::{self, load_config, preset, run, to_json, RunOptions, Scenario, Sweep, PRESET_NAMES};
use autoqec::Error;
use common::*;

const SMALL: &str = r#"{
    "name": "small-dephasing",
    "n_qubits": 3,
    "hamiltonian": "sum-z",
    "noise": "local-dephasing",
    "code": {"explicit": {
        "mu0": [{"state": "+++"}, {"state": "---"}],
        "mu1": [{"state": "+++"}, {"state": "---", "re": -1}]
    }},
    "c": 1,
    "w": 1.0,
    "kappa": 0.1,
    "R": [20, 40],
    "T": 1.0,
    "samples": 5
}"#;

fn small() -> Scenario {
    scenario::parse_config(SMALL).unwrap()
}

#[test]
fn config_file_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    fs::write(&path, SMALL).unwrap();
    let s = load_config(&path).unwrap();
    assert_eq!(s, small());
    fs::write(&path, to_json(&s).unwrap()).unwrap();
    assert_eq!(load_config(&path).unwrap(), s);
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_config(&dir.path().join("absent.json")), Err(Error::Io(_))));
}

#[test]
fn run_writes_the_output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        scaling: false,
        out: Some(dir.path().to_path_buf()),
        ..RunOptions::full()
    };
    let s = small();
    let result = run(&s, &opts).unwrap();
    let base = dir.path().join(&s.name);
    for f in ["report.json", "curves.csv", "curves/R20-c1.csv", "curves/R40-c1.csv", "curves/noqec.csv"] {
        assert!(base.join(f).is_file(), "missing {f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(base.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], "autoqec/1");
    let echoed = scenario::parse_config(&report["scenario"].to_string()).unwrap();
    assert_eq!(echoed, s);
    assert_eq!(report["curves"].as_array().unwrap().len(), 3);

    let csv = fs::read_to_string(base.join("curves.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("label,t,qfi,qfi_projected,qfi_ideal,qfi_noqec"));
    assert_eq!(lines.count(), 3 * (s.samples + 1));
    assert_eq!(
        fs::read_to_string(base.join("curves/R20-c1.csv")).unwrap(),
        result.curve_csv(result.curve(20.0, 1).unwrap())
    );
}

#[test]
fn scaling_json_is_written_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small();
    s.scaling = Some(scenario::ScalingSpec {
        r: vec![20.0, 40.0],
        c: 1,
        t: Some(0.5),
    });
    let opts = RunOptions {
        curves: false,
        projected: false,
        scaling: true,
        out: Some(dir.path().to_path_buf()),
    };
    let result = run(&s, &opts).unwrap();
    let sc = result.report.scaling.as_ref().unwrap();
    assert_eq!(sc.eps.len(), 2);
    assert!(sc.eps.iter().all(|&e| e > 0.0));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(&s.name).join("scaling.json")).unwrap()).unwrap();
    assert_eq!(v["schema_version"], "autoqec/1");
    assert_eq!(v["R"].as_array().unwrap().len(), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let opts = RunOptions {
        scaling: false,
        ..RunOptions::full()
    };
    let s = small();
    let a = run(&s, &opts).unwrap();
    let b = run(&s, &opts).unwrap();
    assert_eq!(a.curves_csv(), b.curves_csv());
}

#[test]
fn noiseless_run_matches_the_variance_formula() {
    let mut s = small();
    s.kappa = 0.0;
    s.r = Sweep::One(20.0);
    let result = run(&s, &RunOptions { curves: true, ..Default::default() }).unwrap();
    let psi = s.probe_state(&s.explicit_code(&s.hamiltonian_operator().unwrap()).unwrap().unwrap()).unwrap();
    let h = s.hamiltonian_operator().unwrap();
    for rec in result.curves.iter().chain(result.noqec.iter()) {
        for (&t, &f) in rec.curve.times.iter().zip(&rec.curve.qfi) {
            let expect = variance_qfi(&h, &psi, t);
            assert!((f - expect).abs() <= 1e-3 * expect.max(1.0), "t={t}: {f} vs {expect}");
        }
    }
}

#[test]
fn infeasible_search_halts_with_attempt_list() {
    let dir = tempfile::tempdir().unwrap();
    let s = preset("sm-s4a-infeasible").unwrap();
    let result = run(
        &s,
        &RunOptions {
            out: Some(dir.path().to_path_buf()),
            ..RunOptions::full()
        },
    )
    .unwrap();
    assert!(result.report.search_failed);
    assert!(result.curves.is_empty() && result.report.code.is_none());
    let search = result.report.search.as_ref().unwrap();
    assert!(!search.attempts.is_empty());
    assert!(search.attempts.iter().all(|a| !a.feasible));
    // every eigenvalue pair of ΣZ on 3 qubits is tried
    assert_eq!(search.attempts.len(), 6);
    assert!(dir.path().join(&s.name).join("report.json").is_file());
}

#[test]
fn preset_trajectories_stay_physical() {
    for name in PRESET_NAMES {
        let mut s = preset(name).unwrap();
        if s.n_qubits > 3 {
            s.t = 1.0;
        }
        let r = s.r_values()[0];
        let traj = if *name == "sm-s4a-infeasible" {
            // no code exists: natural noise only, from |+++⟩
            let p = parts(&s, r, 1);
            let mut cfg = SimulationConfig::new(s.w, s.kappa, r, s.t);
            cfg.record_every = 50;
            integrate(&p.rho0, &p.h, None, &p.model, &cfg).unwrap()
        } else {
            scenario::simulate(&s, r, Some(s.orders()[0]), 50).unwrap()
        };
        for d in &traj.diagnostics {
            assert!(d.trace_error < 1e-8, "{name}: trace error {}", d.trace_error);
            assert!(d.min_eigenvalue >= -1e-7, "{name}: min eigenvalue {}", d.min_eigenvalue);
        }
    }
}

#[test]
fn correlated_trajectories_do_not_depend_on_the_factor() {
    let s = preset("fig2-correlated-dephasing").unwrap();
    let p = parts(&s, 100.0, 1);
    let c = p.model.correlation().unwrap().clone();
    let symmetric = NoiseModel::correlated_dephasing(&c, s.kappa).unwrap();
    let mut cfg = SimulationConfig::new(s.w, s.kappa, 100.0, 1.0);
    cfg.record_every = 1000;
    let a = integrate(&p.rho0, &p.h, p.scheme.as_ref(), &p.model, &cfg).unwrap();
    let b = integrate(&p.rho0, &p.h, p.scheme.as_ref(), &symmetric, &cfg).unwrap();
    assert!(p.model.factor().unwrap().max_abs_diff(symmetric.factor().unwrap()) > 1e-3);
    assert!(a.final_state().max_abs_diff(b.final_state()) < 1e-8);
}

#[test]
fn invalid_inputs_are_rejected() {
    let mut s = small();
    s.n_qubits = MAX_QUBITS + 1;
    assert!(s.validate().is_err());
    let c = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(matches!(NoiseModel::<f64>::correlated_dephasing(&c, 0.1), Err(Error::NotPsd { .. })));
    let mut s = small();
    s.samples = 0;
    assert!(matches!(s.validate(), Err(Error::Config { .. })));
}
