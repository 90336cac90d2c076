// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use qtrap_core::export::read_matrix_binary;
use qtrap_core::runner::{
    export_matrices, parse_config, run_scenario, sweep, verify, ParseMode, ScenarioConfig,
    SweepAxis,
};
use qtrap_core::{CouplingRoute, Error, ErrorCategory};

fn cfg(doc: &str, out: &Path) -> ScenarioConfig {
    let mut c = parse_config(doc, ParseMode::Strict).unwrap();
    c.out_dir = out.to_path_buf();
    c
}

fn inversion_rows(dir: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(dir.join("inversion.csv"))
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| {
            let (t, w) = l.split_once(',').unwrap();
            (t.parse().unwrap(), w.parse().unwrap())
        })
        .collect()
}

#[test]
fn canonical_run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let c = cfg("time.t_max = 5\ntime.points = 101", tmp.path());
    let report = run_scenario(&c).unwrap();
    let d = &report.diagnostics;
    assert!((d.eff_f2 - 1.0004).abs() <= 2e-4);
    assert!((d.eps_q - 0.05001).abs() <= 1e-5);
    assert!(d.tail_mass < 1e-10);
    assert!(d.checks.iter().all(|c| c.passed));
    for f in [
        "manifest.json",
        "diagnostics.json",
        "inversion.csv",
        "qgrid_000.csv",
        "qgrid_001.csv",
    ] {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
    let rows = inversion_rows(tmp.path());
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0].0, 0.0);
    assert!((rows[0].1 + 1.0).abs() < 1e-15);
    assert!(rows.iter().all(|(_, w)| w.abs() <= 1.0 + 1e-9));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["route"], "q_closed");
    assert_eq!(manifest["config"]["tau"], 0.003);
    assert_eq!(manifest["hamiltonian_sha256"].as_str().unwrap().len(), 64);
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("diagnostics.json")).unwrap())
            .unwrap();
    assert_eq!(diag["eff_f2"].as_f64().unwrap(), d.eff_f2);
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let a = cfg("epsilon = 0.1\ntime.t_max = 3\ntime.points = 31\nqgrid.re_points = 41\nqgrid.im_points = 41", &tmp.path().join("a"));
    run_scenario(&a).unwrap();
    // rebuild the config from the manifest alone
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let mut doc = String::new();
    for (k, v) in manifest["config"].as_object().unwrap() {
        if k != "output.dir" {
            doc.push_str(&format!("{k} = {v}\n"));
        }
    }
    let b = cfg(&doc, &tmp.path().join("b"));
    run_scenario(&b).unwrap();
    for f in [
        "inversion.csv",
        "qgrid_000.csv",
        "qgrid_001.csv",
        "diagnostics.json",
    ] {
        assert_eq!(
            fs::read(a.out_dir.join(f)).unwrap(),
            fs::read(b.out_dir.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn zero_duration_is_a_single_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let c = cfg("time.t_max = 0", tmp.path());
    run_scenario(&c).unwrap();
    let rows = inversion_rows(tmp.path());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].0, 0.0);
    assert!((rows[0].1 + 1.0).abs() < 1e-15);
    assert!(tmp.path().join("qgrid_000.csv").is_file());
    assert!(!tmp.path().join("qgrid_001.csv").exists());
}

#[test]
fn harmonic_routes_agree_on_inversion() {
    let tmp = tempfile::tempdir().unwrap();
    let mut base = None;
    for route in CouplingRoute::ALL {
        let dir = tmp.path().join(route.name());
        let c = cfg(&format!("q = 1\ncoupling.route = \"{route}\"\ntime.t_max = 20\ntime.points = 401\nqgrid.snapshots = [0]"), &dir);
        run_scenario(&c).unwrap();
        let rows = inversion_rows(&dir);
        match &base {
            None => base = Some(rows),
            Some(b) => {
                let d = rows
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x.1 - y.1).abs())
                    .fold(0.0, f64::max);
                assert!(d <= 1e-8, "{route}: {d}");
            }
        }
    }
}

#[test]
fn numerical_failure_still_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let c = cfg(
        "time.t_max = 1\ntime.points = 3\nqgrid.re_min = -1\nqgrid.re_max = 1",
        tmp.path(),
    );
    let e = run_scenario(&c).unwrap_err();
    assert_eq!(e.category(), ErrorCategory::Numerical);
    assert_eq!(e.category().exit_code(), 3);
    assert!(tmp.path().join("inversion.csv").is_file());
}

#[test]
fn config_and_io_error_categories() {
    let e = parse_config("epsilon = -0.1", ParseMode::Strict).unwrap_err();
    assert_eq!(e.category().exit_code(), 2);
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let c = cfg(
        "time.t_max = 0\nqgrid.re_points = 21\nqgrid.im_points = 21",
        &blocker.join("sub"),
    );
    let e = run_scenario(&c).unwrap_err();
    assert!(matches!(e, Error::Io(_)));
    assert_eq!(e.category().exit_code(), 4);
    let e = parse_config("route_typo = 1", ParseMode::Strict).unwrap_err();
    assert_eq!(e.category().exit_code(), 2);
}

#[test]
fn tau_sweep_composes_prior_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = "time.t_max = 4\ntime.points = 81\nqgrid.re_points = 61\nqgrid.im_points = 61";
    let base = cfg(doc, tmp.path());
    let report = sweep(
        &base,
        SweepAxis::Tau,
        &[0.0, 0.003],
        &tmp.path().join("sweep"),
    )
    .unwrap();
    assert_eq!(report.failures().count(), 0);

    let harmonic = cfg(&format!("{doc}\nq = 1"), &tmp.path().join("harmonic"));
    run_scenario(&harmonic).unwrap();
    let canonical = cfg(doc, &tmp.path().join("canonical"));
    run_scenario(&canonical).unwrap();
    for (run, single) in [(0, &harmonic), (1, &canonical)] {
        let dir = tmp.path().join("sweep").join(format!("run_{run:03}"));
        assert_eq!(
            fs::read(dir.join("inversion.csv")).unwrap(),
            fs::read(single.out_dir.join("inversion.csv")).unwrap()
        );
    }
    let summary = fs::read_to_string(&report.summary).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[1], "index,value,eff_f2,eps_q,final_w,status");
    assert_eq!(lines.len(), 4);
    assert!(tmp.path().join("sweep/sweep.json").is_file());
}

#[test]
fn q_sweep_is_monotone_and_isolates_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let base = cfg("time.t_max = 1\ntime.points = 11\nqgrid.snapshots = [0]\nqgrid.re_points = 41\nqgrid.im_points = 41", tmp.path());
    let values = [1.0, 0.003_f64.exp(), 1.05, -1.0];
    let report = sweep(&base, SweepAxis::Q, &values, tmp.path()).unwrap();
    let f2: Vec<f64> = report.runs[..3]
        .iter()
        .map(|r| r.diagnostics.as_ref().unwrap().eff_f2)
        .collect();
    assert!(f2[0] < f2[1] && f2[1] < f2[2], "{f2:?}");
    assert_eq!(report.runs[3].exit_code, 2);
    assert_eq!(report.failures().count(), 1);
    let summary = fs::read_to_string(&report.summary).unwrap();
    assert!(summary.lines().last().unwrap().contains("config"));

    let e = sweep(&base, SweepAxis::Epsilon, &[], tmp.path()).unwrap_err();
    assert_eq!(e.category(), ErrorCategory::Config);
    assert!("omega_bar".parse::<SweepAxis>().is_err());
}

#[test]
fn exported_matrices_read_back() {
    let tmp = tempfile::tempdir().unwrap();
    let c = cfg(
        "truncation.dim = 30\ninitial.motional = \"fock\"\ninitial.fock = 2",
        tmp.path(),
    );
    let files = export_matrices(&c, tmp.path()).unwrap();
    assert_eq!(files.len(), 6);
    let h = read_matrix_binary(fs::File::open(tmp.path().join("H.bin")).unwrap()).unwrap();
    assert_eq!(h.mat.shape(), (60, 60));
    assert_eq!(h.route, "q_closed");
    let f = read_matrix_binary(fs::File::open(tmp.path().join("F.bin")).unwrap()).unwrap();
    assert_eq!(f.route, "harmonic_closed");
    let fq = read_matrix_binary(fs::File::open(tmp.path().join("Fq.bin")).unwrap()).unwrap();
    assert_eq!(
        fq.mat,
        h.mat.view((30, 0), (30, 30)) * num_complex::Complex64::new(2.0, 0.0)
    );
    let dump: qtrap_core::export::TripletDump =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("H.json")).unwrap()).unwrap();
    assert_eq!(dump.to_matrix().unwrap(), h.mat);
}

#[test]
fn canonical_verify_passes() {
    let c = ScenarioConfig::default();
    let report = verify(&c).unwrap();
    assert!(report.passed(), "{}", report.table());
    assert_eq!(report.route_diff.len(), 5);
    let tmp = tempfile::tempdir().unwrap();
    report.write(tmp.path()).unwrap();
    assert!(tmp.path().join("route_diff.csv").is_file());
}
