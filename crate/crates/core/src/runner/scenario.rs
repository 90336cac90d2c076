// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::coupling::effective_lamb_dicke;
use crate::dynamics::{
    energy, evolve, spectral_propagator, uniform_times, Propagator, Trajectory, HERMITICITY_TOL,
    RECONSTRUCTION_TOL,
};
use crate::error::{Error, Result};
use crate::export::{write_inversion_csv, write_qgrid_csv, write_qgrid_triplets};
use crate::hamiltonian::{build_hq_with, JointHamiltonian};
use crate::observables::{
    husimi_q, mean_quanta_state, population_inversion, reduced_motional_density, InversionSeries,
};
use crate::qstates::{
    expectation_f2, fock_state, joint_state, q_coherent_state, JointState, MotionalState,
};

use super::config::{MotionalSpec, ScenarioConfig};

pub const NORM_DRIFT_TOL: f64 = 1e-9;
pub const ENERGY_DRIFT_TOL: f64 = 1e-9;
pub const INVERSION_BOUND_TOL: f64 = 1e-9;
pub const HUSIMI_NEGATIVITY_TOL: f64 = 1e-12;

pub const MANIFEST_FORMAT: &str = "qtrap-manifest/1";
pub const DIAGNOSTICS_FORMAT: &str = "qtrap-diagnostics/1";

/// Initial state, Hamiltonian and propagator for a configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub motional: MotionalState,
    pub psi0: JointState,
    pub hamiltonian: JointHamiltonian,
    pub propagator: Propagator,
}

pub fn initial_motional(cfg: &ScenarioConfig) -> Result<MotionalState> {
    match cfg.motional {
        MotionalSpec::QCoherent => {
            q_coherent_state(cfg.alpha, cfg.params.q(), cfg.dim, cfg.tail_tol)
        }
        MotionalSpec::Fock(n) => fock_state(n, cfg.dim),
    }
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    let motional = initial_motional(cfg)?;
    let psi0 = joint_state(cfg.internal, &motional);
    let hamiltonian = build_hq_with(
        cfg.params,
        cfg.dim,
        cfg.route,
        cfg.pad,
        cfg.series,
        Some(&motional),
    )?;
    let propagator = spectral_propagator(&hamiltonian)?;
    Ok(Prepared {
        motional,
        psi0,
        hamiltonian,
        propagator,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotDiagnostics {
    pub t: f64,
    pub file: String,
    pub integral: f64,
    pub peak_re: f64,
    pub peak_im: f64,
    pub peak_value: f64,
    pub min_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub format: &'static str,
    pub eff_f2: f64,
    pub eps_q: f64,
    pub tail_mass: f64,
    pub mean_quanta: f64,
    pub final_w: f64,
    pub hermiticity_residual: f64,
    pub reconstruction_residual: f64,
    pub orthonormality_residual: f64,
    pub max_norm_drift: f64,
    pub max_energy_drift: f64,
    pub snapshots: Vec<SnapshotDiagnostics>,
    pub checks: Vec<Check>,
}

impl Diagnostics {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Largest `|<H>(t) - <H>(0)| / max(|<H>(0)|, 1)` along a trajectory.
pub fn energy_drift(h: &JointHamiltonian, traj: &Trajectory) -> f64 {
    let Some(first) = traj.states.first() else {
        return 0.0;
    };
    let e0 = energy(&h.mat, &first.amps);
    let scale = e0.abs().max(1.0);
    traj.states
        .iter()
        .map(|s| (energy(&h.mat, &s.amps) - e0).abs() / scale)
        .fold(0.0, f64::max)
}

/// In-memory result of a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub prepared: Prepared,
    pub trajectory: Trajectory,
    pub inversion: InversionSeries,
    pub diagnostics: Diagnostics,
}

/// Evolve the configured scenario without touching the disk.
pub fn simulate(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let prepared = prepare(cfg)?;
    let times = uniform_times(cfg.time.t_max, cfg.time.points)?;
    let trajectory = evolve(&prepared.propagator, &prepared.psi0, &times)?;
    let inversion = population_inversion(&trajectory)?;

    let q = cfg.params.q();
    let eff_f2 = expectation_f2(&prepared.motional, q)?;
    let eps_q = effective_lamb_dicke(cfg.params.epsilon, &prepared.motional, q)?;
    let tail_mass = prepared.motional.tail_mass();
    let h_norm = prepared.propagator.eigenvalues.amax();
    let hermiticity = prepared.hamiltonian.hermiticity_residual();
    let reconstruction = prepared.propagator.reconstruction_residual;
    let orthonormality = prepared.propagator.orthonormality_residual();
    let norm_drift = trajectory.max_norm_drift();
    let energy = energy_drift(&prepared.hamiltonian, &trajectory);
    let w_excess = inversion
        .w
        .iter()
        .map(|w| w.abs() - 1.0)
        .fold(0.0, f64::max);

    let checks = vec![
        Check::at_most("hermiticity", hermiticity, HERMITICITY_TOL),
        Check::at_most(
            "reconstruction",
            reconstruction,
            RECONSTRUCTION_TOL * h_norm,
        ),
        Check::at_most("eigenvector orthonormality", orthonormality, 1e-9),
        Check::at_most("norm drift", norm_drift, NORM_DRIFT_TOL),
        Check::at_most("energy drift", energy, ENERGY_DRIFT_TOL),
        Check::at_most("inversion bound", w_excess, INVERSION_BOUND_TOL),
    ];
    let diagnostics = Diagnostics {
        format: DIAGNOSTICS_FORMAT,
        eff_f2,
        eps_q,
        tail_mass,
        mean_quanta: mean_quanta_state(&prepared.motional),
        final_w: *inversion.w.last().expect("nonempty trajectory"),
        hermiticity_residual: hermiticity,
        reconstruction_residual: reconstruction,
        orthonormality_residual: orthonormality,
        max_norm_drift: norm_drift,
        max_energy_drift: energy,
        snapshots: Vec::new(),
        checks,
    };
    Ok(ScenarioResult {
        prepared,
        trajectory,
        inversion,
        diagnostics,
    })
}

/// Attach the path to an I/O error.
pub(crate) fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    }
}

pub(crate) fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(io_at(path))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_at(path))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_at(dir))
}

fn state_json(m: &MotionalState) -> serde_json::Value {
    serde_json::to_value(&m.meta).unwrap_or(serde_json::Value::Null)
}

/// Artifacts of a finished run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub diagnostics: Diagnostics,
}

/// Run a scenario and write manifest, inversion, Q-grid snapshots and
/// diagnostics into `cfg.out_dir`. A failed numerical check still writes
/// every artifact and is then returned as [`Error::Numerical`].
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut result = simulate(cfg)?;
    let dir = &cfg.out_dir;
    create_dir(dir)?;
    let mut files = Vec::new();

    let path = dir.join("inversion.csv");
    write_inversion_csv(create(&path)?, &result.inversion)?;
    files.push(path);

    let snap = evolve(
        &result.prepared.propagator,
        &result.prepared.psi0,
        &cfg.snapshots,
    )?;
    for (k, (t, state)) in snap.times.iter().zip(&snap.states).enumerate() {
        let rho = reduced_motional_density(state);
        let grid = husimi_q(&rho, &cfg.qgrid)?;
        let name = format!("qgrid_{k:03}.csv");
        let path = dir.join(&name);
        write_qgrid_csv(create(&path)?, &grid)?;
        files.push(path);
        if cfg.triplets {
            let path = dir.join(format!("qgrid_{k:03}_triplets.csv"));
            write_qgrid_triplets(create(&path)?, &grid)?;
            files.push(path);
        }
        let (peak_re, peak_im, peak_value) = grid.peak();
        let min_value = grid.min_value();
        result.diagnostics.checks.push(Check::at_most(
            format!("husimi positivity t={t}"),
            -min_value,
            HUSIMI_NEGATIVITY_TOL,
        ));
        result.diagnostics.snapshots.push(SnapshotDiagnostics {
            t: *t,
            file: name,
            integral: grid.integral(),
            peak_re,
            peak_im,
            peak_value,
            min_value,
        });
    }

    let path = dir.join("diagnostics.json");
    write_json(&path, &result.diagnostics)?;
    files.push(path);

    let manifest = json!({
        "format": MANIFEST_FORMAT,
        "qtrap_version": env!("CARGO_PKG_VERSION"),
        "config": cfg.to_json(),
        "derived": {
            "q": cfg.params.q(),
            "tau": cfg.params.tau(),
            "joint_dim": cfg.dim.joint(),
            "initial_state": state_json(&result.prepared.motional),
        },
        "route": cfg.route.name(),
        "hamiltonian_sha256": result.prepared.propagator.fingerprint,
        "outputs": {
            "inversion.csv": "qtrap-inversion/1",
            "qgrid_NNN.csv": "qtrap-qgrid-matrix/1",
            "qgrid_NNN_triplets.csv": "qtrap-qgrid-triplets/1",
            "diagnostics.json": DIAGNOSTICS_FORMAT,
        },
    });
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    files.push(path);

    if let Some(c) = result.diagnostics.first_failure() {
        return Err(Error::Numerical {
            check: c.name.clone(),
            value: c.value,
            limit: c.limit,
        });
    }
    Ok(RunReport {
        out_dir: dir.clone(),
        files,
        diagnostics: result.diagnostics,
    })
}
