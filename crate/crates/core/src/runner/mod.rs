// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Configuration, scenario runs, sweeps, the invariant table and matrix
//! export.

mod config;
mod scenario;
mod sweep;
mod verify;

use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde_json::json;

pub use config::{
    parse_config, MotionalSpec, ParseMode, ScenarioConfig, TimeSpec, Q_TAU_CONSISTENCY_TOL,
};
pub use scenario::{
    energy_drift, initial_motional, prepare, run_scenario, simulate, Check, Diagnostics, Prepared,
    RunReport, ScenarioResult, SnapshotDiagnostics, DIAGNOSTICS_FORMAT, ENERGY_DRIFT_TOL,
    HUSIMI_NEGATIVITY_TOL, INVERSION_BOUND_TOL, MANIFEST_FORMAT, NORM_DRIFT_TOL,
};
pub use sweep::{sweep, SweepAxis, SweepReport, SweepRun, SWEEP_FORMAT};
pub use verify::{route_diff, verify, RouteDiff, VerifyReport, RK4_DT, RK4_WINDOW};

use crate::coupling::{f_harmonic, CMatrix};
use crate::error::Result;
use crate::export::{write_matrix_binary, TripletDump};

fn dump(
    dir: &Path,
    stem: &str,
    m: &CMatrix,
    route: &str,
    params: &[(&str, f64)],
) -> Result<Vec<PathBuf>> {
    let json_params = serde_json::Value::Object(
        params
            .iter()
            .map(|(k, v)| ((*k).to_owned(), json!(v)))
            .collect(),
    );
    let path_json = dir.join(format!("{stem}.json"));
    scenario::write_json(
        &path_json,
        &TripletDump::from_matrix(m, Some(route), json_params),
    )?;
    let path_bin = dir.join(format!("{stem}.bin"));
    write_matrix_binary(
        BufWriter::new(scenario::create(&path_bin)?),
        m,
        route,
        params,
    )?;
    Ok(vec![path_json, path_bin])
}

/// Write the harmonic coupling `F`, the configured coupling `F_q` and the
/// joint Hamiltonian `H` as JSON triplets and binary dumps into `dir`.
pub fn export_matrices(cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    scenario::create_dir(dir)?;
    let prepared = prepare(cfg)?;
    let p = cfg.params;
    let params = [
        ("q", p.q()),
        ("tau", p.tau()),
        ("epsilon", p.epsilon),
        ("omega_bar", p.omega_bar),
        ("delta_bar", p.delta_bar),
        ("dim", cfg.dim.get() as f64),
        ("pad", cfg.pad as f64),
    ];
    let route = cfg.route.name();
    let f = f_harmonic(p.epsilon, cfg.dim)?;
    let mut files = dump(dir, "F", &f.mat, f.route.name(), &params)?;
    files.extend(dump(
        dir,
        "Fq",
        &prepared.hamiltonian.coupling.mat,
        route,
        &params,
    )?);
    files.extend(dump(dir, "H", &prepared.hamiltonian.mat, route, &params)?);
    Ok(files)
}
