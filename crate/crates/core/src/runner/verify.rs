// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! The invariant table behind `qtrap verify`.

use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::coupling::{
    f_harmonic, fq_closed, fq_dressed, fq_factored, max_abs_diff, max_modulus, reversed_ordering,
    CMatrix, CouplingRoute,
};
use crate::dynamics::{evolve, rk4_reference, uniform_times};
use crate::error::Result;
use crate::export::fmt_f64;
use crate::hamiltonian::trap_spectrum;
use crate::observables::{
    hermitian_eigenvalues, husimi_q, population_inversion, pure_density, reduced_motional_density,
    GridSpec,
};
use crate::qcore::{
    build_operators, ladder_identity_residual, Deformation, QParams, TruncationDim,
};
use crate::qstates::{fock_state, joint_state, Internal};

use super::config::{MotionalSpec, ScenarioConfig};
use super::scenario::{create, create_dir, energy_drift, io_at, prepare, write_json, Check};

/// RK4 step for the cross-oracle check.
pub const RK4_DT: f64 = 1e-4;
/// Longest window integrated by RK4.
pub const RK4_WINDOW: f64 = 10.0;

const COMPOSITION_PAIRS: [(f64, f64); 4] =
    [(0.37, 1.91), (5.3, 12.25), (17.0, 0.125), (24.6, 25.4)];

impl Check {
    /// Passes when `value > limit`.
    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value > limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteDiff {
    pub route: String,
    /// Largest `|w_route(t) - w_q_closed(t)|` on the time grid.
    pub max_inversion_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub route_diff: Vec<RouteDiff>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut s = format!(
            "{:<width$}  {:>12}  {:>12}  result\n",
            "check", "value", "limit"
        );
        for c in &self.checks {
            s.push_str(&format!(
                "{:<width$}  {:>12.3e}  {:>12.3e}  {}\n",
                c.name,
                c.value,
                c.limit,
                if c.passed { "PASS" } else { "FAIL" }
            ));
        }
        s
    }

    /// Write `verify.json` and `route_diff.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_json(&dir.join("verify.json"), self)?;
        let path = dir.join("route_diff.csv");
        let mut w = BufWriter::new(create(&path)?);
        let rows = |w: &mut BufWriter<_>| -> std::io::Result<()> {
            writeln!(w, "# qtrap-route-diff/1 reference=q_closed q=1")?;
            writeln!(w, "route,max_inversion_diff")?;
            for r in &self.route_diff {
                writeln!(w, "{},{}", r.route, fmt_f64(r.max_inversion_diff))?;
            }
            w.flush()
        };
        rows(&mut w).map_err(io_at(&path))
    }
}

fn dim(d: usize) -> TruncationDim {
    TruncationDim::new(d).expect("fixed dimensions are >= 2")
}

fn algebra_checks(cfg: &ScenarioConfig, out: &mut Vec<Check>) -> Result<()> {
    let q = cfg.params.q();
    let mut abs = 0.0_f64;
    for q in [1.0, 0.003_f64.exp()] {
        abs = abs.max(ladder_identity_residual(q, 100)?.0);
    }
    out.push(Check::at_most(
        "ladder identity, abs, q in {1, e^0.003}",
        abs,
        1e-13,
    ));
    let mut rel = 0.0_f64;
    for q in [0.95, 1.05, q] {
        rel = rel.max(ladder_identity_residual(q, 100)?.1);
    }
    out.push(Check::at_most("ladder identity, relative", rel, 1e-13));
    let mut comm = 0.0_f64;
    for q in [0.95, 1.0, 1.05, q] {
        comm = comm.max(build_operators(dim(60), q)?.q_commutation_residual());
    }
    out.push(Check::at_most("q-commutation, interior D=60", comm, 1e-12));
    Ok(())
}

fn coupling_checks(cfg: &ScenarioConfig, out: &mut Vec<Check>) -> Result<()> {
    let eps = cfg.params.epsilon;
    let q = cfg.params.q();
    let closed = fq_closed(eps, 1.0, dim(31))?;
    let lag = f_harmonic(eps, dim(31))?;
    out.push(Check::at_most(
        "closed form vs Laguerre, q=1",
        max_abs_diff(&closed.mat, &lag.mat, 31),
        1e-10,
    ));

    let closed = fq_closed(eps, q, dim(30))?;
    let factored = fq_factored(eps, q, dim(30), 20)?;
    let dressed = fq_dressed(eps, q, dim(30), 20)?;
    out.push(Check::at_most(
        "closed vs factored",
        max_abs_diff(&closed.mat, &factored.mat, 30),
        1e-8,
    ));
    out.push(Check::at_most(
        "dressed vs factored",
        max_abs_diff(&dressed.mat, &factored.mat, 30),
        1e-12,
    ));

    let fwd = fq_factored(0.1, 1.05, dim(30), 20)?;
    let rev = reversed_ordering(0.1, 1.05, dim(30), 20)?;
    out.push(Check::above(
        "ordering witness, q=1.05",
        max_abs_diff(&fwd.mat, &rev, 30),
        1e-12,
    ));
    let fwd = fq_factored(0.1, 1.0, dim(30), 20)?;
    let rev = reversed_ordering(0.1, 1.0, dim(30), 20)?;
    out.push(Check::at_most(
        "ordering witness, q=1",
        max_abs_diff(&fwd.mat, &rev, 30),
        1e-10,
    ));
    Ok(())
}

fn dynamics_checks(cfg: &ScenarioConfig, out: &mut Vec<Check>) -> Result<()> {
    let p = prepare(cfg)?;
    let h_norm = p.propagator.eigenvalues.amax();
    out.push(Check::at_most(
        "hermiticity",
        p.hamiltonian.hermiticity_residual(),
        1e-12,
    ));
    out.push(Check::at_most(
        "reconstruction / |H|",
        p.propagator.reconstruction_residual / h_norm,
        1e-9,
    ));

    let times = uniform_times(cfg.time.t_max, cfg.time.points)?;
    let traj = evolve(&p.propagator, &p.psi0, &times)?;
    out.push(Check::at_most("norm drift", traj.max_norm_drift(), 1e-9));
    out.push(Check::at_most(
        "energy drift, relative",
        energy_drift(&p.hamiltonian, &traj),
        1e-9,
    ));

    let mut comp = 0.0_f64;
    for (t1, t2) in COMPOSITION_PAIRS {
        let lhs = p.propagator.unitary(t1) * p.propagator.unitary(t2);
        comp = comp.max(max_modulus((lhs - p.propagator.unitary(t1 + t2)).iter()));
    }
    out.push(Check::at_most(
        "composition U(t1)U(t2) = U(t1+t2)",
        comp,
        1e-9,
    ));

    let last = traj.states.last().expect("nonempty");
    let rho = reduced_motional_density(last);
    let herm = max_modulus((&rho - rho.adjoint()).iter());
    out.push(Check::at_most(
        "rho_m trace",
        (rho.trace().re - 1.0).abs(),
        1e-12,
    ));
    out.push(Check::at_most("rho_m hermiticity", herm, 1e-12));
    out.push(Check::at_most(
        "rho_m negativity",
        -hermitian_eigenvalues(&rho).min(),
        1e-10,
    ));

    let window = cfg.time.t_max.min(RK4_WINDOW);
    let rk = rk4_reference(&p.hamiltonian, &p.psi0, window, RK4_DT, 1000)?;
    let sp = evolve(&p.propagator, &p.psi0, &rk.times)?;
    out.push(Check::at_most(
        "rk4 vs spectral",
        rk.max_state_deviation(&sp)?,
        1e-6,
    ));

    // epsilon = 0, delta = 0: bare Rabi flopping and a frozen motional state
    let bare = QParams::new(cfg.params.deformation, 0.0, cfg.params.omega_bar, 0.0)?;
    let rabi_cfg = ScenarioConfig {
        params: bare,
        internal: Internal::Ground,
        motional: MotionalSpec::Fock(0),
        ..cfg.clone()
    };
    let rp = prepare(&rabi_cfg)?;
    let times = uniform_times(20.0, 2001)?;
    let w = population_inversion(&evolve(&rp.propagator, &rp.psi0, &times)?)?;
    let rabi = w
        .times
        .iter()
        .zip(&w.w)
        .map(|(t, w)| (w + t.cos()).abs())
        .fold(0.0, f64::max);
    out.push(Check::at_most("Rabi w = -cos t, eps=0", rabi, 1e-8));

    let free_cfg = ScenarioConfig {
        params: QParams::new(
            cfg.params.deformation,
            0.0,
            cfg.params.omega_bar,
            cfg.params.delta_bar,
        )?,
        ..cfg.clone()
    };
    let fp = prepare(&free_cfg)?;
    let rho0 = pure_density(&fp.motional);
    let levels = trap_spectrum(cfg.params.q(), cfg.params.omega_bar, cfg.dim)?;
    let free = evolve(
        &fp.propagator,
        &fp.psi0,
        &uniform_times(cfg.time.t_max, 51)?,
    )?;
    let mut drift = 0.0_f64;
    for (t, s) in free.times.iter().zip(&free.states) {
        // undo the free trap rotation exp(-i E_n t)
        let phase = levels.map(|e| Complex64::from_polar(1.0, e * t));
        let rho = reduced_motional_density(s);
        let rotated = CMatrix::from_fn(rho.nrows(), rho.ncols(), |m, n| {
            phase[m] * rho[(m, n)] * phase[n].conj()
        });
        drift = drift.max(max_modulus((rotated - &rho0).iter()));
    }
    out.push(Check::at_most(
        "eps=0 rho_m constant, trap frame",
        drift,
        1e-9,
    ));
    Ok(())
}

fn husimi_checks(cfg: &ScenarioConfig, out: &mut Vec<Check>) -> Result<()> {
    let grid = GridSpec::default();
    let vac = husimi_q(&pure_density(&fock_state(0, dim(cfg.dim.get()))?), &grid)?;
    let mut point = 0.0_f64;
    for (im, row) in vac.im_axis.iter().zip(&vac.values) {
        for (re, v) in vac.re_axis.iter().zip(row) {
            let exact = (-(re * re + im * im)).exp() / std::f64::consts::PI;
            point = point.max((v - exact).abs());
        }
    }
    out.push(Check::at_most("Husimi vacuum pointwise", point, 1e-10));
    out.push(Check::at_most(
        "Husimi vacuum normalization",
        (vac.integral() - 1.0).abs(),
        1e-3,
    ));

    let p = prepare(cfg)?;
    let q = husimi_q(
        &reduced_motional_density(&joint_state(cfg.internal, &p.motional)),
        &cfg.qgrid,
    )?;
    let (re, im, _) = q.peak();
    let expect = match cfg.motional {
        MotionalSpec::QCoherent => cfg.alpha,
        MotionalSpec::Fock(_) => Complex64::new(re, im),
    };
    let cell_re = (cfg.qgrid.re_max - cfg.qgrid.re_min) / (cfg.qgrid.re_points - 1) as f64;
    let cell_im = (cfg.qgrid.im_max - cfg.qgrid.im_min) / (cfg.qgrid.im_points - 1) as f64;
    let cells = ((re - expect.re) / cell_re)
        .abs()
        .max(((im - expect.im) / cell_im).abs());
    out.push(Check::at_most(
        "Husimi initial peak, cells from alpha",
        cells,
        1.0,
    ));
    Ok(())
}

/// Inversion differences across routes with `q` forced to 1.
pub fn route_diff(cfg: &ScenarioConfig) -> Result<Vec<RouteDiff>> {
    let mut base = cfg.clone();
    base.params.deformation = Deformation::HARMONIC;
    let times = uniform_times(base.time.t_max, base.time.points)?;
    let inversion = |route: CouplingRoute| -> Result<Vec<f64>> {
        let c = ScenarioConfig {
            route,
            ..base.clone()
        };
        let p = prepare(&c)?;
        Ok(population_inversion(&evolve(&p.propagator, &p.psi0, &times)?)?.w)
    };
    let reference = inversion(CouplingRoute::QClosed)?;
    CouplingRoute::ALL
        .into_iter()
        .filter(|r| *r != CouplingRoute::QClosed)
        .map(|route| {
            let w = inversion(route)?;
            let d = w
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(RouteDiff {
                route: route.name().into(),
                max_inversion_diff: d,
            })
        })
        .collect()
}

/// Run the invariant table for `cfg`.
pub fn verify(cfg: &ScenarioConfig) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    algebra_checks(cfg, &mut checks)?;
    coupling_checks(cfg, &mut checks)?;
    dynamics_checks(cfg, &mut checks)?;
    husimi_checks(cfg, &mut checks)?;
    let diffs = route_diff(cfg)?;
    let worst = diffs
        .iter()
        .map(|d| d.max_inversion_diff)
        .fold(0.0, f64::max);
    checks.push(Check::at_most("q=1 inversion across routes", worst, 1e-8));
    Ok(VerifyReport {
        checks,
        route_diff: diffs,
    })
}
