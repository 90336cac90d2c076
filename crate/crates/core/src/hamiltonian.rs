// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Joint `2D x 2D` Hamiltonians in units of `hbar Omega`.
//!
//! Conventions: `sigma_z |e> = +|e>`, `sigma_z |g> = -|g>`, `sigma+ |g> = |e>`.
//! The ground block occupies rows `0..D`, the excited block rows `D..2D`.
//! The coupling `F/2` sits in the `(e, g)` block and `F^dagger/2` in the
//! `(g, e)` block, which makes the result Hermitian even when `F_q` is not
//! normal.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::coupling::{
    build_coupling_with, f_harmonic, CMatrix, CouplingMatrix, CouplingRoute, SeriesControl,
};
use crate::error::{Error, Result};
use crate::qcore::{Deformation, QParams, TruncationDim};
use crate::qstates::MotionalState;

/// Trap levels `E_n = (omega_bar / 2)([n]_q + [n+1]_q)`, `n = 0..D-1`.
pub fn trap_spectrum(q: f64, omega_bar: f64, dim: TruncationDim) -> Result<DVector<f64>> {
    let def = Deformation::from_q(q)?;
    Ok(trap_levels(def, omega_bar, dim))
}

fn trap_levels(def: Deformation, omega_bar: f64, dim: TruncationDim) -> DVector<f64> {
    DVector::from_fn(dim.get(), |n, _| {
        let n = n as f64;
        0.5 * omega_bar * (def.number(n) + def.number(n + 1.0))
    })
}

#[derive(Debug, Clone)]
pub struct JointHamiltonian {
    pub mat: CMatrix,
    /// Trap plus detuning diagonal, length `2D`.
    pub diagonal: DVector<f64>,
    pub coupling: CouplingMatrix,
    pub params: QParams,
    pub dim: TruncationDim,
}

impl JointHamiltonian {
    /// Largest elementwise modulus of `H - H^dagger`.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).map(|z| z.norm()).max()
    }

    /// Off-diagonal (laser) part `(F sigma+ + F^dagger sigma-)/2`.
    pub fn interaction(&self) -> CMatrix {
        let mut v = self.mat.clone();
        v.set_diagonal(&DVector::zeros(self.dim.joint()));
        v
    }

    pub fn route(&self) -> CouplingRoute {
        self.coupling.route
    }
}

/// Place trap, detuning and coupling blocks into a joint Hamiltonian.
pub fn assemble(
    params: QParams,
    dim: TruncationDim,
    coupling: CouplingMatrix,
) -> Result<JointHamiltonian> {
    let d = dim.get();
    if coupling.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: coupling.dim(),
        });
    }
    let levels = trap_levels(params.deformation, params.omega_bar, dim);
    let half_detuning = 0.5 * params.delta_bar;
    let diagonal = DVector::from_fn(2 * d, |i, _| {
        if i < d {
            levels[i] - half_detuning
        } else {
            levels[i - d] + half_detuning
        }
    });
    let mut mat = CMatrix::from_diagonal(&diagonal.map(|x| Complex64::new(x, 0.0)));
    let half = Complex64::new(0.5, 0.0);
    mat.view_mut((d, 0), (d, d))
        .copy_from(&(&coupling.mat * half));
    mat.view_mut((0, d), (d, d))
        .copy_from(&(coupling.mat.adjoint() * half));
    Ok(JointHamiltonian {
        mat,
        diagonal,
        coupling,
        params,
        dim,
    })
}

/// Harmonic-trap Hamiltonian; requires `q = 1`.
pub fn build_h_harmonic(params: QParams, dim: TruncationDim) -> Result<JointHamiltonian> {
    if !params.deformation.is_harmonic() {
        return Err(Error::invalid(
            "q",
            format!("harmonic Hamiltonian needs q = 1, got {}", params.q()),
        ));
    }
    assemble(params, dim, f_harmonic(params.epsilon, dim)?)
}

/// q-analog trap Hamiltonian with the coupling taken from `route`.
///
/// `reference` is the motional state defining `<f(N)^2>`; only the
/// `harmonic_effective` route reads it.
pub fn build_hq(
    params: QParams,
    dim: TruncationDim,
    route: CouplingRoute,
    pad: usize,
    reference: Option<&MotionalState>,
) -> Result<JointHamiltonian> {
    build_hq_with(params, dim, route, pad, SeriesControl::default(), reference)
}

pub fn build_hq_with(
    params: QParams,
    dim: TruncationDim,
    route: CouplingRoute,
    pad: usize,
    series: SeriesControl,
    reference: Option<&MotionalState>,
) -> Result<JointHamiltonian> {
    if !route.is_deformed_route() && !params.deformation.is_harmonic() {
        return Err(Error::InvalidRoute(format!(
            "{route} is not a q-analog coupling route"
        )));
    }
    let coupling = build_coupling_with(
        route,
        params.epsilon,
        params.q(),
        dim,
        pad,
        series,
        reference,
    )?;
    assemble(params, dim, coupling)
}
