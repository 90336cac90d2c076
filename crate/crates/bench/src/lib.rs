// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the benchmarks.

use num_complex::Complex64;
use qtrap_core::hamiltonian::build_hq;
use qtrap_core::qstates::{joint_state, q_coherent_state};
use qtrap_core::{
    CouplingRoute, Internal, JointHamiltonian, JointState, MotionalState, QParams, TruncationDim,
};

pub fn dim(d: usize) -> TruncationDim {
    TruncationDim::new(d).expect("benchmark dimensions are >= 2")
}

/// Canonical `alpha = 4` q-coherent state.
pub fn canonical_state(d: usize) -> MotionalState {
    q_coherent_state(
        Complex64::new(4.0, 0.0),
        QParams::canonical().q(),
        dim(d),
        1e-10,
    )
    .expect("canonical state")
}

/// Canonical Hamiltonian and `|g, alpha>` initial state.
pub fn canonical_scenario(d: usize) -> (JointHamiltonian, JointState) {
    let h = build_hq(
        QParams::canonical(),
        dim(d),
        CouplingRoute::QClosed,
        0,
        None,
    )
    .expect("canonical H");
    (h, joint_state(Internal::Ground, &canonical_state(d)))
}
