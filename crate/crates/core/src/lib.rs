// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dynamics of a single two-level ion in a q-deformed harmonic trap driven
//! by a classical laser.
//!
//! The undeformed trap (`q = 1`) is built in as an exact limit of every
//! deformed construction and serves as the reference for the test-suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod hamiltonian;
pub mod observables;
pub mod qcore;
pub mod qstates;
pub mod runner;

pub use coupling::{CMatrix, CouplingMatrix, CouplingRoute};
pub use dynamics::{CVector, Propagator, Trajectory};
pub use error::{Error, ErrorCategory, Result};
pub use hamiltonian::JointHamiltonian;
pub use observables::{GridSpec, InversionSeries, QGrid};
pub use qcore::{Deformation, OperatorSet, QParams, TruncationDim};
pub use qstates::{Internal, JointState, MotionalState};
pub use runner::{parse_config, ParseMode, ScenarioConfig, SweepAxis};
