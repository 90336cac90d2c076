// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Unitary evolution under a time-independent joint Hamiltonian.
//!
//! [`spectral_propagator`] diagonalizes `H` once; [`evolve`] then applies
//! `U(t) = V exp(-i E t) V^dagger` at each requested time. [`rk4_reference`]
//! is an independent explicit integrator used only to cross-check it.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::coupling::{max_modulus, CMatrix};
use crate::error::{Error, Result};
use crate::hamiltonian::JointHamiltonian;
use crate::qstates::JointState;

pub type CVector = DVector<Complex64>;

/// Acceptance bound on `max|V diag(E) V^dagger - H| / ||H||`.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;
/// Hermiticity required before diagonalizing, relative to `||H||`.
pub const HERMITICITY_TOL: f64 = 1e-12;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 0; // unlimited

#[derive(Debug, Clone)]
pub struct Propagator {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
    /// SHA-256 over the little-endian bytes of the diagonalized matrix.
    pub fingerprint: String,
    /// `max|V diag(E) V^dagger - H|`, absolute.
    pub reconstruction_residual: f64,
}

/// Hex SHA-256 of a complex matrix, column-major.
pub fn matrix_fingerprint(m: &CMatrix) -> String {
    let mut hasher = Sha256::new();
    hasher.update((m.nrows() as u64).to_le_bytes());
    hasher.update((m.ncols() as u64).to_le_bytes());
    for z in m.iter() {
        hasher.update(z.re.to_le_bytes());
        hasher.update(z.im.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn max_abs(m: &CMatrix) -> f64 {
    max_modulus(m.iter())
}

/// Dense Hermitian eigendecomposition of an arbitrary matrix.
pub fn diagonalize(h: &CMatrix) -> Result<Propagator> {
    let scale = max_abs(h).max(f64::MIN_POSITIVE);
    let herm = max_abs(&(h - h.adjoint()));
    if herm > HERMITICITY_TOL * scale.max(1.0) {
        return Err(Error::Numerical {
            check: "hermiticity before diagonalization".into(),
            value: herm,
            limit: HERMITICITY_TOL * scale.max(1.0),
        });
    }
    let eig = SymmetricEigen::try_new(h.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenFailure { residual: f64::NAN })?;
    let v = eig.eigenvectors;
    let e = eig.eigenvalues;
    let d = CMatrix::from_diagonal(&e.map(|x| Complex64::new(x, 0.0)));
    let residual = max_abs(&(&v * d * v.adjoint() - h));
    let norm = e.amax().max(f64::MIN_POSITIVE);
    if !(residual <= RECONSTRUCTION_TOL * norm) {
        return Err(Error::EigenFailure { residual });
    }
    Ok(Propagator {
        eigenvalues: e,
        eigenvectors: v,
        fingerprint: matrix_fingerprint(h),
        reconstruction_residual: residual,
    })
}

/// Diagonalize a joint Hamiltonian.
pub fn spectral_propagator(h: &JointHamiltonian) -> Result<Propagator> {
    diagonalize(&h.mat)
}

impl Propagator {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U(t) = V exp(-i E t) V^dagger`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let phases = self.phases(t);
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.eigenvectors.adjoint()
    }

    fn phases(&self, t: f64) -> CVector {
        self.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * t))
    }

    /// Components of `psi` in the eigenbasis.
    pub fn project(&self, psi: &CVector) -> CVector {
        self.eigenvectors.ad_mul(psi)
    }

    /// `U(t) psi` given the eigenbasis components of `psi`.
    pub fn apply_projected(&self, coeffs: &CVector, t: f64) -> CVector {
        let phased = coeffs.component_mul(&self.phases(t));
        &self.eigenvectors * phased
    }

    /// `max|V^dagger V - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.eigenvectors.ad_mul(&self.eigenvectors) - CMatrix::identity(n, n)))
    }
}

/// Snapshots of a joint state at increasing times (units of `1/Omega`).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<JointState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `| ||psi(t)|| - 1 |` over the snapshots.
    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest amplitude difference against another trajectory on the same grid.
    pub fn max_state_deviation(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let mut worst = 0.0_f64;
        for ((ta, a), (tb, b)) in self
            .times
            .iter()
            .zip(&self.states)
            .zip(other.times.iter().zip(&other.states))
        {
            if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
                return Err(Error::invalid(
                    "times",
                    "trajectories are on different grids",
                ));
            }
            worst = worst.max((&a.amps - &b.amps).iter().fold(0.0, |m, z| m.max(z.norm())));
        }
        Ok(worst)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("times", "need at least one time"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("times", "must be finite"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    Ok(())
}

/// `psi(t_k) = U(t_k) psi0` for each requested time.
pub fn evolve(prop: &Propagator, psi0: &JointState, times: &[f64]) -> Result<Trajectory> {
    if psi0.amps.len() != prop.dim() {
        return Err(Error::DimensionMismatch {
            expected: prop.dim(),
            got: psi0.amps.len(),
        });
    }
    check_times(times)?;
    let coeffs = prop.project(&psi0.amps);
    let states = times
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return psi0.clone();
            }
            JointState {
                amps: prop.apply_projected(&coeffs, t),
                dim: psi0.dim,
            }
        })
        .collect();
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}

/// `<psi|H|psi>`, real part.
pub fn energy(h: &CMatrix, psi: &CVector) -> f64 {
    psi.dotc(&(h * psi)).re
}

/// Uniform grid of `points` times on `[0, t_max]`; a single point when
/// `t_max == 0`.
pub fn uniform_times(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::invalid(
            "t_max",
            format!("must be finite and >= 0, got {t_max}"),
        ));
    }
    if t_max == 0.0 || points <= 1 {
        return Ok(vec![0.0]);
    }
    let step = t_max / (points - 1) as f64;
    Ok((0..points).map(|k| k as f64 * step).collect())
}

/// Entries of the coupling part with modulus below this fraction of the
/// largest one are dropped by the RK4 oracle.
pub const RK4_SPARSE_CUTOFF: f64 = 1e-20;

struct SparseEntry {
    row: usize,
    col: usize,
    val: Complex64,
}

/// Fourth-order Runge-Kutta solution of `i dpsi/dt = H psi` on `[0, t_end]`.
///
/// The diagonal of `H` is carried exactly in an interaction frame,
/// `psi = exp(-i H_0 t) psi_I`, and RK4 integrates
/// `i dpsi_I/dt = exp(i H_0 t) V exp(-i H_0 t) psi_I` for the off-diagonal
/// remainder `V`. Snapshots are taken every `record_every` steps and at
/// `t_end`, returned in the original frame.
pub fn rk4_reference(
    h: &JointHamiltonian,
    psi0: &JointState,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    rk4_matrix(&h.mat, psi0, t_end, dt, record_every)
}

pub fn rk4_matrix(
    h: &CMatrix,
    psi0: &JointState,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    let n = h.nrows();
    if psi0.amps.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi0.amps.len(),
        });
    }
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::invalid("dt", "need dt > 0 and finite t_end >= 0"));
    }
    let record_every = record_every.max(1);
    let diag: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
    let vmax = (0..n)
        .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (i, j)))
        .map(|(i, j)| h[(i, j)].norm())
        .fold(0.0_f64, f64::max);
    let mut entries = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j {
                let v = h[(i, j)];
                if v.norm() > RK4_SPARSE_CUTOFF * vmax {
                    entries.push(SparseEntry {
                        row: i,
                        col: j,
                        val: v,
                    });
                }
            }
        }
    }
    let row_sum = (0..n)
        .map(|i| {
            entries
                .iter()
                .filter(|e| e.row == i)
                .map(|e| e.val.norm())
                .sum::<f64>()
        })
        .fold(0.0_f64, f64::max);
    let max_rate = entries
        .iter()
        .map(|e| (diag[e.row] - diag[e.col]).abs())
        .fold(row_sum, f64::max);
    if max_rate * dt >= 0.1 {
        log::warn!(
            "rk4 step {dt} too coarse: coupling rate {max_rate:.3e} gives rate*dt = {:.3e} >= 0.1",
            max_rate * dt
        );
    }

    let steps = (t_end / dt).round() as usize;
    let step = if steps == 0 {
        0.0
    } else {
        t_end / steps as f64
    };

    // right-hand side -i P(t) V P(t)^* y with P(t) = diag(exp(i d t))
    let rhs = |t: f64, y: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]| {
        for i in 0..n {
            scratch[i] = y[i] * Complex64::from_polar(1.0, -diag[i] * t);
            out[i] = Complex64::new(0.0, 0.0);
        }
        for e in &entries {
            out[e.row] += e.val * scratch[e.col];
        }
        for i in 0..n {
            out[i] *= Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, diag[i] * t);
        }
    };

    let to_lab = |t: f64, y: &[Complex64]| -> JointState {
        JointState {
            amps: CVector::from_fn(n, |i, _| y[i] * Complex64::from_polar(1.0, -diag[i] * t)),
            dim: psi0.dim,
        }
    };

    let mut y: Vec<Complex64> = psi0.amps.iter().copied().collect();
    let mut k1 = vec![Complex64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut scratch = k1.clone();

    let mut times = vec![0.0];
    let mut states = vec![to_lab(0.0, &y)];
    for s in 0..steps {
        let t = s as f64 * step;
        let half = Complex64::from(0.5 * step);
        let full = Complex64::from(step);
        rhs(t, &y, &mut k1, &mut scratch);
        for i in 0..n {
            tmp[i] = y[i] + half * k1[i];
        }
        rhs(t + 0.5 * step, &tmp, &mut k2, &mut scratch);
        for i in 0..n {
            tmp[i] = y[i] + half * k2[i];
        }
        rhs(t + 0.5 * step, &tmp, &mut k3, &mut scratch);
        for i in 0..n {
            tmp[i] = y[i] + full * k3[i];
        }
        rhs(t + step, &tmp, &mut k4, &mut scratch);
        let sixth = Complex64::from(step / 6.0);
        for i in 0..n {
            y[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical {
                check: "rk4 state finiteness".into(),
                value: f64::INFINITY,
                limit: f64::MAX,
            });
        }
        let done = s + 1;
        if done % record_every == 0 || done == steps {
            let t_now = done as f64 * step;
            times.push(t_now);
            states.push(to_lab(t_now, &y));
        }
    }
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingRoute;
    use crate::hamiltonian::build_hq;
    use crate::qcore::{Deformation, QParams, TruncationDim};
    use crate::qstates::{fock_state, joint_state, q_coherent_state, Internal};

    fn dim(d: usize) -> TruncationDim {
        TruncationDim::new(d).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]));
        let p = diagonalize(&h).unwrap();
        let mut e: Vec<f64> = p.eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert_eq!(e, vec![1.0, 2.0]);
        for z in p.eigenvectors.iter() {
            assert!(z.norm() < 1e-15 || (z.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let h =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(diagonalize(&h), Err(Error::Numerical { .. })));
    }

    #[test]
    fn canonical_propagator_residuals() {
        let h = build_hq(
            QParams::canonical(),
            dim(50),
            CouplingRoute::QClosed,
            0,
            None,
        )
        .unwrap();
        let p = spectral_propagator(&h).unwrap();
        assert!(p.reconstruction_residual <= RECONSTRUCTION_TOL * p.eigenvalues.amax());
        assert!(p.orthonormality_residual() <= 1e-10);
        assert_eq!(p.fingerprint.len(), 64);
        assert_eq!(p.fingerprint, matrix_fingerprint(&h.mat));
    }

    #[test]
    fn zero_time_and_eigenstates() {
        let h = build_hq(
            QParams::canonical(),
            dim(20),
            CouplingRoute::QClosed,
            0,
            None,
        )
        .unwrap();
        let p = spectral_propagator(&h).unwrap();
        let psi0 = joint_state(Internal::Ground, &fock_state(3, dim(20)).unwrap());
        let traj = evolve(&p, &psi0, &[0.0]).unwrap();
        assert!(max_modulus((&traj.states[0].amps - &psi0.amps).iter()) < 1e-12);

        let k = 7;
        let eigvec = JointState::new(p.eigenvectors.column(k).into_owned(), dim(20)).unwrap();
        let e = p.eigenvalues[k];
        let traj = evolve(&p, &eigvec, &[0.0, 0.3, 1.7]).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let expect = &eigvec.amps * Complex64::from_polar(1.0, -e * t);
            assert!(max_modulus((&s.amps - expect).iter()) < 1e-11);
        }
    }

    #[test]
    fn unitarity_composition_energy() {
        let p = QParams::canonical();
        let h = build_hq(p, dim(40), CouplingRoute::QClosed, 0, None).unwrap();
        let prop = spectral_propagator(&h).unwrap();
        for (t1, t2) in [(0.3, 1.1), (2.5, 7.25), (13.0, 0.01)] {
            let lhs = prop.unitary(t1) * prop.unitary(t2);
            let rhs = prop.unitary(t1 + t2);
            assert!(max_modulus((lhs - rhs).iter()) < 1e-9);
        }
        let coh = q_coherent_state(c(3.0, 0.0), p.q(), dim(40), 1e-12).unwrap();
        let psi0 = joint_state(Internal::Ground, &coh);
        let times = uniform_times(20.0, 401).unwrap();
        let traj = evolve(&prop, &psi0, &times).unwrap();
        assert!(traj.max_norm_drift() < 1e-9);
        let e0 = energy(&h.mat, &psi0.amps);
        for s in &traj.states {
            assert!((energy(&h.mat, &s.amps) - e0).abs() <= 1e-9 * e0.abs());
        }
    }

    #[test]
    fn time_grid_validation() {
        let h = build_hq(
            QParams::canonical(),
            dim(4),
            CouplingRoute::QClosed,
            0,
            None,
        )
        .unwrap();
        let p = spectral_propagator(&h).unwrap();
        let psi0 = joint_state(Internal::Ground, &fock_state(0, dim(4)).unwrap());
        assert!(evolve(&p, &psi0, &[]).is_err());
        assert!(evolve(&p, &psi0, &[0.0, 0.0]).is_err());
        assert_eq!(uniform_times(0.0, 2001).unwrap(), vec![0.0]);
        let t = uniform_times(50.0, 2001).unwrap();
        assert_eq!(t.len(), 2001);
        assert_eq!(t[2000], 50.0);
    }

    #[test]
    fn rk4_constant_for_zero_hamiltonian() {
        let h = CMatrix::zeros(4, 4);
        let psi0 = JointState::new(
            CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0), c(0.0, 0.0)]),
            dim(2),
        )
        .unwrap();
        let traj = rk4_matrix(&h, &psi0, 1.0, 0.01, 10).unwrap();
        assert_eq!(traj.len(), 11);
        for s in &traj.states {
            assert!(max_modulus((&s.amps - &psi0.amps).iter()) < 1e-15);
        }
    }

    #[test]
    fn rk4_eigenstate_phase() {
        // dense H so the interaction frame is exercised
        let h = CMatrix::from_row_slice(
            4,
            4,
            &[
                c(1.0, 0.0),
                c(0.0, 0.5),
                c(0.2, 0.0),
                c(0.0, 0.0),
                c(0.0, -0.5),
                c(-0.3, 0.0),
                c(0.0, 0.0),
                c(0.1, 0.1),
                c(0.2, 0.0),
                c(0.0, 0.0),
                c(2.0, 0.0),
                c(0.0, 0.3),
                c(0.0, 0.0),
                c(0.1, -0.1),
                c(0.0, -0.3),
                c(0.5, 0.0),
            ],
        );
        let p = diagonalize(&h).unwrap();
        let v = p.eigenvectors.column(1).into_owned();
        let psi = JointState::new(v.clone(), dim(2)).unwrap();
        let traj = rk4_matrix(&h, &psi, 2.0, 1e-3, 500).unwrap();
        assert_eq!(traj.len(), 5);
        let e = p.eigenvalues[1];
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let expect = &v * Complex64::from_polar(1.0, -e * t);
            assert!(max_modulus((&s.amps - expect).iter()) < 1e-10);
        }
    }

    #[test]
    fn rk4_matches_spectral_small() {
        let params = QParams::new(Deformation::from_q(1.02).unwrap(), 0.2, 5.0, -3.0).unwrap();
        let h = build_hq(params, dim(12), CouplingRoute::QClosed, 0, None).unwrap();
        let coh = q_coherent_state(c(1.0, 0.5), 1.02, dim(12), 1e-8).unwrap();
        let psi0 = joint_state(Internal::Ground, &coh);
        let rk = rk4_matrix(&h.mat, &psi0, 3.0, 1e-3, 100).unwrap();
        let prop = spectral_propagator(&h).unwrap();
        let sp = evolve(&prop, &psi0, &rk.times).unwrap();
        assert!(rk.max_state_deviation(&sp).unwrap() < 1e-9);
    }
}
