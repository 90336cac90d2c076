// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Population inversion, the reduced motional density matrix, mean quanta
//! and Husimi Q-function grids.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::CMatrix;
use crate::dynamics::{CVector, Trajectory};
use crate::error::{Error, Result};
use crate::qcore::{q_exponential, Deformation};
use crate::qstates::{Internal, JointState, MotionalState};

/// `w(t) = P_e(t) - P_g(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionSeries {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn inversion(state: &JointState) -> f64 {
    let d = state.dim.get();
    let (mut pg, mut pe) = (0.0, 0.0);
    for n in 0..d {
        pg += state.amp(Internal::Ground, n).norm_sqr();
        pe += state.amp(Internal::Excited, n).norm_sqr();
    }
    pe - pg
}

pub fn population_inversion(traj: &Trajectory) -> Result<InversionSeries> {
    if traj.is_empty() {
        return Err(Error::invalid(
            "trajectory",
            "must contain at least one snapshot",
        ));
    }
    Ok(InversionSeries {
        times: traj.times.clone(),
        w: traj.states.iter().map(inversion).collect(),
    })
}

/// `rho[n, n'] = sum_s psi[s, n] conj(psi[s, n'])`.
pub fn reduced_motional_density(state: &JointState) -> CMatrix {
    let d = state.dim.get();
    let g = state.amps.rows(0, d);
    let e = state.amps.rows(d, d);
    g * g.adjoint() + e * e.adjoint()
}

pub fn pure_density(state: &MotionalState) -> CMatrix {
    &state.amps * state.amps.adjoint()
}

/// `<N> = sum_n n rho[n, n]`.
pub fn mean_quanta(rho: &CMatrix) -> f64 {
    (0..rho.nrows()).map(|n| n as f64 * rho[(n, n)].re).sum()
}

pub fn mean_quanta_state(state: &MotionalState) -> f64 {
    state
        .probabilities()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}

/// Uniform rectangular grid over the complex `beta` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub re_points: usize,
    pub im_points: usize,
}

impl Default for GridSpec {
    /// 161 x 161 over `[-6, 6]^2`.
    fn default() -> Self {
        Self {
            re_min: -6.0,
            re_max: 6.0,
            im_min: -6.0,
            im_max: 6.0,
            re_points: 161,
            im_points: 161,
        }
    }
}

fn axis(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![min];
    }
    let span = max - min;
    let last = (points - 1) as f64;
    (0..points).map(|k| min + span * k as f64 / last).collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.re_max <= self.re_min || self.im_max <= self.im_min {
            return Err(Error::invalid(
                "grid",
                "bounds must be finite with max > min",
            ));
        }
        if self.re_points < 2 || self.im_points < 2 {
            return Err(Error::invalid("grid", "need at least 2 points per axis"));
        }
        Ok(())
    }

    pub fn re_axis(&self) -> Vec<f64> {
        axis(self.re_min, self.re_max, self.re_points)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        axis(self.im_min, self.im_max, self.im_points)
    }

    pub fn cell_area(&self) -> f64 {
        (self.re_max - self.re_min) / (self.re_points - 1) as f64 * (self.im_max - self.im_min)
            / (self.im_points - 1) as f64
    }
}

/// Husimi values on a grid; `values[i][j]` belongs to `(re_axis[j], im_axis[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub cell_area: f64,
}

impl QGrid {
    /// Riemann sum of `Q` times the cell area.
    pub fn integral(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.cell_area
    }

    /// `(re, im, value)` at the largest value.
    pub fn peak(&self) -> (f64, f64, f64) {
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (self.re_axis[j], self.im_axis[i], v);
                }
            }
        }
        best
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Ordinary coherent-state amplitudes `e^(-|beta|^2/2) beta^n / sqrt(n!)`, `n < dim`.
pub fn coherent_overlap(beta: Complex64, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    let mut amp = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    v[0] = amp;
    for n in 1..dim {
        amp *= beta / (n as f64).sqrt();
        v[n] = amp;
    }
    v
}

/// Normalized q-coherent amplitudes `beta^n / sqrt([n]_q! exp_q(|beta|^2))`, `n < dim`.
pub fn q_coherent_overlap(
    beta: Complex64,
    deformation: Deformation,
    dim: usize,
) -> Result<CVector> {
    let z = q_exponential(beta.norm_sqr(), deformation.q(), 1e-17)?.value;
    let mut v = CVector::zeros(dim);
    let mut amp = Complex64::new(z.sqrt().recip(), 0.0);
    v[0] = amp;
    for n in 1..dim {
        amp *= beta / deformation.number(n as f64).sqrt();
        v[n] = amp;
    }
    Ok(v)
}

fn check_density(rho: &CMatrix) -> Result<()> {
    if !rho.is_square() || rho.nrows() < 2 {
        return Err(Error::invalid(
            "rho",
            "must be a square matrix of size >= 2",
        ));
    }
    let herm = (rho - rho.adjoint())
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    if herm > 1e-10 {
        return Err(Error::invalid(
            "rho",
            format!("not Hermitian (residual {herm:.3e})"),
        ));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("rho", format!("trace {tr} differs from 1")));
    }
    Ok(())
}

fn evaluate<F>(rho: &CMatrix, grid: &GridSpec, overlap: F) -> Result<QGrid>
where
    F: Fn(Complex64) -> Result<CVector> + Sync,
{
    grid.validate()?;
    check_density(rho)?;
    let re_axis = grid.re_axis();
    let im_axis = grid.im_axis();
    let values = im_axis
        .par_iter()
        .map(|&im| {
            re_axis
                .iter()
                .map(|&re| {
                    let c = overlap(Complex64::new(re, im))?;
                    Ok(c.dotc(&(rho * &c)).re / std::f64::consts::PI)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QGrid {
        re_axis,
        im_axis,
        values,
        cell_area: grid.cell_area(),
    })
}

/// Fraction of missing normalization above which a grid is flagged.
pub const HUSIMI_DEFICIT_LIMIT: f64 = 0.02;

/// `Q(beta) = <beta|rho|beta> / pi` with ordinary coherent states truncated
/// at the dimension of `rho`. Errors when the grid captures less than 98% of
/// the distribution.
pub fn husimi_q(rho: &CMatrix, grid: &GridSpec) -> Result<QGrid> {
    let dim = rho.nrows();
    let q = evaluate(rho, grid, |beta| Ok(coherent_overlap(beta, dim)))?;
    let deficit = 1.0 - q.integral();
    if deficit > HUSIMI_DEFICIT_LIMIT {
        return Err(Error::Numerical {
            check: "husimi grid normalization deficit".into(),
            value: deficit,
            limit: HUSIMI_DEFICIT_LIMIT,
        });
    }
    Ok(q)
}

/// Diagnostic variant of [`husimi_q`] projecting on normalized q-coherent
/// states. Not a normalized phase-space density for `q != 1`.
pub fn husimi_q_deformed(
    rho: &CMatrix,
    grid: &GridSpec,
    deformation: Deformation,
) -> Result<QGrid> {
    let dim = rho.nrows();
    evaluate(rho, grid, |beta| q_coherent_overlap(beta, deformation, dim))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(rho: &CMatrix) -> DVector<f64> {
    let mut e: Vec<f64> = rho
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    e.sort_by(f64::total_cmp);
    DVector::from_vec(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingRoute;
    use crate::dynamics::{evolve, spectral_propagator, uniform_times};
    use crate::hamiltonian::build_hq;
    use crate::qcore::{QParams, TruncationDim};
    use crate::qstates::{fock_state, joint_state, q_coherent_state};
    use std::f64::consts::PI;

    fn dim(d: usize) -> TruncationDim {
        TruncationDim::new(d).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn inversion_of_product_states() {
        let g = joint_state(
            Internal::Ground,
            &q_coherent_state(c(2.0), 1.01, dim(30), 1e-10).unwrap(),
        );
        assert!((inversion(&g) + 1.0).abs() < 1e-12);
        let e = joint_state(Internal::Excited, &fock_state(0, dim(4)).unwrap());
        assert_eq!(inversion(&e), 1.0);
    }

    #[test]
    fn rabi_flopping_without_coupling_to_motion() {
        let p = QParams::new(Deformation::HARMONIC, 0.0, 50.0, 0.0).unwrap();
        let h = build_hq(p, dim(6), CouplingRoute::QClosed, 0, None).unwrap();
        let prop = spectral_propagator(&h).unwrap();
        let psi0 = joint_state(Internal::Ground, &fock_state(0, dim(6)).unwrap());
        let times = uniform_times(20.0, 201).unwrap();
        let series = population_inversion(&evolve(&prop, &psi0, &times).unwrap()).unwrap();
        for (t, w) in series.times.iter().zip(&series.w) {
            assert!((w + t.cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn reduced_density_examples() {
        let s = joint_state(Internal::Ground, &fock_state(2, dim(4)).unwrap());
        let rho = reduced_motional_density(&s);
        let mut expect = CMatrix::zeros(4, 4);
        expect[(2, 2)] = c(1.0);
        assert_eq!(rho, expect);
        assert_eq!(mean_quanta(&rho), 2.0);

        let r = 0.5_f64.sqrt();
        let mut amps = CVector::zeros(4);
        amps[0] = c(r);
        amps[3] = c(r); // |e,1>
        let s = JointState::new(amps, dim(2)).unwrap();
        let rho = reduced_motional_density(&s);
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((rho[(1, 1)].re - 0.5).abs() < 1e-15);
        assert_eq!(rho[(0, 1)], c(0.0));
        let purity = (&rho * &rho).trace().re;
        assert!((purity - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_is_a_state_along_dynamics() {
        let p = QParams::canonical();
        let h = build_hq(p, dim(50), CouplingRoute::QClosed, 0, None).unwrap();
        let prop = spectral_propagator(&h).unwrap();
        let coh = q_coherent_state(c(4.0), p.q(), dim(50), 1e-10).unwrap();
        let traj = evolve(
            &prop,
            &joint_state(Internal::Ground, &coh),
            &[0.0, 3.0, 17.5],
        )
        .unwrap();
        for s in &traj.states {
            let rho = reduced_motional_density(s);
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!(crate::coupling::max_modulus((&rho - rho.adjoint()).iter()) < 1e-14);
            assert!(hermitian_eigenvalues(&rho)[0] >= -1e-10);
            assert!(inversion(s).abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn motional_state_frozen_without_coupling() {
        let p = QParams::new(Deformation::from_tau(0.003).unwrap(), 0.0, 50.0, -50.0).unwrap();
        let h = build_hq(p, dim(40), CouplingRoute::QClosed, 0, None).unwrap();
        let prop = spectral_propagator(&h).unwrap();
        let coh = q_coherent_state(c(3.0), p.q(), dim(40), 1e-10).unwrap();
        let traj = evolve(
            &prop,
            &joint_state(Internal::Ground, &coh),
            &uniform_times(10.0, 11).unwrap(),
        )
        .unwrap();
        // trap phases rotate coherences, populations stay fixed
        let rho0 = reduced_motional_density(&traj.states[0]);
        for s in &traj.states {
            let rho = reduced_motional_density(s);
            for n in 0..40 {
                assert!((rho[(n, n)].re - rho0[(n, n)].re).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mean_quanta_examples() {
        let rho = pure_density(&fock_state(3, dim(6)).unwrap());
        assert!((mean_quanta(&rho) - 3.0).abs() < 1e-15);
        let coh = q_coherent_state(c(4.0), 1.0, dim(80), 1e-14).unwrap();
        assert!((mean_quanta_state(&coh) - 16.0).abs() < 1e-10);
        // 60-digit series oracle
        let coh = q_coherent_state(c(4.0), 0.003_f64.exp(), dim(100), 1e-14).unwrap();
        assert!((mean_quanta_state(&coh) - 15.992_713_274_961_871).abs() < 1e-10);
        assert!((mean_quanta(&pure_density(&coh)) - mean_quanta_state(&coh)).abs() < 1e-12);
    }

    #[test]
    fn vacuum_husimi() {
        let rho = pure_density(&fock_state(0, dim(10)).unwrap());
        let q = husimi_q(&rho, &GridSpec::default()).unwrap();
        for (i, row) in q.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let b2 = q.re_axis[j].powi(2) + q.im_axis[i].powi(2);
                assert!((v - (-b2).exp() / PI).abs() < 1e-10);
            }
        }
        let (re, im, peak) = q.peak();
        assert!(re.abs() < 1e-12 && im.abs() < 1e-12);
        assert!((peak - 1.0 / PI).abs() < 1e-15);
        assert!((q.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coherent_husimi_peak() {
        let coh = q_coherent_state(Complex64::new(1.5, -2.25), 1.0, dim(60), 1e-14).unwrap();
        let grid = GridSpec::default();
        let q = husimi_q(&pure_density(&coh), &grid).unwrap();
        let (re, im, peak) = q.peak();
        assert!((re - 1.5).abs() < 1e-9 && (im + 2.25).abs() < 1e-9);
        assert!((peak - 1.0 / PI).abs() < 1e-10);
        assert!(q.min_value() >= -1e-12);
    }

    #[test]
    fn husimi_flags_small_grid() {
        let coh = q_coherent_state(c(4.0), 1.0, dim(60), 1e-12).unwrap();
        let grid = GridSpec {
            re_min: -1.0,
            re_max: 1.0,
            im_min: -1.0,
            im_max: 1.0,
            re_points: 21,
            im_points: 21,
        };
        assert!(matches!(
            husimi_q(&pure_density(&coh), &grid),
            Err(Error::Numerical { .. })
        ));
        let bad = GridSpec {
            re_points: 1,
            ..grid
        };
        assert!(husimi_q(&pure_density(&coh), &bad).is_err());
    }

    #[test]
    fn deformed_projector_reduces_at_q_one() {
        let coh = q_coherent_state(c(2.0), 1.0, dim(40), 1e-12).unwrap();
        let rho = pure_density(&coh);
        let grid = GridSpec {
            re_points: 25,
            im_points: 25,
            ..GridSpec::default()
        };
        let a = husimi_q(&rho, &grid).unwrap();
        let b = husimi_q_deformed(&rho, &grid, Deformation::HARMONIC).unwrap();
        for (ra, rb) in a.values.iter().zip(&b.values) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
