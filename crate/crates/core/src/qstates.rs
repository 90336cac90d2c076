// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Fock and q-coherent motional states and the joint `{|g,n>, |e,n>}` layout.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{q_exponential, Deformation, TruncationDim};

/// Tolerance used internally for the q-exponential normalization sum.
const NORM_SUM_TOL: f64 = 1e-17;

/// How a motional state was constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateMeta {
    Fock {
        n: usize,
        dim: usize,
    },
    QCoherent {
        alpha_re: f64,
        alpha_im: f64,
        q: f64,
        dim: usize,
        /// Probability weight of `|n>`, `n >= D`, dropped by the truncation.
        tail_mass: f64,
        /// Value of `exp_q(|alpha|^2)`.
        norm_sum: f64,
    },
    Custom {
        dim: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionalState {
    pub amps: DVector<Complex64>,
    pub meta: StateMeta,
}

impl MotionalState {
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Wrap an arbitrary amplitude vector, normalizing it.
    pub fn from_amplitudes(amps: DVector<Complex64>) -> Result<Self> {
        TruncationDim::new(amps.len())?;
        let norm = amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid(
                "amps",
                "vector must have finite nonzero norm",
            ));
        }
        let dim = amps.len();
        Ok(Self {
            amps: amps / Complex64::from(norm),
            meta: StateMeta::Custom { dim },
        })
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(|a| a.norm_sqr())
    }

    pub fn tail_mass(&self) -> f64 {
        match self.meta {
            StateMeta::QCoherent { tail_mass, .. } => tail_mass,
            _ => 0.0,
        }
    }
}

/// `|n>` on `D` levels.
pub fn fock_state(n: usize, dim: TruncationDim) -> Result<MotionalState> {
    let d = dim.get();
    if n >= d {
        return Err(Error::OutOfRange { index: n, dim: d });
    }
    let mut amps = DVector::zeros(d);
    amps[n] = Complex64::new(1.0, 0.0);
    Ok(MotionalState {
        amps,
        meta: StateMeta::Fock { n, dim: d },
    })
}

/// Unnormalized log-weights `ln(|alpha|^(2n) / [n]_q!)`.
fn ln_weight(ln_x: f64, ln_fact: f64, n: usize) -> f64 {
    n as f64 * ln_x - ln_fact
}

/// Analytic probability weight of the levels `n >= dim` in the q-coherent
/// state of intensity `x = |alpha|^2`.
pub fn q_coherent_tail(x: f64, deformation: Deformation, dim: usize, norm_sum: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ln_x = x.ln();
    let ln_z = norm_sum.ln();
    let mut n = dim;
    let mut term = (ln_weight(ln_x, deformation.ln_factorial(n), n) - ln_z).exp();
    let mut tail = 0.0;
    for _ in 0..100_000 {
        tail += term;
        n += 1;
        let ratio = x / deformation.number(n as f64);
        term *= ratio;
        if term == 0.0 || (ratio < 1.0 && term <= 1e-17 * tail) {
            break;
        }
    }
    tail
}

/// Smallest `D >= 2` whose analytic tail mass is at most `tail_tol`.
pub fn minimal_dim(alpha: Complex64, deformation: Deformation, tail_tol: f64) -> Result<usize> {
    let x = alpha.norm_sqr();
    let z = q_exponential(x, deformation.q(), NORM_SUM_TOL)?.value;
    let mut d = 2usize;
    while q_coherent_tail(x, deformation, d, z) > tail_tol {
        d += 1;
        if d > 1_000_000 {
            return Err(Error::NonConvergence {
                what: "minimal truncation search",
                terms: d,
            });
        }
    }
    Ok(d)
}

/// q-coherent state `exp_q(|alpha|^2)^(-1/2) sum_n alpha^n / sqrt([n]_q!) |n>`,
/// cut at `D` and renormalized on the retained levels.
pub fn q_coherent_state(
    alpha: Complex64,
    q: f64,
    dim: TruncationDim,
    tail_tol: f64,
) -> Result<MotionalState> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::invalid("alpha", "must be finite"));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::invalid(
            "tail_tol",
            format!("must be > 0, got {tail_tol}"),
        ));
    }
    let deformation = Deformation::from_q(q)?;
    let d = dim.get();
    let x = alpha.norm_sqr();
    let norm_sum = q_exponential(x, q, NORM_SUM_TOL)?.value;
    let tail_mass = q_coherent_tail(x, deformation, d, norm_sum);
    if tail_mass > tail_tol {
        return Err(Error::TruncationTooSmall {
            dim: d,
            tail: tail_mass,
            tol: tail_tol,
            minimal_dim: minimal_dim(alpha, deformation, tail_tol)?,
        });
    }

    let mut amps = DVector::zeros(d);
    if x == 0.0 {
        amps[0] = Complex64::new(1.0, 0.0);
    } else {
        let ln_abs = alpha.norm().ln();
        let phase = alpha.arg();
        let ln_z = norm_sum.ln();
        let ln_fact = deformation.ln_factorial_table(d);
        for n in 0..d {
            let nf = n as f64;
            let mag = (nf * ln_abs - 0.5 * ln_fact[n] - 0.5 * ln_z).exp();
            amps[n] = Complex64::from_polar(mag, nf * phase);
        }
        let norm = amps.norm();
        amps /= Complex64::from(norm);
    }
    Ok(MotionalState {
        amps,
        meta: StateMeta::QCoherent {
            alpha_re: alpha.re,
            alpha_im: alpha.im,
            q,
            dim: d,
            tail_mass,
            norm_sum,
        },
    })
}

/// `<f(N)^2> = sum_n |c_n|^2 [n]_q / n` with `f(0)^2 = 1`.
pub fn expectation_f2(state: &MotionalState, q: f64) -> Result<f64> {
    let def = Deformation::from_q(q)?;
    Ok(state
        .probabilities()
        .enumerate()
        .map(|(n, p)| p * def.dressing(n).powi(2))
        .sum())
}

/// Internal (electronic) level of the ion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Internal {
    Ground,
    Excited,
}

impl Internal {
    /// Block index in the joint layout: `g -> 0`, `e -> 1`.
    #[inline]
    pub fn block(self) -> usize {
        match self {
            Internal::Ground => 0,
            Internal::Excited => 1,
        }
    }
}

/// Joint internal-motional state on `2D` amplitudes.
///
/// Layout: index `s * D + n` with `s = 0` for `|g>` and `s = 1` for `|e>`
/// (ground block first).
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub amps: DVector<Complex64>,
    pub dim: TruncationDim,
}

impl JointState {
    pub fn new(amps: DVector<Complex64>, dim: TruncationDim) -> Result<Self> {
        if amps.len() != dim.joint() {
            return Err(Error::DimensionMismatch {
                expected: dim.joint(),
                got: amps.len(),
            });
        }
        Ok(Self { amps, dim })
    }

    #[inline]
    pub fn index(&self, internal: Internal, n: usize) -> usize {
        internal.block() * self.dim.get() + n
    }

    #[inline]
    pub fn amp(&self, internal: Internal, n: usize) -> Complex64 {
        self.amps[self.index(internal, n)]
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }
}

/// Embed `|s> (x) |motional>` into the joint layout.
pub fn joint_state(internal: Internal, motional: &MotionalState) -> JointState {
    let d = motional.dim();
    let mut amps = DVector::zeros(2 * d);
    let offset = internal.block() * d;
    amps.rows_mut(offset, d).copy_from(&motional.amps);
    JointState {
        amps,
        dim: TruncationDim::new(d).expect("motional states have D >= 2"),
    }
}
