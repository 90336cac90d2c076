// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Ion-laser coupling operators.
//!
//! The harmonic operator `F = exp[i eps (a^dagger + a)]` is built from its
//! closed form in associated Laguerre polynomials. The deformed operator
//! `F_q = exp(-eps^2/2) exp(i eps A^dagger) exp(i eps A)` has three
//! independent routes:
//!
//! * [`fq_closed`]: closed-form matrix elements, the production route;
//! * [`fq_factored`]: the two operator exponentials as matrix power series
//!   on a padded space, cropped afterwards;
//! * [`fq_dressed`]: the same product with generators assembled from the
//!   undeformed `a` and the diagonal dressing `f(N)`.
//!
//! [`f_effective`] is the rescaled harmonic approximation that replaces the
//! number-dependent `eps f(N)` by a single effective Lamb-Dicke parameter.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{harmonic_lower, operators_for, Deformation, TruncationDim};
use crate::qstates::{expectation_f2, MotionalState};

pub type CMatrix = DMatrix<Complex64>;

/// Default number of extra Fock levels used by the series routes.
pub const DEFAULT_PAD: usize = 20;
/// Relative stopping threshold of the matrix power series.
pub const SERIES_REL_TOL: f64 = 1e-16;
/// Term cap of the matrix power series.
pub const SERIES_MAX_TERMS: usize = 200;

/// Which construction produced a coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRoute {
    HarmonicClosed,
    HarmonicFactored,
    QClosed,
    QFactoredSeries,
    QDressedSeries,
    HarmonicEffective,
}

impl CouplingRoute {
    pub const ALL: [CouplingRoute; 6] = [
        CouplingRoute::HarmonicClosed,
        CouplingRoute::HarmonicFactored,
        CouplingRoute::QClosed,
        CouplingRoute::QFactoredSeries,
        CouplingRoute::QDressedSeries,
        CouplingRoute::HarmonicEffective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CouplingRoute::HarmonicClosed => "harmonic_closed",
            CouplingRoute::HarmonicFactored => "harmonic_factored",
            CouplingRoute::QClosed => "q_closed",
            CouplingRoute::QFactoredSeries => "q_factored_series",
            CouplingRoute::QDressedSeries => "q_dressed_series",
            CouplingRoute::HarmonicEffective => "harmonic_effective",
        }
    }

    /// Routes valid for the deformed Hamiltonian.
    pub fn is_deformed_route(self) -> bool {
        matches!(
            self,
            CouplingRoute::QClosed
                | CouplingRoute::QFactoredSeries
                | CouplingRoute::QDressedSeries
                | CouplingRoute::HarmonicEffective
        )
    }
}

impl fmt::Display for CouplingRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CouplingRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CouplingRoute::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidRoute(s.to_owned()))
    }
}

/// Parameters a coupling matrix was built with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub epsilon: f64,
    pub q: f64,
    pub dim: usize,
    pub pad: usize,
    /// Effective Lamb-Dicke parameter, set only by the effective route.
    pub epsilon_eff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub mat: CMatrix,
    pub route: CouplingRoute,
    pub params: CouplingParams,
}

impl CouplingMatrix {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Euclidean norm of column `n`.
    pub fn column_norm(&self, n: usize) -> f64 {
        self.mat.column(n).norm()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "epsilon",
            format!("must be finite and >= 0, got {epsilon}"),
        ))
    }
}

fn ln_factorials(len: usize) -> Vec<f64> {
    Deformation::HARMONIC.ln_factorial_table(len)
}

/// `i^k` without rounding.
fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Associated Laguerre polynomial `L_n^(k)(x)` by the three-term recurrence.
pub fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Harmonic coupling `F` from
/// `<m|F|n> = e^(-eps^2/2) (i eps)^(n-m) sqrt(m!/n!) L_m^(n-m)(eps^2)`, `m <= n`,
/// mirrored for `m > n`.
pub fn f_harmonic(epsilon: f64, dim: TruncationDim) -> Result<CouplingMatrix> {
    check_epsilon(epsilon)?;
    let d = dim.get();
    let ln_fact = ln_factorials(d);
    let x = epsilon * epsilon;
    let damp = (-0.5 * x).exp();
    let mat = CMatrix::from_fn(d, d, |m, n| {
        let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
        let s = hi - lo;
        if s > 0 && epsilon == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ln_eps_pow = if s == 0 { 0.0 } else { s as f64 * epsilon.ln() };
        let mag = (ln_eps_pow + 0.5 * (ln_fact[lo] - ln_fact[hi])).exp();
        i_pow(s) * (damp * mag * laguerre(lo, s, x))
    });
    Ok(CouplingMatrix {
        mat,
        route: CouplingRoute::HarmonicClosed,
        params: CouplingParams {
            epsilon,
            q: 1.0,
            dim: d,
            pad: 0,
            epsilon_eff: None,
        },
    })
}

/// Closed-form element `<m|F_q|n>`. For `m <= n`:
///
/// `e^(-eps^2/2) (i eps)^(n-m) sqrt([m]!/[n]!) sum_{k=0}^{m} eps^(2k) (-1)^k [n]! / (k! (n-m+k)! [m-k]!)`
///
/// with q-factorials in brackets and ordinary factorials otherwise. The
/// `m > n` elements follow from the same double series with `m` and `n`
/// exchanged.
fn fq_element(m: usize, n: usize, epsilon: f64, ln_qfact: &[f64], ln_fact: &[f64]) -> Complex64 {
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    let s = hi - lo;
    if epsilon == 0.0 {
        return if s == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let ln_eps = epsilon.ln();
    // sqrt([lo]!/[hi]!) * [hi]! = sqrt([lo]! [hi]!)
    let ln_prefix = 0.5 * (ln_qfact[lo] + ln_qfact[hi]);
    let mut sum = 0.0;
    for k in 0..=lo {
        let ln_term = (s + 2 * k) as f64 * ln_eps + ln_prefix
            - ln_fact[k]
            - ln_fact[s + k]
            - ln_qfact[lo - k];
        let term = ln_term.exp();
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    i_pow(s) * ((-0.5 * epsilon * epsilon).exp() * sum)
}

/// Deformed coupling `F_q` from its closed-form matrix elements.
pub fn fq_closed(epsilon: f64, q: f64, dim: TruncationDim) -> Result<CouplingMatrix> {
    check_epsilon(epsilon)?;
    let def = Deformation::from_q(q)?;
    let d = dim.get();
    let ln_qfact = def.ln_factorial_table(d);
    let ln_fact = ln_factorials(2 * d);
    let mat = CMatrix::from_fn(d, d, |m, n| fq_element(m, n, epsilon, &ln_qfact, &ln_fact));
    if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow(format!(
            "F_q matrix elements (eps = {epsilon}, q = {q})"
        )));
    }
    Ok(CouplingMatrix {
        mat,
        route: CouplingRoute::QClosed,
        params: CouplingParams {
            epsilon,
            q,
            dim: d,
            pad: 0,
            epsilon_eff: None,
        },
    })
}

/// Largest modulus among complex entries.
pub fn max_modulus<'a>(entries: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    entries.into_iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Stopping rule for the matrix exponential series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    /// Stop once the latest term's max-abs falls below this fraction of the
    /// partial sum's.
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: SERIES_REL_TOL,
            max_terms: SERIES_MAX_TERMS,
        }
    }
}

/// `exp(M)` as a power series under the default [`SeriesControl`].
pub fn expm_series(m: &CMatrix) -> Result<CMatrix> {
    expm_series_with(m, SeriesControl::default())
}

pub fn expm_series_with(m: &CMatrix, ctl: SeriesControl) -> Result<CMatrix> {
    let n = m.nrows();
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..ctl.max_terms {
        term = &term * m / Complex64::from(k as f64);
        sum += &term;
        let t = max_modulus(term.iter());
        if t == 0.0 || t < ctl.rel_tol * max_modulus(sum.iter()) {
            return Ok(sum);
        }
        if !t.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        what: "matrix exponential series",
        terms: ctl.max_terms,
    })
}

/// `e^(-eps^2/2) exp(i eps raise) exp(i eps lower)` cropped to `dim`.
fn factored_product(
    epsilon: f64,
    raise: &CMatrix,
    lower: &CMatrix,
    dim: usize,
    ctl: SeriesControl,
) -> Result<CMatrix> {
    let gen_up = raise * Complex64::new(0.0, epsilon);
    let gen_down = lower * Complex64::new(0.0, epsilon);
    let full = expm_series_with(&gen_up, ctl)?
        * expm_series_with(&gen_down, ctl)?
        * Complex64::from((-0.5 * epsilon * epsilon).exp());
    Ok(full.view((0, 0), (dim, dim)).into_owned())
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `F_q` from the factored exponentials with the q-ladder matrices,
/// evaluated on `dim + pad` levels and cropped.
pub fn fq_factored(epsilon: f64, q: f64, dim: TruncationDim, pad: usize) -> Result<CouplingMatrix> {
    fq_factored_with(epsilon, q, dim, pad, SeriesControl::default())
}

pub fn fq_factored_with(
    epsilon: f64,
    q: f64,
    dim: TruncationDim,
    pad: usize,
    ctl: SeriesControl,
) -> Result<CouplingMatrix> {
    check_epsilon(epsilon)?;
    let def = Deformation::from_q(q)?;
    let ops = operators_for(dim.padded(pad), def);
    let mat = factored_product(
        epsilon,
        &to_complex(&ops.a_raise),
        &to_complex(&ops.a_lower),
        dim.get(),
        ctl,
    )?;
    let route = if def.is_harmonic() {
        CouplingRoute::HarmonicFactored
    } else {
        CouplingRoute::QFactoredSeries
    };
    Ok(CouplingMatrix {
        mat,
        route,
        params: CouplingParams {
            epsilon,
            q,
            dim: dim.get(),
            pad,
            epsilon_eff: None,
        },
    })
}

/// Dressed generators `(f(N) a^dagger, a f(N))` on `dim` levels.
pub fn dressed_generators(dim: TruncationDim, q: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let def = Deformation::from_q(q)?;
    let a = harmonic_lower(dim);
    let f = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim.get(), |n, _| {
        def.dressing(n)
    }));
    let lower = &a * &f;
    let raise = &f * a.transpose();
    Ok((raise, lower))
}

/// `F_q` from the undeformed ladder matrices dressed by `f(N)`.
pub fn fq_dressed(epsilon: f64, q: f64, dim: TruncationDim, pad: usize) -> Result<CouplingMatrix> {
    fq_dressed_with(epsilon, q, dim, pad, SeriesControl::default())
}

pub fn fq_dressed_with(
    epsilon: f64,
    q: f64,
    dim: TruncationDim,
    pad: usize,
    ctl: SeriesControl,
) -> Result<CouplingMatrix> {
    check_epsilon(epsilon)?;
    let (raise, lower) = dressed_generators(dim.padded(pad), q)?;
    let mat = factored_product(
        epsilon,
        &to_complex(&raise),
        &to_complex(&lower),
        dim.get(),
        ctl,
    )?;
    Ok(CouplingMatrix {
        mat,
        route: CouplingRoute::QDressedSeries,
        params: CouplingParams {
            epsilon,
            q,
            dim: dim.get(),
            pad,
            epsilon_eff: None,
        },
    })
}

/// Scalar coefficient `e^(-eps^2/2) (i eps)^(n+k) / (n! k!)` of
/// `(A^dagger)^n A^k` in the double-series expansion of `F_q`.
pub fn series_coefficient(epsilon: f64, n: usize, k: usize) -> Complex64 {
    let ln_fact = ln_factorials(n.max(k) + 1);
    let mag = if n + k == 0 {
        1.0
    } else if epsilon == 0.0 {
        0.0
    } else {
        ((n + k) as f64 * epsilon.ln() - ln_fact[n] - ln_fact[k]).exp()
    };
    i_pow(n + k) * ((-0.5 * epsilon * epsilon).exp() * mag)
}

/// Explicit double sum `sum_{n,k <= order} c_{nk} (A^dagger)^n A^k` on
/// `dim + pad` levels, cropped to `dim`.
pub fn fq_double_series(
    epsilon: f64,
    q: f64,
    dim: TruncationDim,
    pad: usize,
    order: usize,
) -> Result<CMatrix> {
    check_epsilon(epsilon)?;
    let ops = operators_for(dim.padded(pad), Deformation::from_q(q)?);
    let full = dim.padded(pad).get();
    let raise = to_complex(&ops.a_raise);
    let lower = to_complex(&ops.a_lower);
    let mut raise_pows = vec![CMatrix::identity(full, full)];
    let mut lower_pows = vec![CMatrix::identity(full, full)];
    for p in 1..=order {
        raise_pows.push(&raise_pows[p - 1] * &raise);
        lower_pows.push(&lower_pows[p - 1] * &lower);
    }
    let mut sum = CMatrix::zeros(full, full);
    for (n, up) in raise_pows.iter().enumerate() {
        for (k, down) in lower_pows.iter().enumerate() {
            sum += up * down * series_coefficient(epsilon, n, k);
        }
    }
    Ok(sum.view((0, 0), (dim.get(), dim.get())).into_owned())
}

/// The reversed ordering `e^(+eps^2/2) exp(i eps A) exp(i eps A^dagger)`,
/// cropped to `dim`. Equal to `F_q` only at `q = 1`.
pub fn reversed_ordering(epsilon: f64, q: f64, dim: TruncationDim, pad: usize) -> Result<CMatrix> {
    check_epsilon(epsilon)?;
    let ops = operators_for(dim.padded(pad), Deformation::from_q(q)?);
    let down = expm_series(&(to_complex(&ops.a_lower) * Complex64::new(0.0, epsilon)))?;
    let up = expm_series(&(to_complex(&ops.a_raise) * Complex64::new(0.0, epsilon)))?;
    let full = down * up * Complex64::from((0.5 * epsilon * epsilon).exp());
    Ok(full.view((0, 0), (dim.get(), dim.get())).into_owned())
}

/// `eps_q = eps sqrt(<f(N)^2>)` over the given motional state.
pub fn effective_lamb_dicke(epsilon: f64, state: &MotionalState, q: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(epsilon * expectation_f2(state, q)?.sqrt())
}

/// Rescaled harmonic approximation
/// `e^((eps_q^2 - eps^2)/2) exp[i eps_q (a^dagger + a)]`.
pub fn f_effective(
    epsilon: f64,
    state: &MotionalState,
    q: f64,
    dim: TruncationDim,
) -> Result<CouplingMatrix> {
    let eps_q = effective_lamb_dicke(epsilon, state, q)?;
    let scale = (0.5 * (eps_q * eps_q - epsilon * epsilon)).exp();
    let harmonic = f_harmonic(eps_q, dim)?;
    Ok(CouplingMatrix {
        mat: harmonic.mat * Complex64::from(scale),
        route: CouplingRoute::HarmonicEffective,
        params: CouplingParams {
            epsilon,
            q,
            dim: dim.get(),
            pad: 0,
            epsilon_eff: Some(eps_q),
        },
    })
}

/// Build the coupling matrix for `route`. The effective route needs the
/// motional state that defines `<f(N)^2>`.
pub fn build_coupling(
    route: CouplingRoute,
    epsilon: f64,
    q: f64,
    dim: TruncationDim,
    pad: usize,
    state: Option<&MotionalState>,
) -> Result<CouplingMatrix> {
    build_coupling_with(route, epsilon, q, dim, pad, SeriesControl::default(), state)
}

pub fn build_coupling_with(
    route: CouplingRoute,
    epsilon: f64,
    q: f64,
    dim: TruncationDim,
    pad: usize,
    ctl: SeriesControl,
    state: Option<&MotionalState>,
) -> Result<CouplingMatrix> {
    match route {
        CouplingRoute::HarmonicClosed | CouplingRoute::HarmonicFactored if q != 1.0 => Err(
            Error::InvalidRoute(format!("{route} requires q = 1, got q = {q}")),
        ),
        CouplingRoute::HarmonicClosed => f_harmonic(epsilon, dim),
        CouplingRoute::HarmonicFactored => fq_factored_with(epsilon, 1.0, dim, pad, ctl),
        CouplingRoute::QClosed => fq_closed(epsilon, q, dim),
        CouplingRoute::QFactoredSeries => fq_factored_with(epsilon, q, dim, pad, ctl),
        CouplingRoute::QDressedSeries => fq_dressed_with(epsilon, q, dim, pad, ctl),
        CouplingRoute::HarmonicEffective => {
            let state = state.ok_or_else(|| {
                Error::InvalidRoute("harmonic_effective needs a reference motional state".into())
            })?;
            f_effective(epsilon, state, q, dim)
        }
    }
}

/// Largest elementwise modulus of `a - b` over the leading `block x block`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix, block: usize) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..block {
        for i in 0..block {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}
