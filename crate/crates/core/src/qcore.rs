// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Symmetric q-numbers, q-factorials, the q-exponential sum, the f(N)
//! dressing function and truncated ladder-operator matrices.
//!
//! The deformation is carried as the pair `(q, tau)` with `q = exp(tau)`.
//! All q-numbers are evaluated as `sinh(x tau) / sinh(tau)`, which equals
//! `(q^x - q^-x) / (q - q^-1)` but keeps full precision as `q -> 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deformation parameter `q > 0` together with `tau = ln q`.
///
/// Only one of the two is ever supplied; the other is derived once at
/// construction, so the pair can not drift apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    q: f64,
    tau: f64,
}

impl Deformation {
    /// The undeformed harmonic limit, `q = 1`.
    pub const HARMONIC: Deformation = Deformation { q: 1.0, tau: 0.0 };

    pub fn from_q(q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::invalid(
                "q",
                format!("must be finite and > 0, got {q}"),
            ));
        }
        let tau = if q == 1.0 { 0.0 } else { q.ln() };
        Ok(Self { q, tau })
    }

    pub fn from_tau(tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::invalid("tau", format!("must be finite, got {tau}")));
        }
        let q = tau.exp();
        if q == 0.0 || !q.is_finite() {
            return Err(Error::invalid(
                "tau",
                format!("exp({tau}) is not representable"),
            ));
        }
        Ok(Self { q, tau })
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.tau
    }

    #[inline]
    pub fn is_harmonic(&self) -> bool {
        self.tau == 0.0
    }

    /// `[x]_q`; exactly `x` at `q = 1`.
    #[inline]
    pub fn number(&self, x: f64) -> f64 {
        if self.tau == 0.0 {
            x
        } else {
            // even in tau
            let t = self.tau.abs();
            (x * t).sinh() / t.sinh()
        }
    }

    /// `q^(-n)` evaluated as `exp(-n tau)`.
    #[inline]
    pub fn inverse_power(&self, n: f64) -> f64 {
        (-n * self.tau).exp()
    }

    /// `ln([n]_q!)`, accumulated as a sum of logarithms.
    pub fn ln_factorial(&self, n: usize) -> f64 {
        (2..=n).map(|k| self.number(k as f64).ln()).sum()
    }

    /// `[n]_q!` by the recursive product; fails on overflow.
    pub fn factorial(&self, n: usize) -> Result<f64> {
        let mut acc = 1.0_f64;
        for k in 2..=n {
            acc *= self.number(k as f64);
            if !acc.is_finite() {
                return Err(Error::Overflow(format!("[{n}]_q! (q = {})", self.q)));
            }
        }
        Ok(acc)
    }

    /// Table of `ln([k]_q!)` for `k = 0..len`.
    pub fn ln_factorial_table(&self, len: usize) -> Vec<f64> {
        let mut table = Vec::with_capacity(len);
        let mut acc = 0.0;
        for k in 0..len {
            if k >= 2 {
                acc += self.number(k as f64).ln();
            }
            table.push(acc);
        }
        table
    }

    /// `f(n) = sqrt([n]_q / n)`, with `f(0) = 1`.
    #[inline]
    pub fn dressing(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            (self.number(n as f64) / n as f64).sqrt()
        }
    }
}

impl Default for Deformation {
    fn default() -> Self {
        Deformation::HARMONIC
    }
}

/// Number of retained Fock states `|0>..|D-1>`; always at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TruncationDim(usize);

impl TruncationDim {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(Self(dim))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Joint internal-motional dimension `2D`.
    #[inline]
    pub fn joint(self) -> usize {
        2 * self.0
    }

    pub fn padded(self, pad: usize) -> Self {
        Self(self.0 + pad)
    }
}

impl TryFrom<usize> for TruncationDim {
    type Error = Error;

    fn try_from(value: usize) -> Result<Self> {
        Self::new(value)
    }
}

impl From<TruncationDim> for usize {
    fn from(value: TruncationDim) -> usize {
        value.0
    }
}

/// The model's dial set: deformation, Lamb-Dicke parameter and the trap
/// frequency and detuning in units of the Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QParams {
    pub deformation: Deformation,
    pub epsilon: f64,
    pub omega_bar: f64,
    pub delta_bar: f64,
}

impl QParams {
    pub fn new(
        deformation: Deformation,
        epsilon: f64,
        omega_bar: f64,
        delta_bar: f64,
    ) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::invalid(
                "epsilon",
                format!("must be finite and >= 0, got {epsilon}"),
            ));
        }
        if !omega_bar.is_finite() {
            return Err(Error::invalid("omega_bar", "must be finite"));
        }
        if !delta_bar.is_finite() {
            return Err(Error::invalid("delta_bar", "must be finite"));
        }
        Ok(Self {
            deformation,
            epsilon,
            omega_bar,
            delta_bar,
        })
    }

    /// `epsilon = 0.05`, `omega_bar = 50`, `delta_bar = -50`, `tau = 0.003`.
    pub fn canonical() -> Self {
        Self {
            deformation: Deformation::from_tau(0.003).expect("finite tau"),
            epsilon: 0.05,
            omega_bar: 50.0,
            delta_bar: -50.0,
        }
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.deformation.q()
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.deformation.tau()
    }
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {v}")))
    }
}

/// Symmetric q-number `[x]_q = (q^x - q^-x) / (q - q^-1)`.
pub fn q_number(x: f64, q: f64) -> Result<f64> {
    check_finite("x", x)?;
    Ok(Deformation::from_q(q)?.number(x))
}

/// `[n]_q!` with `[0]_q! = [1]_q! = 1`.
pub fn q_factorial(n: usize, q: f64) -> Result<f64> {
    Deformation::from_q(q)?.factorial(n)
}

/// `ln([n]_q!)`; never overflows.
pub fn ln_q_factorial(n: usize, q: f64) -> Result<f64> {
    Ok(Deformation::from_q(q)?.ln_factorial(n))
}

/// `f(n) = sqrt([n]_q / n)` with the convention `f(0) = 1`.
pub fn f_of_n(n: usize, q: f64) -> Result<f64> {
    Ok(Deformation::from_q(q)?.dressing(n))
}

/// Default term cap for [`q_exponential`].
pub const Q_EXP_MAX_TERMS: usize = 100_000;

/// Value of a truncated q-exponential sum and the number of terms used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QExpSum {
    pub value: f64,
    pub terms: usize,
}

/// `sum_n x^n / [n]_q!`, stopped once the terms are decreasing and the
/// running term has fallen below `tol` times the partial sum.
pub fn q_exponential(x: f64, q: f64, tol: f64) -> Result<QExpSum> {
    q_exponential_capped(x, q, tol, Q_EXP_MAX_TERMS)
}

pub fn q_exponential_capped(x: f64, q: f64, tol: f64, max_terms: usize) -> Result<QExpSum> {
    check_finite("x", x)?;
    if x < 0.0 {
        return Err(Error::invalid("x", format!("must be >= 0, got {x}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    let def = Deformation::from_q(q)?;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for n in 1..max_terms {
        let ratio = x / def.number(n as f64);
        term *= ratio;
        if term == 0.0 {
            return Ok(QExpSum {
                value: sum,
                terms: n,
            });
        }
        sum += term;
        if !sum.is_finite() {
            return Err(Error::Overflow(format!("exp_q({x})")));
        }
        // only stop once past the peak of the term sequence
        if ratio < 1.0 && term <= tol * sum {
            return Ok(QExpSum {
                value: sum,
                terms: n + 1,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "q-exponential",
        terms: max_terms,
    })
}

/// Dense ladder matrices of the deformed oscillator on a truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub dim: TruncationDim,
    pub deformation: Deformation,
    /// `A`, with `<n-1|A|n> = sqrt([n]_q)`.
    pub a_lower: DMatrix<f64>,
    /// `A^dagger`, the transpose of `a_lower`.
    pub a_raise: DMatrix<f64>,
    /// `N = diag(0, 1, ..., D-1)`.
    pub num: DMatrix<f64>,
    /// Diagonal of `f(N)`.
    pub f_diag: DVector<f64>,
}

/// Build `A`, `A^dagger`, `N` and `f(N)` on `|0>..|D-1>`.
pub fn build_operators(dim: TruncationDim, q: f64) -> Result<OperatorSet> {
    Ok(operators_for(dim, Deformation::from_q(q)?))
}

pub fn operators_for(dim: TruncationDim, deformation: Deformation) -> OperatorSet {
    let d = dim.get();
    let mut a_lower = DMatrix::zeros(d, d);
    for n in 1..d {
        a_lower[(n - 1, n)] = deformation.number(n as f64).sqrt();
    }
    let a_raise = a_lower.transpose();
    let num = DMatrix::from_diagonal(&DVector::from_fn(d, |n, _| n as f64));
    let f_diag = DVector::from_fn(d, |n, _| deformation.dressing(n));
    OperatorSet {
        dim,
        deformation,
        a_lower,
        a_raise,
        num,
        f_diag,
    }
}

impl OperatorSet {
    /// Max-abs of `A A^dagger - q A^dagger A - q^(-N)` over the leading
    /// `D-1` levels; the last level sees the truncation edge.
    pub fn q_commutation_residual(&self) -> f64 {
        let q = self.deformation.q();
        let lhs = &self.a_lower * &self.a_raise - q * (&self.a_raise * &self.a_lower);
        let d = self.dim.get() - 1;
        let mut worst = 0.0_f64;
        for m in 0..d {
            for n in 0..d {
                let rhs = if m == n {
                    self.deformation.inverse_power(n as f64)
                } else {
                    0.0
                };
                worst = worst.max((lhs[(m, n)] - rhs).abs());
            }
        }
        worst
    }
}

/// Residuals of `[n+1]_q - q [n]_q = q^(-n)` over `n <= n_max`: the largest
/// absolute value and the largest value relative to `max([n+1]_q, 1)`.
pub fn ladder_identity_residual(q: f64, n_max: usize) -> Result<(f64, f64)> {
    let def = Deformation::from_q(q)?;
    let mut abs = 0.0_f64;
    let mut rel = 0.0_f64;
    for n in 0..=n_max {
        let hi = def.number(n as f64 + 1.0);
        let r = (hi - q * def.number(n as f64) - def.inverse_power(n as f64)).abs();
        abs = abs.max(r);
        rel = rel.max(r / hi.abs().max(1.0));
    }
    Ok((abs, rel))
}

/// Undeformed ladder matrix `a` with `<n-1|a|n> = sqrt(n)`.
pub fn harmonic_lower(dim: TruncationDim) -> DMatrix<f64> {
    let d = dim.get();
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q_CANON: f64 = 1.003_004_504_503_377; // e^0.003

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn q_number_examples() {
        assert_eq!(q_number(0.0, 1.7).unwrap(), 0.0);
        assert_eq!(q_number(5.0, 1.0).unwrap(), 5.0);
        let q = 0.003_f64.exp();
        // 60-digit reference: [2]_q = 2 cosh(0.003)
        assert!(rel(q_number(2.0, q).unwrap(), 2.000_009_000_006_750_002) < 1e-14);
        assert!(rel(q_number(3.0, q).unwrap(), 3.000_036_000_108_000_13) < 1e-14);
        assert!(rel(q_number(2.5, 2.0).unwrap(), 3.653_385_036_130_495_5) < 1e-14);
    }

    #[test]
    fn q_number_matches_printed_ratio_away_from_one() {
        for q in [0.5_f64, 0.9, 1.5, 2.0, 3.0] {
            for x in [0.5, 1.0, 2.0, 7.0, 12.5] {
                let direct = (q.powf(x) - q.powf(-x)) / (q - 1.0 / q);
                assert!(rel(q_number(x, q).unwrap(), direct) < 1e-13, "q={q} x={x}");
            }
        }
    }

    #[test]
    fn q_number_rejects_bad_input() {
        assert!(q_number(f64::NAN, 1.1).is_err());
        assert!(q_number(1.0, 0.0).is_err());
        assert!(q_number(1.0, -2.0).is_err());
        assert!(q_number(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn factorial_examples() {
        assert_eq!(q_factorial(0, 1.3).unwrap(), 1.0);
        assert_eq!(q_factorial(1, 1.3).unwrap(), 1.0);
        assert_eq!(q_factorial(3, 1.0).unwrap(), 6.0);
        // [1]=1, [2]=2.5, [3]=5.25 at q=2
        assert!(rel(q_factorial(3, 2.0).unwrap(), 13.125) < 1e-14);
    }

    #[test]
    fn factorial_overflow_and_log_domain() {
        assert!(matches!(q_factorial(200, 1.0), Err(Error::Overflow(_))));
        let ln200: f64 = (2..=200).map(|k| (k as f64).ln()).sum();
        assert!(rel(ln_q_factorial(200, 1.0).unwrap(), ln200) < 1e-14);
        let d = Deformation::from_q(1.2).unwrap();
        let table = d.ln_factorial_table(30);
        for (n, v) in table.iter().enumerate() {
            assert!((v - d.ln_factorial(n)).abs() < 1e-12);
            assert!(rel(v.exp(), d.factorial(n).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn q_exponential_examples() {
        let s = q_exponential(0.0, 1.4, 1e-17).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.terms, 1);
        let e = q_exponential(1.0, 1.0, 1e-17).unwrap();
        assert!(rel(e.value, std::f64::consts::E) < 1e-15);
        // 200-term, 60-digit summation
        let s = q_exponential(16.0, 0.003_f64.exp(), 1e-17).unwrap();
        assert!(rel(s.value, 8_862_841.876_568_218_5) < 1e-12);
        assert!(s.terms < 200);
    }

    #[test]
    fn q_exponential_term_cap() {
        assert!(matches!(
            q_exponential_capped(50.0, 1.0, 1e-17, 10),
            Err(Error::NonConvergence { .. })
        ));
        assert!(q_exponential(-1.0, 1.0, 1e-10).is_err());
        assert!(q_exponential(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn dressing_examples() {
        assert_eq!(f_of_n(0, 1.7).unwrap(), 1.0);
        assert!((f_of_n(1, 1.7).unwrap() - 1.0).abs() < 1e-15);
        for n in 0..20 {
            assert_eq!(f_of_n(n, 1.0).unwrap(), 1.0);
        }
        assert!(rel(f_of_n(2, 2.0).unwrap(), 1.25_f64.sqrt()) < 1e-15);
    }

    #[test]
    fn operator_examples() {
        let ops = build_operators(TruncationDim::new(2).unwrap(), 1.0).unwrap();
        assert_eq!(
            ops.a_lower,
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])
        );
        let d4 = TruncationDim::new(4).unwrap();
        let ops = build_operators(d4, 1.0).unwrap();
        assert_eq!(ops.a_lower[(2, 3)], 3.0_f64.sqrt());
        assert_eq!(ops.a_lower, harmonic_lower(d4));
        let ops = build_operators(d4, Q_CANON).unwrap();
        assert!(rel(ops.a_lower[(2, 3)].powi(2), 3.000_036_000_108_000_13) < 1e-14);
        assert_eq!(ops.a_raise, ops.a_lower.transpose());
        assert_eq!(
            ops.num.diagonal(),
            DVector::from_vec(vec![0.0, 1.0, 2.0, 3.0])
        );
        assert!(TruncationDim::new(1).is_err());
    }

    #[test]
    fn number_commutators_interior() {
        let d = TruncationDim::new(12).unwrap();
        let ops = build_operators(d, 1.07).unwrap();
        let raise = &ops.num * &ops.a_raise - &ops.a_raise * &ops.num;
        let lower = &ops.num * &ops.a_lower - &ops.a_lower * &ops.num;
        for m in 0..11 {
            for n in 0..11 {
                assert!((raise[(m, n)] - ops.a_raise[(m, n)]).abs() < 1e-12);
                assert!((lower[(m, n)] + ops.a_lower[(m, n)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residual_helpers() {
        for q in [0.95, 1.0, 1.05] {
            let ops = build_operators(TruncationDim::new(60).unwrap(), q).unwrap();
            assert!(ops.q_commutation_residual() <= 1e-12, "q={q}");
        }
        assert_eq!(ladder_identity_residual(1.0, 100).unwrap(), (0.0, 0.0));
        let (abs, rel) = ladder_identity_residual(Q_CANON, 100).unwrap();
        assert!(abs <= 1e-13 && rel <= 1e-15);
        // the full truncated commutator fails on the edge level
        let ops = build_operators(TruncationDim::new(10).unwrap(), 1.05).unwrap();
        let edge = (&ops.a_lower * &ops.a_raise - 1.05 * (&ops.a_raise * &ops.a_lower))[(9, 9)];
        assert!((edge - ops.deformation.inverse_power(9.0)).abs() > 1.0);
    }

    #[test]
    fn q_commutation_interior() {
        let d = TruncationDim::new(40).unwrap();
        for q in [0.95, 1.0, 1.05, Q_CANON] {
            let ops = build_operators(d, q).unwrap();
            let lhs = &ops.a_lower * &ops.a_raise - q * (&ops.a_raise * &ops.a_lower);
            for m in 0..39 {
                for n in 0..39 {
                    let rhs = if m == n {
                        ops.deformation.inverse_power(n as f64)
                    } else {
                        0.0
                    };
                    assert!((lhs[(m, n)] - rhs).abs() <= 1e-12, "q={q} ({m},{n})");
                }
            }
        }
    }

    #[test]
    fn number_operator_is_not_raise_lower() {
        let d = TruncationDim::new(8).unwrap();
        let ops = build_operators(d, 1.1).unwrap();
        let ada = &ops.a_raise * &ops.a_lower;
        for n in 0..8 {
            assert!(
                rel(
                    ada[(n, n)].max(1e-300),
                    ops.deformation.number(n as f64).max(1e-300)
                ) < 1e-13
            );
        }
        assert!((&ada - &ops.num).amax() > 1e-3);
        let harmonic = build_operators(d, 1.0).unwrap();
        assert!((&harmonic.a_raise * &harmonic.a_lower - &harmonic.num).amax() < 1e-13);
    }

    #[test]
    fn continuity_at_q_one() {
        for q in [1.0 + 1e-9, 1.0 - 1e-9] {
            let d = Deformation::from_q(q).unwrap();
            for n in 0..50 {
                assert!((d.number(n as f64) - n as f64).abs() < 1e-8 * n.max(1) as f64);
                assert!((d.dressing(n) - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn canonical_params_and_tau() {
        let p = QParams::canonical();
        assert!((p.q() - Q_CANON).abs() < 1e-15);
        assert_eq!(p.tau(), 0.003);
        assert!(QParams::new(Deformation::HARMONIC, -0.1, 50.0, -50.0).is_err());
        assert!(Deformation::from_q(1.0).unwrap().is_harmonic());
        assert!(Deformation::from_tau(0.0).unwrap().is_harmonic());
    }

    proptest! {
        #[test]
        fn q_number_symmetric_under_inversion(x in -30.0f64..30.0, q in 0.2f64..5.0) {
            let a = q_number(x, q).unwrap();
            let b = q_number(x, 1.0 / q).unwrap();
            prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
        }

        #[test]
        fn ladder_identity(n in 0usize..=100, q in 0.9f64..1.1) {
            let d = Deformation::from_q(q).unwrap();
            let hi = d.number(n as f64 + 1.0);
            let lo = d.number(n as f64);
            let resid = hi - q * lo - d.inverse_power(n as f64);
            prop_assert!(resid.abs() <= 1e-13 * hi.abs().max(1.0));
        }
    }
}
