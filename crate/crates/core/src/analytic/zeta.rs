//! Euler-Maclaurin evaluation of the Riemann zeta function.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{pairwise_sum, pairwise_sum_complex};

/// Largest number of Bernoulli correction terms.
pub const MAX_M: usize = 12;

/// Default number of correction terms.
pub const DEFAULT_M: usize = 8;

/// `B_2, B_4, ..., B_26` as exact fractions.
const BERNOULLI: [(f64, f64); 13] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
    (-236364091.0, 2730.0),
    (8553103.0, 6.0),
];

/// `B_{2j} / (2j)!` for `j = 1..=13`.
fn bernoulli_over_factorial(j: usize) -> f64 {
    let (num, den) = BERNOULLI[j - 1];
    let mut fact = 1.0;
    for i in 2..=2 * j {
        fact *= i as f64;
    }
    num / den / fact
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
}

/// `N = max(20, ceil(2 |Im s|))`, `M = 8`.
pub fn auto_params(s: Complex64) -> (usize, usize) {
    let n = (2.0 * s.im.abs()).ceil() as usize;
    (n.max(20), DEFAULT_M)
}

pub fn zeta(s: Complex64) -> Result<EvalResult> {
    let (n, m) = auto_params(s);
    zeta_em(s, n, m)
}

/// `zeta(s)` from `N` direct terms and `M` Bernoulli corrections.
///
/// The error estimate is the first omitted correction, scaled by the
/// standard remainder factor `|s + 2M + 1| / (sigma + 2M + 1)`, plus a
/// rounding allowance for the direct sum.
pub fn zeta_em(s: Complex64, n: usize, m: usize) -> Result<EvalResult> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite argument {s}")));
    }
    if (s - 1.0).norm() < 1e-12 {
        return Err(Error::Pole("zeta at s = 1".into()));
    }
    if n < 1 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if m > MAX_M {
        return Err(Error::InvalidInput(format!("M = {m} exceeds {MAX_M}")));
    }
    let tail_order = (2 * m + 1) as f64;
    if s.re + tail_order <= 0.0 {
        return Err(Error::NonConvergent(format!(
            "Re s = {} too far left for M = {m}",
            s.re
        )));
    }
    let nf = n as f64;
    let growth = (s + tail_order).norm();
    if growth >= 2.0 * std::f64::consts::PI * nf {
        return Err(Error::NonConvergent(format!(
            "N = {n} too small for |s + 2M + 1| = {growth:.3}"
        )));
    }

    let terms: Vec<Complex64> = (1..=n)
        .into_par_iter()
        .map(|k| (-s * (k as f64).ln()).exp())
        .collect();
    let head = pairwise_sum_complex(&terms);
    let s_abs = s.norm();
    let rounding: Vec<f64> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| t.norm() * (1.0 + s_abs * ((i + 1) as f64).ln()))
        .collect();
    let rounding = 4.0 * f64::EPSILON * pairwise_sum(&rounding);

    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp();
    let mut value = head - 0.5 * n_pow + n_pow * nf / (s - 1.0);

    // f_j = s (s+1) ... (s+2j-2) N^{-s-2j+1}
    let mut f = s * n_pow / nf;
    for j in 1..=m {
        value += bernoulli_over_factorial(j) * f;
        let a = 2.0 * j as f64;
        f = f * (s + a - 1.0) * (s + a) / (nf * nf);
    }
    let omitted = (bernoulli_over_factorial(m + 1) * f).norm();
    let truncation = omitted * growth / (s.re + tail_order);

    Ok(EvalResult {
        value,
        abs_error_estimate: truncation + rounding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn classical_values() {
        let v = zeta(z(2.0, 0.0)).unwrap().value;
        assert!((v.re - PI * PI / 6.0).abs() < 1e-10 && v.im.abs() < 1e-14);
        let v = zeta(z(0.0, 0.0)).unwrap().value;
        assert!((v.re + 0.5).abs() < 1e-10);
        let v = zeta(z(-1.0, 0.0)).unwrap().value;
        assert!((v.re + 1.0 / 12.0).abs() < 1e-10);
        let v = zeta(z(4.0, 0.0)).unwrap().value;
        assert!((v.re - PI.powi(4) / 90.0).abs() < 1e-12);
    }

    #[test]
    fn first_zero_on_the_critical_line() {
        // first nontrivial zero ordinate, 14.134725141734693...
        let v = zeta(z(0.5, 14.134_725_141_734_693)).unwrap().value;
        assert!(v.norm() < 1e-10, "{v}");
    }

    #[test]
    fn pole_and_parameter_errors() {
        assert!(matches!(zeta(z(1.0, 0.0)), Err(Error::Pole(_))));
        assert!(matches!(zeta_em(z(2.0, 0.0), 20, 13), Err(Error::InvalidInput(_))));
        assert!(matches!(zeta_em(z(0.5, 500.0), 20, 8), Err(Error::NonConvergent(_))));
        assert!(matches!(zeta_em(z(-30.0, 0.0), 40, 8), Err(Error::NonConvergent(_))));
    }

    #[test]
    fn conjugate_symmetry() {
        let a = zeta(z(0.3, 37.0)).unwrap().value;
        let b = zeta(z(0.3, -37.0)).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-12);
    }
}
