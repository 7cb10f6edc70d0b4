//! Dirichlet coefficients from local Euler factors.
//!
//! An L-series is described by its Satake roots at each prime. The local
//! factor `prod_i (1 - alpha_i t)^{-1}` is expanded as a power series in `t`,
//! and the global coefficients follow multiplicatively.
//!
//! Satake roots are held in double-double precision. Unit-modulus roots
//! rounded to `f64` carry an absolute error near `1e-16`, which swamps small
//! local coefficients such as `lambda(p)^2` after the Rankin-Selberg
//! squaring. Tables themselves are plain `f64`.

mod cache;
mod sieve;

use std::fmt;
use std::sync::Arc;

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

pub use cache::{
    decode_exact_table, decode_table, encode_exact_table, encode_table, load_exact_table,
    load_table, save_exact_table, save_table, ExactTable, MAGIC,
};
pub use sieve::{
    is_prime, multiplicative_sieve, multiplicative_sieve_with, primes_up_to,
    smallest_prime_factors, SieveOptions, DEFAULT_MAX_CUTOFF,
};

/// A complex number in double-double precision.
pub type Root = Complex<TwoFloat>;

pub fn root(re: f64, im: f64) -> Root {
    Complex::new(TwoFloat::from(re), TwoFloat::from(im))
}

pub fn root_from_c64(z: Complex64) -> Root {
    root(z.re, z.im)
}

pub fn root_to_c64(z: &Root) -> Complex64 {
    Complex64::new(f64::from(z.re), f64::from(z.im))
}

/// Local roots of an Euler factor at one prime.
#[derive(Debug, Clone, PartialEq)]
pub struct SatakeSet {
    prime: u64,
    roots: Vec<Root>,
}

impl SatakeSet {
    pub fn new(prime: u64, roots: Vec<Root>) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::InvalidInput(
                "a Satake set needs at least one root".into(),
            ));
        }
        if !is_prime(prime) {
            return Err(Error::InvalidInput(format!("{prime} is not prime")));
        }
        Ok(Self { prime, roots })
    }

    pub fn from_c64(prime: u64, roots: &[Complex64]) -> Result<Self> {
        Self::new(prime, roots.iter().copied().map(root_from_c64).collect())
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[Root] {
        &self.roots
    }

    pub fn roots_c64(&self) -> Vec<Complex64> {
        self.roots.iter().map(root_to_c64).collect()
    }

    /// Product of all roots, rounded to `f64`.
    pub fn root_product(&self) -> Complex64 {
        let one = root(1.0, 0.0);
        root_to_c64(&self.roots.iter().fold(one, |acc, r| acc * r))
    }
}

/// Coefficients `c(0..=e_max)` of `prod_i (1 - alpha_i t)^{-1}`.
///
/// Each root multiplies the running series by a geometric series, which is
/// the update `c(e) += alpha * c(e-1)` in increasing `e`. The result is the
/// complete homogeneous symmetric polynomial `h_e(roots)`.
pub fn local_coeffs(roots: &[Root], e_max: usize) -> Vec<Root> {
    let zero = root(0.0, 0.0);
    let mut c = vec![zero; e_max + 1];
    c[0] = root(1.0, 0.0);
    for alpha in roots {
        for e in 1..=e_max {
            let prev = c[e - 1];
            c[e] += *alpha * prev;
        }
    }
    c
}

/// `f64` convenience wrapper around [`local_coeffs`].
pub fn local_coeffs_c64(roots: &[Complex64], e_max: usize) -> Vec<Complex64> {
    let roots: Vec<Root> = roots.iter().copied().map(root_from_c64).collect();
    local_coeffs(&roots, e_max).iter().map(root_to_c64).collect()
}

/// Rankin-Selberg square: all products `alpha_i * conj(alpha_j)`, row-major.
pub fn rankin_square(set: &SatakeSet) -> SatakeSet {
    let mut roots = Vec::with_capacity(set.degree() * set.degree());
    for a in &set.roots {
        for b in &set.roots {
            roots.push(*a * b.conj());
        }
    }
    SatakeSet {
        prime: set.prime,
        roots,
    }
}

pub type LocalFactor = Arc<dyn Fn(u64) -> SatakeSet + Send + Sync>;

/// A degree-`d` L-series given by its local factors and analytic metadata.
#[derive(Clone)]
pub struct LSeriesSpec {
    pub label: String,
    pub degree: usize,
    local_factor: LocalFactor,
    pub pole_order_at_1: u32,
    pub residue_hint: Option<f64>,
    /// `L(s) = prod_i zeta(s - shift_i)` when present.
    pub shifts: Option<Vec<Complex64>>,
    /// Growth exponent `degree / 2`.
    pub critical_exponent: f64,
    /// Claimed non-negativity of every coefficient, checked when sieving.
    pub nonneg: bool,
    /// Largest prime the local-factor map can serve.
    pub max_prime: Option<u64>,
    /// Entire factor `M` with `L(s) = zeta(s) * M(s)`, when known.
    pub cofactor: Option<Arc<LSeriesSpec>>,
}

impl fmt::Debug for LSeriesSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LSeriesSpec")
            .field("label", &self.label)
            .field("degree", &self.degree)
            .field("pole_order_at_1", &self.pole_order_at_1)
            .field("residue_hint", &self.residue_hint)
            .field("shifts", &self.shifts)
            .field("nonneg", &self.nonneg)
            .field("max_prime", &self.max_prime)
            .field("cofactor", &self.cofactor.as_ref().map(|c| c.label.clone()))
            .finish()
    }
}

impl LSeriesSpec {
    pub fn new(label: impl Into<String>, degree: usize, local_factor: LocalFactor) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("degree must be positive".into()));
        }
        Ok(Self {
            label: label.into(),
            degree,
            local_factor,
            pole_order_at_1: 0,
            residue_hint: None,
            shifts: None,
            critical_exponent: degree as f64 / 2.0,
            nonneg: false,
            max_prime: None,
            cofactor: None,
        })
    }

    pub fn with_pole(mut self, order: u32, residue_hint: Option<f64>) -> Self {
        self.pole_order_at_1 = order;
        self.residue_hint = residue_hint;
        self
    }

    pub fn with_shifts(mut self, shifts: Vec<Complex64>) -> Result<Self> {
        if shifts.len() != self.degree {
            return Err(Error::InvalidInput(format!(
                "{} shifts for a degree-{} series",
                shifts.len(),
                self.degree
            )));
        }
        if let Some(bad) = shifts.iter().find(|z| z.re.abs() > 1e-12) {
            return Err(Error::InvalidInput(format!(
                "shift {bad} is not purely imaginary"
            )));
        }
        self.shifts = Some(shifts);
        Ok(self)
    }

    pub fn with_nonneg(mut self, nonneg: bool) -> Self {
        self.nonneg = nonneg;
        self
    }

    pub fn with_max_prime(mut self, max_prime: u64) -> Self {
        self.max_prime = Some(max_prime);
        self
    }

    pub fn with_cofactor(mut self, cofactor: LSeriesSpec) -> Self {
        self.cofactor = Some(Arc::new(cofactor));
        self
    }

    /// Satake set at `p`, checked against the declared degree and prime range.
    pub fn local_factor(&self, p: u64) -> Result<SatakeSet> {
        if let Some(max) = self.max_prime {
            if p > max {
                return Err(Error::Domain(format!(
                    "{}: local factor requested at p = {p} beyond the available range {max}",
                    self.label
                )));
            }
        }
        let set = (self.local_factor)(p);
        if set.degree() != self.degree || set.prime() != p {
            return Err(Error::InvalidInput(format!(
                "{}: local factor at {p} has degree {} (prime {}), expected degree {}",
                self.label,
                set.degree(),
                set.prime(),
                self.degree
            )));
        }
        Ok(set)
    }
}

/// Dirichlet coefficients `a(1..=cutoff)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    values: Vec<f64>,
    pub nonneg: bool,
    pub source_label: String,
}

impl CoeffTable {
    pub fn new(source_label: impl Into<String>, values: Vec<f64>, nonneg: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("coefficient table cannot be empty".into()));
        }
        let table = Self {
            values,
            nonneg,
            source_label: source_label.into(),
        };
        if nonneg {
            table.check_nonneg()?;
        }
        Ok(table)
    }

    pub fn cutoff(&self) -> usize {
        self.values.len()
    }

    /// `a(m)` for `1 <= m <= cutoff`.
    pub fn get(&self, m: usize) -> f64 {
        self.values[m - 1]
    }

    /// Values `a(1), a(2), ...` in order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn check_nonneg(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < -1e-9) {
            Some(i) => Err(Error::Negative {
                m: i + 1,
                value: self.values[i],
            }),
            None => Ok(()),
        }
    }

    /// `delta_{m=1}`, the identity for Dirichlet convolution.
    pub fn unit(cutoff: usize) -> Result<Self> {
        let mut v = vec![0.0; cutoff];
        if let Some(first) = v.first_mut() {
            *first = 1.0;
        }
        Self::new("unit", v, true)
    }

    pub fn from_fn(
        source_label: impl Into<String>,
        cutoff: usize,
        nonneg: bool,
        f: impl Fn(usize) -> f64,
    ) -> Result<Self> {
        Self::new(source_label, (1..=cutoff).map(f).collect(), nonneg)
    }
}

/// `(a * b)(m) = sum_{de = m} a(d) b(e)`.
pub fn dirichlet_convolve(a: &CoeffTable, b: &CoeffTable) -> Result<CoeffTable> {
    if a.cutoff() != b.cutoff() {
        return Err(Error::CutoffMismatch {
            left: a.cutoff(),
            right: b.cutoff(),
        });
    }
    let x = a.cutoff();
    let mut out = vec![0.0; x];
    for d in 1..=x {
        let ad = a.get(d);
        if ad == 0.0 {
            continue;
        }
        for e in 1..=x / d {
            out[d * e - 1] += ad * b.get(e);
        }
    }
    CoeffTable::new(
        format!("{}*{}", a.source_label, b.source_label),
        out,
        a.nonneg && b.nonneg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_root(theta: f64) -> Complex64 {
        Complex64::from_polar(1.0, theta)
    }

    #[test]
    fn zeta_local_factor_is_all_ones() {
        let c = local_coeffs_c64(&[Complex64::new(1.0, 0.0)], 5);
        assert_eq!(c, vec![Complex64::new(1.0, 0.0); 6]);
    }

    #[test]
    fn rs_square_first_coefficient_is_trace_squared() {
        // alpha + beta = lambda, alpha * beta = 1
        let lambda: f64 = 0.73;
        let im = (4.0 - lambda * lambda).sqrt() / 2.0;
        let alpha = Complex64::new(lambda / 2.0, im);
        let beta = alpha.conj();
        let roots = [alpha * alpha, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), beta * beta];
        let c = local_coeffs_c64(&roots, 1);
        // hand expansion: alpha^2 + 2 + beta^2 = (alpha + beta)^2
        assert!((c[1].re - lambda * lambda).abs() < 1e-14);
        assert!(c[1].im.abs() < 1e-14);
    }

    #[test]
    fn rankin_square_shapes() {
        let one = SatakeSet::from_c64(2, &[Complex64::new(1.0, 0.0)]).unwrap();
        let sq = rankin_square(&one);
        assert_eq!(sq.roots_c64(), vec![Complex64::new(1.0, 0.0)]);

        let a = unit_root(0.4);
        let gl2 = SatakeSet::from_c64(3, &[a, a.inv()]).unwrap();
        let sq = rankin_square(&gl2).roots_c64();
        // row-major: a conj(a), a conj(1/a), (1/a) conj(a), (1/a) conj(1/a)
        let one = Complex64::new(1.0, 0.0);
        let expected = [one, a * a, a.conj() * a.conj(), one];
        for (got, want) in sq.iter().zip(expected) {
            assert!((got - want).norm() < 1e-14);
        }

        let gl3 = SatakeSet::from_c64(
            5,
            &[unit_root(0.1), unit_root(-0.1), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(rankin_square(&gl3).degree(), 9);
    }

    #[test]
    fn satake_set_validation() {
        assert!(SatakeSet::from_c64(4, &[Complex64::new(1.0, 0.0)]).is_err());
        assert!(SatakeSet::from_c64(1, &[Complex64::new(1.0, 0.0)]).is_err());
        assert!(SatakeSet::from_c64(7, &[]).is_err());
    }

    #[test]
    fn self_dual_rs_square_has_unit_root_product() {
        let a = unit_root(1.234);
        let set = SatakeSet::from_c64(11, &[a, a.conj(), Complex64::new(1.0, 0.0)]).unwrap();
        let prod = rankin_square(&set).root_product();
        assert!((prod - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn convolution_identity_and_divisor_function() {
        let ones = CoeffTable::from_fn("ones", 30, true, |_| 1.0).unwrap();
        let unit = CoeffTable::unit(30).unwrap();
        let left = dirichlet_convolve(&unit, &ones).unwrap();
        assert_eq!(left.values(), ones.values());

        let d = dirichlet_convolve(&ones, &ones).unwrap();
        // divisors of 6: 1, 2, 3, 6
        assert_eq!(d.get(6), 4.0);
        for m in 1..=30 {
            let count = (1..=m).filter(|k| m % k == 0).count() as f64;
            assert_eq!(d.get(m), count);
        }
        let short = CoeffTable::unit(10).unwrap();
        assert!(matches!(
            dirichlet_convolve(&short, &ones),
            Err(Error::CutoffMismatch { .. })
        ));
    }

    #[test]
    fn negative_values_rejected_for_nonneg_tables() {
        assert!(matches!(
            CoeffTable::new("x", vec![1.0, -0.5], true),
            Err(Error::Negative { m: 2, .. })
        ));
        assert!(CoeffTable::new("x", vec![1.0, -0.5], false).is_ok());
    }

    proptest! {
        #[test]
        fn two_root_geometric_identity(t1 in 0.0f64..std::f64::consts::TAU, t2 in 0.0f64..std::f64::consts::TAU, e in 0usize..12) {
            prop_assume!((t1 - t2).abs() > 1e-3);
            let (a, b) = (unit_root(t1), unit_root(t2));
            let c = local_coeffs_c64(&[a, b], e);
            let expected = (a.powu(e as u32 + 1) - b.powu(e as u32 + 1)) / (a - b);
            prop_assert!((c[e] - expected).norm() < 1e-10 * (1.0 + expected.norm()));
        }

        #[test]
        fn rs_square_is_all_pairwise_products(thetas in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 1..4)) {
            let roots: Vec<Complex64> = thetas.iter().map(|&t| unit_root(t)).collect();
            let set = SatakeSet::from_c64(13, &roots).unwrap();
            let sq = rankin_square(&set).roots_c64();
            prop_assert_eq!(sq.len(), roots.len() * roots.len());
            for (i, a) in roots.iter().enumerate() {
                for (j, b) in roots.iter().enumerate() {
                    prop_assert!((sq[i * roots.len() + j] - a * b.conj()).norm() < 1e-14);
                }
            }
        }

        #[test]
        fn conjugation_closed_roots_give_real_coefficients(t in 0.0f64..std::f64::consts::PI, e in 1usize..10) {
            let a = unit_root(t);
            let c = local_coeffs_c64(&[a, a.conj(), Complex64::new(1.0, 0.0)], e);
            for v in c {
                prop_assert!(v.im.abs() <= 1e-10 * v.norm().max(1.0));
            }
        }
    }
}
