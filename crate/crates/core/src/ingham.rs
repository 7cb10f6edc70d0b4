//! Averaging transform `B(x) = (1/x) int_1^x A`, the difference-quotient
//! sandwich that recovers `A` from `B`, the descending chain from a Riesz
//! mean to partial sums, and the identity probe.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LinearFit};
use crate::quad::adaptive_simpson;
use crate::riesz::{factorial, weighted_sum};
use crate::sum::pairwise_sum;

/// Relative target for quadrature of synthetic mean functions.
pub const SIMPSON_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MeanKind {
    StepSum,
    Riesz { exponent: u32 },
    Synthetic { formula: String, params: Vec<f64> },
}

#[derive(Debug, Clone)]
enum Repr {
    /// `scale * sum_{m <= x} a(m) (1 - m/x)^exponent`.
    Table {
        table: Arc<CoeffTable>,
        exponent: u32,
        scale: f64,
    },
    /// `sum coef * t^power`.
    PowerSum(Vec<(f64, f64)>),
}

/// A function `x -> A(x)` on `[1, domain_max]`.
#[derive(Debug, Clone)]
pub struct MeanFunction {
    kind: MeanKind,
    repr: Repr,
    domain_max: f64,
}

impl MeanFunction {
    /// `A(x) = sum_{m <= x} a(m)`, right-continuous at the integers.
    pub fn step_sum(table: Arc<CoeffTable>) -> Self {
        let domain_max = table.cutoff() as f64;
        Self {
            kind: MeanKind::StepSum,
            repr: Repr::Table {
                table,
                exponent: 0,
                scale: 1.0,
            },
            domain_max,
        }
    }

    /// The Riesz mean `S_k` with its usual `1/k!`.
    pub fn riesz(table: Arc<CoeffTable>, k: u32) -> Self {
        Self::riesz_scaled(table, k, 1.0 / factorial(k))
    }

    /// `scale * sum_{m <= x} a(m) (1 - m/x)^exponent`.
    pub fn riesz_scaled(table: Arc<CoeffTable>, exponent: u32, scale: f64) -> Self {
        let domain_max = table.cutoff() as f64;
        Self {
            kind: MeanKind::Riesz { exponent },
            repr: Repr::Table {
                table,
                exponent,
                scale,
            },
            domain_max,
        }
    }

    /// `A(t) = sum_i coef_i t^{power_i}` on `[1, domain_max]`.
    pub fn power_sum(terms: &[(f64, f64)], domain_max: f64) -> Result<Self> {
        if terms.is_empty() || terms.iter().any(|(c, p)| !(c.is_finite() && p.is_finite())) {
            return Err(Error::InvalidInput("power sum needs finite terms".into()));
        }
        if !(domain_max > 1.0) {
            return Err(Error::InvalidInput(format!("domain end {domain_max} must exceed 1")));
        }
        let params = terms.iter().flat_map(|&(c, p)| [c, p]).collect();
        Ok(Self {
            kind: MeanKind::Synthetic {
                formula: "power-sum".into(),
                params,
            },
            repr: Repr::PowerSum(terms.to_vec()),
            domain_max,
        })
    }

    pub fn kind(&self) -> &MeanKind {
        &self.kind
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    /// Whether the kind guarantees a non-decreasing function.
    pub fn is_monotone(&self) -> bool {
        match &self.repr {
            Repr::Table { table, scale, .. } => table.nonneg && *scale >= 0.0,
            Repr::PowerSum(terms) => terms.iter().all(|&(c, p)| c * p >= 0.0),
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if !(x >= 1.0 && x <= self.domain_max) {
            return Err(Error::Domain(format!(
                "x = {x} outside [1, {}]",
                self.domain_max
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match &self.repr {
            Repr::Table {
                table,
                exponent,
                scale,
            } => scale * weighted_sum(table, x, *exponent),
            Repr::PowerSum(terms) => power_sum_at(terms, x),
        })
    }
}

fn power_sum_at(terms: &[(f64, f64)], x: f64) -> f64 {
    terms.iter().map(|&(c, p)| c * x.powf(p)).sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(1/x) int_m^x (1 - m/t)^e dt` for `1 <= m <= x`.
///
/// Expanding `(1 - m/t)^e` binomially and writing `r = m/x`, the pieces are
/// `1 - r`, `-r log r` and `r (1 - r^{i-1}) / (i - 1)`. For `e = 0` this is
/// `(x - m) / x` exactly as written.
pub fn scaled_term_integral(m: f64, x: f64, e: u32) -> f64 {
    let lin = (x - m) / x;
    if e == 0 {
        return lin;
    }
    let r = m / x;
    let log_ratio = ((x - m) / m).ln_1p(); // log(x/m)
    let mut acc = lin;
    let mut sign = -1.0;
    for i in 1..=e {
        let g = if i == 1 {
            r * log_ratio
        } else {
            let d = (i - 1) as f64;
            r * -(-d * log_ratio).exp_m1() / d
        };
        acc += sign * binomial(e, i) * g;
        sign = -sign;
    }
    acc
}

fn table_integral_scaled(table: &CoeffTable, x: f64, e: u32) -> f64 {
    let n = x.floor() as usize;
    let terms: Vec<f64> = table.values()[..n]
        .iter()
        .enumerate()
        .map(|(i, a)| a * scaled_term_integral((i + 1) as f64, x, e))
        .collect();
    pairwise_sum(&terms)
}

/// `B(x) = (1/x) int_1^x A(t) dt`.
///
/// Table kinds integrate each term in closed form; synthetic kinds use
/// adaptive Simpson to [`SIMPSON_TOLERANCE`].
pub fn average_transform(a: &MeanFunction, x: f64) -> Result<f64> {
    a.check(x)?;
    match &a.repr {
        Repr::Table {
            table,
            exponent,
            scale,
        } => Ok(scale * table_integral_scaled(table, x, *exponent)),
        Repr::PowerSum(terms) => {
            let v = adaptive_simpson(|t| power_sum_at(terms, t), 1.0, x, SIMPSON_TOLERANCE)?;
            Ok(v / x)
        }
    }
}

/// Something whose `x B(x)` can be evaluated.
#[derive(Debug, Clone, Copy)]
pub enum Evaluable<'a> {
    /// `B` is the average of this function.
    AverageOf(&'a MeanFunction),
    /// `B` is this function.
    Itself(&'a MeanFunction),
}

impl Evaluable<'_> {
    fn scaled(&self, x: f64) -> Result<f64> {
        match self {
            Evaluable::AverageOf(a) => Ok(x * average_transform(a, x)?),
            Evaluable::Itself(b) => Ok(x * b.eval(x)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `upper = ((x+d) B(x+d) - x B(x)) / d`, `lower = (x B(x) - (x-d) B(x-d)) / d`.
pub fn sandwich_bounds(b: &Evaluable<'_>, x: f64, delta: f64) -> Result<Sandwich> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("delta = {delta} must be positive")));
    }
    if x - delta < 1.0 {
        return Err(Error::Domain(format!("x - delta = {} < 1", x - delta)));
    }
    let here = b.scaled(x)?;
    let ahead = b.scaled(x + delta)?;
    let behind = b.scaled(x - delta)?;
    Ok(Sandwich {
        lower: (here - behind) / delta,
        upper: (ahead - here) / delta,
    })
}

/// Growth law of the first error scale `E_1(x)`; later levels take square
/// roots, `E_{j+1} = sqrt(E_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "law")]
pub enum GrowthLaw {
    /// `E_1(x) = factor * x`.
    Linear { factor: f64 },
    /// `E_1(x) = x^exponent`.
    Power { exponent: f64 },
}

impl GrowthLaw {
    fn e1(&self, x: f64) -> f64 {
        match *self {
            GrowthLaw::Linear { factor } => factor * x,
            GrowthLaw::Power { exponent } => x.powf(exponent),
        }
    }

    /// `E_j(x)` for `j >= 1`.
    pub fn level(&self, j: u32, x: f64) -> f64 {
        self.e1(x).powf(0.5f64.powi(j as i32 - 1))
    }

    /// Power of `x` in `E_j`.
    pub fn level_exponent(&self, j: u32) -> f64 {
        let base = match *self {
            GrowthLaw::Linear { .. } => 1.0,
            GrowthLaw::Power { exponent } => exponent,
        };
        base * 0.5f64.powi(j as i32 - 1)
    }

    fn describe(&self, j: u32) -> String {
        let root = 1u64 << (j - 1);
        match *self {
            GrowthLaw::Linear { factor } if root == 1 => format!("{factor}x"),
            GrowthLaw::Linear { factor } => format!("({factor}x)^(1/{root})"),
            GrowthLaw::Power { exponent } if root == 1 => format!("x^{exponent}"),
            GrowthLaw::Power { exponent } => format!("x^({exponent}/{root})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRule {
    pub law: GrowthLaw,
    /// `delta = factor * x / sqrt(E(x))`.
    pub factor: f64,
}

impl Default for DeltaRule {
    fn default() -> Self {
        Self {
            law: GrowthLaw::Linear { factor: 10.0 },
            factor: 2.0,
        }
    }
}

impl DeltaRule {
    pub fn delta(&self, j: u32, x: f64) -> f64 {
        self.factor * x / self.law.level(j, x).sqrt()
    }

    /// Expected power of `x` in sandwich widths at level `j`.
    pub fn width_exponent(&self, j: u32) -> f64 {
        1.0 - 0.5 * self.law.level_exponent(j)
    }

    pub fn tag(&self, j: u32) -> String {
        format!("{}*x/sqrt({})", self.factor, self.law.describe(j))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSample {
    pub x: f64,
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    pub midpoint: f64,
    /// Value of the function the sandwich is meant to bound, when known.
    pub direct: Option<f64>,
    pub predicted_paper: f64,
    pub predicted_residue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeLevel {
    pub j: u32,
    pub delta_rule: String,
    pub predicted_width_exponent: f64,
    pub width_fit: Option<LinearFit>,
    /// Grid points where `upper < lower`.
    pub inversions: usize,
    /// Grid points where the known value lies outside `[lower, upper]`.
    pub misses: usize,
    pub samples: Vec<LevelSample>,
}

fn inverted(s: &Sandwich) -> bool {
    s.upper < s.lower - 1e-9 * s.upper.abs().max(s.lower.abs())
}

fn outside(s: &Sandwich, v: f64) -> bool {
    let slack = 1e-9 * v.abs().max(1.0);
    v < s.lower - slack || v > s.upper + slack
}

fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(Error::InvalidInput("empty x grid".into()));
    }
    if let Some(w) = x_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "x grid not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Sandwich samples at level `j` for one `B`, over the grid.
fn level_samples(
    b: Evaluable<'_>,
    direct: Option<&MeanFunction>,
    rule: &DeltaRule,
    j: u32,
    x_grid: &[f64],
    predicted: impl Fn(f64) -> (f64, f64) + Sync,
) -> Result<CascadeLevel> {
    let samples: Vec<(LevelSample, bool, bool)> = x_grid
        .par_iter()
        .map(|&x| {
            let delta = rule.delta(j, x);
            let s = sandwich_bounds(&b, x, delta)?;
            let direct = direct.map(|a| a.eval(x)).transpose()?;
            let (predicted_paper, predicted_residue) = predicted(x);
            Ok((
                LevelSample {
                    x,
                    delta,
                    lower: s.lower,
                    upper: s.upper,
                    midpoint: s.midpoint(),
                    direct,
                    predicted_paper,
                    predicted_residue,
                },
                inverted(&s),
                direct.is_some_and(|v| outside(&s, v)),
            ))
        })
        .collect::<Result<_>>()?;
    let inversions = samples.iter().filter(|s| s.1).count();
    let misses = samples.iter().filter(|s| s.2).count();
    let samples: Vec<LevelSample> = samples.into_iter().map(|s| s.0).collect();
    let (xs, ws): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.upper - s.lower > 0.0)
        .map(|s| (s.x, s.upper - s.lower))
        .unzip();
    let width_fit = if xs.len() >= 3 { loglog_fit(&xs, &ws).ok() } else { None };
    Ok(CascadeLevel {
        j,
        delta_rule: rule.tag(j),
        predicted_width_exponent: rule.width_exponent(j),
        width_fit,
        inversions,
        misses,
        samples,
    })
}

/// Sandwich bounds for a single `B` with the cascade of window rules
/// `j = 1..=levels`, checked against the known `A`.
pub fn sandwich_cascade(
    a: &MeanFunction,
    rule: &DeltaRule,
    levels: u32,
    x_grid: &[f64],
) -> Result<Vec<CascadeLevel>> {
    check_grid(x_grid)?;
    (1..=levels)
        .map(|j| {
            level_samples(Evaluable::AverageOf(a), Some(a), rule, j, x_grid, |_| {
                (f64::NAN, f64::NAN)
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLevel {
    /// Riesz exponent of the object bounded at this level.
    pub k: u32,
    /// Steps taken from the top of the chain.
    pub j: u32,
    /// `midpoint / x` at the reference point.
    pub c_est: f64,
    /// `k1! * c_est`: the coefficient of `sum a(m) (1 - m/x)^k`.
    pub normalized_coefficient: f64,
    /// `2^j C / (k1+1)!`.
    pub predicted_paper: f64,
    /// `C / (k1! (k+1))`, from the residue of the level's own Riesz mean.
    pub predicted_residue: f64,
    /// `A_j(x) / x` by direct summation at the reference point.
    pub direct_coefficient: f64,
    pub delta_used: String,
    pub sandwich_width_at_ref_x: f64,
    pub predicted_width_exponent: f64,
    pub width_fit: Option<LinearFit>,
    /// `B_j(x) - (1/x) int_1^x A_j` at the reference point.
    pub identity_discrepancy_at_ref_x: f64,
    pub inversions: usize,
    pub misses: usize,
    pub samples: Vec<LevelSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub label: String,
    pub k1: u32,
    pub c: f64,
    pub reference_x: f64,
    pub levels: Vec<TraceLevel>,
    /// `k1! * c_est` at `k = 0`.
    pub level0_partial_sum_coefficient: f64,
    /// `sum_{m <= x} a(m) / x` at the reference point.
    pub direct_partial_sum_coefficient: f64,
    /// `2^k1 C / (k1 + 1)`.
    pub paper_alternative_constant: f64,
}

/// Table cutoff needed for `chain_reduce` up to `x_max`.
pub fn chain_cutoff(k1: u32, rule: &DeltaRule, x_max: f64) -> usize {
    let widest = (1..=k1.max(1)).map(|j| rule.delta(j, x_max)).fold(0.0, f64::max);
    (x_max + widest).ceil() as usize + 1
}

/// Descends from `S_{k1}` to the partial sum one exponent at a time.
///
/// At step `j` the object `B_j = sum a(m) (1 - m/x)^{k1-j+1} / k1!` is fed to
/// the sandwich with `delta = factor * x / sqrt(E_j(x))`, giving bounds for
/// `d/dx (x B_j)`, which the chain treats as
/// `A_j = sum a(m) (1 - m/x)^{k1-j} / k1!`.
pub fn chain_reduce(
    table: Arc<CoeffTable>,
    k1: u32,
    c: f64,
    x_grid: &[f64],
    rule: &DeltaRule,
) -> Result<ReductionTrace> {
    if k1 == 0 {
        return Err(Error::InvalidInput("chain needs k1 >= 1".into()));
    }
    check_grid(x_grid)?;
    table.check_nonneg()?;
    let x_ref = *x_grid.last().unwrap();
    let cutoff = table.cutoff() as f64;
    for j in 1..=k1 {
        for &x in x_grid {
            let d = rule.delta(j, x);
            if x - d < 1.0 || x + d > cutoff {
                return Err(Error::Domain(format!(
                    "level {j}: window [{}, {}] around x = {x} leaves [1, {cutoff}]",
                    x - d,
                    x + d
                )));
            }
        }
    }
    let norm = 1.0 / factorial(k1);
    let top_fact = factorial(k1 + 1);

    let top = MeanFunction::riesz_scaled(table.clone(), k1, norm);
    let top_coef = top.eval(x_ref)? / x_ref;
    let mut levels = vec![TraceLevel {
        k: k1,
        j: 0,
        c_est: top_coef,
        normalized_coefficient: top_coef / norm,
        predicted_paper: c / top_fact,
        predicted_residue: c * norm / (k1 + 1) as f64,
        direct_coefficient: top_coef,
        delta_used: "none".into(),
        sandwich_width_at_ref_x: 0.0,
        predicted_width_exponent: 0.0,
        width_fit: None,
        identity_discrepancy_at_ref_x: 0.0,
        inversions: 0,
        misses: 0,
        samples: Vec::new(),
    }];

    for j in 1..=k1 {
        let k = k1 - j;
        let b = MeanFunction::riesz_scaled(table.clone(), k + 1, norm);
        let a = MeanFunction::riesz_scaled(table.clone(), k, norm);
        let paper = f64::powi(2.0, j as i32) * c / top_fact;
        let residue = c * norm / (k + 1) as f64;
        let level = level_samples(Evaluable::Itself(&b), Some(&a), rule, j, x_grid, |x| {
            (paper * x, residue * x)
        })?;
        let last = level.samples.last().unwrap();
        let c_est = last.midpoint / x_ref;
        let discrepancy = b.eval(x_ref)? - average_transform(&a, x_ref)?;
        levels.push(TraceLevel {
            k,
            j,
            c_est,
            normalized_coefficient: c_est / norm,
            predicted_paper: paper,
            predicted_residue: residue,
            direct_coefficient: last.direct.unwrap() / x_ref,
            delta_used: level.delta_rule,
            sandwich_width_at_ref_x: last.upper - last.lower,
            predicted_width_exponent: level.predicted_width_exponent,
            width_fit: level.width_fit,
            identity_discrepancy_at_ref_x: discrepancy,
            inversions: level.inversions,
            misses: level.misses,
            samples: level.samples,
        });
    }
    let level0 = levels.last().unwrap().normalized_coefficient;
    let direct = weighted_sum(&table, x_ref, 0) / x_ref;
    Ok(ReductionTrace {
        label: table.source_label.clone(),
        k1,
        c,
        reference_x: x_ref,
        levels,
        level0_partial_sum_coefficient: level0,
        direct_partial_sum_coefficient: direct,
        paper_alternative_constant: f64::powi(2.0, k1 as i32) * c / (k1 + 1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityProbe {
    pub x: f64,
    pub k: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub gap_over_x: f64,
}

/// `lhs = sum a(m) (1 - m/x)^k / k!` against
/// `rhs = (1/x) int_1^x sum_{m <= t} a(m) (1 - m/t)^{k-1} / k! dt`.
pub fn identity_probe(table: &CoeffTable, x: f64, k: u32) -> Result<IdentityProbe> {
    if k == 0 {
        return Err(Error::InvalidInput("identity probe needs k >= 1".into()));
    }
    if !(x >= 1.0 && x <= table.cutoff() as f64) {
        return Err(Error::Domain(format!(
            "x = {x} outside [1, {}]",
            table.cutoff()
        )));
    }
    let f = factorial(k);
    let lhs = weighted_sum(table, x, k) / f;
    let rhs = table_integral_scaled(table, x, k - 1) / f;
    let gap = lhs - rhs;
    Ok(IdentityProbe {
        x,
        k,
        lhs,
        rhs,
        gap,
        gap_over_x: gap / x,
    })
}

pub fn identity_scan(table: &CoeffTable, k: u32, x_grid: &[f64]) -> Result<Vec<IdentityProbe>> {
    check_grid(x_grid)?;
    x_grid.par_iter().map(|&x| identity_probe(table, x, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ones(n: usize) -> Arc<CoeffTable> {
        Arc::new(CoeffTable::from_fn("ones", n, true, |_| 1.0).unwrap())
    }

    #[test]
    fn linear_average() {
        let a = MeanFunction::power_sum(&[(2.0, 1.0)], 1e6).unwrap();
        for x in [2.0, 10.0, 1234.5] {
            let b = average_transform(&a, x).unwrap();
            assert!((b - (x - 1.0 / x)).abs() <= 1e-10 * x);
        }
    }

    #[test]
    fn step_sum_average_is_first_riesz_mean() {
        let a = MeanFunction::step_sum(ones(100));
        assert!((average_transform(&a, 10.0).unwrap() - 4.5).abs() < 1e-14);
        assert_eq!(a.eval(10.0).unwrap(), 10.0);
        assert_eq!(a.eval(9.99).unwrap(), 9.0);
        assert!(a.eval(100.5).is_err());
    }

    #[test]
    fn synthetic_average_matches_antiderivative() {
        let a = MeanFunction::power_sum(&[(2.0, 1.0), (1.0, 0.5)], 1e7).unwrap();
        for x in [4.0f64, 100.0, 1e5, 1e6] {
            // antiderivative t^2 + (2/3) t^{3/2}
            let oracle: f64 = x - 1.0 / x + 2.0 / 3.0 * (x.sqrt() - 1.0 / x);
            let b = average_transform(&a, x).unwrap();
            assert!((b - oracle).abs() <= 1e-10 * oracle, "x = {x}: {b} vs {oracle}");
        }
    }

    #[test]
    fn linear_sandwich_is_exact() {
        let a = MeanFunction::power_sum(&[(2.0, 1.0)], 1e6).unwrap();
        let (x, d) = (500.0, 7.0);
        let s = sandwich_bounds(&Evaluable::AverageOf(&a), x, d).unwrap();
        assert!((s.lower - (2.0 * x - d)).abs() < 1e-6);
        assert!((s.upper - (2.0 * x + d)).abs() < 1e-6);
        assert!((s.midpoint() - 2.0 * x).abs() <= d);
        assert!(sandwich_bounds(&Evaluable::AverageOf(&a), x, 0.0).is_err());
        assert!(sandwich_bounds(&Evaluable::AverageOf(&a), 5.0, 4.5).is_err());
    }

    #[test]
    fn step_sum_sandwich_brackets_floor() {
        let a = MeanFunction::step_sum(ones(1000));
        let s = sandwich_bounds(&Evaluable::AverageOf(&a), 100.5, 5.0).unwrap();
        assert!(s.lower <= 100.0 && 100.0 <= s.upper, "{s:?}");
    }

    #[test]
    fn term_integral_closed_forms() {
        // e = 1: int_m^x (1 - m/t) dt = x - m - m log(x/m)
        for (m, x) in [(1.0f64, 10.0f64), (3.0, 7.5), (9.0, 10.0)] {
            let oracle: f64 = (x - m - m * (x / m).ln()) / x;
            assert!((scaled_term_integral(m, x, 1) - oracle).abs() < 1e-15);
        }
        // e = 2 against Simpson
        let (m, x) = (4.0, 50.0);
        let num = adaptive_simpson(|t| (1.0 - m / t).powi(2), m, x, 1e-13).unwrap() / x;
        assert!((scaled_term_integral(m, x, 2) - num).abs() < 1e-11);
        assert_eq!(scaled_term_integral(5.0, 5.0, 3), 0.0);
    }

    #[test]
    fn probe_examples() {
        let t = ones(100_000);
        let p = identity_probe(&t, 10.0, 1).unwrap();
        assert_eq!((p.lhs, p.rhs, p.gap), (4.5, 4.5, 0.0));
        let p = identity_probe(&t, 10.0, 2).unwrap();
        let lhs: f64 = (1..=10).map(|m| (1.0 - m as f64 / 10.0).powi(2)).sum::<f64>() / 2.0;
        let rhs: f64 = (1..=10)
            .map(|m| {
                let m = m as f64;
                10.0 - m - m * (10.0 / m).ln()
            })
            .sum::<f64>()
            / 20.0;
        assert!((p.lhs - lhs).abs() < 1e-14 && (p.rhs - rhs).abs() < 1e-13);
        // gap / x tends to 1/24 for the ones table
        let p = identity_probe(&t, 1e5, 2).unwrap();
        assert!((p.gap_over_x - 1.0 / 24.0).abs() < 1e-3, "{}", p.gap_over_x);
    }

    #[test]
    fn chain_on_ones_brackets_floor() {
        let rule = DeltaRule::default();
        let grid: Vec<f64> = (0..8).map(|i| 1e3 * 2f64.powi(i)).collect();
        let t = ones(chain_cutoff(3, &rule, *grid.last().unwrap()));
        let trace = chain_reduce(t, 3, 1.0, &grid, &rule).unwrap();
        assert_eq!(trace.levels.iter().map(|l| l.k).collect::<Vec<_>>(), vec![3, 2, 1, 0]);
        let last = trace.levels.last().unwrap();
        for s in &last.samples {
            let x = s.x;
            let width = x.powf(1.0 - 1.0 / 8.0);
            assert!((s.midpoint * 6.0 - x.floor()).abs() <= width, "x = {x}");
        }
        assert!(trace.levels.iter().all(|l| l.c_est.is_finite()));
        assert!(chain_reduce(ones(2000), 3, 1.0, &grid, &rule).is_err());
    }

    proptest! {
        #[test]
        fn k1_probe_gap_is_zero(values in proptest::collection::vec(-3.0f64..3.0, 1..400), frac in 0.0f64..1.0) {
            let t = CoeffTable::new("random", values, false).unwrap();
            let x = 1.0 + frac * (t.cutoff() as f64 - 1.0);
            let p = identity_probe(&t, x, 1).unwrap();
            prop_assert!(p.gap.abs() <= 1e-12);
        }

        #[test]
        fn monotone_sandwich_validity(x in 50.0f64..5000.0, frac in 0.01f64..0.9) {
            let delta = frac * (x - 1.0);
            let synth = MeanFunction::power_sum(&[(2.0, 1.0), (1.0, 0.5)], 1e4).unwrap();
            let s = sandwich_bounds(&Evaluable::AverageOf(&synth), x, delta).unwrap();
            let a = synth.eval(x).unwrap();
            prop_assert!(s.lower <= a && a <= s.upper);
            let step = MeanFunction::step_sum(ones(10_000));
            let s = sandwich_bounds(&Evaluable::AverageOf(&step), x, delta).unwrap();
            let a = step.eval(x).unwrap();
            prop_assert!(s.lower <= a + 1e-9 && a <= s.upper + 1e-9);
        }

        #[test]
        fn linear_case_midpoint(cc in 0.1f64..10.0, x in 10.0f64..1e4, frac in 0.01f64..0.5) {
            let a = MeanFunction::power_sum(&[(2.0 * cc, 1.0)], 2e4).unwrap();
            let b = average_transform(&a, x).unwrap();
            prop_assert!((b - (cc * x - cc / x)).abs() <= 1e-9 * cc * x);
            let delta = frac * x;
            let s = sandwich_bounds(&Evaluable::AverageOf(&a), x, delta).unwrap();
            prop_assert!((s.midpoint() - 2.0 * cc * x).abs() <= delta * cc + 1e-6 * x);
        }
    }
}
