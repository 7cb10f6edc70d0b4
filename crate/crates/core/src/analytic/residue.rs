//! The residue `C = lim (s - 1) L(s)` at a simple pole.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lfun_eval, zeta};
use crate::coeffs::{multiplicative_sieve, primes_up_to, LSeriesSpec};
use crate::error::{Error, Result};
use crate::sum::pairwise_sum_complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidueMethod {
    Closed,
    Richardson,
    EulerProduct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueOptions {
    /// First extrapolation step.
    pub h0: f64,
    pub levels: usize,
    /// Relative agreement required between the last two diagonal entries.
    pub tolerance: f64,
    pub prime_cutoff: usize,
    /// Coefficients of the entire cofactor used by the smoothed series.
    pub smoothing_cutoff: usize,
}

impl Default for ResidueOptions {
    fn default() -> Self {
        Self {
            h0: 1.0 / 16.0,
            levels: 7,
            tolerance: 1e-6,
            prime_cutoff: 1_000_000,
            smoothing_cutoff: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueEstimate {
    pub method: ResidueMethod,
    pub value: f64,
    pub error_estimate: f64,
    /// Largest prime used, for Euler products.
    pub prime_cutoff: Option<usize>,
}

fn require_simple_pole(spec: &LSeriesSpec) -> Result<()> {
    if spec.pole_order_at_1 != 1 {
        return Err(Error::PoleOrder {
            expected: 1,
            found: spec.pole_order_at_1,
        });
    }
    Ok(())
}

fn real_part(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > 1e-10 * z.norm().max(1e-300) {
        return Err(Error::Domain(format!("{what} is not real: {z}")));
    }
    Ok(z.re)
}

pub fn residue_at_1(
    spec: &LSeriesSpec,
    method: ResidueMethod,
    opts: &ResidueOptions,
) -> Result<ResidueEstimate> {
    require_simple_pole(spec)?;
    match method {
        ResidueMethod::Closed => closed(spec),
        ResidueMethod::Richardson => richardson(spec, opts),
        ResidueMethod::EulerProduct => euler_product(spec, opts),
    }
}

/// `prod_{lambda != 0} zeta(1 - lambda)`.
fn closed(spec: &LSeriesSpec) -> Result<ResidueEstimate> {
    let shifts = spec.shifts.as_ref().ok_or_else(|| {
        Error::Domain(format!("{}: closed residue needs a shift list", spec.label))
    })?;
    let mut value = Complex64::new(1.0, 0.0);
    let mut err = 0.0;
    for lambda in shifts.iter().filter(|l| l.norm() > 1e-12) {
        let z = zeta(1.0 - lambda)?;
        err = err * z.value.norm() + z.abs_error_estimate * value.norm();
        value *= z.value;
    }
    Ok(ResidueEstimate {
        method: ResidueMethod::Closed,
        value: real_part(value, "closed residue")?,
        error_estimate: err,
        prime_cutoff: None,
    })
}

/// Dirichlet series of `spec` damped by `exp(-(m/X)^2)`.
struct SmoothedSeries {
    weights: Vec<f64>,
}

impl SmoothedSeries {
    fn new(spec: &LSeriesSpec, cutoff: usize) -> Result<Self> {
        let table = multiplicative_sieve(spec, cutoff)?;
        let width = cutoff as f64 / 6.0;
        let weights = table
            .values()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let r = (i + 1) as f64 / width;
                a * (-r * r).exp()
            })
            .collect();
        Ok(Self { weights })
    }

    fn eval(&self, s: Complex64) -> Complex64 {
        let terms: Vec<Complex64> = self
            .weights
            .par_iter()
            .enumerate()
            .map(|(i, w)| w * (-s * ((i + 1) as f64).ln()).exp())
            .collect();
        pairwise_sum_complex(&terms)
    }
}

/// Neville-Richardson extrapolation of `g(h) = h L(1 + h)` to `h = 0`.
fn richardson(spec: &LSeriesSpec, opts: &ResidueOptions) -> Result<ResidueEstimate> {
    if opts.levels < 2 || !(opts.h0 > 0.0 && opts.h0 < 1.0) {
        return Err(Error::InvalidInput(format!(
            "Richardson needs h0 in (0, 1) and at least 2 levels, got h0 = {}, levels = {}",
            opts.h0, opts.levels
        )));
    }
    let steps: Vec<f64> = (0..opts.levels)
        .map(|j| opts.h0 / f64::powi(2.0, j as i32))
        .collect();
    let samples: Vec<Complex64> = if spec.shifts.is_some() {
        steps
            .iter()
            .map(|&h| Ok(h * lfun_eval(spec, Complex64::new(1.0 + h, 0.0))?.value))
            .collect::<Result<_>>()?
    } else if let Some(cofactor) = &spec.cofactor {
        let cutoff = match cofactor.max_prime {
            Some(max) => opts.smoothing_cutoff.min(max as usize),
            None => opts.smoothing_cutoff,
        };
        let series = SmoothedSeries::new(cofactor, cutoff)?;
        steps
            .iter()
            .map(|&h| {
                let s = Complex64::new(1.0 + h, 0.0);
                Ok(h * zeta(s)?.value * series.eval(s))
            })
            .collect::<Result<_>>()?
    } else {
        return Err(Error::Domain(format!(
            "{}: no evaluator near s = 1 for extrapolation",
            spec.label
        )));
    };

    let mut row: Vec<Complex64> = vec![samples[0]];
    let mut diagonal = vec![samples[0]];
    for &g in &samples[1..] {
        let mut next = vec![g];
        for i in 1..=row.len() {
            let factor = f64::powi(2.0, i as i32) - 1.0;
            let v = next[i - 1] + (next[i - 1] - row[i - 1]) / factor;
            next.push(v);
        }
        diagonal.push(*next.last().unwrap());
        row = next;
    }
    let last = diagonal[diagonal.len() - 1];
    let prev = diagonal[diagonal.len() - 2];
    let diff = (last - prev).norm();
    if diff > opts.tolerance * last.norm() {
        return Err(Error::NonConvergent(format!(
            "{}: Richardson diagonal still moving by {diff:e} at {last}",
            spec.label
        )));
    }
    Ok(ResidueEstimate {
        method: ResidueMethod::Richardson,
        value: real_part(last, "extrapolated residue")?,
        error_estimate: diff,
        prime_cutoff: None,
    })
}

/// `M(1)` for `L = zeta * M`, as a truncated Euler product of the cofactor.
///
/// The tail is not bounded rigorously. Its size is modeled as a random walk
/// over primes beyond the cutoff: `degree / sqrt(P log P)` relative.
fn euler_product(spec: &LSeriesSpec, opts: &ResidueOptions) -> Result<ResidueEstimate> {
    let cofactor = spec.cofactor.as_ref().ok_or_else(|| {
        Error::Domain(format!(
            "{}: Euler-product residue needs an entire cofactor",
            spec.label
        ))
    })?;
    let cutoff = match cofactor.max_prime {
        Some(max) => opts.prime_cutoff.min(max as usize),
        None => opts.prime_cutoff,
    };
    if cutoff < 2 {
        return Err(Error::InvalidInput("prime cutoff below 2".into()));
    }
    let primes = primes_up_to(cutoff);
    let logs: Vec<Complex64> = primes
        .par_iter()
        .map(|&p| {
            let set = cofactor.local_factor(p)?;
            let inv = 1.0 / p as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for r in set.roots_c64() {
                acc -= (1.0 - r * inv).ln();
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let total = pairwise_sum_complex(&logs);
    let value = real_part(total.exp(), "Euler product")?;
    let p = *primes.last().unwrap() as f64;
    let tail = cofactor.degree as f64 / (p * p.ln()).sqrt();
    Ok(ResidueEstimate {
        method: ResidueMethod::EulerProduct,
        value,
        error_estimate: value.abs() * tail,
        prime_cutoff: Some(*primes.last().unwrap() as usize),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CSource {
    ResidueHint,
    Closed,
    EulerProduct,
    Richardson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantChoice {
    pub value: f64,
    pub source: CSource,
    pub error_estimate: f64,
}

/// Main-term constant with precedence hint, closed form, Euler product,
/// extrapolation.
pub fn source_constant(spec: &LSeriesSpec, opts: &ResidueOptions) -> Result<ConstantChoice> {
    require_simple_pole(spec)?;
    if let Some(value) = spec.residue_hint {
        return Ok(ConstantChoice {
            value,
            source: CSource::ResidueHint,
            error_estimate: 0.0,
        });
    }
    let (method, source) = if spec.shifts.is_some() {
        (ResidueMethod::Closed, CSource::Closed)
    } else if spec.cofactor.is_some() {
        (ResidueMethod::EulerProduct, CSource::EulerProduct)
    } else {
        (ResidueMethod::Richardson, CSource::Richardson)
    };
    let r = residue_at_1(spec, method, opts)?;
    Ok(ConstantChoice {
        value: r.value,
        source,
        error_estimate: r.error_estimate,
    })
}

