//! Riesz means `S_k(x) = sum_{m <= x} a(m) (1 - m/x)^k / k!` and their main
//! terms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::CSource;
use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LinearFit};
use crate::sum::pairwise_sum;

/// Errors smaller than this are dropped from exponent fits.
pub const FIT_FLOOR: f64 = 1e-13;

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn check_x(table: &CoeffTable, x: f64) -> Result<()> {
    if !(x >= 1.0 && x <= table.cutoff() as f64) {
        return Err(Error::Domain(format!(
            "x = {x} outside [1, {}] of table {}",
            table.cutoff(),
            table.source_label
        )));
    }
    Ok(())
}

/// `sum_{m <= x} a(m) ((x - m) / x)^e`, summed pairwise in index order.
pub(crate) fn weighted_sum(table: &CoeffTable, x: f64, e: u32) -> f64 {
    let n = x.floor() as usize;
    let values = &table.values()[..n];
    if e == 0 {
        return pairwise_sum(values);
    }
    let terms: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, a)| a * ((x - (i + 1) as f64) / x).powi(e as i32))
        .collect();
    pairwise_sum(&terms)
}

/// Direct summation of the Riesz mean. `m <= x` means `m <= floor(x)`; the
/// term `m = x` vanishes for `k >= 1`.
pub fn riesz_mean(table: &CoeffTable, x: f64, k: u32) -> Result<f64> {
    check_x(table, x)?;
    Ok(weighted_sum(table, x, k) / factorial(k))
}

/// `C x / (k+1)!`.
pub fn main_term(c: f64, x: f64, k: u32) -> f64 {
    c * x / factorial(k + 1)
}

/// Slope of `log |error|` against `log x`, ignoring errors below
/// [`FIT_FLOOR`].
pub fn exponent_fit(x_grid: &[f64], errors: &[f64]) -> Result<LinearFit> {
    if x_grid.len() != errors.len() {
        return Err(Error::InvalidInput("grid and errors differ in length".into()));
    }
    if x_grid.len() < 6 {
        return Err(Error::InvalidInput(format!(
            "exponent fit needs at least 6 points, got {}",
            x_grid.len()
        )));
    }
    let (xs, es): (Vec<f64>, Vec<f64>) = x_grid
        .iter()
        .zip(errors)
        .filter(|(_, e)| e.abs() >= FIT_FLOOR)
        .map(|(&x, &e)| (x, e.abs()))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "{} of {} errors above {FIT_FLOOR:e}",
            xs.len(),
            x_grid.len()
        )));
    }
    loglog_fit(&xs, &es)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    /// `floor(n^2 / 2) + 1`.
    New,
    /// `n^2 (n + 1) / 2 + n`.
    Old,
}

pub fn k_threshold(n: u32, which: Threshold) -> Result<u32> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("k threshold needs n >= 2, got {n}")));
    }
    let n2 = n.checked_mul(n).ok_or_else(|| Error::InvalidInput("n too large".into()))?;
    match which {
        Threshold::New => Ok(n2 / 2 + 1),
        Threshold::Old => n2
            .checked_mul(n + 1)
            .map(|v| v / 2 + n)
            .ok_or_else(|| Error::InvalidInput("n too large".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub label: String,
    pub k: u32,
    pub x_grid: Vec<f64>,
    pub smoothed_sums: Vec<f64>,
    pub main_terms: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_exponent: Option<f64>,
    pub fit: Option<LinearFit>,
    pub c_used: f64,
    pub c_source: CSource,
}

impl RieszReport {
    pub fn max_abs_error(&self) -> f64 {
        self.errors.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// `S_k` against `C x / (k+1)!` over a strictly increasing grid.
pub fn riesz_report(
    table: &CoeffTable,
    k: u32,
    c: f64,
    c_source: CSource,
    x_grid: &[f64],
) -> Result<RieszReport> {
    if x_grid.is_empty() {
        return Err(Error::InvalidInput("empty x grid".into()));
    }
    if let Some(w) = x_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "x grid not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    for &x in x_grid {
        check_x(table, x)?;
    }
    let smoothed_sums: Vec<f64> = x_grid
        .par_iter()
        .map(|&x| weighted_sum(table, x, k) / factorial(k))
        .collect();
    let main_terms: Vec<f64> = x_grid.iter().map(|&x| main_term(c, x, k)).collect();
    let errors: Vec<f64> = smoothed_sums.iter().zip(&main_terms).map(|(s, m)| s - m).collect();
    let fit = if x_grid.len() >= 6 {
        exponent_fit(x_grid, &errors).ok()
    } else {
        None
    };
    Ok(RieszReport {
        label: table.source_label.clone(),
        k,
        x_grid: x_grid.to_vec(),
        smoothed_sums,
        main_terms,
        errors,
        fitted_exponent: fit.map(|f| f.slope),
        fit,
        c_used: c,
        c_source,
    })
}
