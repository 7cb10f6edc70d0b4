//! Least-squares power-law fits on log-log axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub points: usize,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "fit inputs differ in length: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::DegenerateFit(format!("{n} point(s)")));
    }
    let nf = n as f64;
    let mean_x = pairwise_sum(xs) / nf;
    let mean_y = pairwise_sum(ys) / nf;
    let dx: Vec<f64> = xs.iter().map(|x| x - mean_x).collect();
    let sxx = pairwise_sum(&dx.iter().map(|d| d * d).collect::<Vec<_>>());
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("abscissae are all equal".into()));
    }
    let sxy = pairwise_sum(
        &dx.iter()
            .zip(ys)
            .map(|(d, y)| d * (y - mean_y))
            .collect::<Vec<_>>(),
    );
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sq: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .collect();
    let residual = (pairwise_sum(&sq) / nf).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        residual,
        points: n,
    })
}

/// Fit `log|y|` against `log x`. Points with non-positive coordinates are the
/// caller's responsibility to drop.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    if lx.iter().chain(&ly).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite logarithm".into()));
    }
    linear_fit(&lx, &ly)
}

/// Geometric grid `start, start*ratio, ...` up to and including `end`
/// (within a relative slack of 1e-12).
pub fn geometric_grid(start: f64, end: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && end >= start && ratio > 1.0) {
        return Err(Error::InvalidInput(format!(
            "geometric grid needs 0 < start <= end and ratio > 1 (got {start}, {end}, {ratio})"
        )));
    }
    let mut grid = Vec::new();
    let mut j = 0i32;
    loop {
        let v = start * ratio.powi(j);
        if v > end * (1.0 + 1e-12) {
            break;
        }
        grid.push(v.min(end));
        j += 1;
    }
    Ok(grid)
}
