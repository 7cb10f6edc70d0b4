//! Vertical-line growth scans and conversion-factor exponents.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lfun_eval;
use crate::coeffs::LSeriesSpec;
use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};

pub const MIN_WINDOWS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub t: f64,
    pub abs_value: f64,
    pub window_max: f64,
    pub log_t: f64,
    pub log_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub t_argmax: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub sigma: f64,
    pub t_grid: Vec<f64>,
    pub measured_exponent: f64,
    pub reference_exponent: f64,
    pub epsilon_used: f64,
    pub fit: LinearFit,
    pub windows: Vec<GrowthWindow>,
    pub samples: Vec<GrowthSample>,
}

/// Evenly spaced `t` values covering `windows` dyadic windows from `t_min`.
pub fn default_t_grid(t_min: f64, windows: usize, step: f64) -> Vec<f64> {
    let end = t_min * f64::powi(2.0, windows as i32);
    let count = ((end - t_min) / step).round() as usize;
    (0..=count)
        .map(|i| t_min + (end - t_min) * i as f64 / count as f64)
        .collect()
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidInput("empty t grid".into()));
    }
    if t_grid[0] < 10.0 {
        return Err(Error::InvalidInput(format!(
            "t grid starts at {} < 10",
            t_grid[0]
        )));
    }
    if let Some(w) = t_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "t grid not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn abs_values(spec: &LSeriesSpec, sigma: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    t_grid
        .par_iter()
        .map(|&t| Ok(lfun_eval(spec, Complex64::new(sigma, t))?.value.norm()))
        .collect()
}

/// Slope of `log max |L(sigma + it)|` over dyadic windows `[t0 2^w, t0 2^(w+1))`
/// against `log t` at each window's argmax.
pub fn growth_scan(
    spec: &LSeriesSpec,
    sigma: f64,
    t_grid: &[f64],
    epsilon: f64,
) -> Result<GrowthFit> {
    if !(-0.25..=2.0).contains(&sigma) {
        return Err(Error::InvalidInput(format!(
            "sigma = {sigma} outside [-0.25, 2]"
        )));
    }
    check_grid(t_grid)?;
    let t0 = t_grid[0];
    let t_last = t_grid[t_grid.len() - 1];
    let mut bounds = Vec::new();
    let mut start = t0;
    while 2.0 * start <= t_last * (1.0 + 1e-12) {
        bounds.push((start, 2.0 * start));
        start *= 2.0;
    }
    if bounds.len() < MIN_WINDOWS {
        return Err(Error::InvalidInput(format!(
            "t grid covers {} complete dyadic windows, need {MIN_WINDOWS}",
            bounds.len()
        )));
    }
    let values = abs_values(spec, sigma, t_grid)?;

    let mut windows = Vec::with_capacity(bounds.len());
    let mut window_of = vec![None; t_grid.len()];
    for (w, &(lo, hi)) in bounds.iter().enumerate() {
        let last = w + 1 == bounds.len();
        let mut best: Option<(f64, f64)> = None;
        for (i, &t) in t_grid.iter().enumerate() {
            let inside = t >= lo && (t < hi || (last && t <= hi * (1.0 + 1e-12)));
            if !inside {
                continue;
            }
            window_of[i] = Some(w);
            if best.is_none_or(|(_, m)| values[i] > m) {
                best = Some((t, values[i]));
            }
        }
        let (t_argmax, max) = best.ok_or_else(|| {
            Error::InvalidInput(format!("no grid points in window [{lo}, {hi})"))
        })?;
        windows.push(GrowthWindow {
            t_start: lo,
            t_end: hi,
            t_argmax,
            max,
        });
    }
    let xs: Vec<f64> = windows.iter().map(|w| w.t_argmax.ln()).collect();
    let ys: Vec<f64> = windows.iter().map(|w| w.max.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;

    let samples = t_grid
        .iter()
        .zip(&values)
        .zip(&window_of)
        .filter_map(|((&t, &v), w)| {
            w.map(|w| GrowthSample {
                t,
                abs_value: v,
                window_max: windows[w].max,
                log_t: t.ln(),
                log_max: windows[w].max.ln(),
            })
        })
        .collect();

    Ok(GrowthFit {
        sigma,
        t_grid: t_grid.to_vec(),
        measured_exponent: fit.slope,
        reference_exponent: spec.critical_exponent * (1.0 + epsilon - sigma),
        epsilon_used: epsilon,
        fit,
        windows,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionSample {
    pub t: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionFit {
    pub sigma: f64,
    pub measured_exponent: f64,
    /// `degree * (1/2 - sigma)`.
    pub reference_exponent: f64,
    pub fit: LinearFit,
    pub dropped: usize,
    pub samples: Vec<ConversionSample>,
}

impl ConversionFit {
    /// Within 5% of the reference, or 0.02 absolute when the reference is 0.
    pub fn within_contract(&self) -> bool {
        let tol = (0.05 * self.reference_exponent.abs()).max(0.02);
        (self.measured_exponent - self.reference_exponent).abs() <= tol
    }
}

/// Fitted exponent of `|L(sigma + it)| / |L(1 - sigma - it)|` against `t`.
///
/// Points whose denominator falls below `1e-6` times the median denominator
/// are treated as near-zeros and dropped.
pub fn conversion_exponent_check(
    spec: &LSeriesSpec,
    sigma: f64,
    t_grid: &[f64],
) -> Result<ConversionFit> {
    check_grid(t_grid)?;
    let pairs: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|&t| {
            let num = lfun_eval(spec, Complex64::new(sigma, t))?.value.norm();
            let den = lfun_eval(spec, Complex64::new(1.0 - sigma, -t))?.value.norm();
            Ok((num, den))
        })
        .collect::<Result<_>>()?;
    let mut dens: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    dens.sort_by(f64::total_cmp);
    let median = dens[dens.len() / 2];
    let threshold = 1e-6 * median;

    let samples: Vec<ConversionSample> = t_grid
        .iter()
        .zip(&pairs)
        .map(|(&t, &(num, den))| ConversionSample {
            t,
            numerator: num,
            denominator: den,
            ratio: num / den,
            dropped: !(den >= threshold) || !(num > 0.0),
        })
        .collect();
    let kept: Vec<&ConversionSample> = samples.iter().filter(|s| !s.dropped).collect();
    let xs: Vec<f64> = kept.iter().map(|s| s.t.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|s| s.ratio.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(ConversionFit {
        sigma,
        measured_exponent: fit.slope,
        reference_exponent: spec.degree as f64 * (0.5 - sigma),
        fit,
        dropped: samples.len() - kept.len(),
        samples,
    })
}
