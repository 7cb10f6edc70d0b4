//! The kernel `y^s / (s (s+1) ... (s+k))`: its closed-form limit, truncated
//! vertical-line quadrature, decay scans, and rectangle-contour checks of
//! `L(s) x^s / (s ... (s+k))` against residues.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{lfun_eval, source_constant, zeta, ResidueOptions};
use crate::coeffs::LSeriesSpec;
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LinearFit};
use crate::quad::{distance_to_segment, integrate_panels, partition};

pub const MIN_PANELS: usize = 64;
pub const SATURATION_FLOOR: f64 = 1e-14;
pub const POLE_CLEARANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub y: f64,
    pub k: u32,
    pub c: f64,
    pub t: f64,
}

impl KernelParams {
    pub fn new(y: f64, k: u32, c: f64, t: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::InvalidInput(format!("y = {y} must be positive")));
        }
        if k == 0 {
            return Err(Error::InvalidInput("kernel needs k >= 1".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("c = {c} must be positive")));
        }
        if !(t >= 1.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("T = {t} must be at least 1")));
        }
        Ok(Self { y, k, c, t })
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `lim_{T -> inf}` of the truncated integral: `(1 - 1/y)^k / k!` for
/// `y >= 1`, else 0.
pub fn kernel_closed(y: f64, k: u32) -> Result<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidInput(format!("y = {y} must be positive")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("kernel needs k >= 1".into()));
    }
    if y <= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - 1.0 / y).powi(k as i32) / factorial(k))
}

/// `s (s+1) ... (s+k)`.
fn rising(s: Complex64, k: u32) -> Complex64 {
    let mut d = s;
    for j in 1..=k {
        d *= s + j as f64;
    }
    d
}

fn kernel_poles(k: u32) -> Vec<Complex64> {
    (0..=k).map(|j| Complex64::new(-(j as f64), 0.0)).collect()
}

/// Panels needed so that each covers at most `pi/4` of the phase `t log y`.
pub fn required_panels(p: &KernelParams) -> usize {
    let phase = 2.0 * p.t * p.y.ln().abs();
    MIN_PANELS.max((phase / (PI / 4.0)).ceil() as usize)
}

/// `(1 / 2 pi i) int_{c - iT}^{c + iT} y^s / (s ... (s+k)) ds` with
/// `panels` equal Gauss-Legendre panels, refined near the kernel poles.
pub fn kernel_quad(p: &KernelParams, panels: usize) -> Result<Complex64> {
    let required = required_panels(p);
    if panels < required {
        return Err(Error::Resolution { panels, required });
    }
    let a = Complex64::new(p.c, -p.t);
    let b = Complex64::new(p.c, p.t);
    let parts = partition(a, b, panels, f64::INFINITY, &kernel_poles(p.k));
    let ln_y = p.y.ln();
    let k = p.k;
    let v = integrate_panels(|s| (s * ln_y).exp() / rising(s, k), &parts);
    Ok(v / Complex64::new(0.0, 2.0 * PI))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub t: f64,
    pub abs_error: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub y: f64,
    pub k: u32,
    pub points: Vec<ScanPoint>,
    pub fit: Option<LinearFit>,
    /// Fewer than three points above the floor.
    pub saturated: bool,
    /// Slope within `[-k - 0.5, -k + 0.5]`; absent when saturated.
    pub within_contract: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationScan {
    pub c: f64,
    pub t_grid: Vec<f64>,
    pub cells: Vec<ScanCell>,
}

impl TruncationScan {
    pub fn all_within_contract(&self) -> bool {
        self.cells.iter().all(|c| c.within_contract != Some(false))
    }
}

fn check_geometric(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "T grid has {} points, need at least 5",
            t_grid.len()
        )));
    }
    let ratio = t_grid[1] / t_grid[0];
    if !(ratio >= 2.0 - 1e-12) {
        return Err(Error::InvalidInput(format!("T grid ratio {ratio} below 2")));
    }
    for w in t_grid.windows(2) {
        if ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("T grid is not geometric".into()));
        }
    }
    Ok(())
}

/// Decay of `|kernel_quad - kernel_closed|` in `T` for every `(y, k)`.
pub fn truncation_scan(ys: &[f64], ks: &[u32], c: f64, t_grid: &[f64]) -> Result<TruncationScan> {
    check_geometric(t_grid)?;
    let mut cells = Vec::with_capacity(ys.len() * ks.len());
    for &k in ks {
        for &y in ys {
            let exact = kernel_closed(y, k)?;
            let points = t_grid
                .iter()
                .map(|&t| {
                    let p = KernelParams::new(y, k, c, t)?;
                    let v = kernel_quad(&p, required_panels(&p))?;
                    let abs_error = (v - exact).norm();
                    Ok(ScanPoint {
                        t,
                        abs_error,
                        saturated: abs_error < SATURATION_FLOOR,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let live: Vec<&ScanPoint> = points.iter().filter(|p| !p.saturated).collect();
            let (fit, saturated) = if live.len() >= 3 {
                let xs: Vec<f64> = live.iter().map(|p| p.t).collect();
                let es: Vec<f64> = live.iter().map(|p| p.abs_error).collect();
                (Some(loglog_fit(&xs, &es)?), false)
            } else {
                (None, true)
            };
            let within_contract = fit.map(|f| (f.slope + k as f64).abs() <= 0.5);
            cells.push(ScanCell {
                y,
                k,
                points,
                fit,
                saturated,
                within_contract,
            });
        }
    }
    Ok(TruncationScan {
        c,
        t_grid: t_grid.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnclosedPole {
    pub location: Complex64,
    pub residue: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourReport {
    pub x: f64,
    pub k: u32,
    pub c: f64,
    pub t: f64,
    pub left_sigma: f64,
    /// `(1 / 2 pi i)` times the integral over the whole rectangle.
    pub integral_value: Complex64,
    pub residue_constant: f64,
    /// `C x / (k+1)!`.
    pub residue_main: f64,
    pub right_contrib: Complex64,
    /// Top, then bottom.
    pub horizontal_contrib: (Complex64, Complex64),
    pub left_contrib: Complex64,
    /// Residues at poles other than `s = 1` inside the box.
    pub other_poles: Vec<EnclosedPole>,
    pub expected_total: Complex64,
    pub tolerance: f64,
    /// `|integral - expected| / |residue_main|`.
    pub relative_deviation: f64,
}

impl ContourReport {
    pub fn within_tolerance(&self) -> bool {
        (self.integral_value - self.expected_total).norm() <= self.tolerance
    }
}

/// Poles of `L(s)` (at `1 + lambda`) with multiplicities.
fn shifted_poles(shifts: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for l in shifts {
        let p = 1.0 + l;
        match out.iter_mut().find(|(q, _)| (q - p).norm() < 1e-12) {
            Some(entry) => entry.1 += 1,
            None => out.push((p, 1)),
        }
    }
    out
}

struct Edges {
    right: Complex64,
    top: Complex64,
    left: Complex64,
    bottom: Complex64,
}

fn integrate_box<F>(f: &F, corners: [Complex64; 4], min_panels: usize, width: f64, poles: &[Complex64]) -> Edges
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let edge = |a: Complex64, b: Complex64| {
        let p = partition(a, b, min_panels, width, poles);
        integrate_panels(f, &p) / two_pi_i
    };
    let [lo_right, hi_right, hi_left, lo_left] = corners;
    Edges {
        right: edge(lo_right, hi_right),
        top: edge(hi_right, hi_left),
        left: edge(hi_left, lo_left),
        bottom: edge(lo_left, lo_right),
    }
}

/// Integrates `L(s) x^s / (s ... (s+k))` counterclockwise around
/// `[left_sigma, c] x [-T, T]` and compares with the enclosed residues.
pub fn contour_residue_check(
    spec: &LSeriesSpec,
    x: f64,
    k: u32,
    c: f64,
    t: f64,
    left_sigma: f64,
) -> Result<ContourReport> {
    let shifts = spec.shifts.clone().ok_or_else(|| {
        Error::InvalidInput(format!("{} has no analytic evaluator", spec.label))
    })?;
    if spec.pole_order_at_1 != 1 {
        return Err(Error::PoleOrder {
            expected: 1,
            found: spec.pole_order_at_1,
        });
    }
    if k == 0 {
        return Err(Error::InvalidInput("contour check needs k >= 1".into()));
    }
    if !(left_sigma < 1.0 && 1.0 < c) {
        return Err(Error::InvalidInput(format!(
            "need left_sigma < 1 < c, got {left_sigma} and {c}"
        )));
    }
    if !(x >= 1.0 && x.is_finite() && t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("bad x = {x} or T = {t}")));
    }

    let l_poles = shifted_poles(&shifts);
    let k_poles = kernel_poles(k);
    let all_poles: Vec<Complex64> = l_poles.iter().map(|p| p.0).chain(k_poles.iter().copied()).collect();
    let corners = [
        Complex64::new(c, -t),
        Complex64::new(c, t),
        Complex64::new(left_sigma, t),
        Complex64::new(left_sigma, -t),
    ];
    for p in &all_poles {
        for i in 0..4 {
            let d = distance_to_segment(*p, corners[i], corners[(i + 1) % 4]);
            if d < POLE_CLEARANCE {
                return Err(Error::PoleCollision {
                    pole: p.to_string(),
                    distance: d,
                });
            }
        }
    }
    let inside = |p: Complex64| p.re > left_sigma && p.re < c && p.im.abs() < t;

    let constant = source_constant(spec, &ResidueOptions::default())?;
    let main = constant.value * x / factorial(k + 1);
    let ln_x = x.ln();

    let mut other_poles = Vec::new();
    for &(p, mult) in &l_poles {
        if (p - 1.0).norm() < 1e-12 || !inside(p) {
            continue;
        }
        if mult > 1 {
            return Err(Error::Domain(format!(
                "{}: pole of order {mult} at {p} inside the box is not supported",
                spec.label
            )));
        }
        let mut r = (p * ln_x).exp() / rising(p, k);
        for l in shifts.iter().filter(|l| (1.0 + *l - p).norm() > 1e-12) {
            r *= zeta(p - l)?.value;
        }
        other_poles.push(EnclosedPole { location: p, residue: r });
    }
    for j in 0..=k {
        let p = Complex64::new(-(j as f64), 0.0);
        if !inside(p) {
            continue;
        }
        let mut denom = 1.0;
        for i in 0..=k {
            if i != j {
                denom *= i as f64 - j as f64;
            }
        }
        let r = lfun_eval(spec, p)?.value * x.powi(-(j as i32)) / denom;
        other_poles.push(EnclosedPole { location: p, residue: r });
    }
    let expected_total = other_poles
        .iter()
        .fold(Complex64::new(main, 0.0), |acc, e| acc + e.residue);

    let rate = ln_x + spec.degree as f64 * (t + 2.0).ln() + 1.0;
    let width = (PI / 4.0) / rate;
    let integrand = |s: Complex64| -> Complex64 {
        match lfun_eval(spec, s) {
            Ok(v) => v.value * (s * ln_x).exp() / rising(s, k),
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    let coarse = integrate_box(&integrand, corners, MIN_PANELS, width, &all_poles);
    let fine = integrate_box(&integrand, corners, 2 * MIN_PANELS, width / 2.0, &all_poles);
    let sum = |e: &Edges| e.right + e.top + e.left + e.bottom;
    let total = sum(&fine);
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::NonConvergent("contour integrand not finite".into()));
    }
    let scale = fine.right.norm() + fine.top.norm() + fine.left.norm() + fine.bottom.norm();
    let tolerance = (total - sum(&coarse)).norm() + 1e-12 * (scale + main.abs());

    Ok(ContourReport {
        x,
        k,
        c,
        t,
        left_sigma,
        integral_value: total,
        residue_constant: constant.value,
        residue_main: main,
        right_contrib: fine.right,
        horizontal_contrib: (fine.top, fine.bottom),
        left_contrib: fine.left,
        other_poles,
        expected_total,
        tolerance,
        relative_deviation: (total - expected_total).norm() / main.abs(),
    })
}
