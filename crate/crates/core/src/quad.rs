//! Gauss-Legendre panels along straight segments, and adaptive Simpson.

use std::sync::LazyLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sum::pairwise_sum_complex;

pub const GL_ORDER: usize = 16;

/// Nodes and weights on `[-1, 1]`.
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule of order `n` by Newton iteration from Chebyshev
/// guesses.
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussLegendre { nodes, weights }
}

pub static GL16: LazyLock<GaussLegendre> = LazyLock::new(|| gauss_legendre(GL_ORDER));

pub fn distance_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let u = ((p - a) * d.conj()).re / len2;
    let u = u.clamp(0.0, 1.0);
    (p - (a + d * u)).norm()
}

/// Deterministic partition of `[a, b]` into at least `min_panels` panels no
/// wider than `max_width`, refined by halving until each panel is at most half
/// as wide as its distance to the nearest singularity.
pub fn partition(
    a: Complex64,
    b: Complex64,
    min_panels: usize,
    max_width: f64,
    singularities: &[Complex64],
) -> Vec<(Complex64, Complex64)> {
    let len = (b - a).norm();
    let base = min_panels.max((len / max_width).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(base);
    let mut stack = Vec::new();
    for i in (0..base).rev() {
        let lo = a + (b - a) * (i as f64 / base as f64);
        let hi = a + (b - a) * ((i + 1) as f64 / base as f64);
        stack.push((lo, hi, 0u32));
    }
    while let Some((lo, hi, depth)) = stack.pop() {
        let width = (hi - lo).norm();
        let dist = singularities
            .iter()
            .map(|&s| distance_to_segment(s, lo, hi))
            .fold(f64::INFINITY, f64::min);
        if width > 0.5 * dist && depth < 48 {
            let mid = (lo + hi) * 0.5;
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        } else {
            out.push((lo, hi));
        }
    }
    out
}

/// `int f(z) dz` along the panels in order. Panels are evaluated in parallel
/// and combined by a fixed pairwise tree.
pub fn integrate_panels<F>(f: F, panels: &[(Complex64, Complex64)]) -> Complex64
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let gl = &*GL16;
    let parts: Vec<Complex64> = panels
        .par_iter()
        .map(|&(lo, hi)| {
            let half = (hi - lo) * 0.5;
            let mid = (hi + lo) * 0.5;
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                acc += *w * f(mid + half * *x);
            }
            acc * half
        })
        .collect();
    pairwise_sum_complex(&parts)
}

/// Adaptive Simpson on `[a, b]` to relative tolerance `rel_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput("non-finite integration bounds".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // coarse magnitude from a fixed 64-panel Simpson pass
    let n = 64;
    let h = (b - a) / n as f64;
    let mut coarse = 0.0;
    for i in 0..n {
        let x0 = a + h * i as f64;
        coarse += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h)).abs();
    }
    let abs_tol = rel_tol * coarse.max(f64::MIN_POSITIVE);
    let mut failed = false;
    let v = simpson_step(&f, a, b, fa, fm, fb, whole, abs_tol, 60, &mut failed);
    if failed || !v.is_finite() {
        return Err(Error::NonConvergent(format!(
            "adaptive Simpson on [{a}, {b}] did not reach {rel_tol:e}"
        )));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    failed: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *failed = true;
        return left + right;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failed)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let gl = &*GL16;
        let total: f64 = gl.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        for deg in [2, 10, 30] {
            let got: f64 = gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((got - 2.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
        assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn contour_integral_of_reciprocal() {
        // int dz / z around the unit square is 2 pi i
        let c = [
            Complex64::new(1.0, -1.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(-1.0, 1.0),
            Complex64::new(-1.0, -1.0),
        ];
        let zero = [Complex64::new(0.0, 0.0)];
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            let p = partition(c[i], c[(i + 1) % 4], 4, 1.0, &zero);
            total += integrate_panels(|z| 1.0 / z, &p);
        }
        assert!((total - Complex64::new(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-13);
    }

    #[test]
    fn partition_refines_near_singularities() {
        let a = Complex64::new(0.1, -10.0);
        let b = Complex64::new(0.1, 10.0);
        let p = partition(a, b, 4, 10.0, &[Complex64::new(0.0, 0.0)]);
        for &(lo, hi) in &p {
            let d = distance_to_segment(Complex64::new(0.0, 0.0), lo, hi);
            assert!((hi - lo).norm() <= 0.5 * d + 1e-15);
        }
        assert_eq!(p.first().unwrap().0, a);
        assert_eq!(p.last().unwrap().1, b);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }

    #[test]
    fn simpson_closed_forms() {
        let v = adaptive_simpson(|t| 2.0 * t + t.sqrt(), 1.0, 1e4, 1e-10).unwrap();
        let exact = 1e8 - 1.0 + 2.0 / 3.0 * (1e6 - 1.0);
        assert!((v - exact).abs() <= 1e-10 * exact);
        assert_eq!(adaptive_simpson(|t| t, 3.0, 3.0, 1e-10).unwrap(), 0.0);
    }
}
