//! Complex log-gamma and the completed zeta function.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::zeta::zeta;
use crate::error::{Error, Result};

/// `B_{2j} / (2j (2j - 1))` for the Stirling series, `j = 1..=8`.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// A logarithm of `Gamma(z)`: `exp` of the result is `Gamma(z)`. The branch
/// is continuous along horizontal lines but is not the principal one.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::Pole(format!("Gamma at {}", z.re)));
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 10.0 {
        shift += w.ln();
        w += 1.0;
    }
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        series += c * p;
        p *= inv2;
    }
    Ok((w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift)
}

/// `xi(s) = s (s - 1) / 2 * pi^{-s/2} Gamma(s/2) zeta(s)`.
pub fn xi(s: Complex64) -> Result<Complex64> {
    let half = s / 2.0;
    let g = (ln_gamma(half)? - half * PI.ln()).exp();
    let z = zeta(s)?.value;
    Ok(s * (s - 1.0) / 2.0 * g * z)
}
