//! Evaluation of zeta and shifted-zeta products, residues at `s = 1`,
//! vertical growth scans and functional-equation exponent checks.

mod gamma;
mod growth;
mod residue;
mod zeta;

use num_complex::Complex64;

use crate::coeffs::LSeriesSpec;
use crate::error::{Error, Result};

pub use gamma::{ln_gamma, xi};
pub use growth::{
    conversion_exponent_check, default_t_grid, growth_scan, ConversionFit, ConversionSample,
    GrowthFit, GrowthSample, GrowthWindow,
};
pub use residue::{
    residue_at_1, source_constant, CSource, ConstantChoice, ResidueEstimate, ResidueMethod,
    ResidueOptions,
};
pub use zeta::{auto_params, zeta, zeta_em, EvalResult, DEFAULT_M, MAX_M};

/// Smallest allowed distance between `s` and a pole of a shifted-zeta
/// product.
pub const POLE_PROXIMITY: f64 = 1e-8;

/// `L(s) = prod_i zeta(s - lambda_i)` with first-order error propagation.
pub fn lfun_eval(spec: &LSeriesSpec, s: Complex64) -> Result<EvalResult> {
    let shifts = spec.shifts.as_ref().ok_or_else(|| {
        Error::InvalidInput(format!("{} has no analytic evaluator", spec.label))
    })?;
    for lambda in shifts {
        let pole = 1.0 + lambda;
        let d = (s - pole).norm();
        if d < POLE_PROXIMITY {
            return Err(Error::Pole(format!(
                "{}: s = {s} is {d:e} from the pole at {pole}",
                spec.label
            )));
        }
    }
    let factors = shifts
        .iter()
        .map(|lambda| zeta(s - lambda))
        .collect::<Result<Vec<_>>>()?;
    let mut value = Complex64::new(1.0, 0.0);
    for f in &factors {
        value *= f.value;
    }
    let mut err = 0.0;
    for (i, f) in factors.iter().enumerate() {
        let others: f64 = factors
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, g)| g.value.norm())
            .product();
        err += f.abs_error_estimate * others;
    }
    Ok(EvalResult {
        value,
        abs_error_estimate: err,
    })
}
