//! Concrete L-series with independently computable coefficients.

mod tau;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::analytic::zeta;
use crate::coeffs::{rankin_square, root, LSeriesSpec, Root, SatakeSet};
use crate::error::{Error, Result};

pub use tau::{sigma1_table, tau_table, DEFAULT_TAU_CAP};

/// A testbed family. Eisenstein shifts are stored by their imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub enum TestbedId {
    Zeta,
    ZetaSquared,
    Eisenstein(Vec<f64>),
    RsDelta,
    RsEisenstein(Vec<f64>),
}

impl TestbedId {
    /// Eisenstein testbed from complex shifts, which must be purely imaginary.
    pub fn eisenstein(shifts: &[Complex64]) -> Result<Self> {
        Ok(Self::Eisenstein(imaginary_parts(shifts)?))
    }

    pub fn rs_eisenstein(shifts: &[Complex64]) -> Result<Self> {
        Ok(Self::RsEisenstein(imaginary_parts(shifts)?))
    }
}

fn imaginary_parts(shifts: &[Complex64]) -> Result<Vec<f64>> {
    if shifts.is_empty() {
        return Err(Error::InvalidInput("at least one shift is required".into()));
    }
    shifts
        .iter()
        .map(|z| {
            if z.re.abs() > 1e-12 || !z.im.is_finite() {
                Err(Error::InvalidInput(format!("shift {z} is not purely imaginary")))
            } else {
                Ok(z.im)
            }
        })
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for TestbedId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zeta => write!(f, "zeta"),
            Self::ZetaSquared => write!(f, "zeta2"),
            Self::Eisenstein(v) => write!(f, "eisenstein:{}", fmt_list(v)),
            Self::RsDelta => write!(f, "rs-delta"),
            Self::RsEisenstein(v) => write!(f, "rs-eisenstein:{}", fmt_list(v)),
        }
    }
}

impl FromStr for TestbedId {
    type Err = Error;

    /// `zeta`, `zeta2`, `rs-delta`, `eisenstein:t1,t2,..` and
    /// `rs-eisenstein:t1,..`, where `t_i` are the imaginary parts of the shifts.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let parse_list = |a: Option<&str>| -> Result<Vec<f64>> {
            let a = a.ok_or_else(|| {
                Error::InvalidInput(format!("{name} needs shifts, e.g. {name}:0,0.5,-0.5"))
            })?;
            let v = a
                .split(',')
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidInput(format!("bad shift {x:?}: {e}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("bad shift list {a:?}")));
            }
            Ok(v)
        };
        let no_args = |id: TestbedId| match args {
            None => Ok(id),
            Some(_) => Err(Error::InvalidInput(format!("{name} takes no parameters"))),
        };
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "zeta" => no_args(Self::Zeta),
            "zeta2" | "zeta-squared" => no_args(Self::ZetaSquared),
            "rs-delta" => no_args(Self::RsDelta),
            "eisenstein" => Ok(Self::Eisenstein(parse_list(args)?)),
            "rs-eisenstein" => Ok(Self::RsEisenstein(parse_list(args)?)),
            other => Err(Error::InvalidInput(format!("unknown testbed {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestbedOptions {
    /// Largest tau table the recurrence may build.
    pub tau_cap: usize,
    /// Number of tau values to make available, at most `tau_cap`.
    pub tau_len: usize,
    /// Precomputed `tau(1..)`, e.g. from a cache file.
    pub tau: Option<Arc<Vec<i128>>>,
}

impl Default for TestbedOptions {
    fn default() -> Self {
        Self {
            tau_cap: DEFAULT_TAU_CAP,
            tau_len: DEFAULT_TAU_CAP,
            tau: None,
        }
    }
}

impl TestbedOptions {
    pub fn with_tau_len(tau_len: usize) -> Self {
        Self {
            tau_len,
            ..Self::default()
        }
    }
}

/// Roots `{alpha, beta}` with `alpha + beta = tau_p p^{-11/2}` and
/// `alpha beta = 1`: a conjugate pair on the unit circle when the
/// discriminant is negative, a real reciprocal pair otherwise.
pub fn normalize_hecke(p: u64, tau_p: i128) -> Result<SatakeSet> {
    let pf = TwoFloat::from(p as f64);
    let scale = pf.powi(5) * pf.sqrt();
    let lambda = TwoFloat::from(tau_p) / scale;
    let half = lambda / 2.0;
    let disc = half * half - 1.0;
    let zero = TwoFloat::from(0.0);
    let (alpha, beta): (Root, Root) = if disc < zero {
        let im = (-disc).sqrt();
        (
            Root::new(half, im),
            Root::new(half, -im),
        )
    } else {
        let r = disc.sqrt();
        let big = if half >= zero { half + r } else { half - r };
        (Root::new(big, zero), Root::new(TwoFloat::from(1.0) / big, zero))
    };
    SatakeSet::new(p, vec![alpha, beta])
}

fn shifted_roots(p: u64, shifts: &[f64]) -> SatakeSet {
    let lp = (p as f64).ln();
    let roots = shifts
        .iter()
        .map(|&t| {
            let (s, c) = (t * lp).sin_cos();
            root(c, s)
        })
        .collect();
    SatakeSet::new(p, roots).expect("sieve primes are prime")
}

fn shifted_spec(label: String, shifts: Vec<f64>) -> Result<LSeriesSpec> {
    let degree = shifts.len();
    let zeros = shifts.iter().filter(|t| t.abs() <= 1e-12).count() as u32;
    let local = shifts.clone();
    let spec = LSeriesSpec::new(
        label,
        degree,
        Arc::new(move |p| shifted_roots(p, &local)),
    )?
    .with_shifts(shifts.iter().map(|&t| Complex64::new(0.0, t)).collect())?;
    let hint = if zeros == 1 {
        let mut c = Complex64::new(1.0, 0.0);
        for &t in shifts.iter().filter(|t| t.abs() > 1e-12) {
            c *= zeta(Complex64::new(1.0, -t))?.value;
        }
        (c.im.abs() <= 1e-10 * c.norm()).then_some(c.re)
    } else {
        None
    };
    Ok(spec.with_pole(zeros, hint))
}

fn tau_values(opts: &TestbedOptions) -> Result<Arc<Vec<i128>>> {
    if opts.tau_len > opts.tau_cap {
        return Err(Error::Resource(format!(
            "RS_DELTA requested with {} tau values, beyond the cap {}",
            opts.tau_len, opts.tau_cap
        )));
    }
    match &opts.tau {
        Some(t) if t.len() >= opts.tau_len => Ok(t.clone()),
        Some(t) => Err(Error::InvalidInput(format!(
            "supplied tau table has {} values, {} requested",
            t.len(),
            opts.tau_len
        ))),
        None => Ok(Arc::new(tau_table(opts.tau_len, opts.tau_cap)?)),
    }
}

pub fn make_testbed(id: &TestbedId) -> Result<LSeriesSpec> {
    make_testbed_with(id, &TestbedOptions::default())
}

pub fn make_testbed_with(id: &TestbedId, opts: &TestbedOptions) -> Result<LSeriesSpec> {
    match id {
        TestbedId::Zeta => Ok(shifted_spec(id.to_string(), vec![0.0])?
            .with_pole(1, Some(1.0))
            .with_nonneg(true)),
        TestbedId::ZetaSquared => {
            Ok(shifted_spec(id.to_string(), vec![0.0, 0.0])?.with_nonneg(true))
        }
        TestbedId::Eisenstein(shifts) => shifted_spec(id.to_string(), shifts.clone()),
        TestbedId::RsEisenstein(shifts) => {
            let mut diffs = Vec::with_capacity(shifts.len() * shifts.len());
            for a in shifts {
                for b in shifts {
                    diffs.push(a - b);
                }
            }
            Ok(shifted_spec(id.to_string(), diffs)?.with_nonneg(true))
        }
        TestbedId::RsDelta => {
            let tau = tau_values(opts)?;
            let max_prime = tau.len() as u64;
            let t = tau.clone();
            let square = LSeriesSpec::new(
                id.to_string(),
                4,
                Arc::new(move |p| {
                    let set = normalize_hecke(p, t[p as usize - 1]).expect("prime index");
                    rankin_square(&set)
                }),
            )?;
            let t = tau;
            let sym2 = LSeriesSpec::new(
                "sym2-delta",
                3,
                Arc::new(move |p| {
                    let set = normalize_hecke(p, t[p as usize - 1]).expect("prime index");
                    let (a, b) = (set.roots()[0], set.roots()[1]);
                    SatakeSet::new(p, vec![a * a, a * b, b * b]).expect("prime index")
                }),
            )?
            .with_max_prime(max_prime);
            Ok(square
                .with_pole(1, None)
                .with_nonneg(true)
                .with_max_prime(max_prime)
                .with_cofactor(sym2))
        }
    }
}
