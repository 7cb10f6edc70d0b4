//! Smallest-prime-factor sieve and the multiplicative coefficient fill.

use rayon::prelude::*;

use super::{local_coeffs, root_to_c64, CoeffTable, LSeriesSpec};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_CUTOFF: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveOptions {
    /// Largest cutoff the sieve will allocate for.
    pub max_cutoff: usize,
    /// Indices per parallel work item.
    pub chunk: usize,
}

impl Default for SieveOptions {
    fn default() -> Self {
        Self {
            max_cutoff: DEFAULT_MAX_CUTOFF,
            chunk: 1 << 14,
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// `spf[m]` is the smallest prime factor of `m` for `2 <= m <= n`
/// (`spf[0] = spf[1] = 0`). Linear sieve.
pub fn smallest_prime_factors(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let limit = spf[i];
        for &p in &primes {
            let ip = i * p as usize;
            if p > limit || ip > n {
                break;
            }
            spf[ip] = p;
        }
    }
    spf
}

pub fn primes_up_to(n: usize) -> Vec<u64> {
    smallest_prime_factors(n)
        .iter()
        .enumerate()
        .filter(|&(i, &p)| i >= 2 && p as usize == i)
        .map(|(i, _)| i as u64)
        .collect()
}

fn real_local_coeffs(spec: &LSeriesSpec, p: u64, e_max: usize) -> Result<Vec<f64>> {
    let set = spec.local_factor(p)?;
    let c = local_coeffs(set.roots(), e_max);
    let mut out = Vec::with_capacity(c.len());
    let mut pe: usize = 1;
    for (e, v) in c.iter().enumerate() {
        let z = root_to_c64(v);
        if z.im.abs() > 1e-10 * z.norm().max(1.0) {
            return Err(Error::ComplexCoefficient { m: pe, imag: z.im });
        }
        out.push(z.re);
        if e < e_max {
            pe = pe.saturating_mul(p as usize);
        }
    }
    Ok(out)
}

pub fn multiplicative_sieve(spec: &LSeriesSpec, cutoff: usize) -> Result<CoeffTable> {
    multiplicative_sieve_with(spec, cutoff, &SieveOptions::default())
}

/// Coefficients `a(1..=cutoff)` of the Euler product of `spec`.
///
/// `a(m) = c_p(e) * a(m / p^e)` with `p` the smallest prime factor of `m`.
/// Indices are filled in dyadic blocks `[2^b, 2^(b+1))`; every dependency
/// `m / p^e <= m / 2` lies in an earlier block, so each block is filled in
/// parallel from an immutable prefix. The arithmetic per index is fixed, so
/// the table does not depend on chunking or thread count.
pub fn multiplicative_sieve_with(
    spec: &LSeriesSpec,
    cutoff: usize,
    opts: &SieveOptions,
) -> Result<CoeffTable> {
    if cutoff == 0 {
        return Err(Error::InvalidInput("cutoff must be at least 1".into()));
    }
    if cutoff > opts.max_cutoff {
        return Err(Error::Resource(format!(
            "cutoff {cutoff} exceeds the sieve budget {}",
            opts.max_cutoff
        )));
    }
    if u32::try_from(cutoff).is_err() {
        return Err(Error::Resource(format!("cutoff {cutoff} exceeds u32 range")));
    }
    if let Some(max) = spec.max_prime {
        if (cutoff as u64) > max && cutoff >= 2 {
            return Err(Error::Domain(format!(
                "{}: local factors are only available up to p = {max}, cutoff is {cutoff}",
                spec.label
            )));
        }
    }
    let chunk = opts.chunk.max(1);
    let spf = smallest_prime_factors(cutoff);

    // Full local tables for primes with p^2 <= cutoff.
    let mut root_bound = (cutoff as f64).sqrt() as usize;
    while (root_bound + 1) * (root_bound + 1) <= cutoff {
        root_bound += 1;
    }
    while root_bound * root_bound > cutoff {
        root_bound -= 1;
    }
    let small_primes: Vec<usize> = (2..=root_bound).filter(|&i| spf[i] as usize == i).collect();
    let small_tables: Vec<(usize, Vec<f64>)> = small_primes
        .par_iter()
        .map(|&p| {
            let mut e_max = 0usize;
            let mut pe = 1usize;
            while pe <= cutoff / p {
                pe *= p;
                e_max += 1;
            }
            real_local_coeffs(spec, p as u64, e_max).map(|t| (p, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut small: Vec<Vec<f64>> = vec![Vec::new(); root_bound + 1];
    for (p, t) in small_tables {
        small[p] = t;
    }

    let mut values = vec![0.0f64; cutoff];
    values[0] = 1.0;
    let mut lo = 2usize;
    while lo <= cutoff {
        let hi = (lo * 2).min(cutoff + 1);
        let (prefix, rest) = values.split_at_mut(lo - 1);
        let block = &mut rest[..hi - lo];
        let prefix: &[f64] = prefix;
        block
            .par_chunks_mut(chunk)
            .enumerate()
            .try_for_each(|(ci, out)| -> Result<()> {
                let start = lo + ci * chunk;
                for (off, slot) in out.iter_mut().enumerate() {
                    let m = start + off;
                    let p = spf[m] as usize;
                    if p == m {
                        *slot = if p <= root_bound {
                            small[p][1]
                        } else {
                            real_local_coeffs(spec, p as u64, 1)?[1]
                        };
                        continue;
                    }
                    let mut q = m;
                    let mut e = 0usize;
                    while q.is_multiple_of(p) {
                        q /= p;
                        e += 1;
                    }
                    *slot = small[p][e] * prefix[q - 1];
                }
                Ok(())
            })?;
        lo = hi;
    }

    let table = CoeffTable {
        values,
        nonneg: spec.nonneg,
        source_label: spec.label.clone(),
    };
    if spec.nonneg {
        table.check_nonneg()?;
    }
    Ok(table)
}
