//! Ramanujan tau values from the power series of `prod (1 - q^n)^24`.

use crate::error::{Error, Result};

pub const DEFAULT_TAU_CAP: usize = 20_000;

/// `sigma_1(j)` for `0 <= j <= n`, with `sigma_1(0) = 0`.
pub fn sigma1_table(n: usize) -> Vec<u64> {
    let mut s = vec![0u64; n + 1];
    for d in 1..=n {
        let mut m = d;
        while m <= n {
            s[m] += d as u64;
            m += d;
        }
    }
    s
}

/// `tau(1..=n)` in exact 128-bit arithmetic.
///
/// With `f = prod (1 - q^k)^24 = sum f_j q^j`, the logarithmic derivative
/// gives `j f_j = -24 sum_{i=1}^{j} sigma_1(i) f_{j-i}`, and
/// `tau(j) = f_{j-1}`.
pub fn tau_table(n: usize, cap: usize) -> Result<Vec<i128>> {
    if n == 0 {
        return Err(Error::InvalidInput("tau table needs n >= 1".into()));
    }
    if n > cap {
        return Err(Error::Resource(format!(
            "tau table of length {n} exceeds the cap {cap}"
        )));
    }
    let sigma = sigma1_table(n);
    let mut f: Vec<i128> = Vec::with_capacity(n);
    f.push(1);
    for j in 1..n {
        let mut acc: i128 = 0;
        for i in 1..=j {
            let term = (sigma[i] as i128)
                .checked_mul(f[j - i])
                .ok_or(Error::Overflow { n: j + 1 })?;
            acc = acc.checked_add(term).ok_or(Error::Overflow { n: j + 1 })?;
        }
        let total = acc.checked_mul(-24).ok_or(Error::Overflow { n: j + 1 })?;
        let j128 = j as i128;
        if total % j128 != 0 {
            return Err(Error::NonConvergent(format!(
                "tau recurrence lost exactness at n = {}",
                j + 1
            )));
        }
        f.push(total / j128);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Coefficients of `q * prod_{k <= n} (1 - q^k)^24` by repeated
    /// multiplication with `(1 - q^k)`, truncated at `q^n`.
    fn brute_force(n: usize) -> Vec<i128> {
        let mut poly = vec![0i128; n];
        poly[0] = 1;
        for k in 1..n {
            for _ in 0..24 {
                for e in (k..n).rev() {
                    poly[e] -= poly[e - k];
                }
            }
        }
        poly
    }

    #[test]
    fn sigma1_small() {
        assert_eq!(sigma1_table(12)[1..], [1, 3, 4, 7, 6, 12, 8, 15, 13, 18, 12, 28]);
    }

    #[test]
    fn known_values() {
        let t = tau_table(12, DEFAULT_TAU_CAP).unwrap();
        assert_eq!(t[0], 1);
        assert_eq!(t[1], -24);
        assert_eq!(t[2], 252);
        assert_eq!(t[5], -6048);
        assert_eq!(t[5], t[1] * t[2]);
    }

    #[test]
    fn matches_brute_force_expansion() {
        assert_eq!(tau_table(50, DEFAULT_TAU_CAP).unwrap(), brute_force(50));
    }

    #[test]
    fn hecke_relations() {
        let t = tau_table(200, DEFAULT_TAU_CAP).unwrap();
        let tau = |n: usize| t[n - 1];
        for (a, b) in [(2, 3), (4, 5), (7, 11), (8, 9), (13, 15)] {
            assert_eq!(tau(a * b), tau(a) * tau(b));
        }
        // tau(p^2) = tau(p)^2 - p^11
        for p in [2usize, 3, 5, 7, 11, 13] {
            assert_eq!(tau(p * p), tau(p) * tau(p) - (p as i128).pow(11));
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(tau_table(101, 100), Err(Error::Resource(_))));
        assert!(tau_table(0, 100).is_err());
    }
}
