//! The integer majorant `s_1 = 1`, `s_n = sum_{m=2}^n m sum_{n_1+...+n_m=n} s_{n_1}...s_{n_m}`,
//! i.e. the coefficients of the solution of `s = z + sigma(s)` with
//! `sigma(x) = x^2 (2 - x) / (1 - x)^2 = sum_{n >= 2} n x^n`.

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::real::ln_biguint_approx;

/// `s_0 = 0, s_1, ..., s_{n_max}` from the composition recurrence.
pub fn majorant_coeffs(n_max: usize) -> Vec<BigUint> {
    let mut s = vec![BigUint::zero(); n_max + 1];
    if n_max == 0 {
        return s;
    }
    s[1] = BigUint::from(1u32);
    // pw[m - 2][n] = [z^n] S^m.
    let mut pw: Vec<Vec<BigUint>> = Vec::new();
    for n in 2..=n_max {
        pw.push(vec![BigUint::zero(); n_max + 1]);
        let prev = &pw;
        let sv = &s;
        let fresh: Vec<BigUint> = (2..=n)
            .into_par_iter()
            .map(|m| {
                let lower: &[BigUint] = if m == 2 { sv } else { &prev[m - 3] };
                (1..=n + 1 - m).map(|i| &sv[i] * &lower[n - i]).sum()
            })
            .collect();
        let mut acc = BigUint::zero();
        for (j, v) in fresh.into_iter().enumerate() {
            acc += &v * BigUint::from(j + 2);
            pw[j][n] = v;
        }
        s[n] = acc;
    }
    s
}

/// The same numbers by iterating `s <- z + sigma(s)` on truncated series;
/// each pass fixes at least one more coefficient.
pub fn majorant_by_substitution(n_max: usize) -> Vec<BigUint> {
    let mut s = vec![BigInt::zero(); n_max + 1];
    if n_max == 0 {
        return vec![BigUint::zero()];
    }
    s[1] = BigInt::from(1);
    for _ in 1..n_max {
        let next = {
            let sq = mul(&s, &s, n_max);
            let mut two_minus = s.iter().map(|x| -x).collect::<Vec<_>>();
            two_minus[0] += 2;
            let num = mul(&sq, &two_minus, n_max);
            let mut one_minus = two_minus;
            one_minus[0] -= 1;
            let den = mul(&one_minus, &one_minus, n_max);
            let mut q = div_unit(&num, &den, n_max);
            q[1] += 1;
            q
        };
        if next == s {
            break;
        }
        s = next;
    }
    s.into_iter().map(|x| x.to_biguint().expect("coefficients are non-negative")).collect()
}

fn mul(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    (0..=n)
        .map(|k| (0..=k).filter(|&i| !a[i].is_zero() && !b[k - i].is_zero()).map(|i| &a[i] * &b[k - i]).sum())
        .collect()
}

/// `a / b` for a series `b` with constant term 1.
fn div_unit(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let mut q: Vec<BigInt> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut v = a[k].clone();
        for j in 1..=k {
            if !b[j].is_zero() {
                v -= &b[j] * &q[k - j];
            }
        }
        q.push(v);
    }
    q
}

/// The recurrence in double precision.
pub fn majorant_f64(n_max: usize) -> Vec<f64> {
    let mut s = vec![0.0; n_max + 1];
    if n_max == 0 {
        return s;
    }
    s[1] = 1.0;
    let mut pw: Vec<Vec<f64>> = Vec::new();
    for n in 2..=n_max {
        pw.push(vec![0.0; n_max + 1]);
        let mut acc = 0.0;
        for m in 2..=n {
            let v: f64 = (1..=n + 1 - m)
                .map(|i| s[i] * if m == 2 { s[n - i] } else { pw[m - 3][n - i] })
                .sum();
            pw[m - 2][n] = v;
            acc += m as f64 * v;
        }
        s[n] = acc;
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct MajorantGrowth {
    pub n_max: usize,
    /// Least-squares slope of `ln s_n` over the second half, exponentiated.
    pub gamma2_fit: f64,
    /// Last raw ratio `s_n / s_{n-1}`.
    pub gamma2_ratio: f64,
    /// Ratio corrected for the `n^{-3/2}` factor of a square-root singularity.
    pub gamma2_extrapolated: f64,
    /// Relative spread of the corrected ratio over the last 50 orders.
    pub drift: f64,
    /// Smallest `gamma_1` with `s_n <= gamma_1 gamma_2^n` for all computed `n`,
    /// using the extrapolated `gamma_2`.
    pub gamma1: f64,
    pub converged: bool,
}

pub const DRIFT_WINDOW: usize = 50;
pub const DRIFT_TOL: f64 = 1e-3;

pub fn majorant_growth(s: &[BigUint]) -> MajorantGrowth {
    let ln: Vec<f64> = s.iter().map(ln_biguint_approx).collect();
    growth_from_logs(&ln)
}

/// Growth fit from `ln s_n`, `n = 0..=n_max` (entry 0 ignored).
pub fn growth_from_logs(ln: &[f64]) -> MajorantGrowth {
    let n_max = ln.len().saturating_sub(1);
    let corrected = |n: usize| {
        let r = ln[n + 1] - ln[n];
        (r + 1.5 * ((n + 1) as f64 / n as f64).ln()).exp()
    };
    let (gamma2_ratio, gamma2_extrapolated) = if n_max >= 3 {
        ((ln[n_max] - ln[n_max - 1]).exp(), corrected(n_max - 1))
    } else {
        (f64::NAN, f64::NAN)
    };
    let from = n_max.saturating_sub(DRIFT_WINDOW).max(2);
    let window: Vec<f64> = (from..n_max).map(corrected).collect();
    let drift = if window.len() >= 2 {
        let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / gamma2_extrapolated
    } else {
        f64::NAN
    };
    let half: Vec<usize> = ((n_max / 2).max(1)..=n_max).collect();
    let gamma2_fit = if half.len() >= 2 {
        let k = half.len() as f64;
        let mx = half.iter().map(|&n| n as f64).sum::<f64>() / k;
        let my = half.iter().map(|&n| ln[n]).sum::<f64>() / k;
        let sxy: f64 = half.iter().map(|&n| (n as f64 - mx) * (ln[n] - my)).sum();
        let sxx: f64 = half.iter().map(|&n| (n as f64 - mx).powi(2)).sum();
        (sxy / sxx).exp()
    } else {
        f64::NAN
    };
    let lg = gamma2_extrapolated.ln();
    let gamma1 = (1..=n_max).map(|n| ln[n] - n as f64 * lg).fold(f64::NEG_INFINITY, f64::max).exp();
    MajorantGrowth {
        n_max,
        gamma2_fit,
        gamma2_ratio,
        gamma2_extrapolated,
        drift,
        gamma1,
        converged: n_max > DRIFT_WINDOW + 2 && drift < DRIFT_TOL,
    }
}

/// `s_n` as a double when it fits.
pub fn to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Radius of convergence from the branch point of `z = s - sigma(s)`:
    /// `sigma'(s) = 1` reduces to `1 + s = 2 (1 - s)^3`.
    fn gamma2_branch_point() -> f64 {
        let (mut a, mut b) = (0.0f64, 0.5f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if 1.0 + m < 2.0 * (1.0 - m).powi(3) {
                a = m;
            } else {
                b = m;
            }
        }
        let s = 0.5 * (a + b);
        let sigma = s * s * (2.0 - s) / (1.0 - s).powi(2);
        1.0 / (s - sigma)
    }

    #[test]
    fn first_values() {
        let s = majorant_coeffs(6);
        let v: Vec<u64> = s.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(v[..4], [0, 1, 2, 11]);
        // s_4 = 2 [S^2]_4 + 3 [S^3]_4 + 4 [S^4]_4 = 2 (2*11 + 4) + 3 * 6 + 4.
        assert_eq!(v[4], 2 * 26 + 3 * 6 + 4);
    }

    #[test]
    fn recurrence_matches_substitution() {
        assert_eq!(majorant_coeffs(40), majorant_by_substitution(40));
    }

    #[test]
    fn float_mode_tracks_exact() {
        let s = majorant_coeffs(120);
        let f = majorant_f64(120);
        for n in 1..=120 {
            assert!((f[n] / to_f64(&s[n]) - 1.0).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn growth_approaches_branch_point() {
        let g = majorant_growth(&majorant_coeffs(150));
        let target = gamma2_branch_point();
        assert!((g.gamma2_extrapolated / target - 1.0).abs() < 1e-4, "{} vs {target}", g.gamma2_extrapolated);
        assert!(g.gamma2_ratio < g.gamma2_extrapolated);
        assert!(g.converged);
        let s = majorant_coeffs(150);
        for (n, v) in s.iter().enumerate().skip(1) {
            assert!(ln_biguint_approx(v) <= g.gamma1.ln() + n as f64 * g.gamma2_extrapolated.ln() + 1e-9);
        }
    }
}
