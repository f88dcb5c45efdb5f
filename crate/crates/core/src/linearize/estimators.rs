//! Finite-order growth estimators and Euler's derivative.

use serde::Serialize;

use crate::arith::{BigComplex, IrrationalSpec, Omega};
use crate::error::{Error, Result};

pub const MIN_WINDOW: usize = 20;

/// Default tail window: the last quarter of the orders, at least [`MIN_WINDOW`].
pub fn default_window(n_max: usize) -> usize {
    (n_max / 4).max(MIN_WINDOW).min(n_max)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeqPoint {
    pub n: usize,
    pub v: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusEstimate {
    pub window: (usize, usize),
    /// `max` over the window of `(1/n) ln |c_n|`; `None` when all vanish.
    pub log_inverse_radius: Option<f64>,
    /// `None` stands for an infinite radius.
    pub radius: Option<f64>,
    pub tag: &'static str,
    pub sequence: Vec<SeqPoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GevreyEstimate {
    pub window: (usize, usize),
    /// `max` over the window of `ln |c_n| / (n ln n)`; `None` when all vanish.
    pub order: Option<f64>,
    pub tag: &'static str,
    pub sequence: Vec<SeqPoint>,
}

fn tail(n_max: usize, window: usize, first: usize) -> Result<(usize, usize)> {
    if window == 0 || window > n_max {
        return Err(Error::Precondition(format!("window {window} outside 1..={n_max}")));
    }
    Ok(((n_max + 1 - window).max(first), n_max))
}

fn window_max(seq: &[SeqPoint], from: usize) -> Option<f64> {
    seq.iter().filter(|p| p.n >= from && p.v.is_finite()).map(|p| p.v).reduce(f64::max)
}

/// Estimate of the radius of convergence from `ln |c_n|`, `n = 0..=n_max`.
pub fn radius_estimate(ln_abs: &[f64], window: usize) -> Result<RadiusEstimate> {
    let n_max = ln_abs.len().saturating_sub(1);
    if window < MIN_WINDOW {
        return Err(Error::Precondition(format!("radius window must be at least {MIN_WINDOW}")));
    }
    let (from, to) = tail(n_max, window, 1)?;
    let sequence: Vec<SeqPoint> = (1..=n_max).map(|n| SeqPoint { n, v: ln_abs[n] / n as f64 }).collect();
    let m = window_max(&sequence, from);
    Ok(RadiusEstimate {
        window: (from, to),
        log_inverse_radius: m,
        radius: m.map(|v| (-v).exp()),
        tag: "estimate",
        sequence,
    })
}

/// Estimate of the Gevrey order `limsup ln |c_n| / (n ln n)`.
pub fn gevrey_order_estimate(ln_abs: &[f64], window: usize) -> Result<GevreyEstimate> {
    let n_max = ln_abs.len().saturating_sub(1);
    let (from, to) = tail(n_max, window, 2)?;
    let sequence: Vec<SeqPoint> = (2..=n_max)
        .map(|n| {
            let x = n as f64;
            SeqPoint { n, v: ln_abs[n] / (x * x.ln()) }
        })
        .collect();
    Ok(GevreyEstimate { window: (from, to), order: window_max(&sequence, from), tag: "estimate", sequence })
}

fn check_irrational(omega: &Omega) -> Result<()> {
    if let IrrationalSpec::Decimal { err, .. } = omega.spec() {
        if err.is_zero() {
            return Err(Error::DegenerateRotation("an exact decimal rotation number is rational".into()));
        }
    }
    Ok(())
}

/// `(delta f)_n = (lambda^n - lambda) f_n` for `n >= 2`; entries below 2 become zero.
pub fn euler_derivative(f: &[BigComplex], omega: &Omega, prec: u32) -> Result<Vec<BigComplex>> {
    f.iter()
        .enumerate()
        .map(|(n, c)| if n < 2 { Ok(BigComplex::zero(prec)) } else { Ok(c.mul(&omega.divisor(n as u64, prec)?)) })
        .collect()
}

/// `f_n / (lambda^n - lambda)` for `n >= 2`.
pub fn euler_inverse(f: &[BigComplex], omega: &Omega, prec: u32) -> Result<Vec<BigComplex>> {
    check_irrational(omega)?;
    f.iter()
        .enumerate()
        .map(|(n, c)| {
            if n < 2 {
                Ok(BigComplex::zero(prec))
            } else {
                Ok(c.mul(&omega.divisor_inverse(n as u64, prec)?))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::elementary::ln_factorial_f64;
    use crate::arith::BigReal;

    #[test]
    fn all_zero_gives_infinite_radius() {
        let mut l = vec![f64::NEG_INFINITY; 101];
        l[1] = 0.0;
        let r = radius_estimate(&l, 25).unwrap();
        assert!(r.radius.is_none());
        assert!(radius_estimate(&l, 10).is_err());
    }

    #[test]
    fn geometric_radius() {
        let l: Vec<f64> = (0..=200).map(|n| n as f64 * 3f64.ln()).collect();
        let r = radius_estimate(&l, 50).unwrap();
        assert!((r.radius.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gevrey_order_of_factorial_powers() {
        for s in [0.5, 1.0, 2.0] {
            let l: Vec<f64> = (0..=4000).map(|n| s * ln_factorial_f64(n as u64)).collect();
            let g = gevrey_order_estimate(&l, 1000).unwrap();
            let e = g.order.unwrap();
            // ln n! / (n ln n) = 1 - 1/ln n + O(ln n / (n ln n)).
            let n = 4000f64;
            assert!((e / s - (1.0 - 1.0 / n.ln())).abs() < 0.01, "s = {s}: {e}");
        }
    }

    #[test]
    fn euler_roundtrip_and_example() {
        let w = Omega::new(IrrationalSpec::Golden).unwrap();
        let prec = 160;
        let f: Vec<BigComplex> = (0..60).map(|n| BigComplex::from_real(BigReal::from_i64(n as i64 % 7 - 3, prec))).collect();
        let d = euler_derivative(&f, &w, prec).unwrap();
        assert!(d[2].intersects(&f[2].mul(&w.divisor(2, prec).unwrap())));
        let back = euler_inverse(&d, &w, prec).unwrap();
        for n in 2..60 {
            assert!(back[n].intersects(&f[n]), "n = {n}");
        }
        let ones: Vec<BigComplex> = (0..=400).map(|_| BigComplex::one(prec)).collect();
        let inv = euler_inverse(&ones, &w, prec).unwrap();
        let l: Vec<f64> = inv.iter().map(|c| c.ln_abs_upper()).collect();
        let g = gevrey_order_estimate(&l, 100).unwrap();
        assert!(g.order.unwrap().abs() < 0.05);
    }
}
