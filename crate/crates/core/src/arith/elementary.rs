//! Enclosures of constants and elementary functions.

use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};

use super::float::{Float, Round};
use super::real::BigReal;

const GUARD: u32 = 32;

static PI_CACHE: Mutex<Option<BigReal>> = Mutex::new(None);
static LN2_CACHE: Mutex<Option<BigReal>> = Mutex::new(None);

fn cached(cache: &Mutex<Option<BigReal>>, prec: u32, compute: fn(u32) -> BigReal) -> BigReal {
    let mut slot = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(v) = slot.as_ref() {
        if v.prec() >= prec {
            return v.with_prec(prec);
        }
    }
    let v = compute(prec.max(256) + GUARD);
    let out = v.with_prec(prec);
    *slot = Some(v);
    out
}

fn tiny(wp: u32) -> Float {
    Float::pow2(-(wp as i64) - 4)
}

/// `atan(1/k)` by its alternating series.
fn atan_inv(k: i64, wp: u32) -> BigReal {
    let mut pow = BigReal::one(wp).div_i64(k);
    let k2 = BigReal::from_i64(k * k, wp);
    let mut acc = BigReal::zero(wp);
    let mut j: i64 = 0;
    loop {
        let term = pow.div_i64(2 * j + 1);
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        pow = pow.div(&k2).expect("nonzero");
        j += 1;
        if pow.mag() < tiny(wp) {
            return acc.widen(&pow.mag());
        }
    }
}

fn compute_pi(wp: u32) -> BigReal {
    atan_inv(5, wp).mul_i64(16).sub(&atan_inv(239, wp).mul_i64(4))
}

fn compute_ln2(wp: u32) -> BigReal {
    // ln 2 = 2 atanh(1/3)
    let mut pow = BigReal::one(wp).div_i64(3);
    let mut acc = BigReal::zero(wp);
    let mut j: i64 = 0;
    loop {
        acc = acc.add(&pow.div_i64(2 * j + 1));
        pow = pow.div_i64(9);
        j += 1;
        if pow.mag() < tiny(wp) {
            return acc.widen(&pow.mag()).mul_i64(2);
        }
    }
}

pub fn pi(prec: u32) -> BigReal {
    cached(&PI_CACHE, prec, compute_pi)
}

pub fn ln2(prec: u32) -> BigReal {
    cached(&LN2_CACHE, prec, compute_ln2)
}

/// `exp(x)` for an exact point.
pub fn exp_point(x: &Float, prec: u32) -> BigReal {
    if x.is_zero() {
        return BigReal::one(prec);
    }
    assert!(x.top() <= 62, "exp argument out of range");
    let k = (x.to_f64() / std::f64::consts::LN_2).round() as i64;
    let halvings = ((prec as f64).sqrt() / 2.0).ceil() as i64;
    let wp = prec + GUARD + halvings as u32 + 2;
    let l2 = ln2(wp + 64);
    let r = BigReal::from_float(x.clone(), wp + 64)
        .sub(&l2.mul_i64(k))
        .with_prec(wp)
        .mul_2exp(-halvings);
    let mut sum = BigReal::one(wp);
    let mut term = BigReal::one(wp);
    let mut i: i64 = 1;
    loop {
        term = term.mul(&r).div_i64(i);
        sum = sum.add(&term);
        // |r| < 1/2 here, so the tail is bounded by the last term.
        if i >= 2 && term.mag() < tiny(wp) {
            sum = sum.widen(&term.mag());
            break;
        }
        i += 1;
    }
    for _ in 0..halvings {
        sum = sum.square();
    }
    sum.mul_2exp(k).with_prec(prec)
}

pub fn exp(x: &BigReal) -> BigReal {
    let p = x.prec();
    if x.is_point() {
        return exp_point(x.lo(), p);
    }
    let lo = exp_point(x.lo(), p);
    let hi = exp_point(x.hi(), p);
    BigReal::from_bounds(lo.lo().clone(), hi.hi().clone(), p)
}

/// `ln(x)` for an exact positive point.
pub fn ln_point(x: &Float, prec: u32) -> BigReal {
    assert!(x.is_positive(), "ln of non-positive value");
    let wp = prec + GUARD;
    let mut t = x.top();
    let mut y = x.mul_2exp(-t);
    if y < Float::from_f64(0.75).expect("finite") {
        t -= 1;
        y = y.mul_2exp(1);
    }
    if y == Float::one() && t == 0 {
        return BigReal::zero(prec);
    }
    let yr = BigReal::from_float(y, wp);
    let one = BigReal::one(wp);
    let u = yr.sub(&one).div(&yr.add(&one)).expect("positive");
    let u2 = u.square();
    let mut pow = u;
    let mut acc = BigReal::zero(wp);
    let mut j: i64 = 0;
    loop {
        acc = acc.add(&pow.div_i64(2 * j + 1));
        pow = pow.mul(&u2);
        j += 1;
        if pow.mag() < tiny(wp) {
            acc = acc.widen(&pow.mag().mul_2exp(1));
            break;
        }
    }
    let extra = (64 - (t.unsigned_abs()).leading_zeros()) + 2;
    ln2(wp + extra)
        .mul_i64(t)
        .add(&acc.mul_2exp(1))
        .with_prec(prec)
}

/// `ln(x)`; `None` unless the interval is certainly positive.
pub fn ln(x: &BigReal) -> Option<BigReal> {
    if !x.is_positive() {
        return None;
    }
    let p = x.prec();
    if x.is_point() {
        return Some(ln_point(x.lo(), p));
    }
    let lo = ln_point(x.lo(), p);
    let hi = ln_point(x.hi(), p);
    Some(BigReal::from_bounds(lo.lo().clone(), hi.hi().clone(), p))
}

pub fn ln_biguint(v: &BigUint, prec: u32) -> BigReal {
    ln(&BigReal::from_biguint(v, prec + GUARD))
        .expect("ln of zero")
        .with_prec(prec)
}

pub fn ln_u64(v: u64, prec: u32) -> BigReal {
    ln_biguint(&BigUint::from(v), prec)
}

/// Reduces `x` modulo `2 pi` into roughly `[-pi, pi]`.
fn reduce_2pi(x: &Float, wp: u32) -> BigReal {
    if x.top() <= 2 {
        return BigReal::from_float(x.clone(), wp);
    }
    let extra = x.top().max(0) as u32 + 8;
    let two_pi = pi(wp + extra).mul_2exp(1);
    let xr = BigReal::from_float(x.clone(), wp + extra);
    let k = xr
        .div(&two_pi)
        .expect("nonzero")
        .mid()
        .add(&Float::from_f64(0.5).expect("finite"), 64, Round::Nearest)
        .floor();
    xr.sub(&two_pi.mul(&BigReal::from_bigint(&k, wp + extra)))
        .with_prec(wp)
}

fn sin_cos_series(r: &BigReal, wp: u32, cosine: bool) -> BigReal {
    let r2 = r.square();
    let (mut term, mut j) = if cosine {
        (BigReal::one(wp), 0i64)
    } else {
        (r.clone(), 0i64)
    };
    let mut acc = term.clone();
    let bound = Float::from_f64(16.0).expect("finite");
    loop {
        j += 1;
        let (a, b) = if cosine {
            (2 * j - 1, 2 * j)
        } else {
            (2 * j, 2 * j + 1)
        };
        term = term.mul(&r2).div_i64(a * b).neg();
        acc = acc.add(&term);
        // Terms alternate and shrink once (2j)(2j+1) exceeds r^2 (|r| <= 4).
        if term.mag() < tiny(wp) && Float::from_i64(a * b) > bound {
            return acc.widen(&term.mag());
        }
    }
}

pub fn sin_point(x: &Float, prec: u32) -> BigReal {
    if x.is_zero() {
        return BigReal::zero(prec);
    }
    let wp = prec + GUARD;
    sin_cos_series(&reduce_2pi(x, wp), wp, false).with_prec(prec)
}

pub fn cos_point(x: &Float, prec: u32) -> BigReal {
    if x.is_zero() {
        return BigReal::one(prec);
    }
    let wp = prec + GUARD;
    sin_cos_series(&reduce_2pi(x, wp), wp, true).with_prec(prec)
}

fn clamp_unit(v: BigReal) -> BigReal {
    let p = v.prec();
    let one = Float::one();
    let lo = v.lo().clone().max(one.neg());
    let hi = v.hi().clone().min(one);
    BigReal::from_bounds(lo, hi, p)
}

/// `sin(x)` on an interval, via the midpoint and the Lipschitz bound.
pub fn sin(x: &BigReal) -> BigReal {
    let p = x.prec();
    if x.is_point() {
        return sin_point(x.lo(), p);
    }
    clamp_unit(sin_point(&x.mid(), p + 8).widen(&x.rad()).with_prec(p))
}

pub fn cos(x: &BigReal) -> BigReal {
    let p = x.prec();
    if x.is_point() {
        return cos_point(x.lo(), p);
    }
    clamp_unit(cos_point(&x.mid(), p + 8).widen(&x.rad()).with_prec(p))
}

/// `x^y` for `x > 0`.
pub fn pow(x: &BigReal, y: &BigReal) -> Option<BigReal> {
    Some(exp(&ln(x)?.mul(y)))
}

/// `ln(n!)` for a single `n`.
pub fn ln_factorial(n: u64, prec: u32) -> BigReal {
    if n <= 1 {
        return BigReal::zero(prec);
    }
    let mut f = BigUint::from(1u32);
    for k in 2..=n {
        f *= k;
    }
    ln_biguint(&f, prec)
}

/// `ln(k!)` for `k = 0..=n`, by accumulating `ln k`.
pub fn ln_factorial_table(n: usize, prec: u32) -> Vec<BigReal> {
    let wp = prec + 16;
    let mut out = Vec::with_capacity(n + 1);
    out.push(BigReal::zero(prec));
    let mut acc = BigReal::zero(wp);
    for k in 1..=n {
        if k >= 2 {
            acc = acc.add(&ln_u64(k as u64, wp));
        }
        out.push(acc.with_prec(prec));
    }
    out
}

/// `ln(n!)` in double precision: exact summation for small `n`, Stirling
/// series beyond.
pub fn ln_factorial_f64(n: u64) -> f64 {
    if n < 256 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `floor(x)` of an enclosure whose floor is unambiguous.
pub fn floor_exact(x: &BigReal) -> Option<BigInt> {
    x.unique_floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(x: &BigReal, v: f64, tol: f64) -> bool {
        (x.to_f64() - v).abs() <= tol * v.abs().max(1.0)
    }

    // 50 digits of pi and ln 2, from standard tables.
    const PI50: &str = "3.1415926535897932384626433832795028841971693993751";
    const LN2_50: &str = "0.69314718055994530941723212145817656807550013436026";

    fn decimal(s: &str, prec: u32) -> BigReal {
        let (int, frac) = s.split_once('.').unwrap();
        let num: BigInt = format!("{int}{frac}").parse().unwrap();
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        // Last printed digit is truncated: value lies in [num, num+1]/den.
        BigReal::from_ratio(&num, &den, prec).hull(&BigReal::from_ratio(&(num + 1), &den, prec))
    }

    #[test]
    fn ln_factorial_f64_matches_table() {
        let t = ln_factorial_table(300, 96);
        for n in [0usize, 1, 2, 10, 255, 256, 257, 300] {
            let want = t[n].to_f64();
            assert!((ln_factorial_f64(n as u64) - want).abs() <= 1e-12 * want.max(1.0), "{n}");
        }
    }

    #[test]
    fn pi_and_ln2_match_tables() {
        assert!(pi(150).intersects(&decimal(PI50, 200)));
        assert!(ln2(150).intersects(&decimal(LN2_50, 200)));
        assert!(pi(150).log2_width() < -140.0);
        // Higher precision refines the cached value consistently.
        assert!(pi(1000).intersects(&pi(100)));
        assert!(pi(1000).log2_width() < -990.0);
    }

    #[test]
    fn exp_ln_inverse() {
        for v in [1e-30, 0.3, 1.0, 2.5, 37.0, -5.0, 700.0] {
            let x = Float::from_f64(v).unwrap();
            let e = exp_point(&x, 200);
            assert!(close(&e, v.exp(), 1e-14) || v.exp().is_infinite());
            let back = ln(&e).unwrap();
            assert!(back.contains(&x), "{v}: {back:?}");
            assert!(back.log2_width() < -150.0);
        }
        assert!(close(&ln_point(&Float::from_i64(10), 100), 10f64.ln(), 1e-15));
        assert!(ln_point(&Float::one(), 100).is_point());
    }

    #[test]
    fn sin_cos_identities() {
        for v in [0.1, 1.0, 3.0, -2.0, 100.0, 12345.678] {
            let x = Float::from_f64(v).unwrap();
            let s = sin_point(&x, 200);
            let c = cos_point(&x, 200);
            assert!(close(&s, v.sin(), 1e-12));
            assert!(close(&c, v.cos(), 1e-12));
            let one = s.square().add(&c.square());
            assert!(one.contains(&Float::one()));
            assert!(one.log2_width() < -150.0);
        }
        let half_pi = pi(200).mul_2exp(-1);
        let s = sin(&half_pi);
        assert!(s.contains(&Float::one()));
    }

    #[test]
    fn factorial_logs_agree() {
        let t = ln_factorial_table(50, 128);
        let direct = ln_factorial(50, 128);
        assert!(t[50].intersects(&direct));
        assert!(close(&t[10], 15.104412573075516, 1e-15));
    }
}
