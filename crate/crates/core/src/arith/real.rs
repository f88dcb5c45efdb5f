//! Outward-rounded intervals over dyadic floats.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::float::{Float, Round};

/// A closed interval `[lo, hi]` known to contain some real number.
///
/// Every operation rounds the lower end down and the upper end up at the
/// working precision carried by the operands (the larger of the two).
#[derive(Clone, PartialEq, Eq)]
pub struct BigReal {
    lo: Float,
    hi: Float,
    prec: u32,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SignClass {
    Pos,
    Neg,
    Mixed,
}

impl BigReal {
    pub fn from_float(x: Float, prec: u32) -> BigReal {
        let lo = x.round(prec, Round::Down);
        let hi = x.round(prec, Round::Up);
        BigReal { lo, hi, prec }
    }

    /// Interval from explicit endpoints. Panics if `lo > hi`.
    pub fn from_bounds(lo: Float, hi: Float, prec: u32) -> BigReal {
        assert!(lo <= hi, "inverted interval");
        BigReal {
            lo: lo.round(prec, Round::Down),
            hi: hi.round(prec, Round::Up),
            prec,
        }
    }

    pub fn zero(prec: u32) -> BigReal {
        BigReal::from_float(Float::zero(), prec)
    }

    pub fn one(prec: u32) -> BigReal {
        BigReal::from_float(Float::one(), prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> BigReal {
        BigReal::from_float(Float::from_i64(v), prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> BigReal {
        BigReal::from_float(Float::from_bigint(v.clone()), prec)
    }

    pub fn from_biguint(v: &BigUint, prec: u32) -> BigReal {
        BigReal::from_float(Float::from_biguint(v.clone()), prec)
    }

    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> BigReal {
        BigReal {
            lo: Float::from_ratio(num, den, prec, Round::Down),
            hi: Float::from_ratio(num, den, prec, Round::Up),
            prec,
        }
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> BigReal {
        BigReal::from_ratio(r.numer(), r.denom(), prec)
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Same interval re-rounded outward to a new precision.
    pub fn with_prec(&self, prec: u32) -> BigReal {
        BigReal::from_bounds(self.lo.clone(), self.hi.clone(), prec)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn contains(&self, x: &Float) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &BigReal) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &BigReal) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Certainly `> 0`.
    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    /// Certainly `< 0`.
    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    /// Certainly `>= 0`.
    pub fn is_nonneg(&self) -> bool {
        !self.lo.is_negative()
    }

    /// Decided comparison, `None` when the intervals overlap (unless both
    /// are the same point).
    pub fn certain_cmp(&self, other: &BigReal) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.is_point() && other.is_point() && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Certainly `self < other`.
    pub fn lt(&self, other: &BigReal) -> bool {
        self.hi < other.lo
    }

    /// Certainly `self <= other`.
    pub fn le(&self, other: &BigReal) -> bool {
        self.hi <= other.lo
    }

    fn class(&self) -> SignClass {
        if !self.lo.is_negative() {
            SignClass::Pos
        } else if !self.hi.is_positive() {
            SignClass::Neg
        } else {
            SignClass::Mixed
        }
    }

    fn p(&self, other: &BigReal) -> u32 {
        self.prec.max(other.prec)
    }

    pub fn neg(&self) -> BigReal {
        BigReal {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
            prec: self.prec,
        }
    }

    pub fn abs(&self) -> BigReal {
        match self.class() {
            SignClass::Pos => self.clone(),
            SignClass::Neg => self.neg(),
            SignClass::Mixed => BigReal {
                lo: Float::zero(),
                hi: self.hi.clone().max(self.lo.neg()),
                prec: self.prec,
            },
        }
    }

    pub fn add(&self, other: &BigReal) -> BigReal {
        let p = self.p(other);
        BigReal {
            lo: self.lo.add(&other.lo, p, Round::Down),
            hi: self.hi.add(&other.hi, p, Round::Up),
            prec: p,
        }
    }

    pub fn sub(&self, other: &BigReal) -> BigReal {
        let p = self.p(other);
        BigReal {
            lo: self.lo.sub(&other.hi, p, Round::Down),
            hi: self.hi.sub(&other.lo, p, Round::Up),
            prec: p,
        }
    }

    pub fn mul(&self, other: &BigReal) -> BigReal {
        use SignClass::*;
        let p = self.p(other);
        let (a, b) = (self, other);
        let dn = |x: &Float, y: &Float| x.mul(y, p, Round::Down);
        let up = |x: &Float, y: &Float| x.mul(y, p, Round::Up);
        let (lo, hi) = match (a.class(), b.class()) {
            (Pos, Pos) => (dn(&a.lo, &b.lo), up(&a.hi, &b.hi)),
            (Pos, Neg) => (dn(&a.hi, &b.lo), up(&a.lo, &b.hi)),
            (Neg, Pos) => (dn(&a.lo, &b.hi), up(&a.hi, &b.lo)),
            (Neg, Neg) => (dn(&a.hi, &b.hi), up(&a.lo, &b.lo)),
            (Pos, Mixed) => (dn(&a.hi, &b.lo), up(&a.hi, &b.hi)),
            (Neg, Mixed) => (dn(&a.lo, &b.hi), up(&a.lo, &b.lo)),
            (Mixed, Pos) => (dn(&a.lo, &b.hi), up(&a.hi, &b.hi)),
            (Mixed, Neg) => (dn(&a.hi, &b.lo), up(&a.lo, &b.lo)),
            (Mixed, Mixed) => (
                dn(&a.lo, &b.hi).min(dn(&a.hi, &b.lo)),
                up(&a.lo, &b.lo).max(up(&a.hi, &b.hi)),
            ),
        };
        BigReal { lo, hi, prec: p }
    }

    pub fn square(&self) -> BigReal {
        let p = self.prec;
        match self.class() {
            SignClass::Pos => BigReal {
                lo: self.lo.mul(&self.lo, p, Round::Down),
                hi: self.hi.mul(&self.hi, p, Round::Up),
                prec: p,
            },
            SignClass::Neg => self.neg().square(),
            SignClass::Mixed => {
                let m = self.hi.clone().max(self.lo.neg());
                BigReal {
                    lo: Float::zero(),
                    hi: m.mul(&m, p, Round::Up),
                    prec: p,
                }
            }
        }
    }

    /// Quotient; `None` when the divisor may be zero.
    pub fn div(&self, other: &BigReal) -> Option<BigReal> {
        use SignClass::*;
        if other.contains_zero() {
            return None;
        }
        if other.is_negative() {
            return self.neg().div(&other.neg());
        }
        let p = self.p(other);
        let dn = |x: &Float, y: &Float| x.div(y, p, Round::Down);
        let up = |x: &Float, y: &Float| x.div(y, p, Round::Up);
        let (a, b) = (self, other);
        let (lo, hi) = match a.class() {
            Pos => (dn(&a.lo, &b.hi), up(&a.hi, &b.lo)),
            Neg => (dn(&a.lo, &b.lo), up(&a.hi, &b.hi)),
            Mixed => (dn(&a.lo, &b.lo), up(&a.hi, &b.lo)),
        };
        Some(BigReal { lo, hi, prec: p })
    }

    pub fn recip(&self) -> Option<BigReal> {
        BigReal::one(self.prec).div(self)
    }

    pub fn mul_i64(&self, k: i64) -> BigReal {
        self.mul(&BigReal::from_i64(k, self.prec))
    }

    pub fn div_i64(&self, k: i64) -> BigReal {
        self.div(&BigReal::from_i64(k, self.prec))
            .expect("division by nonzero integer")
    }

    /// Exact multiplication by `2^k`.
    pub fn mul_2exp(&self, k: i64) -> BigReal {
        BigReal {
            lo: self.lo.mul_2exp(k),
            hi: self.hi.mul_2exp(k),
            prec: self.prec,
        }
    }

    pub fn sqrt(&self) -> Option<BigReal> {
        if self.hi.is_negative() {
            return None;
        }
        let lo = if self.lo.is_negative() {
            Float::zero()
        } else {
            self.lo.sqrt(self.prec, Round::Down)
        };
        Some(BigReal {
            lo,
            hi: self.hi.sqrt(self.prec, Round::Up),
            prec: self.prec,
        })
    }

    pub fn max(&self, other: &BigReal) -> BigReal {
        BigReal {
            lo: self.lo.clone().max(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            prec: self.p(other),
        }
    }

    pub fn min(&self, other: &BigReal) -> BigReal {
        BigReal {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().min(other.hi.clone()),
            prec: self.p(other),
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &BigReal) -> BigReal {
        BigReal {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            prec: self.p(other),
        }
    }

    /// Widens by `[-r, r]` with `r >= 0`.
    pub fn widen(&self, r: &Float) -> BigReal {
        let r = r.abs();
        BigReal {
            lo: self.lo.sub(&r, self.prec, Round::Down),
            hi: self.hi.add(&r, self.prec, Round::Up),
            prec: self.prec,
        }
    }

    pub fn mid(&self) -> Float {
        self.lo.add(&self.hi, self.prec + 2, Round::Nearest).mul_2exp(-1)
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> Float {
        self.hi.sub(&self.lo, 64, Round::Up)
    }

    /// Upper bound on the distance from the midpoint to either end.
    pub fn rad(&self) -> Float {
        self.width().mul_2exp(-1)
    }

    /// `log2` of the width; `-inf` for points.
    pub fn log2_width(&self) -> f64 {
        self.width().log2_abs_approx()
    }

    /// Upper bound on `|x|` over the interval.
    pub fn mag(&self) -> Float {
        self.hi.abs().max(self.lo.abs())
    }

    /// Lower bound on `|x|` over the interval.
    pub fn mig(&self) -> Float {
        if self.contains_zero() {
            Float::zero()
        } else {
            self.hi.abs().min(self.lo.abs())
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    /// Integer part when the whole interval has the same floor.
    pub fn unique_floor(&self) -> Option<BigInt> {
        let a = self.lo.floor();
        let b = self.hi.floor();
        if a == b {
            Some(a)
        } else {
            None
        }
    }

    /// Number of correct leading bits relative to the magnitude, a rough
    /// quality measure for diagnostics.
    pub fn rel_bits(&self) -> f64 {
        if self.is_point() {
            return f64::INFINITY;
        }
        self.mag().log2_abs_approx() - self.log2_width()
    }

    /// Sum of a slice; zero for an empty slice.
    pub fn sum(items: &[BigReal], prec: u32) -> BigReal {
        items
            .iter()
            .fold(BigReal::zero(prec), |acc, x| acc.add(x))
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.lo, self.hi)
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = f.precision().unwrap_or(17);
        write!(f, "{}", self.mid().to_sci_string(d))
    }
}

/// Serialised form of an enclosure: decimal midpoint plus an upper bound on
/// the radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub mid: String,
    pub rad: String,
}

impl From<&BigReal> for Enclosure {
    fn from(x: &BigReal) -> Enclosure {
        // The printed midpoint has 40 significant digits; fold the decimal
        // rounding error into the reported radius.
        let mid = x.mid();
        let digits = 40;
        let mid_s = mid.to_sci_string(digits);
        let mut rad = x.rad();
        if !mid.is_zero() {
            let dec_err = Float::pow2((mid.log2_abs_approx() - 3.32 * (digits as f64 - 1.0)) as i64 + 2);
            rad = rad.add(&dec_err, 64, Round::Up);
        }
        Enclosure {
            mid: mid_s,
            rad: rad.to_sci_string(3),
        }
    }
}

pub fn bigint_to_f64(v: &BigInt) -> f64 {
    Float::from_bigint(v.clone()).to_f64()
}

/// Approximate natural log of a positive big integer.
pub fn ln_biguint_approx(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    Float::from_biguint(v.clone()).log2_abs_approx() * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> BigReal {
        BigReal::from_float(Float::from_f64(v).unwrap(), 128)
    }

    fn iv(a: f64, b: f64) -> BigReal {
        BigReal::from_bounds(Float::from_f64(a).unwrap(), Float::from_f64(b).unwrap(), 128)
    }

    #[test]
    fn mul_sign_cases_contain_all_corner_products() {
        let cases = [(-2.0, 3.0), (1.0, 2.0), (-3.0, -1.0), (0.0, 0.5), (-0.5, 0.0)];
        for &(a0, a1) in &cases {
            for &(b0, b1) in &cases {
                let p = iv(a0, a1).mul(&iv(b0, b1));
                for x in [a0, a1, (a0 + a1) / 2.0] {
                    for y in [b0, b1, (b0 + b1) / 2.0] {
                        assert!(p.contains(&Float::from_f64(x * y).unwrap()), "{x}*{y} not in {p:?}");
                    }
                }
                let lo = [a0 * b0, a0 * b1, a1 * b0, a1 * b1]
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(p.lo().to_f64(), lo);
            }
        }
    }

    #[test]
    fn division_refuses_zero() {
        assert!(r(1.0).div(&iv(-1.0, 1.0)).is_none());
        let q = r(1.0).div(&r(3.0)).unwrap();
        assert!(q.mul_i64(3).contains(&Float::one()));
        let q = iv(-1.0, 2.0).div(&iv(-4.0, -2.0)).unwrap();
        assert_eq!(q.lo().to_f64(), -1.0);
        assert_eq!(q.hi().to_f64(), 0.5);
    }

    #[test]
    fn square_of_mixed_interval_starts_at_zero() {
        let s = iv(-3.0, 2.0).square();
        assert!(s.lo().is_zero());
        assert_eq!(s.hi().to_f64(), 9.0);
    }

    #[test]
    fn enclosure_radius_covers_decimal_rounding() {
        let third = r(1.0).div(&r(3.0)).unwrap();
        let e = Enclosure::from(&third);
        assert!(e.mid.starts_with("3.333333333"));
        let rad: f64 = e.rad.parse().unwrap();
        assert!(rad > 0.0 && rad < 1e-35);
    }
}
