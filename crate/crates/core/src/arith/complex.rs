//! Rectangular complex intervals.

use std::fmt;

use super::elementary::{cos, ln, sin};
use super::float::Float;
use super::real::BigReal;

#[derive(Clone, PartialEq, Eq)]
pub struct BigComplex {
    pub re: BigReal,
    pub im: BigReal,
}

impl BigComplex {
    pub fn new(re: BigReal, im: BigReal) -> BigComplex {
        BigComplex { re, im }
    }

    pub fn zero(prec: u32) -> BigComplex {
        BigComplex::new(BigReal::zero(prec), BigReal::zero(prec))
    }

    pub fn one(prec: u32) -> BigComplex {
        BigComplex::new(BigReal::one(prec), BigReal::zero(prec))
    }

    pub fn from_real(re: BigReal) -> BigComplex {
        let p = re.prec();
        BigComplex::new(re, BigReal::zero(p))
    }

    /// `cos(theta) + i sin(theta)`.
    pub fn cis(theta: &BigReal) -> BigComplex {
        BigComplex::new(cos(theta), sin(theta))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, prec: u32) -> BigComplex {
        BigComplex::new(self.re.with_prec(prec), self.im.with_prec(prec))
    }

    pub fn is_zero_point(&self) -> bool {
        self.re.is_point() && self.im.is_point() && self.re.lo().is_zero() && self.im.lo().is_zero()
    }

    pub fn add(&self, o: &BigComplex) -> BigComplex {
        BigComplex::new(self.re.add(&o.re), self.im.add(&o.im))
    }

    pub fn sub(&self, o: &BigComplex) -> BigComplex {
        BigComplex::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }

    pub fn neg(&self) -> BigComplex {
        BigComplex::new(self.re.neg(), self.im.neg())
    }

    pub fn conj(&self) -> BigComplex {
        BigComplex::new(self.re.clone(), self.im.neg())
    }

    pub fn mul(&self, o: &BigComplex) -> BigComplex {
        BigComplex::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }

    pub fn scale(&self, k: &BigReal) -> BigComplex {
        BigComplex::new(self.re.mul(k), self.im.mul(k))
    }

    pub fn mul_2exp(&self, k: i64) -> BigComplex {
        BigComplex::new(self.re.mul_2exp(k), self.im.mul_2exp(k))
    }

    /// `|z|^2`.
    pub fn norm_sq(&self) -> BigReal {
        self.re.square().add(&self.im.square())
    }

    pub fn abs(&self) -> BigReal {
        self.norm_sq().sqrt().expect("non-negative")
    }

    /// Upper bound on `|z|`.
    pub fn mag(&self) -> Float {
        self.abs().hi().clone()
    }

    pub fn div(&self, o: &BigComplex) -> Option<BigComplex> {
        let d = o.norm_sq();
        let num = self.mul(&o.conj());
        Some(BigComplex::new(num.re.div(&d)?, num.im.div(&d)?))
    }

    pub fn recip(&self) -> Option<BigComplex> {
        BigComplex::one(self.prec()).div(self)
    }

    /// `ln |z|`; `None` if `z` may vanish.
    pub fn ln_abs(&self) -> Option<BigReal> {
        Some(ln(&self.norm_sq())?.mul_2exp(-1))
    }

    /// Upper bound on `ln |z|`, `-inf` for the exact zero.
    pub fn ln_abs_upper(&self) -> f64 {
        let n = self.norm_sq();
        if n.hi().is_zero() {
            return f64::NEG_INFINITY;
        }
        let hi = BigReal::from_float(n.hi().clone(), 64);
        ln(&hi).map(|l| l.hi().to_f64() / 2.0).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn intersects(&self, o: &BigComplex) -> bool {
        self.re.intersects(&o.re) && self.im.intersects(&o.im)
    }

    pub fn contains(&self, o: &BigComplex) -> bool {
        self.re.contains_interval(&o.re) && self.im.contains_interval(&o.im)
    }

    /// Midpoint as an exact complex point.
    pub fn mid(&self) -> (Float, Float) {
        (self.re.mid(), self.im.mid())
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?} + i{:?})", self.re, self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::elementary::pi;

    #[test]
    fn cis_product_adds_angles() {
        let p = 160;
        let a = BigReal::from_float(Float::from_f64(0.7).unwrap(), p);
        let b = BigReal::from_float(Float::from_f64(-2.1).unwrap(), p);
        let lhs = BigComplex::cis(&a).mul(&BigComplex::cis(&b));
        let rhs = BigComplex::cis(&a.add(&b));
        assert!(lhs.intersects(&rhs));
    }

    #[test]
    fn division_roundtrip() {
        let p = 128;
        let z = BigComplex::cis(&pi(p).div_i64(7)).scale(&BigReal::from_i64(3, p));
        let w = BigComplex::new(BigReal::from_i64(2, p), BigReal::from_i64(-5, p));
        let q = z.div(&w).unwrap();
        assert!(q.mul(&w).intersects(&z));
        let ln3 = z.ln_abs().unwrap();
        assert!((ln3.to_f64() - 3f64.ln()).abs() < 1e-15);
    }
}
