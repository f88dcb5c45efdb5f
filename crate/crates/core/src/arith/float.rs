//! Exact dyadic numbers `m * 2^e` with directed rounding.
//!
//! `Float` values are always stored in canonical form (odd mantissa, or the
//! zero mantissa with exponent 0), so structural equality is value equality.
//! Every arithmetic operation computes the exact result conceptually and then
//! rounds it to the requested number of mantissa bits in the requested
//! direction. Additions of operands whose magnitudes are far apart never
//! materialise the full-width sum; the small operand is replaced by a sticky
//! bit that provably rounds the same way.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Rounding direction. `Down` and `Up` are towards -inf and +inf.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Round {
    Down,
    Up,
    Nearest,
}

impl Round {
    pub fn flip(self) -> Round {
        match self {
            Round::Down => Round::Up,
            Round::Up => Round::Down,
            Round::Nearest => Round::Nearest,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Float {
    man: BigInt,
    exp: i64,
}

impl Float {
    pub fn zero() -> Float {
        Float {
            man: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Float {
        Float::from_i64(1)
    }

    /// Builds `man * 2^exp` exactly.
    pub fn from_parts(man: BigInt, exp: i64) -> Float {
        normalize(man, exp)
    }

    pub fn from_i64(v: i64) -> Float {
        normalize(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Float {
        normalize(v, 0)
    }

    pub fn from_biguint(v: BigUint) -> Float {
        normalize(BigInt::from(v), 0)
    }

    /// Exact conversion; `None` for NaN and infinities.
    pub fn from_f64(v: f64) -> Option<Float> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Float::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Some(normalize(BigInt::from(m) * sign, e))
    }

    /// Power of two `2^e`.
    pub fn pow2(e: i64) -> Float {
        Float {
            man: BigInt::one(),
            exp: e,
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.man
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.man.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.man.sign() == Sign::Minus
    }

    pub fn is_positive(&self) -> bool {
        self.man.sign() == Sign::Plus
    }

    /// Number of significant bits of the mantissa.
    pub fn precision_bits(&self) -> u64 {
        self.man.bits()
    }

    /// `t` such that `2^(t-1) <= |x| < 2^t`. Meaningless for zero.
    pub fn top(&self) -> i64 {
        self.man.bits() as i64 + self.exp
    }

    pub fn neg(&self) -> Float {
        Float {
            man: -self.man.clone(),
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Float {
        Float {
            man: self.man.abs(),
            exp: self.exp,
        }
    }

    /// Exact multiplication by `2^k`.
    pub fn mul_2exp(&self, k: i64) -> Float {
        if self.is_zero() {
            return Float::zero();
        }
        Float {
            man: self.man.clone(),
            exp: self.exp + k,
        }
    }

    pub fn round(&self, prec: u32, rnd: Round) -> Float {
        round_parts(self.man.clone(), self.exp, prec, rnd)
    }

    pub fn add(&self, other: &Float, prec: u32, rnd: Round) -> Float {
        if self.is_zero() {
            return other.round(prec, rnd);
        }
        if other.is_zero() {
            return self.round(prec, rnd);
        }
        let (big, small) = if self.top() >= other.top() {
            (self, other)
        } else {
            (other, self)
        };
        let p = big.exp.min(big.top() - prec as i64 - 3);
        if small.top() <= p {
            // |small| < 2^p and `big` is a multiple of 2^p: any value strictly
            // between big and big +- 2^p rounds like big +- 2^(p-1).
            let shift = (big.exp - (p - 1)) as u64;
            let m = (&big.man << shift) + BigInt::from(small.signum());
            return round_parts(m, p - 1, prec, rnd);
        }
        let e = self.exp.min(other.exp);
        let m = (&self.man << ((self.exp - e) as u64)) + (&other.man << ((other.exp - e) as u64));
        round_parts(m, e, prec, rnd)
    }

    pub fn sub(&self, other: &Float, prec: u32, rnd: Round) -> Float {
        self.add(&other.neg(), prec, rnd)
    }

    pub fn mul(&self, other: &Float, prec: u32, rnd: Round) -> Float {
        if self.is_zero() || other.is_zero() {
            return Float::zero();
        }
        round_parts(&self.man * &other.man, self.exp + other.exp, prec, rnd)
    }

    /// Exact product, no rounding.
    pub fn mul_exact(&self, other: &Float) -> Float {
        normalize(&self.man * &other.man, self.exp + other.exp)
    }

    /// Exact sum, no rounding. Only use when exponents are close.
    pub fn add_exact(&self, other: &Float) -> Float {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let m = (&self.man << ((self.exp - e) as u64)) + (&other.man << ((other.exp - e) as u64));
        normalize(m, e)
    }

    /// Rounded quotient. Panics on division by zero.
    pub fn div(&self, other: &Float, prec: u32, rnd: Round) -> Float {
        assert!(!other.is_zero(), "Float division by zero");
        if self.is_zero() {
            return Float::zero();
        }
        let negative = self.is_negative() != other.is_negative();
        let a = self.man.magnitude();
        let b = other.man.magnitude();
        let shift = (prec as i64 + 2 + b.bits() as i64 - a.bits() as i64).max(0) as u64;
        let (q, r) = (a << shift).div_rem(b);
        // q has at least prec+2 bits; a nonzero remainder becomes a sticky half unit.
        let mut m = BigInt::from(q) << 1u32;
        if !r.is_zero() {
            m += 1;
        }
        if negative {
            m = -m;
        }
        round_parts(m, self.exp - other.exp - shift as i64 - 1, prec, rnd)
    }

    /// Rounded square root of a non-negative value.
    pub fn sqrt(&self, prec: u32, rnd: Round) -> Float {
        assert!(!self.is_negative(), "Float sqrt of negative value");
        if self.is_zero() {
            return Float::zero();
        }
        // Scale so the integer root has at least prec+2 bits and the exponent is even.
        let mut shift = (2 * (prec as i64 + 2) - self.man.bits() as i64).max(0);
        if (self.exp - shift).rem_euclid(2) != 0 {
            shift += 1;
        }
        let scaled = self.man.magnitude() << (shift as u64);
        let root = scaled.sqrt();
        let exact = &root * &root == scaled;
        let mut m = BigInt::from(root) << 1u32;
        if !exact {
            m += 1;
        }
        round_parts(m, (self.exp - shift) / 2 - 1, prec, rnd)
    }

    /// Exact `floor(self)`.
    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.man << (self.exp as u64)
        } else {
            floor_shift(&self.man, (-self.exp) as u64)
        }
    }

    /// Exact `ceil(self)`.
    pub fn ceil(&self) -> BigInt {
        -self.neg().floor()
    }

    pub fn is_integer(&self) -> bool {
        self.exp >= 0 || self.is_zero()
    }

    /// Nearest `f64` (ties to even), saturating to infinities and zero.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round(53, Round::Nearest);
        let sign = if r.is_negative() { -1.0 } else { 1.0 };
        let top = r.top();
        if top > 1025 {
            return sign * f64::INFINITY;
        }
        if top < -1080 {
            return sign * 0.0;
        }
        let m = r.man.abs().to_f64().unwrap_or(f64::INFINITY);
        sign * ldexp(m, r.exp)
    }

    /// Approximate `log2 |x|`, usable for magnitudes far beyond `f64`.
    pub fn log2_abs_approx(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.man.bits() as i64;
        let keep = bits.min(60);
        let lead = (self.man.magnitude() >> ((bits - keep) as u64))
            .to_f64()
            .unwrap_or(1.0);
        lead.log2() + (bits - keep + self.exp) as f64
    }

    /// Exact rational value as `(numerator, denominator)` with the denominator
    /// a power of two.
    pub fn to_ratio(&self) -> (BigInt, BigInt) {
        if self.exp >= 0 {
            (&self.man << (self.exp as u64), BigInt::one())
        } else {
            (self.man.clone(), BigInt::one() << ((-self.exp) as u64))
        }
    }

    /// Rounded value of `num / den`.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32, rnd: Round) -> Float {
        assert!(!den.is_zero(), "zero denominator");
        Float::from_bigint(num.clone()).div(&Float::from_bigint(den.clone()), prec, rnd)
    }

    /// Decimal scientific notation with `digits` significant digits, rounded
    /// to nearest. Intended for reports, not for certified output.
    pub fn to_sci_string(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        let l10 = self.log2_abs_approx() * std::f64::consts::LOG10_2;
        if !l10.is_finite() || l10.abs() > 1.0e6 {
            return format!("2^{:.6}", self.log2_abs_approx());
        }
        // value * 10^(digits-1-d) should be an integer with `digits` digits.
        let d = l10.floor() as i64;
        let scale = digits as i64 - 1 - d;
        let (num, den) = self.to_ratio();
        let (num, den) = if scale >= 0 {
            (num * BigInt::from(10u32).pow(scale as u32), den)
        } else {
            (num, den * BigInt::from(10u32).pow((-scale) as u32))
        };
        let (q, r) = num.abs().div_rem(&den);
        let q = if r * 2 >= den { q + 1 } else { q };
        let mut s = q.to_string();
        let mut exp10 = d;
        if s.len() > digits {
            s.truncate(digits);
            exp10 += 1;
        } else if s.len() < digits {
            exp10 -= (digits - s.len()) as i64;
            while s.len() < digits {
                s.push('0');
            }
        }
        let sign = if self.is_negative() { "-" } else { "" };
        let (head, tail) = s.split_at(1);
        if tail.is_empty() {
            format!("{sign}{head}e{exp10}")
        } else {
            format!("{sign}{head}.{tail}e{exp10}")
        }
    }
}

impl Ord for Float {
    fn cmp(&self, other: &Float) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let mag = match self.top().cmp(&other.top()) {
            Ordering::Equal => {
                let e = self.exp.min(other.exp);
                let a = self.man.magnitude() << ((self.exp - e) as u64);
                let b = other.man.magnitude() << ((other.exp - e) as u64);
                a.cmp(&b)
            }
            o => o,
        };
        if sa < 0 {
            mag.reverse()
        } else {
            mag
        }
    }
}

impl PartialOrd for Float {
    fn partial_cmp(&self, other: &Float) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci_string(20))
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci_string(f.precision().unwrap_or(20)))
    }
}

fn normalize(man: BigInt, exp: i64) -> Float {
    if man.is_zero() {
        return Float::zero();
    }
    let tz = man.trailing_zeros().unwrap_or(0);
    if tz == 0 {
        Float { man, exp }
    } else {
        Float {
            man: man >> tz,
            exp: exp + tz as i64,
        }
    }
}

/// `floor(m / 2^s)` for signed `m`.
fn floor_shift(m: &BigInt, s: u64) -> BigInt {
    if m.sign() == Sign::Minus {
        let mag = m.magnitude();
        let q = mag >> s;
        let exact = (&q << s) == *mag;
        let q = BigInt::from(q);
        if exact {
            -q
        } else {
            -q - 1
        }
    } else {
        m >> s
    }
}

fn round_parts(man: BigInt, exp: i64, prec: u32, rnd: Round) -> Float {
    let prec = prec.max(2) as u64;
    let bits = man.bits();
    if bits <= prec {
        return normalize(man, exp);
    }
    let shift = bits - prec;
    let m = match rnd {
        Round::Down => floor_shift(&man, shift),
        Round::Up => -floor_shift(&-man, shift),
        Round::Nearest => {
            let fl = floor_shift(&man, shift);
            let rem = &man - (&fl << shift);
            let half = BigInt::one() << (shift - 1);
            match rem.cmp(&half) {
                Ordering::Less => fl,
                Ordering::Greater => fl + 1,
                Ordering::Equal => {
                    if fl.is_odd() {
                        fl + 1
                    } else {
                        fl
                    }
                }
            }
        }
    };
    normalize(m, exp + shift as i64)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}
