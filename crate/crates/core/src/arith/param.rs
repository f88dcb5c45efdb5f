//! Exact decimal parameters.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::Error;

use super::real::BigReal;

/// A real parameter given in decimal (or `p/q`) notation, kept exactly.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Param {
    value: BigRational,
    text: String,
}

impl Param {
    pub fn from_rational(value: BigRational) -> Param {
        let text = if value.is_integer() {
            value.numer().to_string()
        } else {
            format!("{}/{}", value.numer(), value.denom())
        };
        Param { value, text }
    }

    pub fn from_i64(v: i64) -> Param {
        Param {
            value: BigRational::from_integer(BigInt::from(v)),
            text: v.to_string(),
        }
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn to_real(&self, prec: u32) -> BigReal {
        BigReal::from_rational(&self.value, prec)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_real(64).to_f64()
    }

    pub fn is_positive(&self) -> bool {
        self.value.is_positive()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

const MAX_EXP10: i64 = 4000;

/// Parses `[-]digits[.digits][e[-]digits]` or `p/q` exactly.
pub fn parse_decimal(s: &str) -> Result<BigRational, Error> {
    let s = s.trim();
    let err = || Error::Parse(format!("invalid number `{s}`"));
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| err())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(err());
    }
    let digits = format!("{int}{frac}");
    let mut num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| err())?
    };
    if neg {
        num = -num;
    }
    let e10 = exp - frac.len() as i64;
    if e10.abs() > MAX_EXP10 {
        return Err(Error::Parse(format!("exponent out of range in `{s}`")));
    }
    let ten = BigInt::from(10u32);
    Ok(if e10 >= 0 {
        BigRational::from_integer(num * ten.pow(e10 as u32))
    } else {
        BigRational::new(num, ten.pow((-e10) as u32))
    })
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Param, Error> {
        Ok(Param {
            value: parse_decimal(s)?,
            text: s.trim().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exact_decimals() {
        let r = parse_decimal("1.25e-2").unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(1), BigInt::from(80)));
        assert_eq!(parse_decimal("-3").unwrap(), BigRational::from_integer(BigInt::from(-3)));
        assert_eq!(parse_decimal("3/6").unwrap(), BigRational::new(BigInt::from(1), BigInt::from(2)));
        assert_eq!(parse_decimal(".5").unwrap(), BigRational::new(BigInt::from(1), BigInt::from(2)));
        for bad in ["", ".", "1e", "1.2.3", "abc", "1/0", "1e99999", "--1"] {
            assert!(parse_decimal(bad).is_err(), "{bad}");
        }
    }
}
