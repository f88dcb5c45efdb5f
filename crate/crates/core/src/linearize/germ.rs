//! Germs `F(z) = lambda z + sum_{n >= 2} f_n z^n`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::elementary::{exp, ln_factorial};
use crate::arith::{BigReal, IrrationalSpec, Omega, Param};
use crate::error::{Error, Result};
use crate::weights::WeightKind;

/// Where the coefficients `f_n`, `n >= 2`, come from.
#[derive(Clone, Debug, PartialEq)]
pub enum CoeffSource {
    /// `f_2, f_3, ...` listed explicitly; zero beyond.
    Poly(Vec<Param>),
    /// `f_n = 1` for all `n >= 2`.
    Ones,
    /// `f_n = n`, the extremal Bieberbach coefficients.
    Koebe,
    /// `f_n = (n!)^s`.
    Gevrey { s: Param },
}

#[derive(Clone, Debug, PartialEq)]
pub enum NormClass {
    /// `|f_n| <= n` for every `n`.
    SchlichtBounded,
    /// `|f_n| <= c_1 c_2^n N_n`.
    WeightBounded { c1: Param, c2: Param, weight: WeightKind },
    Unrestricted,
}

#[derive(Clone, Debug)]
pub struct Germ {
    omega: Arc<Omega>,
    source: CoeffSource,
    norm: NormClass,
}

impl fmt::Display for CoeffSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffSource::Poly(c) if c.len() == 1 && c[0].value().is_one() => f.write_str("quad"),
            CoeffSource::Poly(c) if c.len() == 2 && c[0].is_zero() && c[1].value().is_one() => f.write_str("cubic"),
            CoeffSource::Poly(c) => {
                let v: Vec<_> = c.iter().map(|p| p.text().to_string()).collect();
                write!(f, "poly:[{}]", v.join(","))
            }
            CoeffSource::Ones => f.write_str("ones"),
            CoeffSource::Koebe => f.write_str("koebe"),
            CoeffSource::Gevrey { s } => write!(f, "gevrey:{s}"),
        }
    }
}

impl CoeffSource {
    pub fn quad() -> CoeffSource {
        CoeffSource::Poly(vec![Param::from_i64(1)])
    }

    /// Largest index with a nonzero coefficient, `None` for infinite support.
    pub fn degree(&self) -> Option<usize> {
        match self {
            CoeffSource::Poly(c) => Some(c.iter().rposition(|x| !x.is_zero()).map_or(1, |i| i + 2)),
            _ => None,
        }
    }

    /// Exact `f_n` when it is rational.
    pub fn rational(&self, n: usize) -> Option<BigRational> {
        if n < 2 {
            return Some(BigRational::zero());
        }
        match self {
            CoeffSource::Poly(c) => Some(c.get(n - 2).map_or_else(BigRational::zero, |p| p.value().clone())),
            CoeffSource::Ones => Some(BigRational::one()),
            CoeffSource::Koebe => Some(BigRational::from_integer(BigInt::from(n))),
            CoeffSource::Gevrey { s } if s.value().is_integer() => {
                let f: BigInt = (1..=n as u64).map(BigInt::from).product();
                let e = s.value().to_integer();
                let e: u32 = e.try_into().ok()?;
                Some(BigRational::from_integer(f.pow(e)))
            }
            CoeffSource::Gevrey { .. } => None,
        }
    }

    /// Enclosure of `f_n`.
    pub fn real(&self, n: usize, prec: u32) -> BigReal {
        match (self, self.rational(n)) {
            (_, Some(r)) => BigReal::from_rational(&r, prec),
            (CoeffSource::Gevrey { s }, None) => {
                let wp = prec + 16;
                exp(&ln_factorial(n as u64, wp).mul(&s.to_real(wp))).with_prec(prec)
            }
            _ => unreachable!("only Gevrey coefficients can be irrational"),
        }
    }

    /// `ln |f_n|` in double precision; `-inf` for zero coefficients.
    pub fn ln_abs_f64(&self, n: usize) -> f64 {
        match self {
            CoeffSource::Gevrey { s } => s.to_f64() * crate::arith::elementary::ln_factorial_f64(n as u64),
            CoeffSource::Koebe => (n as f64).ln(),
            CoeffSource::Ones => 0.0,
            CoeffSource::Poly(_) => {
                let r = self.rational(n).unwrap_or_default();
                if r.is_zero() {
                    f64::NEG_INFINITY
                } else {
                    BigReal::from_rational(&r.abs(), 64).to_f64().ln()
                }
            }
        }
    }
}

impl Germ {
    /// Builds a germ, checking the declared norm class.
    pub fn new(omega: Arc<Omega>, source: CoeffSource, norm: NormClass) -> Result<Germ> {
        if let IrrationalSpec::Decimal { err, .. } = omega.spec() {
            if err.is_zero() {
                return Err(Error::DegenerateRotation("an exact decimal rotation number is rational".into()));
            }
        }
        if norm == NormClass::SchlichtBounded {
            let ok = match &source {
                CoeffSource::Poly(c) => c.iter().enumerate().all(|(i, p)| {
                    p.value().abs() <= BigRational::from_integer(BigInt::from(i + 2))
                }),
                CoeffSource::Ones | CoeffSource::Koebe => true,
                // (n!)^s <= n fails at n = 3 for every s > 0.
                CoeffSource::Gevrey { s } => !s.is_positive(),
            };
            if !ok {
                return Err(Error::Precondition(format!("{source} violates |f_n| <= n")));
            }
        }
        Ok(Germ { omega, source, norm })
    }

    /// Germ with the norm class its coefficients naturally satisfy.
    pub fn with_default_norm(omega: Arc<Omega>, source: CoeffSource) -> Result<Germ> {
        let norm = match &source {
            CoeffSource::Gevrey { s } => NormClass::WeightBounded {
                c1: Param::from_i64(1),
                c2: Param::from_i64(1),
                weight: WeightKind::Gevrey { s: s.clone() },
            },
            CoeffSource::Poly(c)
                if !c
                    .iter()
                    .enumerate()
                    .all(|(i, p)| p.value().abs() <= BigRational::from_integer(BigInt::from(i + 2))) =>
            {
                NormClass::Unrestricted
            }
            _ => NormClass::SchlichtBounded,
        };
        Germ::new(omega, source, norm)
    }

    pub fn omega(&self) -> &Arc<Omega> {
        &self.omega
    }

    pub fn source(&self) -> &CoeffSource {
        &self.source
    }

    pub fn norm(&self) -> &NormClass {
        &self.norm
    }

    pub fn is_schlicht_bounded(&self) -> bool {
        self.norm == NormClass::SchlichtBounded
    }

    /// Indices `2 <= m <= n_max` with `f_m != 0`.
    pub fn support(&self, n_max: usize) -> Vec<usize> {
        let top = self.source.degree().map_or(n_max, |d| d.min(n_max));
        (2..=top)
            .filter(|&m| self.source.rational(m).is_none_or(|r| !r.is_zero()))
            .collect()
    }

    /// `(c_1, c_2, N)` with `|f_n| <= c_1 c_2^n N_n`, when known.
    pub fn weight_bound(&self) -> Option<(Param, Param, WeightKind)> {
        match &self.norm {
            NormClass::WeightBounded { c1, c2, weight } => Some((c1.clone(), c2.clone(), weight.clone())),
            NormClass::SchlichtBounded => {
                let unit = match &self.source {
                    CoeffSource::Poly(c) => c.iter().all(|p| p.value().abs() <= BigRational::one()),
                    CoeffSource::Ones => true,
                    _ => false,
                };
                // |f_n| <= n <= 2^n otherwise.
                let c2 = if unit { 1 } else { 2 };
                Some((Param::from_i64(1), Param::from_i64(c2), WeightKind::ConstantOne))
            }
            NormClass::Unrestricted => None,
        }
    }

    /// `|f_2| >= 1`, the standing assumption of the divergence argument.
    pub fn f2_at_least_one(&self) -> bool {
        match self.source.rational(2) {
            Some(r) => r.abs() >= BigRational::one(),
            None => true,
        }
    }

    pub fn label(&self) -> String {
        self.source.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Arc<Omega> {
        Arc::new(Omega::new(IrrationalSpec::Golden).unwrap())
    }

    #[test]
    fn coefficients_and_support() {
        let q = CoeffSource::quad();
        assert_eq!(q.to_string(), "quad");
        assert_eq!(q.degree(), Some(2));
        assert_eq!(q.rational(2), Some(BigRational::one()));
        assert_eq!(q.rational(3), Some(BigRational::zero()));
        let g = Germ::with_default_norm(golden(), CoeffSource::Poly(vec!["0".parse().unwrap(), "1".parse().unwrap()])).unwrap();
        assert_eq!(g.label(), "cubic");
        assert_eq!(g.support(10), vec![3]);
        let k = CoeffSource::Koebe;
        assert_eq!(k.rational(7), Some(BigRational::from_integer(7.into())));
        let gv = CoeffSource::Gevrey { s: "0.5".parse().unwrap() };
        assert!(gv.rational(4).is_none());
        assert!((gv.real(4, 64).to_f64() - 24f64.sqrt()).abs() < 1e-12);
        assert!((gv.ln_abs_f64(4) - 0.5 * 24f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn norm_classes() {
        let big = CoeffSource::Poly(vec!["3".parse().unwrap()]);
        assert!(Germ::new(golden(), big.clone(), NormClass::SchlichtBounded).is_err());
        let g = Germ::with_default_norm(golden(), big).unwrap();
        assert_eq!(g.norm(), &NormClass::Unrestricted);
        let g = Germ::with_default_norm(golden(), CoeffSource::Gevrey { s: "1".parse().unwrap() }).unwrap();
        assert!(matches!(g.weight_bound(), Some((_, _, WeightKind::Gevrey { .. }))));
        let g = Germ::with_default_norm(golden(), CoeffSource::quad()).unwrap();
        assert!(g.is_schlicht_bounded() && g.f2_at_least_one());
    }
}
