//! Rotation numbers: specifications, lazily generated continued fraction
//! expansions and certified enclosures.

use std::fmt;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

use super::complex::BigComplex;
use super::elementary::{exp, ln_biguint, pi};
use super::float::{Float, Round};
use super::param::Param;
use super::real::BigReal;

/// Largest partial quotient (in bits) that rule generators materialise.
/// Beyond it the expansion stops with a certified lower bound on the next
/// quotient.
pub const MAX_QUOTIENT_BITS: u64 = 1 << 17;

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorRule {
    /// `a_k = a` for all `k >= 1`.
    Const { a: u64 },
    /// `a_{k+1} = ceil(exp(sigma q_k) / q_k)`.
    ExpQ { sigma: Param },
    /// `a_{k+1} = ceil(exp(alpha q_k^beta) / q_k)`.
    ExpQPow { alpha: Param, beta: Param },
    /// Least `a_{k+1}` with `q_{k+1} >= (q_k + 1)^2`.
    Square,
    /// `a_{k+1} = q_k^(q_k - 1)`, so `q_{k+1} = q_k^q_k + q_{k-1}`.
    QPowQ,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IrrationalSpec {
    Golden,
    /// Fractional part of `sqrt(d)`.
    Surd(u64),
    /// `[0; head..., (period)...]`.
    Quotients { head: Vec<BigUint>, period: Vec<BigUint> },
    Rule(GeneratorRule),
    /// Some number in `[value - err, value + err]`, reduced mod 1.
    Decimal { value: Param, err: Param },
}

impl IrrationalSpec {
    /// Upper bound on all partial quotients, when one is known a priori.
    pub fn quotient_bound(&self) -> Option<BigUint> {
        match self {
            IrrationalSpec::Golden => Some(BigUint::one()),
            // Quotients of a quadratic surd sqrt(d) never exceed 2 floor(sqrt d).
            IrrationalSpec::Surd(d) => Some(BigUint::from(2 * d.sqrt())),
            IrrationalSpec::Quotients { head, period } => head.iter().chain(period.iter()).max().cloned(),
            IrrationalSpec::Rule(GeneratorRule::Const { a }) => Some(BigUint::from(*a)),
            _ => None,
        }
    }

    pub fn is_decimal(&self) -> bool {
        matches!(self, IrrationalSpec::Decimal { .. })
    }
}

fn join(v: &[BigUint]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for GeneratorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorRule::Const { a } => write!(f, "rule:const a={a}"),
            GeneratorRule::ExpQ { sigma } => write!(f, "rule:expq sigma={sigma}"),
            GeneratorRule::ExpQPow { alpha, beta } => write!(f, "rule:expqpow alpha={alpha} beta={beta}"),
            GeneratorRule::Square => write!(f, "rule:square"),
            GeneratorRule::QPowQ => write!(f, "rule:qpowq"),
        }
    }
}

impl fmt::Display for IrrationalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrrationalSpec::Golden => write!(f, "golden"),
            IrrationalSpec::Surd(d) => write!(f, "sqrt:{d}"),
            IrrationalSpec::Quotients { head, period } => {
                write!(f, "cf:[0;")?;
                let h = join(head);
                f.write_str(&h)?;
                if period.is_empty() {
                    // Finite expansion: parses, then Omega::new rejects it as rational.
                    return f.write_str("]");
                }
                if !h.is_empty() {
                    f.write_str(",")?;
                }
                write!(f, "({})]", join(period))
            }
            IrrationalSpec::Rule(r) => write!(f, "{r}"),
            IrrationalSpec::Decimal { value, err } => write!(f, "dec:{value} err={err}"),
        }
    }
}

/// Why an expansion stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum ExpansionEnd {
    /// The next quotient exceeds the materialisation cap; `ln_a_lower` is a
    /// certified lower bound on its natural log.
    Capped { ln_a_lower: Float },
    /// The number is rational and its expansion terminated.
    Terminated,
    /// Decimal input does not determine further quotients.
    Exhausted,
}

enum Generator {
    Periodic { head: Vec<BigUint>, period: Vec<BigUint> },
    /// State `(m, d)` of the surd recurrence for `sqrt(n)`.
    Surd { n: BigUint, a0: BigUint, m: BigUint, d: BigUint },
    Rule(GeneratorRule),
    Decimal { lo: BigRational, hi: BigRational, center: BigRational },
}

struct Expansion {
    a: Vec<BigUint>,
    p: Vec<BigUint>,
    q: Vec<BigUint>,
    end: Option<ExpansionEnd>,
    gen: Generator,
}

enum Step {
    Quotient(BigUint),
    End(ExpansionEnd),
}

impl Expansion {
    fn new(gen: Generator) -> Expansion {
        Expansion {
            a: vec![BigUint::zero()],
            p: vec![BigUint::zero()],
            q: vec![BigUint::one()],
            end: None,
            gen,
        }
    }

    fn last(&self) -> usize {
        self.a.len() - 1
    }

    fn q_prev(&self, k: usize) -> BigUint {
        if k == 0 {
            BigUint::zero()
        } else {
            self.q[k - 1].clone()
        }
    }

    fn p_prev(&self, k: usize) -> BigUint {
        if k == 0 {
            BigUint::one()
        } else {
            self.p[k - 1].clone()
        }
    }

    fn step(&mut self) -> Result<bool> {
        if self.end.is_some() {
            return Ok(false);
        }
        let k = self.last();
        let qk = self.q[k].clone();
        let qkm1 = self.q_prev(k);
        let s = match &mut self.gen {
            Generator::Periodic { head, period } => {
                let j = k; // producing a_{k+1}; head[0] is a_1
                let v = if j < head.len() {
                    head[j].clone()
                } else {
                    period[(j - head.len()) % period.len()].clone()
                };
                Step::Quotient(v)
            }
            Generator::Surd { n, a0, m, d } => {
                // a[0] is stored as 0 after reduction mod 1; the recurrence
                // needs the true a_0 at the first step.
                let ak = if k == 0 { a0.clone() } else { self.a[k].clone() };
                let m1 = &*d * &ak - &*m;
                let d1 = (&*n - &m1 * &m1) / &*d;
                let a1 = (&*a0 + &m1) / &d1;
                *m = m1;
                *d = d1;
                Step::Quotient(a1)
            }
            Generator::Rule(rule) => rule_step(rule, &qk, &qkm1)?,
            Generator::Decimal { lo, hi, center } => decimal_step(lo, hi, center, k),
        };
        match s {
            Step::Quotient(a) => {
                let p = &a * &self.p[k] + self.p_prev(k);
                let q = &a * &qk + qkm1;
                self.a.push(a);
                self.p.push(p);
                self.q.push(q);
                Ok(true)
            }
            Step::End(e) => {
                self.end = Some(e);
                Ok(false)
            }
        }
    }
}

fn ceil_div_real(x: &BigReal, q: &BigUint) -> Option<BigUint> {
    let v = x.div(&BigReal::from_biguint(q, x.prec()))?;
    let lo = v.lo().ceil();
    let hi = v.hi().ceil();
    if lo == hi && lo.is_positive() {
        lo.to_biguint()
    } else {
        None
    }
}

/// `ceil(exp(x) / q)` with `x` supplied as a closure producing an enclosure
/// at a given precision.
fn ceil_exp_over_q(x_at: impl Fn(u32) -> BigReal, approx_bits: f64, q: &BigUint) -> BigUint {
    let mut prec = (approx_bits.max(0.0) as u32) + 96;
    loop {
        let e = exp(&x_at(prec));
        if let Some(v) = ceil_div_real(&e, q) {
            return v.max(BigUint::one());
        }
        prec *= 2;
    }
}

fn rule_step(rule: &GeneratorRule, qk: &BigUint, qkm1: &BigUint) -> Result<Step> {
    let qf = Float::from_biguint(qk.clone());
    let log2q = qf.log2_abs_approx();
    let cap = MAX_QUOTIENT_BITS as f64;
    let ln_q = || ln_biguint(qk, 128);
    Ok(match rule {
        GeneratorRule::Const { a } => Step::Quotient(BigUint::from(*a)),
        GeneratorRule::ExpQ { sigma } => {
            let x_f = sigma.to_f64() * qf.to_f64();
            let bits = x_f / std::f64::consts::LN_2;
            if bits.is_nan() || bits > cap {
                let x = sigma.to_real(128).mul(&BigReal::from_biguint(qk, 128));
                Step::End(ExpansionEnd::Capped {
                    ln_a_lower: x.sub(&ln_q()).lo().clone(),
                })
            } else {
                let x = |p: u32| {
                    sigma
                        .to_real(p)
                        .mul(&BigReal::from_biguint(qk, p))
                };
                Step::Quotient(ceil_exp_over_q(x, bits, qk))
            }
        }
        GeneratorRule::ExpQPow { alpha, beta } => {
            let x_f = alpha.to_f64() * (beta.to_f64() * log2q * std::f64::consts::LN_2).exp();
            let bits = x_f / std::f64::consts::LN_2;
            let x = |p: u32| {
                let lq = ln_biguint(qk, p);
                alpha.to_real(p).mul(&exp(&beta.to_real(p).mul(&lq)))
            };
            if bits.is_nan() || bits > cap {
                Step::End(ExpansionEnd::Capped {
                    ln_a_lower: x(128).sub(&ln_q()).lo().clone(),
                })
            } else {
                Step::Quotient(ceil_exp_over_q(x, bits, qk))
            }
        }
        GeneratorRule::Square => {
            if 2.0 * log2q > cap {
                // a_{k+1} >= q_k + 1.
                Step::End(ExpansionEnd::Capped {
                    ln_a_lower: ln_q().lo().clone(),
                })
            } else {
                let target = (qk + 1u32) * (qk + 1u32);
                let need = if target > *qkm1 { target - qkm1 } else { BigUint::zero() };
                let a = Integer::div_ceil(&need, qk).max(BigUint::one());
                Step::Quotient(a)
            }
        }
        GeneratorRule::QPowQ => {
            let e = qk - 1u32;
            if log2q * (qf.to_f64() - 1.0) > cap {
                let em1 = BigReal::from_biguint(&e, 128);
                Step::End(ExpansionEnd::Capped {
                    ln_a_lower: em1.mul(&ln_q()).lo().clone(),
                })
            } else {
                let e = e.to_u32().expect("bounded by cap");
                Step::Quotient(qk.pow(e).max(BigUint::one()))
            }
        }
    })
}

fn floor_rat(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

/// Length of the continued fraction of a rational number in `[0, 1)`,
/// counting `a_0`.
fn rational_cf_len(x: &BigRational) -> usize {
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    let mut len = 0;
    while !d.is_zero() {
        let r = n.mod_floor(&d);
        n = d;
        d = r;
        len += 1;
    }
    len
}

fn decimal_step(lo: &mut BigRational, hi: &mut BigRational, center: &BigRational, k: usize) -> Step {
    let stop = |center: &BigRational| {
        // Producing a_{k+1}: the centre's own expansion ends at or before it.
        if rational_cf_len(center) <= k + 2 {
            Step::End(ExpansionEnd::Terminated)
        } else {
            Step::End(ExpansionEnd::Exhausted)
        }
    };
    if !lo.is_positive() {
        return stop(center);
    }
    let inv_lo = hi.recip(); // smaller end of 1/x
    let inv_hi = lo.recip();
    let a_lo = floor_rat(&inv_lo);
    let a_hi = floor_rat(&inv_hi);
    if a_lo != a_hi || !a_lo.is_positive() {
        return stop(center);
    }
    let a = BigRational::from_integer(a_lo.clone());
    *lo = &inv_lo - &a;
    *hi = &inv_hi - &a;
    Step::Quotient(a_lo.to_biguint().expect("positive"))
}

/// A rotation number with a lazily extended expansion and cached enclosures.
pub struct Omega {
    spec: IrrationalSpec,
    state: Mutex<Expansion>,
    enclosure: Mutex<Option<BigReal>>,
}

impl fmt::Debug for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Omega({})", self.spec)
    }
}

/// A copy of the first entries of an expansion.
#[derive(Clone, Debug)]
pub struct ExpansionPrefix {
    pub a: Vec<BigUint>,
    pub p: Vec<BigUint>,
    pub q: Vec<BigUint>,
    /// Set when no further entries exist beyond the prefix.
    pub end: Option<ExpansionEnd>,
}

impl Omega {
    pub fn new(spec: IrrationalSpec) -> Result<Omega> {
        let gen = match &spec {
            IrrationalSpec::Golden => Generator::Periodic {
                head: vec![],
                period: vec![BigUint::one()],
            },
            IrrationalSpec::Surd(d) => {
                let n = BigUint::from(*d);
                let a0 = n.sqrt();
                if &a0 * &a0 == n {
                    return Err(Error::RationalInput(format!("sqrt({d}) is an integer")));
                }
                Generator::Surd {
                    n,
                    a0,
                    m: BigUint::zero(),
                    d: BigUint::one(),
                }
            }
            IrrationalSpec::Quotients { head, period } => {
                if period.is_empty() {
                    return Err(Error::RationalInput("finite continued fraction".into()));
                }
                if head.iter().chain(period.iter()).any(|a| a.is_zero()) {
                    return Err(Error::Parse("partial quotients must be positive".into()));
                }
                Generator::Periodic {
                    head: head.clone(),
                    period: period.clone(),
                }
            }
            IrrationalSpec::Rule(rule) => {
                match rule {
                    GeneratorRule::Const { a } if *a == 0 => {
                        return Err(Error::Parse("rule:const needs a >= 1".into()))
                    }
                    GeneratorRule::ExpQ { sigma } if !sigma.is_positive() => {
                        return Err(Error::Parse("rule:expq needs sigma > 0".into()))
                    }
                    GeneratorRule::ExpQPow { alpha, beta } if !alpha.is_positive() || !beta.is_positive() => {
                        return Err(Error::Parse("rule:expqpow needs alpha, beta > 0".into()))
                    }
                    _ => {}
                }
                Generator::Rule(rule.clone())
            }
            IrrationalSpec::Decimal { value, err } => {
                if err.value().is_negative() {
                    return Err(Error::Parse("err must be non-negative".into()));
                }
                let v = value.value();
                let e = err.value();
                let fl = BigRational::from_integer(floor_rat(v));
                let lo = v - e - &fl;
                let hi = v + e - &fl;
                let center = v - &fl;
                if e.is_zero() {
                    return Err(Error::RationalInput(format!("dec:{value} with zero error is an exact rational")));
                }
                if !lo.is_positive() || hi >= BigRational::one() {
                    return Err(Error::DegenerateRotation(format!(
                        "dec:{value} err={err} straddles an integer"
                    )));
                }
                Generator::Decimal { lo, hi, center }
            }
        };
        Ok(Omega {
            spec,
            state: Mutex::new(Expansion::new(gen)),
            enclosure: Mutex::new(None),
        })
    }

    pub fn spec(&self) -> &IrrationalSpec {
        &self.spec
    }

    pub fn label(&self) -> String {
        self.spec.to_string()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Expansion> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Extends the expansion to contain index `k` if possible. Returns the
    /// number of available entries.
    pub fn extend_to(&self, k: usize) -> Result<usize> {
        let mut st = self.lock();
        while st.last() < k {
            if !st.step()? {
                break;
            }
        }
        Ok(st.a.len())
    }

    /// The first `len` entries (fewer if the expansion ends earlier).
    pub fn prefix(&self, len: usize) -> Result<ExpansionPrefix> {
        let n = self.extend_to(len.saturating_sub(1))?.min(len);
        let st = self.lock();
        let end = if n == st.a.len() { st.end.clone() } else { None };
        Ok(ExpansionPrefix {
            a: st.a[..n].to_vec(),
            p: st.p[..n].to_vec(),
            q: st.q[..n].to_vec(),
            end,
        })
    }

    /// Extends until `q_k` exceeds `bound` or the expansion ends.
    pub fn extend_until_q_exceeds(&self, bound: &BigUint) -> Result<()> {
        let mut st = self.lock();
        while st.q[st.last()] <= *bound {
            if !st.step()? {
                break;
            }
        }
        Ok(())
    }

    fn end_error(&self, end: &ExpansionEnd, what: &str) -> Error {
        match end {
            ExpansionEnd::Terminated => Error::RationalInput(format!("{}: {what}", self.spec)),
            _ => Error::PrecisionExhausted(format!("{}: {what}", self.spec)),
        }
    }

    /// Certified enclosure of `omega` of width at most `2^-bits`.
    pub fn enclosure(&self, bits: u32) -> Result<BigReal> {
        {
            let c = self.enclosure.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(v) = c.as_ref() {
                if v.prec() >= bits + 8 {
                    return Ok(v.with_prec(bits + 8));
                }
            }
        }
        let v = self.compute_enclosure(bits)?;
        let mut c = self.enclosure.lock().unwrap_or_else(|e| e.into_inner());
        *c = Some(v.clone());
        Ok(v)
    }

    fn compute_enclosure(&self, bits: u32) -> Result<BigReal> {
        let wp = bits + 8;
        if let IrrationalSpec::Decimal { value, err } = &self.spec {
            let v = value.value();
            let fl = BigRational::from_integer(floor_rat(v));
            let lo = BigReal::from_rational(&(v - err.value() - &fl), wp);
            let hi = BigReal::from_rational(&(v + err.value() - &fl), wp);
            let enc = lo.hull(&hi);
            if enc.log2_width() > -(bits as f64) {
                return Err(Error::PrecisionExhausted(format!(
                    "{} does not determine omega to {bits} bits",
                    self.spec
                )));
            }
            return Ok(enc);
        }
        let target = BigUint::one() << (bits as u64 + 2);
        let mut st = self.lock();
        loop {
            let k = st.last();
            if k >= 1 && &st.q[k] * &st.q[k - 1] >= target {
                let a = BigReal::from_ratio(&BigInt::from(st.p[k - 1].clone()), &BigInt::from(st.q[k - 1].clone()), wp);
                let b = BigReal::from_ratio(&BigInt::from(st.p[k].clone()), &BigInt::from(st.q[k].clone()), wp);
                return Ok(a.hull(&b));
            }
            if !st.step()? {
                break;
            }
        }
        let k = st.last();
        match st.end.clone() {
            Some(ExpansionEnd::Capped { ln_a_lower }) => {
                // |omega - p_k/q_k| < 1 / (q_k^2 a_{k+1}).
                let log2_a = (ln_a_lower.to_f64() / std::f64::consts::LN_2) * (1.0 - 1e-12) - 1.0;
                let log2_qk = (st.q[k].bits() as f64) - 1.0;
                let e = (2.0 * log2_qk + log2_a).floor();
                if e < bits as f64 {
                    return Err(self.end_error(&ExpansionEnd::Capped { ln_a_lower }, "enclosure beyond capped tail"));
                }
                let c = BigReal::from_ratio(&BigInt::from(st.p[k].clone()), &BigInt::from(st.q[k].clone()), wp);
                Ok(c.widen(&Float::pow2(-(bits as i64) - 4)))
            }
            Some(end) => Err(self.end_error(&end, "expansion ended")),
            None => unreachable!("expansion stopped without an end marker"),
        }
    }

    /// Like [`Omega::enclosure`], but decimal inputs fall back to their own
    /// error interval when it is wider than `2^-bits`.
    pub fn enclosure_best_effort(&self, bits: u32) -> Result<BigReal> {
        match (self.enclosure(bits), &self.spec) {
            (Err(Error::PrecisionExhausted(_)), IrrationalSpec::Decimal { value, err }) => {
                let v = value.value();
                let fl = BigRational::from_integer(floor_rat(v));
                let lo = BigReal::from_rational(&(v - err.value() - &fl), bits + 8);
                let hi = BigReal::from_rational(&(v + err.value() - &fl), bits + 8);
                Ok(lo.hull(&hi))
            }
            (r, _) => r,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.enclosure(60).map(|e| e.to_f64()).unwrap_or(f64::NAN)
    }

    /// `m omega - round(m omega)` as a certified enclosure with absolute
    /// width below `2^-prec`.
    pub fn signed_residual(&self, m: &BigUint, prec: u32) -> Result<BigReal> {
        if m.is_zero() {
            return Ok(BigReal::zero(prec));
        }
        let mut bits = prec + m.bits() as u32 + 8;
        loop {
            let w = self.enclosure(bits)?;
            let x = w.mul(&BigReal::from_biguint(m, bits + 8));
            let n0 = x
                .mid()
                .add(&Float::from_f64(0.5).expect("finite"), 64, Round::Down)
                .floor();
            let t = x.sub(&BigReal::from_bigint(&n0, bits + 8)).with_prec(prec + 4);
            if t.log2_width() < -(prec as f64) {
                return Ok(t);
            }
            bits *= 2;
            if bits > 1 << 20 {
                return Err(Error::PrecisionExhausted("residual".into()));
            }
        }
    }

    /// `||m omega||`, the distance from `m omega` to the nearest integer.
    pub fn nearest_integer_distance(&self, m: &BigUint, prec: u32) -> Result<BigReal> {
        let t = self.signed_residual(m, prec)?;
        let d = t.abs();
        let half = Float::from_f64(0.5).expect("finite");
        Ok(BigReal::from_bounds(d.lo().clone().min(half.clone()), d.hi().clone().min(half), d.prec()))
    }

    /// `lambda = exp(2 pi i omega)`.
    pub fn lambda(&self, prec: u32) -> Result<BigComplex> {
        let wp = prec + 16;
        let w = self.enclosure(wp)?;
        let theta = pi(wp).mul_2exp(1).mul(&w);
        Ok(BigComplex::cis(&theta).with_prec(prec))
    }

    /// `lambda^n`, computed from the residual of `n omega` rather than by
    /// repeated multiplication.
    pub fn lambda_pow(&self, n: u64, prec: u32) -> Result<BigComplex> {
        let wp = prec + 16;
        let t = self.signed_residual(&BigUint::from(n), wp)?;
        Ok(BigComplex::cis(&pi(wp).mul_2exp(1).mul(&t)).with_prec(prec))
    }

    /// `|lambda^n - lambda| = 2 sin(pi ||(n-1) omega||)`.
    pub fn small_divisor(&self, n: u64, prec: u32) -> Result<BigReal> {
        if n == 0 {
            return Err(Error::Precondition("small divisor index must be >= 1".into()));
        }
        let wp = prec + 16;
        let d = self.nearest_integer_distance(&BigUint::from(n - 1), wp)?;
        Ok(super::elementary::sin(&pi(wp).mul(&d)).mul_2exp(1).with_prec(prec))
    }

    /// `lambda^n - lambda = lambda (exp(2 pi i t) - 1)` with `t` the signed
    /// residual of `(n-1) omega`.
    pub fn divisor(&self, n: u64, prec: u32) -> Result<BigComplex> {
        let wp = prec + 16;
        let t = self.signed_residual(&BigUint::from(n.saturating_sub(1)), wp)?;
        let e = BigComplex::cis(&pi(wp).mul_2exp(1).mul(&t));
        Ok(self.lambda(wp)?.mul(&e.sub(&BigComplex::one(wp))).with_prec(prec))
    }

    /// `1 / (lambda^n - lambda)` for `n >= 2`, evaluated without cancellation
    /// as `conj(lambda) (-1/2 - (i/2) cot(pi t))`.
    pub fn divisor_inverse(&self, n: u64, prec: u32) -> Result<BigComplex> {
        if n < 2 {
            return Err(Error::Precondition("divisor inverse needs n >= 2".into()));
        }
        let t_bits = BigUint::from(n - 1).bits() as u32;
        let wp = prec + 2 * t_bits + 24;
        let t = self.signed_residual(&BigUint::from(n - 1), wp)?;
        let a = pi(wp).mul(&t);
        let s = super::elementary::sin(&a);
        let c = super::elementary::cos(&a);
        let cot = c
            .div(&s)
            .ok_or_else(|| Error::PrecisionExhausted(format!("small divisor at n={n} not separated from zero")))?;
        let half = BigReal::one(wp).mul_2exp(-1);
        let z = BigComplex::new(half.neg(), cot.mul(&half).neg());
        Ok(self.lambda(wp)?.conj().mul(&z).with_prec(prec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bu(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn golden_expansion_is_fibonacci() {
        let w = Omega::new(IrrationalSpec::Golden).unwrap();
        let pre = w.prefix(8).unwrap();
        let q: Vec<u64> = pre.q.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(q, vec![1, 1, 2, 3, 5, 8, 13, 21]);
        let p: Vec<u64> = pre.p.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(p, vec![0, 1, 1, 2, 3, 5, 8, 13]);
    }

    #[test]
    fn surd_quotients() {
        let w = Omega::new(IrrationalSpec::Surd(2)).unwrap();
        let a: Vec<u64> = w.prefix(6).unwrap().a.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(a, vec![0, 2, 2, 2, 2, 2]);
        let w = Omega::new(IrrationalSpec::Surd(3)).unwrap();
        let a: Vec<u64> = w.prefix(6).unwrap().a.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(a, vec![0, 1, 2, 1, 2, 1]);
        let w = Omega::new(IrrationalSpec::Surd(7)).unwrap();
        let a: Vec<u64> = w.prefix(6).unwrap().a.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(a, vec![0, 1, 1, 1, 4, 1]);
        assert!(matches!(Omega::new(IrrationalSpec::Surd(9)), Err(Error::RationalInput(_))));
    }

    #[test]
    fn square_rule_prefix() {
        let w = Omega::new(IrrationalSpec::Rule(GeneratorRule::Square)).unwrap();
        let pre = w.prefix(6).unwrap();
        let q: Vec<u64> = pre.q.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(q, vec![1, 4, 25, 679, 462424, 213836881303]);
        for k in 0..5 {
            let next = &pre.q[k + 1];
            let need = (&pre.q[k] + 1u32) * (&pre.q[k] + 1u32);
            assert!(*next >= need);
            // minimality: one less quotient falls short
            let smaller = (&pre.a[k + 1] - 1u32) * &pre.q[k] + if k == 0 { bu(0) } else { pre.q[k - 1].clone() };
            assert!(smaller < need);
        }
    }

    #[test]
    fn expq_rule_caps_after_three_steps() {
        let w = Omega::new(IrrationalSpec::Rule(GeneratorRule::ExpQ {
            sigma: "1".parse().unwrap(),
        }))
        .unwrap();
        let pre = w.prefix(10).unwrap();
        assert_eq!(pre.a.len(), 4);
        assert_eq!(pre.q[1], bu(3));
        assert_eq!(pre.q[2], bu(22));
        // a_3 = ceil(e^22 / 22), e^22 = 3584912846.13...
        assert_eq!(pre.a[3], bu(162_950_584));
        match pre.end {
            Some(ExpansionEnd::Capped { ln_a_lower }) => {
                let q3 = pre.q[3].to_f64().unwrap();
                assert!((ln_a_lower.to_f64() - (q3 - q3.ln())).abs() < 1e-6 * q3);
            }
            other => panic!("unexpected end {other:?}"),
        }
        // The capped tail still yields very precise enclosures.
        let e = w.enclosure(4000).unwrap();
        assert!(e.log2_width() < -4000.0);
    }

    #[test]
    fn enclosure_contains_golden() {
        let w = Omega::new(IrrationalSpec::Golden).unwrap();
        let e = w.enclosure(300).unwrap();
        assert!(e.log2_width() <= -300.0);
        // (sqrt 5 - 1)/2 satisfies x^2 + x - 1 = 0
        let f = e.square().add(&e).sub(&BigReal::one(310));
        assert!(f.contains_zero());
        assert!(f.log2_width() < -290.0);
    }

    #[test]
    fn decimal_rational_and_exhausted() {
        let half = Omega::new(IrrationalSpec::Decimal {
            value: "0.5".parse().unwrap(),
            err: "1e-20".parse().unwrap(),
        })
        .unwrap();
        assert!(matches!(half.prefix(5).unwrap().end, Some(ExpansionEnd::Terminated)));
        let g = Omega::new(IrrationalSpec::Decimal {
            value: "0.6180339887498949".parse().unwrap(),
            err: "1e-16".parse().unwrap(),
        })
        .unwrap();
        let pre = g.prefix(60).unwrap();
        assert!(pre.a.len() > 30);
        assert!(pre.a[1..30].iter().all(|a| a.is_one()));
        assert!(matches!(pre.end, Some(ExpansionEnd::Exhausted)));
        assert!(matches!(g.enclosure(100), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn nearest_integer_distance_certified() {
        let w = Omega::new(IrrationalSpec::Golden).unwrap();
        let d = w.nearest_integer_distance(&bu(0), 100).unwrap();
        assert!(d.is_point() && d.lo().is_zero());
        let d = w.nearest_integer_distance(&bu(13), 100).unwrap();
        assert!(d.log2_width() < -100.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let v = 13.0 * g;
        assert!((d.to_f64() - (v - v.round()).abs()).abs() < 1e-14);
    }

    #[test]
    fn divisor_and_inverse_agree() {
        let w = Omega::new(IrrationalSpec::Surd(2)).unwrap();
        for n in [2u64, 3, 13, 30, 71] {
            let d = w.divisor(n, 200).unwrap();
            let inv = w.divisor_inverse(n, 200).unwrap();
            assert!(d.mul(&inv).intersects(&BigComplex::one(200)), "n={n}");
            let sd = w.small_divisor(n, 200).unwrap();
            assert!(d.abs().intersects(&sd));
        }
        let l = w.lambda(200).unwrap();
        assert!(l.mul(&l).intersects(&w.lambda_pow(2, 200).unwrap()));
    }
}
