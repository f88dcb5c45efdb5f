//! Coefficients of the linearizing map `H(z) = z + sum h_n z^n`, solving
//! `F(H(z)) = H(lambda z)`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::germ::Germ;
use crate::arith::{BigComplex, Precision};
use crate::error::{Error, Result};

/// Ring operations shared by interval and exact coefficient types.
pub trait Scalar: Clone + Send + Sync {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// True only for an exact zero.
    fn is_zero(&self) -> bool;
}

impl Scalar for BigComplex {
    fn add(&self, o: &Self) -> Self {
        BigComplex::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        BigComplex::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        BigComplex::mul(self, o)
    }
    fn is_zero(&self) -> bool {
        self.is_zero_point()
    }
}

/// Exact Gaussian rational `(re + i im) / den` in lowest terms, `den > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaussQ {
    re: BigInt,
    im: BigInt,
    den: BigInt,
}

impl GaussQ {
    pub fn new(re: BigInt, im: BigInt, den: BigInt) -> GaussQ {
        assert!(!den.is_zero(), "zero denominator");
        let (re, im, den) = if den.is_negative() { (-re, -im, -den) } else { (re, im, den) };
        let g = re.gcd(&im).gcd(&den);
        if g.is_one() {
            GaussQ { re, im, den }
        } else {
            GaussQ { re: re / &g, im: im / &g, den: den / &g }
        }
    }

    pub fn real(r: &BigRational) -> GaussQ {
        GaussQ::new(r.numer().clone(), BigInt::zero(), r.denom().clone())
    }

    pub fn zero() -> GaussQ {
        GaussQ { re: BigInt::zero(), im: BigInt::zero(), den: BigInt::one() }
    }

    pub fn one() -> GaussQ {
        GaussQ { re: BigInt::one(), im: BigInt::zero(), den: BigInt::one() }
    }

    pub fn re(&self) -> BigRational {
        BigRational::new(self.re.clone(), self.den.clone())
    }

    pub fn im(&self) -> BigRational {
        BigRational::new(self.im.clone(), self.den.clone())
    }

    pub fn recip(&self) -> Option<GaussQ> {
        let n = &self.re * &self.re + &self.im * &self.im;
        if n.is_zero() {
            return None;
        }
        Some(GaussQ::new(&self.re * &self.den, -&self.im * &self.den, n))
    }

    pub fn pow(&self, n: u64) -> GaussQ {
        let mut acc = GaussQ::one();
        let mut b = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = Scalar::mul(&acc, &b);
            }
            b = Scalar::mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    /// Rational point `((1 - t^2) + 2 t i) / (1 + t^2)` on the unit circle with
    /// `t` the best approximation of `tan(pi omega)` with denominator below `2^bits`.
    /// Such a point is never a root of unity other than `+-1, +-i`.
    pub fn unit_circle_near(omega: f64, bits: u32) -> GaussQ {
        let t = (std::f64::consts::PI * omega).tan();
        let (p, q) = best_rational(t, 1u64 << bits.min(40));
        let (p, q) = (BigInt::from(p), BigInt::from(q));
        GaussQ::new(&q * &q - &p * &p, BigInt::from(2) * &p * &q, &q * &q + &p * &p)
    }
}

/// Last continued-fraction convergent of `x` with denominator at most `max_q`.
fn best_rational(x: f64, max_q: u64) -> (i64, i64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let (p2, q2) = (a as i64 * p1 + p0, a as i64 * q1 + q0);
        if q2 as u64 > max_q || q2 <= 0 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let f = y - a;
        if f.abs() < 1e-15 {
            break;
        }
        y = 1.0 / f;
    }
    (p1, q1)
}

impl Scalar for GaussQ {
    fn add(&self, o: &Self) -> Self {
        if self.den == o.den {
            return GaussQ::new(&self.re + &o.re, &self.im + &o.im, self.den.clone());
        }
        GaussQ::new(&self.re * &o.den + &o.re * &self.den, &self.im * &o.den + &o.im * &self.den, &self.den * &o.den)
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&GaussQ { re: -&o.re, im: -&o.im, den: o.den.clone() })
    }
    fn mul(&self, o: &Self) -> Self {
        GaussQ::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
            &self.den * &o.den,
        )
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

/// Supplies `lambda`, the divisors and the germ coefficients in a scalar type.
pub trait SeriesField: Sync {
    type S: Scalar;
    fn zero(&self) -> Self::S;
    fn one(&self) -> Self::S;
    fn lambda_pow(&self, n: u64) -> Result<Self::S>;
    /// `1 / (lambda^n - lambda)` for `n >= 2`.
    fn inv_divisor(&self, n: u64) -> Result<Self::S>;
    /// `f_m` for `m >= 2`.
    fn coeff(&self, m: usize) -> Result<Self::S>;
    /// Indices `m <= n_max` with `f_m != 0`.
    fn support(&self, n_max: usize) -> Vec<usize>;
}

/// Interval evaluation with the exact rotation number.
pub struct IntervalField<'a> {
    pub germ: &'a Germ,
    pub prec: u32,
}

impl SeriesField for IntervalField<'_> {
    type S = BigComplex;
    fn zero(&self) -> BigComplex {
        BigComplex::zero(self.prec)
    }
    fn one(&self) -> BigComplex {
        BigComplex::one(self.prec)
    }
    fn lambda_pow(&self, n: u64) -> Result<BigComplex> {
        self.germ.omega().lambda_pow(n, self.prec)
    }
    fn inv_divisor(&self, n: u64) -> Result<BigComplex> {
        self.germ.omega().divisor_inverse(n, self.prec)
    }
    fn coeff(&self, m: usize) -> Result<BigComplex> {
        Ok(BigComplex::from_real(self.germ.source().real(m, self.prec)))
    }
    fn support(&self, n_max: usize) -> Vec<usize> {
        self.germ.support(n_max)
    }
}

/// Exact evaluation with `lambda` replaced by a Gaussian rational surrogate.
pub struct ExactField {
    lambda: GaussQ,
    coeffs: Vec<BigRational>,
}

impl ExactField {
    /// Surrogate `lambda`: a rational point of the unit circle whose
    /// `tan(pi omega)` parameter has a denominator below `2^bits`.
    pub fn new(germ: &Germ, bits: u32, n_max: usize) -> Result<ExactField> {
        let coeffs = (0..=n_max)
            .map(|m| {
                germ.source()
                    .rational(m)
                    .ok_or_else(|| Error::Precondition(format!("f_{m} is irrational; exact mode needs rational coefficients")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExactField { lambda: GaussQ::unit_circle_near(germ.omega().to_f64(), bits), coeffs })
    }

    pub fn lambda(&self) -> &GaussQ {
        &self.lambda
    }
}

impl SeriesField for ExactField {
    type S = GaussQ;
    fn zero(&self) -> GaussQ {
        GaussQ::zero()
    }
    fn one(&self) -> GaussQ {
        GaussQ::one()
    }
    fn lambda_pow(&self, n: u64) -> Result<GaussQ> {
        Ok(self.lambda.pow(n))
    }
    fn inv_divisor(&self, n: u64) -> Result<GaussQ> {
        self.lambda
            .pow(n)
            .sub(&self.lambda)
            .recip()
            .ok_or_else(|| Error::DegenerateRotation(format!("lambda^{n} = lambda")))
    }
    fn coeff(&self, m: usize) -> Result<GaussQ> {
        self.coeffs
            .get(m)
            .map(GaussQ::real)
            .ok_or_else(|| Error::Precondition(format!("f_{m} beyond the prepared range")))
    }
    fn support(&self, n_max: usize) -> Vec<usize> {
        (2..=n_max.min(self.coeffs.len().saturating_sub(1)))
            .filter(|&m| !self.coeffs[m].is_zero())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Path {
    /// Running coefficient tables of `H^m`.
    Powers,
    /// Coefficient of `z^n` in `F` composed with the truncated `H`, by Horner.
    Composition,
}

/// `h_0 = 0, h_1 = 1, ..., h_{n_max}`.
pub fn linearize_with<F: SeriesField>(field: &F, n_max: usize, path: Path) -> Result<Vec<F::S>> {
    match path {
        Path::Powers => power_path(field, n_max),
        Path::Composition => composition_path(field, n_max),
    }
}

/// Interval coefficients, each accurate to `prec.bits` bits relative to the
/// largest term entering its order. Guard bits double until that holds or the
/// working precision would pass `prec.cap`.
pub fn linearize_coeffs(germ: &Germ, n_max: usize, prec: Precision) -> Result<Vec<BigComplex>> {
    let target = prec.bits;
    let mut guard = 64u32;
    loop {
        let wp = target.saturating_add(guard).min(prec.cap.max(target));
        let h = linearize_with(&IntervalField { germ, prec: wp }, n_max, Path::Powers)?;
        if accuracy_bits(&h) >= target as f64 {
            return Ok(h.iter().map(|z| z.with_prec(target)).collect());
        }
        if wp >= prec.cap {
            return Err(Error::PrecisionExhausted(format!(
                "linearization to order {n_max} keeps {:.0} of {target} bits at the {} bit cap",
                accuracy_bits(&h),
                prec.cap
            )));
        }
        guard *= 2;
    }
}

/// Smallest over `n` of `log2(scale_n) - log2(width of h_n)`, where `scale_n`
/// is the largest of `|h_n|` and `|h_i h_{n-i}|`.
pub fn accuracy_bits(h: &[BigComplex]) -> f64 {
    let l: Vec<f64> = h.iter().map(log2_mag).collect();
    let mut worst = f64::INFINITY;
    for n in 2..h.len() {
        let w = h[n].re.log2_width().max(h[n].im.log2_width());
        if w == f64::NEG_INFINITY {
            continue;
        }
        let scale = (1..n).map(|i| l[i] + l[n - i]).fold(l[n], f64::max);
        worst = worst.min(scale - w);
    }
    worst
}

fn power_path<F: SeriesField>(field: &F, n_max: usize) -> Result<Vec<F::S>> {
    let zero = field.zero();
    let mut h = vec![zero.clone(); n_max + 1];
    if n_max == 0 {
        return Ok(h);
    }
    h[1] = field.one();
    let support = field.support(n_max);
    let top = support.last().copied().unwrap_or(1);
    let coeffs: Vec<(usize, F::S)> = support.iter().map(|&m| Ok((m, field.coeff(m)?))).collect::<Result<_>>()?;
    // pw[m - 2][n] = [z^n] H^m for m >= 2.
    let mut pw: Vec<Vec<F::S>> = (2..=top).map(|_| vec![zero.clone(); n_max + 1]).collect();
    for n in 2..=n_max {
        let hm = &h;
        let prev = &pw;
        let fresh: Vec<F::S> = (2..=top.min(n))
            .into_par_iter()
            .map(|m| {
                let lower: &[F::S] = if m == 2 { hm } else { &prev[m - 3] };
                let mut acc = zero.clone();
                for i in 1..=n + 1 - m {
                    let b = &lower[n - i];
                    if !hm[i].is_zero() && !b.is_zero() {
                        acc = acc.add(&hm[i].mul(b));
                    }
                }
                acc
            })
            .collect();
        for (j, v) in fresh.into_iter().enumerate() {
            pw[j][n] = v;
        }
        let mut acc = zero.clone();
        for (m, f) in &coeffs {
            if *m <= n {
                acc = acc.add(&f.mul(&pw[m - 2][n]));
            }
        }
        h[n] = if acc.is_zero() { zero.clone() } else { acc.mul(&field.inv_divisor(n as u64)?) };
    }
    Ok(h)
}

/// Truncated product of two series through `z^n`.
fn series_mul<S: Scalar>(a: &[S], b: &[S], n: usize, zero: &S) -> Vec<S> {
    (0..=n)
        .map(|k| {
            let mut acc = zero.clone();
            for i in 0..=k {
                if !a[i].is_zero() && !b[k - i].is_zero() {
                    acc = acc.add(&a[i].mul(&b[k - i]));
                }
            }
            acc
        })
        .collect()
}

/// `sum_{m >= 2} f_m H^m` through `z^n` by Horner: `H^2 (f_2 + H (f_3 + ...))`.
fn nonlinear_part<S: Scalar>(h: &[S], coeffs: &[(usize, S)], n: usize, zero: &S) -> Vec<S> {
    let top = match coeffs.last() {
        Some((m, _)) => *m,
        None => return vec![zero.clone(); n + 1],
    };
    let hs = &h[..=n];
    let mut inner = vec![zero.clone(); n + 1];
    let mut ci = coeffs.len();
    for m in (2..=top).rev() {
        if m < top {
            inner = series_mul(hs, &inner, n, zero);
        }
        if ci > 0 && coeffs[ci - 1].0 == m {
            inner[0] = inner[0].add(&coeffs[ci - 1].1);
            ci -= 1;
        }
    }
    let h2 = series_mul(hs, hs, n, zero);
    series_mul(&h2, &inner, n, zero)
}

fn composition_path<F: SeriesField>(field: &F, n_max: usize) -> Result<Vec<F::S>> {
    let zero = field.zero();
    let mut h = vec![zero.clone(); n_max + 1];
    if n_max == 0 {
        return Ok(h);
    }
    h[1] = field.one();
    let coeffs: Vec<(usize, F::S)> =
        field.support(n_max).iter().map(|&m| Ok((m, field.coeff(m)?))).collect::<Result<_>>()?;
    for n in 2..=n_max {
        let g = nonlinear_part(&h, &coeffs, n, &zero);
        h[n] = if g[n].is_zero() { zero.clone() } else { g[n].mul(&field.inv_divisor(n as u64)?) };
    }
    Ok(h)
}

/// Per-order residual of `F(H(z)) - H(lambda z)`.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualEntry {
    pub n: usize,
    /// `log2` of an upper bound on the residual; `-inf` when it is exactly zero.
    pub log2_residual: f64,
    /// `log2` of the largest term entering order `n`.
    pub log2_scale: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugacyReport {
    pub n_max: usize,
    pub prec: u32,
    /// Residual must stay below `2^-threshold_bits` times the order's scale.
    pub threshold_bits: u32,
    pub entries: Vec<ResidualEntry>,
    pub worst_ratio_log2: f64,
    pub first_bad_order: Option<usize>,
    pub pass: bool,
}

fn log2_mag(z: &BigComplex) -> f64 {
    let m = z.mag();
    if m.is_zero() {
        f64::NEG_INFINITY
    } else {
        m.log2_abs_approx()
    }
}

/// Checks `F(H) = H(lambda z)` through `z^{n_max}` using the supplied
/// coefficients (which need not come from [`linearize_coeffs`]).
pub fn verify_conjugacy(germ: &Germ, h: &[BigComplex], n_max: usize, prec: u32) -> Result<ConjugacyReport> {
    if h.len() <= n_max {
        return Err(Error::Precondition(format!("{} coefficients supplied, order {n_max} requested", h.len())));
    }
    let field = IntervalField { germ, prec };
    let zero = field.zero();
    let coeffs: Vec<(usize, BigComplex)> =
        field.support(n_max).iter().map(|&m| Ok((m, field.coeff(m)?))).collect::<Result<_>>()?;
    let g = nonlinear_part(h, &coeffs, n_max, &zero);
    let lambda = field.lambda_pow(1)?;
    let threshold_bits = prec / 2;
    let mut entries = Vec::with_capacity(n_max);
    let mut worst = f64::NEG_INFINITY;
    let mut first_bad = None;
    for n in 1..=n_max {
        let lhs_lin = lambda.mul(&h[n]);
        let rhs = field.lambda_pow(n as u64)?.mul(&h[n]);
        let r = lhs_lin.add(&g[n]).sub(&rhs);
        let mut scale = log2_mag(&lhs_lin).max(log2_mag(&g[n])).max(log2_mag(&rhs));
        // Products h_i h_{n-i} bound the intermediate terms of the nonlinear part.
        for i in 1..n {
            scale = scale.max(log2_mag(&h[i]) + log2_mag(&h[n - i]));
        }
        let lr = log2_mag(&r);
        let ratio = if lr == f64::NEG_INFINITY { f64::NEG_INFINITY } else { lr - scale };
        if ratio > -(threshold_bits as f64) && first_bad.is_none() {
            first_bad = Some(n);
        }
        worst = worst.max(ratio);
        entries.push(ResidualEntry { n, log2_residual: lr, log2_scale: scale });
    }
    Ok(ConjugacyReport {
        n_max,
        prec,
        threshold_bits,
        entries,
        worst_ratio_log2: worst,
        first_bad_order: first_bad,
        pass: first_bad.is_none(),
    })
}

/// `ln |h_n|` upper bounds as doubles; `-inf` for exact zeros.
pub fn ln_abs_upper(h: &[BigComplex]) -> Vec<f64> {
    h.iter().map(|z| z.ln_abs_upper()).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_traits::ToPrimitive;

    use super::*;
    use crate::arith::{BigReal, IrrationalSpec, Omega};
    use crate::linearize::germ::CoeffSource;

    fn germ(spec: IrrationalSpec, src: CoeffSource) -> Germ {
        Germ::with_default_norm(Arc::new(Omega::new(spec).unwrap()), src).unwrap()
    }

    #[test]
    fn low_orders_match_closed_forms() {
        let g = germ(IrrationalSpec::Golden, CoeffSource::quad());
        let prec = 192;
        let h = linearize_coeffs(&g, 4, Precision::new(prec, 8192)).unwrap();
        let w = g.omega();
        let d = |n| w.divisor(n, prec).unwrap();
        let h2 = BigComplex::one(prec).div(&d(2)).unwrap();
        assert!(h[2].intersects(&h2));
        let h3 = h2.mul_2exp(1).div(&d(3)).unwrap();
        assert!(h[3].intersects(&h3));
        let h4 = h3.mul_2exp(1).add(&h2.mul(&h2)).div(&d(4)).unwrap();
        assert!(h[4].intersects(&h4));
        assert!(h[4].re.log2_width() < -150.0);
    }

    #[test]
    fn both_paths_agree_exactly_in_rational_mode() {
        let cases = [
            (CoeffSource::quad(), 30),
            (CoeffSource::Poly(vec!["1".parse().unwrap(), "-2".parse().unwrap(), "0.5".parse().unwrap()]), 30),
            (CoeffSource::Ones, 20),
        ];
        for (src, n) in cases {
            let g = germ(IrrationalSpec::Surd(2), src);
            let f = ExactField::new(&g, 12, n).unwrap();
            let a = linearize_with(&f, n, Path::Powers).unwrap();
            let b = linearize_with(&f, n, Path::Composition).unwrap();
            assert_eq!(a, b);
            assert!(a[n].re().abs() + a[n].im().abs() > BigRational::zero());
        }
    }

    #[test]
    fn surrogate_lies_on_unit_circle() {
        let l = GaussQ::unit_circle_near(0.6180339887, 16);
        assert_eq!(l.re() * l.re() + l.im() * l.im(), BigRational::one());
        assert!((f64::atan2(l.im().to_f64().unwrap(), l.re().to_f64().unwrap()) / std::f64::consts::TAU - (0.6180339887 - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn interval_paths_overlap() {
        let g = germ(IrrationalSpec::Golden, CoeffSource::Koebe);
        let f = IntervalField { germ: &g, prec: 128 };
        let a = linearize_with(&f, 20, Path::Powers).unwrap();
        let b = linearize_with(&f, 20, Path::Composition).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.intersects(y)));
    }

    #[test]
    fn conjugacy_holds_and_detects_corruption() {
        let g = germ(IrrationalSpec::Golden, CoeffSource::quad());
        let prec = 256;
        let mut h = linearize_coeffs(&g, 60, Precision::new(prec, 8192)).unwrap();
        let rep = verify_conjugacy(&g, &h, 60, prec).unwrap();
        assert!(rep.pass, "worst {}", rep.worst_ratio_log2);
        let bump = BigReal::one(prec).add(&BigReal::one(prec).mul_2exp(-20));
        h[7] = h[7].scale(&bump);
        let rep = verify_conjugacy(&g, &h, 60, prec).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.first_bad_order, Some(7));
    }
}
