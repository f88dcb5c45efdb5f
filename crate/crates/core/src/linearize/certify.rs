//! Certified comparisons of `|h_n|` with the Davie-majorant bounds.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::germ::Germ;
use crate::arith::elementary::{ln_biguint, ln_point};
use crate::arith::real::ln_biguint_approx;
use crate::arith::{BigComplex, BigReal};
use crate::brjuno::{classify_bounded, DepthVerdict};
use crate::contfrac::ConvergentTable;
use crate::davie::DavieTable;
use crate::error::{Error, Result};
use crate::report::SCHEMA_VERSION;
use crate::weights::{make_weight, WeightSequence, DEFAULT_CHECK_TO};

const PREC: u32 = 128;

#[derive(Clone, Debug, Serialize)]
pub struct BoundEntry {
    pub n: usize,
    /// Upper bound on `ln |h_n|`.
    pub ln_lhs: f64,
    /// Lower bound on the logarithm of the right-hand side.
    pub ln_rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCertificate {
    pub schema: &'static str,
    pub omega: String,
    pub germ: String,
    pub bound: String,
    pub n_max: usize,
    pub entries: Vec<BoundEntry>,
    /// Smallest `ln_rhs - ln_lhs` over `n >= 2`.
    pub min_margin: f64,
    pub failures: Vec<usize>,
    pub all_pass: bool,
}

/// Compares `ln |h_n|` with `rhs` for `n = 1..=n_max`.
fn compare(h: &[BigComplex], rhs: impl Fn(usize) -> Result<BigReal>, n_max: usize) -> Result<(Vec<BoundEntry>, f64, Vec<usize>)> {
    let mut entries = Vec::with_capacity(n_max);
    let mut min_margin = f64::INFINITY;
    let mut failures = Vec::new();
    for (n, hn) in h.iter().enumerate().take(n_max + 1).skip(1) {
        let r = rhs(n)?;
        let mag = hn.mag();
        let (ln_lhs, pass) = if mag.is_zero() {
            (f64::NEG_INFINITY, true)
        } else {
            let up = ln_point(&mag, PREC);
            if up.hi() <= r.lo() {
                (up.hi().to_f64(), true)
            } else {
                let low = hn.abs();
                let certain_fail = !low.lo().is_zero() && ln_point(low.lo(), PREC).lo() > r.hi();
                if !certain_fail {
                    return Err(Error::PrecisionExhausted(format!("bound at n = {n} is not separated")));
                }
                (up.hi().to_f64(), false)
            }
        };
        let ln_rhs = r.lo().to_f64();
        if n >= 2 {
            min_margin = min_margin.min(ln_rhs - ln_lhs);
        }
        if !pass {
            failures.push(n);
        }
        entries.push(BoundEntry { n, ln_lhs, ln_rhs, pass });
    }
    Ok((entries, min_margin, failures))
}

fn check_cover(h: &[BigComplex], s: &[BigUint], dt: &DavieTable, n_max: usize) -> Result<()> {
    if h.len() <= n_max || s.len() <= n_max {
        return Err(Error::Precondition(format!("coefficients do not reach order {n_max}")));
    }
    if dt.n_max + 1 < n_max {
        return Err(Error::TableTooShort(format!("Davie table covers n <= {}, need {}", dt.n_max, n_max - 1)));
    }
    Ok(())
}

/// `|h_n| <= s_n exp(K(n-1))` for every `n <= n_max`.
pub fn certify_majorant_bound(germ: &Germ, h: &[BigComplex], s: &[BigUint], dt: &DavieTable, n_max: usize) -> Result<BoundCertificate> {
    if !germ.is_schlicht_bounded() {
        return Err(Error::Precondition(format!("{} is not declared with |f_n| <= n", germ.label())));
    }
    check_cover(h, s, dt, n_max)?;
    let (entries, min_margin, failures) =
        compare(h, |n| Ok(ln_biguint(&s[n], PREC).add(&dt.big_k[n - 1])), n_max)?;
    Ok(BoundCertificate {
        schema: SCHEMA_VERSION,
        omega: dt.omega.clone(),
        germ: germ.label(),
        bound: "s_n exp(K(n-1))".into(),
        n_max,
        entries,
        min_margin,
        all_pass: failures.is_empty(),
        failures,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightCertificate {
    pub bound: BoundCertificate,
    pub weight: String,
    pub germ_weight: String,
    /// `(1/n) ln(|h_n| / M_n) - (1/n) ln(N_n / M_n) - sum_{k <= k(n)} ln q_{k+1} / q_k`.
    pub deficit: Vec<f64>,
    pub deficit_sup: f64,
    pub deficit_trend: DepthVerdict,
}

/// `|h_n| <= c_1^{n-1} c_2^{2n-2} s_n N_n exp(K(n-1))` and the deficit sequence
/// against the weight `m`.
pub fn certify_weight_bound(
    germ: &Germ,
    h: &[BigComplex],
    s: &[BigUint],
    m: &WeightSequence,
    dt: &DavieTable,
    t: &ConvergentTable,
    n_max: usize,
) -> Result<WeightCertificate> {
    let (c1, c2, nk) = germ
        .weight_bound()
        .ok_or_else(|| Error::Precondition(format!("{} carries no weight bound", germ.label())))?;
    let one = num_rational::BigRational::from_integer(1.into());
    if *c1.value() < one || *c2.value() < one {
        return Err(Error::Precondition("weight-bound constants must be >= 1".into()));
    }
    check_cover(h, s, dt, n_max)?;
    let nw = make_weight(nk, DEFAULT_CHECK_TO, true)?;
    let ln_c1 = crate::arith::elementary::ln(&c1.to_real(PREC)).expect("c1 >= 1");
    let ln_c2 = crate::arith::elementary::ln(&c2.to_real(PREC)).expect("c2 >= 1");
    let (entries, min_margin, failures) = compare(
        h,
        |n| {
            let k = (n - 1) as i64;
            Ok(ln_c1
                .mul_i64(k)
                .add(&ln_c2.mul_i64(2 * k))
                .add(&ln_biguint(&s[n], PREC))
                .add(&nw.ln_m(n, PREC)?)
                .add(&dt.big_k[n - 1]))
        },
        n_max,
    )?;
    let kmax = dt.k_of_n[n_max.min(dt.n_max)];
    if t.q.len() <= kmax + 1 {
        return Err(Error::TableTooShort(format!("Brjuno partial sums need q_{}", kmax + 1)));
    }
    let mut partial = Vec::with_capacity(kmax + 1);
    let mut acc = 0.0;
    for k in 0..=kmax {
        acc += ln_biguint_approx(&t.q[k + 1]) / t.q[k].to_f64().unwrap_or(f64::INFINITY);
        partial.push(acc);
    }
    let mut deficit = Vec::with_capacity(n_max);
    for n in 1..=n_max.min(dt.n_max) {
        let lh = h[n].ln_abs_upper();
        let v = (lh - nw.ln_m_f64(n)?) / n as f64 - partial[dt.k_of_n[n]];
        deficit.push(v);
    }
    let sup = deficit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let trend = classify_bounded(&deficit);
    Ok(WeightCertificate {
        bound: BoundCertificate {
            schema: SCHEMA_VERSION,
            omega: dt.omega.clone(),
            germ: germ.label(),
            bound: "c1^(n-1) c2^(2n-2) s_n N_n exp(K(n-1))".into(),
            n_max,
            entries,
            min_margin,
            all_pass: failures.is_empty(),
            failures,
        },
        weight: m.name(),
        germ_weight: nw.name(),
        deficit,
        deficit_sup: sup,
        deficit_trend: trend,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::arith::{IrrationalSpec, Omega, Precision};
    use crate::contfrac::gauss_expand;
    use crate::davie::build_davie;
    use crate::linearize::germ::CoeffSource;
    use crate::linearize::{linearize_coeffs, majorant_coeffs};
    use crate::weights::gevrey;

    fn setup(spec: IrrationalSpec, src: CoeffSource, n: usize) -> (Germ, Vec<BigComplex>, Vec<BigUint>, DavieTable, ConvergentTable) {
        let w = Arc::new(Omega::new(spec).unwrap());
        let t = gauss_expand(w.clone(), 40).unwrap();
        let g = Germ::with_default_norm(w, src).unwrap();
        let h = linearize_coeffs(&g, n, Precision::default()).unwrap();
        let dt = build_davie(&t, n, 128).unwrap();
        (g, h, majorant_coeffs(n), dt, t)
    }

    #[test]
    fn quadratic_golden_passes() {
        let (g, h, s, dt, _) = setup(IrrationalSpec::Golden, CoeffSource::quad(), 80);
        let c = certify_majorant_bound(&g, &h, &s, &dt, 80).unwrap();
        assert!(c.all_pass);
        assert_eq!(c.entries.len(), 80);
        assert!(c.min_margin > 0.0);
    }

    #[test]
    fn tampered_coefficient_fails() {
        let (g, mut h, s, dt, _) = setup(IrrationalSpec::Golden, CoeffSource::quad(), 30);
        let big = BigReal::from_i64(1, 256).mul_2exp(4000);
        h[17] = h[17].scale(&big);
        let c = certify_majorant_bound(&g, &h, &s, &dt, 30).unwrap();
        assert_eq!(c.failures, vec![17]);
    }

    #[test]
    fn gevrey_germ_weight_bound() {
        let (g, h, s, dt, t) = setup(IrrationalSpec::Surd(2), CoeffSource::Gevrey { s: "0.5".parse().unwrap() }, 60);
        assert!(certify_majorant_bound(&g, &h, &s, &dt, 60).is_err());
        let m = make_weight(gevrey("0.5").unwrap(), DEFAULT_CHECK_TO, false).unwrap();
        let c = certify_weight_bound(&g, &h, &s, &m, &dt, &t, 60).unwrap();
        assert!(c.bound.all_pass);
        assert_eq!(c.deficit.len(), 60);
        assert_eq!(c.deficit_trend, DepthVerdict::BoundedAtDepth);
    }
}
