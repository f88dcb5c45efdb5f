//! Weight sequences `M_n` for ultradifferentiable classes.
//!
//! Values are kept as `ln M_n` since the power-tower family overflows every
//! fixed-exponent float long before the ranges we check.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::arith::elementary::{exp, ln, ln_factorial_f64, ln_factorial_table, ln_u64};
use crate::arith::{BigReal, Float, Param, Round};
use crate::error::{Error, Result};
use crate::report::{Num, SCHEMA_VERSION};

/// Default grid size for axiom checks.
pub const DEFAULT_CHECK_TO: usize = 200;

const BASE_PREC: u32 = 128;
const ESCALATION: [u32; 3] = [128, 512, 2048];

#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    /// `M_n = (n!)^s`.
    Gevrey { s: Param },
    /// `M_n = n^(a n^b)`.
    PowerTower { a: Param, b: Param },
    ConstantOne,
    /// Explicit values `M_1, M_2, ...`.
    Custom { values: Vec<Param> },
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::Gevrey { s } => write!(f, "gevrey:{s}"),
            WeightKind::PowerTower { a, b } => write!(f, "powertower:{a},{b}"),
            WeightKind::ConstantOne => write!(f, "one"),
            WeightKind::Custom { values } => {
                let v: Vec<_> = values.iter().map(|p| p.text().to_string()).collect();
                write!(f, "custom:[{}]", v.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum AxiomStatus {
    CheckedTo { n: usize },
    ProvenByFormula { formula: &'static str },
    FailedAt { n: usize, m: usize },
    Undecided { n: usize, m: usize },
}

impl AxiomStatus {
    pub fn holds(&self) -> bool {
        matches!(self, AxiomStatus::CheckedTo { .. } | AxiomStatus::ProvenByFormula { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomCertificates {
    /// `inf (1/n) ln M_n > -inf`.
    pub axiom0: AxiomStatus,
    /// `M_{n+1} <= C_1^{n+1} M_n`.
    pub axiom1: AxiomStatus,
    /// Log-convexity.
    pub axiom2: AxiomStatus,
    /// `M_n M_m <= M_{n+m-1}`.
    pub axiom3: AxiomStatus,
}

impl AxiomCertificates {
    pub fn all_hold(&self) -> bool {
        self.axiom0.holds() && self.axiom1.holds() && self.axiom2.holds() && self.axiom3.holds()
    }

    fn first_failure(&self) -> Option<(usize, &AxiomStatus)> {
        [&self.axiom0, &self.axiom1, &self.axiom2, &self.axiom3]
            .into_iter()
            .enumerate()
            .find(|(_, s)| !s.holds())
    }
}

#[derive(Clone, Debug)]
pub struct WeightSequence {
    kind: WeightKind,
    check_to: usize,
    /// Upper bound on `ln C_1`.
    ln_c1: BigReal,
    inf_ln_root: f64,
    certificates: AxiomCertificates,
    ratio_monotone: bool,
}

impl WeightSequence {
    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    pub fn check_to(&self) -> usize {
        self.check_to
    }

    pub fn certificates(&self) -> &AxiomCertificates {
        &self.certificates
    }

    pub fn ln_c1(&self) -> &BigReal {
        &self.ln_c1
    }

    /// Smallest `(1/n) ln M_n` over the checked range.
    pub fn inf_ln_root(&self) -> f64 {
        self.inf_ln_root
    }

    pub fn ratio_monotone(&self) -> bool {
        self.ratio_monotone
    }

    /// Last index with a defined value, if the sequence is finite.
    pub fn horizon(&self) -> Option<usize> {
        match &self.kind {
            WeightKind::Custom { values } => Some(values.len()),
            _ => None,
        }
    }

    /// Whether `ln M_n = 0` is known structurally.
    fn ln_is_zero(&self, n: usize) -> bool {
        match &self.kind {
            WeightKind::ConstantOne => true,
            WeightKind::Gevrey { .. } | WeightKind::PowerTower { .. } => n == 1,
            WeightKind::Custom { values } => values.get(n - 1).is_some_and(|v| v.value().is_one()),
        }
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::Precondition("weights are indexed from n = 1".into()));
        }
        if let Some(h) = self.horizon() {
            if n > h {
                return Err(Error::WeightMissing(format!("{} has no value at n = {n}", self.name())));
            }
        }
        Ok(())
    }

    /// Certified `ln M_n`.
    pub fn ln_m(&self, n: usize, prec: u32) -> Result<BigReal> {
        self.check_index(n)?;
        Ok(match &self.kind {
            WeightKind::Gevrey { s } => {
                let t = ln_factorial_table(n, prec + 8);
                t[n].mul(&s.to_real(prec + 8)).with_prec(prec)
            }
            _ => ln_kind(&self.kind, n, prec),
        })
    }

    /// `ln M_n` for `n = 1..=upto`; index 0 holds zero.
    pub fn ln_m_table(&self, upto: usize, prec: u32) -> Result<Vec<BigReal>> {
        if upto > 0 {
            self.check_index(upto)?;
        }
        Ok(match &self.kind {
            WeightKind::Gevrey { s } => {
                let sr = s.to_real(prec + 8);
                ln_factorial_table(upto, prec + 8)
                    .into_iter()
                    .map(|x| x.mul(&sr).with_prec(prec))
                    .collect()
            }
            k => std::iter::once(BigReal::zero(prec))
                .chain((1..=upto).map(|n| ln_kind(k, n, prec)))
                .collect(),
        })
    }

    /// `ln M_n` in double precision, for diagnostics over long ranges.
    pub fn ln_m_f64(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(match &self.kind {
            WeightKind::Gevrey { s } => s.to_f64() * ln_factorial_f64(n as u64),
            WeightKind::PowerTower { a, b } => {
                let x = n as f64;
                a.to_f64() * x.powf(b.to_f64()) * x.ln()
            }
            WeightKind::ConstantOne => 0.0,
            WeightKind::Custom { .. } => ln_kind(&self.kind, n, 64).to_f64(),
        })
    }

    /// Sign of `sum c_i ln M_{n_i}`, using structural zeros, escalating
    /// precision and exact integer arithmetic where available.
    fn combo_sign(&self, terms: &[(usize, i64)], cache: Option<&[BigReal]>) -> Option<Ordering> {
        let mut merged: BTreeMap<usize, i64> = BTreeMap::new();
        for &(n, c) in terms {
            *merged.entry(n).or_default() += c;
        }
        merged.retain(|&n, c| *c != 0 && !self.ln_is_zero(n));
        if merged.is_empty() {
            return Some(Ordering::Equal);
        }
        for (i, &prec) in ESCALATION.iter().enumerate() {
            let mut acc = BigReal::zero(prec);
            for (&n, &c) in &merged {
                let v = match cache {
                    Some(t) if i == 0 && n < t.len() => t[n].clone(),
                    _ => self.ln_m(n, prec).ok()?,
                };
                acc = acc.add(&v.mul_i64(c));
            }
            if acc.is_positive() {
                return Some(Ordering::Greater);
            }
            if acc.is_negative() {
                return Some(Ordering::Less);
            }
        }
        self.exact_combo_sign(&merged)
    }

    fn exact_combo_sign(&self, merged: &BTreeMap<usize, i64>) -> Option<Ordering> {
        match &self.kind {
            WeightKind::Gevrey { .. } => {
                let (mut pos, mut neg) = (BigUint::one(), BigUint::one());
                for (&n, &c) in merged {
                    let f: BigUint = (1..=n as u64).map(BigUint::from).product();
                    let fp = f.pow(c.unsigned_abs() as u32);
                    if c > 0 { pos *= fp } else { neg *= fp }
                }
                Some(pos.cmp(&neg))
            }
            WeightKind::Custom { values } => {
                let mut prod = BigRational::one();
                for (&n, &c) in merged {
                    let v = values[n - 1].value();
                    let vp = num_traits::pow(v.clone(), c.unsigned_abs() as usize);
                    prod = if c > 0 { prod * vp } else { prod / vp };
                }
                Some(prod.cmp(&BigRational::one()))
            }
            _ => None,
        }
    }

    pub fn to_json(&self) -> WeightJson {
        WeightJson {
            schema: SCHEMA_VERSION,
            name: self.name(),
            check_to: self.check_to,
            c1: Num::estimate(self.ln_c1.hi().to_f64().exp()),
            inf_ln_root: Num::estimate(self.inf_ln_root),
            certificates: self.certificates.clone(),
            ratio_monotone: self.ratio_monotone,
        }
    }
}

fn ln_kind(kind: &WeightKind, n: usize, prec: u32) -> BigReal {
    let wp = prec + 16;
    match kind {
        WeightKind::Gevrey { s } => crate::arith::elementary::ln_factorial(n as u64, wp)
            .mul(&s.to_real(wp))
            .with_prec(prec),
        WeightKind::PowerTower { a, b } => {
            if n == 1 {
                return BigReal::zero(prec);
            }
            let l = ln_u64(n as u64, wp);
            exp(&l.mul(&b.to_real(wp))).mul(&l).mul(&a.to_real(wp)).with_prec(prec)
        }
        WeightKind::ConstantOne => BigReal::zero(prec),
        WeightKind::Custom { values } => ln(&values[n - 1].to_real(wp)).expect("positive custom value").with_prec(prec),
    }
}

#[derive(Debug, Serialize)]
pub struct WeightJson {
    pub schema: &'static str,
    pub name: String,
    pub check_to: usize,
    pub c1: Num,
    pub inf_ln_root: Num,
    pub certificates: AxiomCertificates,
    pub ratio_monotone: bool,
}

fn validate(kind: &WeightKind) -> Result<()> {
    let bad = |m: &str| Err(Error::Precondition(format!("{kind}: {m}")));
    match kind {
        WeightKind::Gevrey { s } if !s.is_positive() => bad("s must be positive"),
        WeightKind::PowerTower { a, b } => {
            let one = BigRational::one();
            let two = &one + &one;
            if !a.is_positive() {
                bad("a must be positive")
            } else if b.value() <= &one || b.value() >= &two {
                bad("b must lie in (1, 2)")
            } else {
                Ok(())
            }
        }
        WeightKind::Custom { values } if values.is_empty() => bad("empty table"),
        WeightKind::Custom { values } if values.iter().any(|v| !v.is_positive()) => bad("values must be positive"),
        _ => Ok(()),
    }
}

/// Builds a weight sequence and checks axioms 0-3 for `n, m <= check_to`.
///
/// A sequence failing an axiom is an error unless `permissive` is set, in
/// which case the failure is recorded in its certificates.
pub fn make_weight(kind: WeightKind, check_to: usize, permissive: bool) -> Result<WeightSequence> {
    validate(&kind)?;
    if check_to < 2 {
        return Err(Error::Precondition("check_to must be at least 2".into()));
    }
    let mut w = WeightSequence {
        kind,
        check_to,
        ln_c1: BigReal::zero(BASE_PREC),
        inf_ln_root: 0.0,
        certificates: AxiomCertificates {
            axiom0: AxiomStatus::CheckedTo { n: 0 },
            axiom1: AxiomStatus::CheckedTo { n: 0 },
            axiom2: AxiomStatus::CheckedTo { n: 0 },
            axiom3: AxiomStatus::CheckedTo { n: 0 },
        },
        ratio_monotone: true,
    };
    let gevrey = matches!(w.kind, WeightKind::Gevrey { .. });
    let elementary = !matches!(w.kind, WeightKind::Custom { .. });
    let n1 = w.horizon().map_or(check_to, |h| h.min(check_to));
    let top = w.horizon().map_or(2 * check_to, |h| h.min(2 * check_to));
    let t = w.ln_m_table(top, BASE_PREC)?;

    w.inf_ln_root = (1..=n1).map(|n| t[n].lo().to_f64() / n as f64).fold(f64::INFINITY, f64::min);
    w.certificates.axiom0 = if elementary {
        AxiomStatus::ProvenByFormula { formula: "M_n >= 1" }
    } else {
        AxiomStatus::CheckedTo { n: n1 }
    };

    // Axiom 1: C_1 = e^{s/e} for Gevrey (ln x <= x/e), otherwise the
    // largest ratio seen on the grid.
    w.ln_c1 = match &w.kind {
        WeightKind::Gevrey { s } => s.to_real(BASE_PREC).mul(&exp(&BigReal::from_i64(-1, BASE_PREC))),
        _ => {
            let mut best = Float::zero();
            for n in 1..n1.min(top) {
                let d = t[n + 1].sub(&t[n]).div_i64(n as i64 + 1);
                best = best.max(d.hi().clone());
            }
            let slack = Float::pow2(-64);
            BigReal::from_float(best.add(&slack, BASE_PREC, Round::Up), BASE_PREC)
        }
    };
    w.certificates.axiom1 = check_axiom1(&t, &w.ln_c1, n1.min(top - 1), gevrey);

    let mut ax2 = if gevrey {
        AxiomStatus::ProvenByFormula { formula: "ln(n+1) >= ln n" }
    } else {
        AxiomStatus::CheckedTo { n: n1 }
    };
    for n in 2..n1.min(top) {
        match w.combo_sign(&[(n + 1, 1), (n - 1, 1), (n, -2)], Some(&t)) {
            Some(Ordering::Less) => {
                ax2 = AxiomStatus::FailedAt { n, m: n };
                break;
            }
            None => {
                ax2 = AxiomStatus::Undecided { n, m: n };
                break;
            }
            _ => {}
        }
    }
    w.certificates.axiom2 = ax2;
    let ratios: Vec<f64> = (1..n1.min(top)).map(|n| t[n + 1].to_f64() - t[n].to_f64()).collect();
    w.ratio_monotone = ratios
        .windows(2)
        .all(|r| r[1] >= r[0] - 1e-9 * r[0].abs().max(1.0));

    let mut ax3 = if gevrey {
        AxiomStatus::ProvenByFormula { formula: "binom(n+m-1, n) >= m" }
    } else {
        AxiomStatus::CheckedTo { n: n1 }
    };
    'grid: for n in 1..=n1 {
        for m in n..=n1 {
            if n + m - 1 > top {
                break;
            }
            match w.combo_sign(&[(n + m - 1, 1), (n, -1), (m, -1)], Some(&t)) {
                Some(Ordering::Less) => {
                    ax3 = AxiomStatus::FailedAt { n, m };
                    break 'grid;
                }
                None => {
                    ax3 = AxiomStatus::Undecided { n, m };
                    break 'grid;
                }
                _ => {}
            }
        }
    }
    w.certificates.axiom3 = ax3;

    if !permissive {
        if let Some((i, s)) = w.certificates.first_failure() {
            return Err(Error::AxiomViolation(format!("{}: axiom {i} {s:?}", w.name())));
        }
    }
    Ok(w)
}

fn check_axiom1(t: &[BigReal], ln_c1: &BigReal, upto: usize, gevrey: bool) -> AxiomStatus {
    for n in 1..upto {
        let slack = ln_c1.mul_i64(n as i64 + 1).sub(&t[n + 1].sub(&t[n]));
        if slack.is_negative() || !slack.is_nonneg() {
            return AxiomStatus::FailedAt { n, m: n + 1 };
        }
    }
    if gevrey {
        AxiomStatus::ProvenByFormula { formula: "ln x <= x/e" }
    } else {
        AxiomStatus::CheckedTo { n: upto }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationReport {
    pub dominating: String,
    pub dominated: String,
    pub from: usize,
    pub horizon: usize,
    /// `M_n >= N_n` for every checked `n >= from`.
    pub holds: bool,
    /// First `n >= from` with `M_n < N_n`.
    pub witness: Option<usize>,
    /// First index after the last `n` with `M_n < N_n`.
    pub crossover: Option<usize>,
    pub undecided: Vec<usize>,
}

fn cross_sign(m: &WeightSequence, nn: &WeightSequence, k: usize) -> Option<Ordering> {
    if m.ln_is_zero(k) && nn.ln_is_zero(k) {
        return Some(Ordering::Equal);
    }
    match (&m.kind, &nn.kind) {
        (WeightKind::Gevrey { s }, WeightKind::Gevrey { s: t }) => return Some(s.value().cmp(t.value())),
        (WeightKind::PowerTower { a, b }, WeightKind::PowerTower { a: c, b: d }) if b == d => {
            return Some(a.value().cmp(c.value()));
        }
        _ => {}
    }
    for &prec in &ESCALATION {
        let d = m.ln_m(k, prec).ok()?.sub(&nn.ln_m(k, prec).ok()?);
        if d.is_positive() {
            return Some(Ordering::Greater);
        }
        if d.is_negative() {
            return Some(Ordering::Less);
        }
    }
    None
}

/// Checks `M_n >= N_n` for `from <= n <= horizon` and locates the last
/// crossover in `1..=horizon`.
pub fn dominates(m: &WeightSequence, n: &WeightSequence, from: usize, horizon: usize) -> Result<DominationReport> {
    if from == 0 || horizon < from {
        return Err(Error::Precondition("need 1 <= from <= horizon".into()));
    }
    let tm = m.ln_m_table(horizon, BASE_PREC)?;
    let tn = n.ln_m_table(horizon, BASE_PREC)?;
    let mut witness = None;
    let mut last_below = None;
    let mut undecided = Vec::new();
    for k in 1..=horizon {
        let d = tm[k].sub(&tn[k]);
        let sign = if d.is_positive() {
            Some(Ordering::Greater)
        } else if d.is_negative() {
            Some(Ordering::Less)
        } else {
            cross_sign(m, n, k)
        };
        match sign {
            Some(Ordering::Less) => {
                last_below = Some(k);
                if k >= from && witness.is_none() {
                    witness = Some(k);
                }
            }
            None => undecided.push(k),
            _ => {}
        }
    }
    Ok(DominationReport {
        dominating: m.name(),
        dominated: n.name(),
        from,
        horizon,
        holds: witness.is_none() && undecided.iter().all(|&k| k < from),
        witness,
        crossover: last_below.map(|k| k + 1),
        undecided,
    })
}

/// Convenience constructors used by tests and the CLI.
pub fn gevrey(s: &str) -> Result<WeightKind> {
    Ok(WeightKind::Gevrey { s: s.parse()? })
}

pub fn power_tower(a: &str, b: &str) -> Result<WeightKind> {
    Ok(WeightKind::PowerTower { a: a.parse()?, b: b.parse()? })
}

/// `ln M_n / (n ln n - n)`, which tends to `s` for Gevrey weights.
pub fn gevrey_trend(w: &WeightSequence, n: usize) -> Result<f64> {
    let x = n as f64;
    Ok(w.ln_m_f64(n)? / (x * x.ln() - x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(kind: WeightKind, n: usize) -> WeightSequence {
        make_weight(kind, n, false).unwrap()
    }

    #[test]
    fn gevrey_axioms_and_constant() {
        for s in ["0.5", "1", "2"] {
            let g = w(gevrey(s).unwrap(), 60);
            assert!(g.certificates().all_hold(), "{s}");
            assert!(g.ratio_monotone());
            // C_1 = e^{s/e}
            let want = s.parse::<f64>().unwrap() / std::f64::consts::E;
            assert!((g.ln_c1().to_f64() - want).abs() < 1e-12);
        }
        let one = w(WeightKind::ConstantOne, 50);
        assert!(one.certificates().all_hold());
        assert_eq!(one.ln_m(7, 64).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn gevrey_axiom3_is_factorial_inequality() {
        // n! m! <= (n+m-1)!, checked independently on integers.
        let f = |k: u64| -> BigUint { (1..=k).map(BigUint::from).product() };
        for n in 1..20u64 {
            for m in 1..20u64 {
                assert!(f(n) * f(m) <= f(n + m - 1));
            }
        }
        let g = w(gevrey("1").unwrap(), 40);
        assert!(matches!(g.certificates().axiom3, AxiomStatus::ProvenByFormula { .. }));
    }

    #[test]
    fn power_tower_checked() {
        let p = w(power_tower("1", "1.5").unwrap(), 80);
        assert!(p.certificates().all_hold());
        assert!(matches!(p.certificates().axiom3, AxiomStatus::CheckedTo { n: 80 }));
        // ln M_4 = 4^{1.5} ln 4 = 8 ln 4
        assert!((p.ln_m(4, 64).unwrap().to_f64() - 8.0 * 4f64.ln()).abs() < 1e-12);
        assert!((p.ln_m_f64(4).unwrap() - 8.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_weight(gevrey("0").unwrap(), 10, false).is_err());
        assert!(make_weight(power_tower("1", "2").unwrap(), 10, false).is_err());
        assert!(make_weight(power_tower("1", "1").unwrap(), 10, false).is_err());
    }

    #[test]
    fn custom_violation_has_witness() {
        // M = 1, 1, 3, 1: not log-convex at n = 3
        let values = ["1", "1", "3", "1"].iter().map(|v| v.parse().unwrap()).collect();
        let kind = WeightKind::Custom { values };
        assert!(matches!(make_weight(kind.clone(), 4, false), Err(Error::AxiomViolation(_))));
        let ws = make_weight(kind, 4, true).unwrap();
        assert_eq!(ws.certificates().axiom2, AxiomStatus::FailedAt { n: 3, m: 3 });
        assert!(matches!(ws.ln_m(5, 64), Err(Error::WeightMissing(_))));
        // factorials as a custom table agree with gevrey(1)
        let fac: Vec<Param> = (1..=8u64)
            .map(|k| Param::from_rational(BigRational::from_integer((1..=k).product::<u64>().into())))
            .collect();
        let c = make_weight(WeightKind::Custom { values: fac }, 8, false).unwrap();
        assert!(c.certificates().all_hold());
    }

    #[test]
    fn domination_examples() {
        let g = |s: &str| w(gevrey(s).unwrap(), 10);
        let r = dominates(&g("1.5"), &g("1.2"), 1, 300).unwrap();
        assert!(r.holds && r.crossover.is_none());
        let r = dominates(&g("1"), &g("2"), 1, 50).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(2));
        let pt = w(power_tower("1", "1.5").unwrap(), 10);
        let r = dominates(&pt, &g("5"), 1, 400).unwrap();
        let c = r.crossover.unwrap();
        // independent f64 scan of n^{1.5} ln n - 5 ln n!
        let last = (2..=400usize)
            .filter(|&n| (n as f64).powf(1.5) * (n as f64).ln() < 5.0 * ln_factorial_f64(n as u64))
            .max()
            .unwrap();
        assert_eq!(c, last + 1);
        assert!(dominates(&pt, &g("5"), c, 400).unwrap().holds);
    }

    #[test]
    fn gevrey_trend_at_thousand() {
        let g = w(gevrey("1").unwrap(), 10);
        assert!((gevrey_trend(&g, 1000).unwrap() - 1.0).abs() < 0.05);
    }
}
