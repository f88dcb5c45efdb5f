//! The Brjuno sum, the index function `k(n)` and finite-depth diagnostics for
//! the arithmetical conditions built from `sum ln q_{k+1} / q_k`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::arith::elementary::ln_biguint;
use crate::arith::real::ln_biguint_approx;
use crate::arith::{BigReal, ExpansionEnd, GeneratorRule, IrrationalSpec};
use crate::contfrac::ConvergentTable;
use crate::error::{Error, Result};
use crate::report::{Num, SCHEMA_VERSION};
use crate::weights::{dominates, WeightKind, WeightSequence};

const SUM_PREC: u32 = 128;

/// Largest `n` evaluated by the `n`-indexed diagnostics.
pub const N_CAP: u64 = 1_000_000;

/// Largest `k` with `q_k <= n < q_{k+1}`.
pub fn k_of_n(t: &ConvergentTable, n: &BigUint) -> Result<usize> {
    if n < &BigUint::from(1u32) {
        return Err(Error::Precondition("k(n) needs n >= 1".into()));
    }
    let k = t.q.partition_point(|q| q <= n) - 1;
    if k < t.last() || t.next_q_exceeds(n) {
        Ok(k)
    } else {
        Err(Error::TableTooShort(format!("q_{} = {} <= n = {n}", k, t.q[k])))
    }
}

pub fn k_of_n_u64(t: &ConvergentTable, n: u64) -> Result<usize> {
    k_of_n(t, &BigUint::from(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BrjunoVerdict {
    FiniteCertified,
    DivergentCertified,
    Inconclusive,
}

/// What a generator rule or quotient bound proves about the tail.
#[derive(Clone, Debug, PartialEq)]
enum TailKnowledge {
    /// All partial quotients are at most `A`.
    BoundedQuotients(BigUint),
    /// `ln q_{k+1} <= 3 ln q_k` once `q_k >= 3`.
    Square,
    /// Every term `ln q_{k+1}/q_k` is at least a positive constant.
    TermsBoundedBelow,
    /// `ln q_{k+1} >= q_k ln q_k`.
    QPowQ,
    /// `ln q_{k+1} <= c q_k^beta + ln(1 + 2 q_k)` with `beta <= 1`.
    SubExponential,
    /// `ln q_{k+1} >= alpha q_k^beta` with `beta > 1`.
    SuperExponential,
    Unknown,
}

fn tail_knowledge(spec: &IrrationalSpec) -> TailKnowledge {
    if let Some(a) = spec.quotient_bound() {
        return TailKnowledge::BoundedQuotients(a);
    }
    let one = num_rational::BigRational::from_integer(1.into());
    match spec {
        IrrationalSpec::Rule(GeneratorRule::Square) => TailKnowledge::Square,
        IrrationalSpec::Rule(GeneratorRule::QPowQ) => TailKnowledge::QPowQ,
        IrrationalSpec::Rule(GeneratorRule::ExpQ { .. }) => TailKnowledge::TermsBoundedBelow,
        IrrationalSpec::Rule(GeneratorRule::ExpQPow { beta, .. }) if beta.value() > &one => {
            TailKnowledge::SuperExponential
        }
        IrrationalSpec::Rule(GeneratorRule::ExpQPow { beta, .. }) if beta.value() == &one => {
            TailKnowledge::TermsBoundedBelow
        }
        IrrationalSpec::Rule(GeneratorRule::ExpQPow { .. }) => TailKnowledge::SubExponential,
        _ => TailKnowledge::Unknown,
    }
}

/// `ln q_{k+1} / q_k` as an enclosure; `None` past the table. The flag is
/// set when only a lower bound is available (capped tail).
fn term(t: &ConvergentTable, k: usize, prec: u32) -> Option<(BigReal, bool)> {
    let qk = BigReal::from_biguint(&t.q[k], prec);
    if k < t.last() {
        let l = ln_biguint(&t.q[k + 1], prec);
        return Some((l.div(&qk)?, false));
    }
    let lower = t.tail_ln_q_lower()?;
    let l = BigReal::from_float(lower, prec);
    Some((l.div(&qk)?, true))
}

/// `ln q_{k+1} / q_k` in double precision, robust to huge `q_k`.
fn term_f64(t: &ConvergentTable, k: usize) -> Option<f64> {
    let lnext = if k < t.last() {
        ln_biguint_approx(&t.q[k + 1])
    } else {
        t.tail_ln_q_lower()?.to_f64()
    };
    if lnext <= 0.0 {
        return Some(0.0);
    }
    Some((lnext.ln() - ln_biguint_approx(&t.q[k])).exp())
}

#[derive(Clone, Debug)]
pub struct BrjunoSummary {
    pub omega: String,
    pub depth: usize,
    pub terms: Vec<BigReal>,
    /// `sum_{k <= K} ln q_{k+1} / q_k` for each `K`.
    pub partial_sums: Vec<BigReal>,
    /// The last term (and sum) is only a lower bound.
    pub last_is_lower_bound: bool,
    /// Certified bound on `sum_{k > K} ln q_{k+1} / q_k`.
    pub tail_bound: Option<BigReal>,
    pub verdict: BrjunoVerdict,
}

impl BrjunoSummary {
    /// Enclosure of the full sum when a tail bound is known.
    pub fn value(&self) -> Option<BigReal> {
        let s = self.partial_sums.last()?;
        let tb = self.tail_bound.as_ref()?;
        Some(s.hull(&s.add(tb)))
    }

    pub fn to_json(&self) -> BrjunoJson {
        BrjunoJson {
            schema: SCHEMA_VERSION,
            omega: self.omega.clone(),
            depth: self.depth,
            terms: self.terms.iter().map(Num::certified).collect(),
            partial_sums: self.partial_sums.iter().map(Num::certified).collect(),
            last_is_lower_bound: self.last_is_lower_bound,
            tail_bound: self.tail_bound.as_ref().map(|b| Num::estimate(b.hi().to_f64())),
            value: self.value().as_ref().map(Num::certified),
            verdict: self.verdict,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BrjunoJson {
    pub schema: &'static str,
    pub omega: String,
    pub depth: usize,
    pub terms: Vec<Num>,
    pub partial_sums: Vec<Num>,
    pub last_is_lower_bound: bool,
    pub tail_bound: Option<Num>,
    pub value: Option<Num>,
    pub verdict: BrjunoVerdict,
}

/// Certified tail `sum_{k > K}` from a quotient bound `A` or the square rule.
///
/// With `Q = q_{K+1} >= 3`, the two interleaved chains `q_{K+1+2j}`,
/// `q_{K+2+2j}` at least double every step, so `sum_{k>K} 1/q_k <= 4/Q` and
/// `sum_{k>K} ln q_k / q_k <= 4 ln(2Q)/Q`. Bounded quotients give
/// `ln q_{k+1} <= ln(A+1) + ln q_k`; the square rule gives
/// `ln q_{k+1} <= 3 ln q_k`.
fn tail_bound(t: &ConvergentTable, k: usize, know: &TailKnowledge) -> Option<BigReal> {
    let q1 = t.q.get(k + 1)?;
    if q1 < &BigUint::from(3u32) {
        return None;
    }
    let p = SUM_PREC;
    let l2q = ln_biguint(&(q1 * 2u32), p);
    let num = match know {
        TailKnowledge::BoundedQuotients(a) => ln_biguint(&(a + 1u32), p).add(&l2q).mul_i64(4),
        TailKnowledge::Square => l2q.mul_i64(12),
        _ => return None,
    };
    let b = num.div(&BigReal::from_biguint(q1, p))?;
    Some(BigReal::from_float(b.hi().clone(), p))
}

/// Partial sums `S_0..S_K` with a certified verdict when the generator
/// makes one available.
pub fn brjuno_sum(t: &ConvergentTable, depth: usize) -> Result<BrjunoSummary> {
    let capped = matches!(t.end, Some(ExpansionEnd::Capped { .. }));
    if depth > t.last() && !(capped && depth == t.last()) {
        return Err(Error::TableTooShort(format!(
            "Brjuno sum to K = {depth} needs q_{}; table has {} entries",
            depth + 1,
            t.len()
        )));
    }
    let mut terms = Vec::with_capacity(depth + 1);
    let mut sums = Vec::with_capacity(depth + 1);
    let mut acc = BigReal::zero(SUM_PREC);
    let mut lower = false;
    for k in 0..=depth {
        let (x, lb) = term(t, k, SUM_PREC).ok_or_else(|| Error::TableTooShort(format!("term {k}")))?;
        lower |= lb;
        acc = acc.add(&x);
        terms.push(x);
        sums.push(acc.clone());
    }
    let know = tail_knowledge(t.omega().spec());
    let tail = if lower { None } else { tail_bound(t, depth, &know) };
    let verdict = match know {
        TailKnowledge::BoundedQuotients(_) | TailKnowledge::Square => BrjunoVerdict::FiniteCertified,
        TailKnowledge::TermsBoundedBelow | TailKnowledge::QPowQ | TailKnowledge::SuperExponential => {
            BrjunoVerdict::DivergentCertified
        }
        _ => BrjunoVerdict::Inconclusive,
    };
    Ok(BrjunoSummary {
        omega: t.omega().label(),
        depth,
        terms,
        partial_sums: sums,
        last_is_lower_bound: lower,
        tail_bound: tail,
        verdict,
    })
}

/// Largest `K` for which [`brjuno_sum`] uses exact terms only.
pub fn max_exact_depth(t: &ConvergentTable) -> Option<usize> {
    t.last().checked_sub(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    #[serde(rename = "brjuno")]
    Brjuno,
    #[serde(rename = "BrjunoM")]
    BrjunoM,
    #[serde(rename = "BrjunoMN")]
    BrjunoMN,
    #[serde(rename = "linear-o-condition")]
    LinearO,
    #[serde(rename = "cesaro-condition")]
    Cesaro,
}

impl Condition {
    pub const ALL: [Condition; 5] =
        [Condition::Brjuno, Condition::BrjunoM, Condition::BrjunoMN, Condition::LinearO, Condition::Cesaro];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Brjuno => "brjuno",
            Condition::BrjunoM => "BrjunoM",
            Condition::BrjunoMN => "BrjunoMN",
            Condition::LinearO => "linear-o-condition",
            Condition::Cesaro => "cesaro-condition",
        }
    }

    fn limit_zero(self) -> bool {
        matches!(self, Condition::LinearO | Condition::Cesaro)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Condition> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown condition `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthVerdict {
    BoundedCertified,
    DivergentCertified,
    VanishingCertified,
    ViolatedCertified,
    BoundedAtDepth,
    GrowingAtDepth,
    VanishingAtDepth,
    NotVanishingAtDepth,
    Inconclusive,
}

impl DepthVerdict {
    /// Whether the condition looks satisfied; `None` when undecided.
    pub fn satisfied(self) -> Option<bool> {
        use DepthVerdict::*;
        match self {
            BoundedCertified | VanishingCertified | BoundedAtDepth | VanishingAtDepth => Some(true),
            DivergentCertified | ViolatedCertified | GrowingAtDepth | NotVanishingAtDepth => Some(false),
            Inconclusive => None,
        }
    }

    pub fn is_certified(self) -> bool {
        use DepthVerdict::*;
        matches!(self, BoundedCertified | DivergentCertified | VanishingCertified | ViolatedCertified)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point {
    pub i: u64,
    pub v: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trend {
    /// Supremum over every evaluated index, not only the stored samples.
    pub sup: f64,
    pub last: f64,
    /// Least-squares slope over the second half of the stored samples.
    pub tail_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionDiagnostic {
    pub schema: &'static str,
    pub omega: String,
    pub name: Condition,
    /// `"n"` or `"k"`.
    pub index: &'static str,
    pub weights: Vec<String>,
    /// Largest index evaluated.
    pub evaluated_to: u64,
    pub sequence: Vec<Point>,
    pub trend: Trend,
    pub verdict: DepthVerdict,
}

/// Prefix sums `S_k` in double precision over the exact part of the table.
fn sums_f64(t: &ConvergentTable, upto: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto + 1);
    let mut acc = 0.0;
    for k in 0..=upto {
        acc += term_f64(t, k).unwrap_or(f64::NAN);
        out.push(acc);
    }
    out
}

fn ln_q(t: &ConvergentTable, k: usize) -> f64 {
    ln_biguint_approx(&t.q[k])
}

/// Sampled `n` grid: every `n` up to 2000, then a geometric grid, plus each
/// `q_k` and `q_k - 1` in range.
fn sample_grid(t: &ConvergentTable, lo: u64, hi: u64) -> Vec<u64> {
    let mut g: Vec<u64> = (lo..=hi.min(2000)).collect();
    let mut x = 2000.0f64;
    while x < hi as f64 {
        x *= 1.01;
        g.push((x as u64).min(hi));
    }
    for q in &t.q {
        if let Some(q) = q.to_u64() {
            for c in [q.saturating_sub(1), q] {
                if c >= lo && c <= hi {
                    g.push(c);
                }
            }
        }
    }
    g.sort_unstable();
    g.dedup();
    g
}

/// Evaluates `f(n, k(n))` for `lo <= n <= hi`, returning the sampled
/// points and the supremum over all `n`.
fn scan_n(t: &ConvergentTable, lo: u64, hi: u64, mut f: impl FnMut(u64, usize) -> Result<f64>) -> Result<(Vec<Point>, f64)> {
    let grid = sample_grid(t, lo, hi);
    let mut pts = Vec::with_capacity(grid.len());
    let mut sup = f64::NEG_INFINITY;
    let mut gi = 0;
    let mut k = 0usize;
    for n in lo..=hi {
        while k + 1 < t.len() && t.q[k + 1].to_u64().is_some_and(|q| q <= n) {
            k += 1;
        }
        let v = f(n, k)?;
        sup = sup.max(v);
        if gi < grid.len() && grid[gi] == n {
            pts.push(Point { i: n, v });
            gi += 1;
        }
    }
    Ok((pts, sup))
}

/// Upper end of the `n` range usable at depth `d`: `k(n) < d` keeps every
/// sum exact.
fn n_range_end(t: &ConvergentTable, depth: usize) -> u64 {
    let d = depth.min(t.last());
    t.q[d].to_u64().map_or(N_CAP, |q| q.saturating_sub(1).min(N_CAP))
}

fn slope(pts: &[Point]) -> f64 {
    let tail = &pts[pts.len() / 2..];
    if tail.len() < 2 {
        return 0.0;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.i as f64).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.v).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|p| (p.i as f64 - mx) * (p.v - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.i as f64 - mx).powi(2)).sum();
    if sxx == 0.0 { 0.0 } else { sxy / sxx }
}

/// Finite-depth reading of a `limsup < inf` condition.
pub(crate) fn classify_bounded(v: &[f64]) -> DepthVerdict {
    if v.len() < 4 {
        return DepthVerdict::Inconclusive;
    }
    let h = v.len() / 2;
    let a = v[..h].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let b = v[h..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if b <= a + 0.05 * a.abs().max(1.0) {
        DepthVerdict::BoundedAtDepth
    } else {
        DepthVerdict::GrowingAtDepth
    }
}

/// Finite-depth reading of a `lim = 0` condition.
fn classify_vanishing(v: &[f64]) -> DepthVerdict {
    if v.len() < 4 {
        return DepthVerdict::Inconclusive;
    }
    let third = v.len() / 3;
    let first = v[..third.max(1)].iter().map(|x| x.abs()).fold(0.0, f64::max);
    let last = v[v.len() - third.max(1)..].iter().map(|x| x.abs()).fold(0.0, f64::max);
    if last <= 0.5 * first || last < 1e-3 {
        DepthVerdict::VanishingAtDepth
    } else if last >= 0.8 * first {
        DepthVerdict::NotVanishingAtDepth
    } else {
        DepthVerdict::Inconclusive
    }
}

/// Verdicts a generator rule proves outright.
fn certified(cond: Condition, know: &TailKnowledge) -> Option<DepthVerdict> {
    use DepthVerdict::*;
    use TailKnowledge::*;
    match (cond, know) {
        (Condition::Brjuno, BoundedQuotients(_) | Square) => Some(BoundedCertified),
        (Condition::Brjuno, TermsBoundedBelow | QPowQ | SuperExponential) => Some(DivergentCertified),
        // ln q_{k+1} = O(q_k) in all of these, and ln q_k grows without bound.
        (Condition::LinearO | Condition::Cesaro, BoundedQuotients(_) | Square | TermsBoundedBelow | SubExponential) => {
            Some(VanishingCertified)
        }
        // ln q_{k+1} / (q_k ln q_k) >= 1, resp. -> infinity; the Cesaro mean
        // dominates its last term.
        (Condition::LinearO | Condition::Cesaro, QPowQ | SuperExponential) => Some(ViolatedCertified),
        _ => None,
    }
}

/// Emits the defining sequence of `which` and a finite-depth verdict.
///
/// `weights` is `M` for BrjunoM and `(M, N)` for BrjunoMN.
pub fn condition_diagnostic(
    t: &ConvergentTable,
    which: Condition,
    weights: Option<(&WeightSequence, Option<&WeightSequence>)>,
    depth: usize,
) -> Result<ConditionDiagnostic> {
    if t.len() < 2 {
        return Err(Error::TableTooShort("need at least q_0, q_1".into()));
    }
    let d = depth.min(t.last());
    let know = tail_knowledge(t.omega().spec());
    let s = sums_f64(t, d.saturating_sub(1));
    let mut names = Vec::new();
    let (index, pts, sup, evaluated_to) = match which {
        Condition::Brjuno | Condition::LinearO | Condition::Cesaro => {
            let mut pts = Vec::new();
            for k in 0..d {
                let v = match which {
                    Condition::Brjuno => s[k],
                    Condition::LinearO => {
                        let lq = ln_q(t, k);
                        if lq <= 0.0 {
                            continue;
                        }
                        term_f64(t, k).unwrap_or(f64::NAN) / lq
                    }
                    _ => {
                        let lq = ln_q(t, k);
                        if lq <= 0.0 {
                            continue;
                        }
                        s[k] / lq
                    }
                };
                pts.push(Point { i: k as u64, v });
            }
            if pts.is_empty() {
                return Err(Error::TableTooShort(format!("no usable index below depth {d}")));
            }
            let sup = pts.iter().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max);
            ("k", pts, sup, d.saturating_sub(1) as u64)
        }
        Condition::BrjunoM | Condition::BrjunoMN => {
            let (m, nn) = match (which, weights) {
                (Condition::BrjunoM, Some((m, _))) => (m, None),
                (Condition::BrjunoMN, Some((m, Some(nn)))) => (m, Some(nn)),
                _ => return Err(Error::WeightMissing(format!("{which} needs its weight sequence(s)"))),
            };
            names.push(m.name());
            let mut hi = n_range_end(t, d);
            for w in std::iter::once(m).chain(nn) {
                if let Some(h) = w.horizon() {
                    hi = hi.min(h as u64);
                }
            }
            if let Some(nn) = nn {
                names.push(nn.name());
                let r = dominates(m, nn, 1, hi.clamp(1, 2000) as usize)?;
                if r.crossover.is_some_and(|c| c as u64 > hi.clamp(1, 2000)) {
                    return Err(Error::Precondition(format!(
                        "{} does not dominate {} within the checked range",
                        m.name(),
                        nn.name()
                    )));
                }
            }
            if hi < 1 {
                return Err(Error::TableTooShort("empty n range".into()));
            }
            let (pts, sup) = scan_n(t, 1, hi, |n, k| {
                let mut lw = m.ln_m_f64(n as usize)?;
                if let Some(nn) = nn {
                    lw -= nn.ln_m_f64(n as usize)?;
                }
                Ok(s[k] - lw / n as f64)
            })?;
            ("n", pts, sup, hi)
        }
    };
    let values: Vec<f64> = pts.iter().map(|p| p.v).collect();
    let verdict = match which {
        Condition::BrjunoM | Condition::BrjunoMN => {
            // A convergent Brjuno sum bounds the first part; the weight
            // part is bounded above once M dominates N structurally.
            let structural = match (which, weights) {
                (Condition::BrjunoM, Some((m, _))) => m.certificates().axiom0.holds(),
                (Condition::BrjunoMN, Some((m, Some(nn)))) => structurally_dominates(m, nn),
                _ => false,
            };
            if structural && certified(Condition::Brjuno, &know) == Some(DepthVerdict::BoundedCertified) {
                DepthVerdict::BoundedCertified
            } else {
                classify_bounded(&values)
            }
        }
        c => certified(c, &know).unwrap_or_else(|| {
            if c.limit_zero() { classify_vanishing(&values) } else { classify_bounded(&values) }
        }),
    };
    Ok(ConditionDiagnostic {
        schema: SCHEMA_VERSION,
        omega: t.omega().label(),
        name: which,
        index,
        weights: names,
        evaluated_to,
        trend: Trend { sup, last: *values.last().unwrap(), tail_slope: slope(&pts) },
        sequence: pts,
        verdict,
    })
}

fn structurally_dominates(m: &WeightSequence, n: &WeightSequence) -> bool {
    match (m.kind(), n.kind()) {
        (_, WeightKind::ConstantOne) => m.certificates().axiom0.holds() && !matches!(m.kind(), WeightKind::Custom { .. }),
        (WeightKind::Gevrey { s }, WeightKind::Gevrey { s: t }) => s.value() >= t.value(),
        _ => false,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalencyItem {
    pub item: u8,
    pub index: &'static str,
    pub sequence: Vec<Point>,
    pub verdict: DepthVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalencyReport {
    pub schema: &'static str,
    pub omega: String,
    pub depth: usize,
    pub items: Vec<EquivalencyItem>,
    /// Item 1 evaluated at `n = q_k` equals item 2 at `k`.
    pub mechanical_1_to_2: bool,
    /// `"consistent"` when all three verdicts agree, `"inconclusive"`
    /// otherwise.
    pub status: &'static str,
}

/// Computes the three equivalent sequences on one table and compares their
/// finite-depth verdicts.
pub fn equivalency_consistency(t: &ConvergentTable, depth: usize) -> Result<EquivalencyReport> {
    if depth < 6 {
        return Err(Error::Precondition("equivalency check needs depth >= 6".into()));
    }
    let capped = matches!(t.end, Some(ExpansionEnd::Capped { .. }));
    if t.len() < depth && !capped {
        return Err(Error::TableTooShort(format!("need {depth} quotients, have {}", t.len())));
    }
    let d = depth.min(t.last());
    let know = tail_knowledge(t.omega().spec());
    let s = sums_f64(t, d.saturating_sub(1));

    let hi = n_range_end(t, d);
    let (item1, _) = if hi >= 2 {
        scan_n(t, 2, hi, |n, k| Ok(s[k] / (n as f64).ln()))?
    } else {
        (Vec::new(), 0.0)
    };
    let mut item2 = Vec::new();
    let mut item3 = Vec::new();
    for k in 0..d {
        let lq = ln_q(t, k);
        if lq <= 0.0 {
            continue;
        }
        item2.push(Point { i: k as u64, v: s[k] / lq });
        item3.push(Point { i: k as u64, v: term_f64(t, k).unwrap_or(f64::NAN) / lq });
    }
    // item1 <= item2 on each block [q_k, q_{k+1}) with equality at q_k, so
    // the Cesaro certificate transfers.
    let c2 = certified(Condition::Cesaro, &know);
    let c3 = certified(Condition::LinearO, &know);
    let v = |p: &[Point]| p.iter().map(|x| x.v).collect::<Vec<_>>();
    let verdicts = [
        c2.unwrap_or_else(|| classify_vanishing(&v(&item1))),
        c2.unwrap_or_else(|| classify_vanishing(&v(&item2))),
        c3.unwrap_or_else(|| classify_vanishing(&v(&item3))),
    ];

    let mut mechanical = true;
    for p in &item2 {
        let q = t.q[p.i as usize].to_u64();
        if let Some(q) = q.filter(|&q| q >= 2 && q <= hi) {
            match item1.iter().find(|x| x.i == q) {
                Some(x) => mechanical &= (x.v - p.v).abs() <= 1e-12 * p.v.abs().max(1.0),
                None => mechanical = false,
            }
        }
    }

    let sat: Vec<_> = verdicts.iter().map(|v| v.satisfied()).collect();
    let consistent = sat.iter().all(|x| x.is_some()) && sat.windows(2).all(|w| w[0] == w[1]);
    let items = [item1, item2, item3]
        .into_iter()
        .zip(verdicts)
        .enumerate()
        .map(|(i, (sequence, verdict))| EquivalencyItem {
            item: i as u8 + 1,
            index: if i == 0 { "n" } else { "k" },
            sequence,
            verdict,
        })
        .collect();
    Ok(EquivalencyReport {
        schema: SCHEMA_VERSION,
        omega: t.omega().label(),
        depth: d,
        items,
        mechanical_1_to_2: mechanical,
        status: if consistent { "consistent" } else { "inconclusive" },
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::arith::Omega;
    use crate::contfrac::gauss_expand;
    use crate::weights::{gevrey, make_weight};

    fn table(spec: IrrationalSpec, depth: usize) -> ConvergentTable {
        gauss_expand(Arc::new(Omega::new(spec).unwrap()), depth).unwrap()
    }

    fn golden(depth: usize) -> ConvergentTable {
        table(IrrationalSpec::Golden, depth)
    }

    fn expq(sigma: &str) -> ConvergentTable {
        table(IrrationalSpec::Rule(GeneratorRule::ExpQ { sigma: sigma.parse().unwrap() }), 30)
    }

    #[test]
    fn k_of_n_examples() {
        let t = golden(30);
        assert_eq!(k_of_n_u64(&t, 1).unwrap(), 1);
        assert_eq!(k_of_n_u64(&t, 4).unwrap(), 3);
        for j in 1..t.last() {
            let q = t.q[j].to_u64().unwrap();
            assert_eq!(k_of_n_u64(&t, q).unwrap(), j);
        }
        let last = t.q[t.last()].to_u64().unwrap();
        assert!(matches!(k_of_n_u64(&t, last), Err(Error::TableTooShort(_))));
        // capped tail: q_4 is not materialised but certainly huge
        let e = expq("1");
        assert_eq!(k_of_n_u64(&e, 4_000_000_000).unwrap(), e.last());
    }

    #[test]
    fn golden_sum_matches_fibonacci_oracle() {
        // independent summation over Fibonacci numbers in f64
        let (mut a, mut b) = (1f64, 1f64);
        let mut oracle = 0.0;
        for _ in 0..90 {
            oracle += b.ln() / a;
            (a, b) = (b, a + b);
        }
        let t = golden(40);
        let s = brjuno_sum(&t, 38).unwrap();
        assert_eq!(s.verdict, BrjunoVerdict::FiniteCertified);
        let v = s.value().unwrap();
        assert!(v.lo().to_f64() <= oracle + 1e-9 && oracle <= v.hi().to_f64() + 1e-9);
        assert!((oracle - 3.2861).abs() < 1e-3, "{oracle}");
        for w in s.partial_sums.windows(2) {
            assert!(w[0].le(&w[1]) || w[0].intersects(&w[1]));
        }
    }

    #[test]
    fn tail_bound_exceeds_extended_remainder() {
        for spec in [IrrationalSpec::Golden, IrrationalSpec::Surd(2), IrrationalSpec::Surd(7)] {
            let long = table(spec.clone(), 60);
            for k in [3usize, 8, 15] {
                let s = brjuno_sum(&long, k).unwrap();
                let rest = brjuno_sum(&long, 58).unwrap();
                let rem = rest.partial_sums[58].sub(&s.partial_sums[k]);
                assert!(rem.hi().to_f64() <= s.tail_bound.as_ref().unwrap().lo().to_f64(), "{spec} {k}");
            }
        }
    }

    #[test]
    fn divergent_rules() {
        let e = expq("1");
        let s = brjuno_sum(&e, e.last()).unwrap();
        assert_eq!(s.verdict, BrjunoVerdict::DivergentCertified);
        assert!(s.last_is_lower_bound && s.tail_bound.is_none());
        // each term is at least sigma
        for x in &s.terms[1..] {
            assert!(x.lo().to_f64() >= 0.99);
        }
        let sq = table(IrrationalSpec::Rule(GeneratorRule::Square), 30);
        let s = brjuno_sum(&sq, sq.last() - 1).unwrap();
        assert_eq!(s.verdict, BrjunoVerdict::FiniteCertified);
        assert!(s.tail_bound.is_some());
        assert!(matches!(brjuno_sum(&golden(10), 10), Err(Error::TableTooShort(_))));
    }

    #[test]
    fn brjuno_m_golden_bounded() {
        let t = golden(30);
        let m = make_weight(gevrey("1").unwrap(), 20, false).unwrap();
        let d = condition_diagnostic(&t, Condition::BrjunoM, Some((&m, None)), 20).unwrap();
        assert_eq!(d.index, "n");
        assert_eq!(d.verdict, DepthVerdict::BoundedCertified);
        assert!(d.trend.sup < 3.3);
        // sequence is exactly S_{k(n)} - ln(n!)/n
        let p = d.sequence.iter().find(|p| p.i == 4).unwrap();
        let s3 = 0.0 + 2f64.ln() + 3f64.ln() / 2.0 + 5f64.ln() / 3.0;
        assert!((p.v - (s3 - 24f64.ln() / 4.0)).abs() < 1e-12);
        assert!(matches!(
            condition_diagnostic(&t, Condition::BrjunoM, None, 20),
            Err(Error::WeightMissing(_))
        ));
    }

    #[test]
    fn expq_conditions() {
        let t = expq("1");
        let m = make_weight(gevrey("1").unwrap(), 20, false).unwrap();
        let d = condition_diagnostic(&t, Condition::BrjunoM, Some((&m, None)), 30).unwrap();
        assert_eq!(d.verdict, DepthVerdict::BoundedAtDepth);
        let b = condition_diagnostic(&t, Condition::Brjuno, None, 30).unwrap();
        assert_eq!(b.verdict, DepthVerdict::DivergentCertified);
        let n = make_weight(gevrey("0.5").unwrap(), 20, false).unwrap();
        let d = condition_diagnostic(&t, Condition::BrjunoMN, Some((&m, Some(&n))), 30).unwrap();
        assert_eq!(d.weights.len(), 2);
        assert!(d.verdict.satisfied().unwrap());
        assert!(condition_diagnostic(&t, Condition::BrjunoMN, Some((&n, Some(&m))), 30).is_err());
    }

    #[test]
    fn equivalency_examples() {
        let r = equivalency_consistency(&golden(30), 30).unwrap();
        assert_eq!(r.status, "consistent");
        assert!(r.mechanical_1_to_2);
        assert!(r.items.iter().all(|i| i.verdict.satisfied() == Some(true)));

        let q = table(IrrationalSpec::Rule(GeneratorRule::QPowQ), 30);
        let r = equivalency_consistency(&q, 30).unwrap();
        assert_eq!(r.status, "consistent");
        assert!(r.items.iter().all(|i| i.verdict.satisfied() == Some(false)));
        // ln q_{k+1} / (q_k ln q_k) >= 1 on the materialised part
        assert!(r.items[2].sequence.iter().all(|p| p.v >= 1.0 - 1e-12));

        let beta = IrrationalSpec::Rule(GeneratorRule::ExpQPow {
            alpha: "1".parse().unwrap(),
            beta: "0.7".parse().unwrap(),
        });
        let r = equivalency_consistency(&table(beta, 30), 30).unwrap();
        assert_eq!(r.status, "consistent");
        assert!(r.mechanical_1_to_2);

        assert!(matches!(equivalency_consistency(&golden(30), 5), Err(Error::Precondition(_))));
        assert!(matches!(equivalency_consistency(&golden(8), 10), Err(Error::TableTooShort(_))));
    }

    #[test]
    fn condition_names_roundtrip() {
        for c in Condition::ALL {
            assert_eq!(c.name().parse::<Condition>().unwrap(), c);
            let j = serde_json::to_string(&c).unwrap();
            assert_eq!(j, format!("\"{}\"", c.name()));
        }
    }
}
