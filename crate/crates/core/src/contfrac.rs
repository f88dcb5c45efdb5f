//! Convergent tables and the classical approximation lemmas.

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::elementary::ln_biguint;
use crate::arith::real::ln_biguint_approx;
use crate::arith::{BigReal, ExpansionEnd, Float, Omega, Precision};
use crate::error::{Error, Result};
use crate::report::{Num, SCHEMA_VERSION};

/// Default table depth.
pub const DEFAULT_DEPTH: usize = 30;

/// Extra bits kept in the certified errors `|q_k omega - p_k|`.
const ERR_BITS: u32 = 160;

#[derive(Clone, Debug)]
pub struct ConvergentTable {
    omega: Arc<Omega>,
    pub a: Vec<BigUint>,
    pub p: Vec<BigUint>,
    pub q: Vec<BigUint>,
    /// Certified enclosures of `|q_k omega - p_k|`.
    pub err: Vec<BigReal>,
    /// Present when the expansion could not reach the requested depth.
    pub end: Option<ExpansionEnd>,
}

impl ConvergentTable {
    pub fn omega(&self) -> &Arc<Omega> {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn last(&self) -> usize {
        self.a.len() - 1
    }

    /// Certified lower bound on `ln q_{K+1}` when the table stops at a capped
    /// quotient.
    pub fn tail_ln_q_lower(&self) -> Option<Float> {
        match &self.end {
            Some(ExpansionEnd::Capped { ln_a_lower }) => {
                // q_{K+1} >= a_{K+1} q_K
                let lq = ln_biguint(&self.q[self.last()], 64);
                Some(lq.lo().add(ln_a_lower, 64, crate::arith::Round::Down))
            }
            _ => None,
        }
    }

    /// Whether `q_{K+1}` is certainly larger than `n`, even when it is not
    /// materialised.
    pub fn next_q_exceeds(&self, n: &BigUint) -> bool {
        match self.tail_ln_q_lower() {
            Some(l) => l.to_f64() > ln_biguint_approx(n) + 1.0,
            None => false,
        }
    }

    pub fn to_json(&self) -> TableJson {
        TableJson {
            schema: SCHEMA_VERSION,
            omega: self.omega.label(),
            depth: self.len(),
            a: self.a.iter().map(|x| x.to_string()).collect(),
            p: self.p.iter().map(|x| x.to_string()).collect(),
            q: self.q.iter().map(|x| x.to_string()).collect(),
            err: self.err.iter().map(Num::certified).collect(),
            tail: self.end.as_ref().map(|e| match e {
                ExpansionEnd::Capped { ln_a_lower } => TailJson::Capped {
                    ln_next_quotient_lower: Num::estimate(ln_a_lower.to_f64()),
                },
                ExpansionEnd::Terminated => TailJson::Terminated,
                ExpansionEnd::Exhausted => TailJson::Exhausted,
            }),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailJson {
    Capped { ln_next_quotient_lower: Num },
    Terminated,
    Exhausted,
}

#[derive(Debug, Serialize)]
pub struct TableJson {
    pub schema: &'static str,
    pub omega: String,
    pub depth: usize,
    pub a: Vec<String>,
    pub p: Vec<String>,
    pub q: Vec<String>,
    pub err: Vec<Num>,
    pub tail: Option<TailJson>,
}

/// Expands `omega` to `depth` partial quotients `a_0..a_{depth-1}`.
///
/// Rule generators that hit the materialisation cap return a shorter table
/// whose `end` records a certified bound on the next quotient.
pub fn gauss_expand(omega: Arc<Omega>, depth: usize) -> Result<ConvergentTable> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let pre = omega.prefix(depth)?;
    if pre.a.len() < depth {
        match &pre.end {
            Some(ExpansionEnd::Terminated) => {
                return Err(Error::RationalInput(format!(
                    "{} has a terminating expansion",
                    omega.label()
                )))
            }
            Some(ExpansionEnd::Exhausted) => {
                return Err(Error::PrecisionExhausted(format!(
                    "{} determines only {} partial quotients",
                    omega.label(),
                    pre.a.len()
                )))
            }
            _ => {}
        }
    }
    build_table(omega, pre.a, pre.p, pre.q, pre.end)
}

/// Shortest table whose last denominator exceeds `n`, plus one more entry,
/// so that `k(n) + 1 < len` for every index up to `n`.
pub fn table_covering(omega: Arc<Omega>, n: u64) -> Result<ConvergentTable> {
    let bound = BigUint::from(n);
    omega.extend_until_q_exceeds(&bound)?;
    let mut len = 2;
    loop {
        let pre = omega.prefix(len)?;
        let done = pre.q.last().is_some_and(|q| *q > bound);
        if done || pre.q.len() < len {
            return gauss_expand(omega, (pre.q.len() + 1).min(len + 1));
        }
        len += 1;
    }
}

/// Expands to [`DEFAULT_DEPTH`] quotients or until `q_k > 10^300`.
pub fn gauss_expand_default(omega: Arc<Omega>) -> Result<ConvergentTable> {
    let bound = BigUint::from(10u32).pow(300);
    omega.extend_until_q_exceeds(&bound)?;
    let pre = omega.prefix(DEFAULT_DEPTH)?;
    let cut = pre
        .q
        .iter()
        .position(|q| *q > bound)
        .map(|i| i + 1)
        .unwrap_or(pre.q.len());
    gauss_expand(omega, cut.max(1))
}

/// Enclosure of omega fine enough to resolve `q_k omega - p_k` for every
/// index of a table whose last denominator is `q_last`, given the next one
/// when it exists.
fn table_enclosure(omega: &Omega, q_prev: &BigUint, q_last: &BigUint, q_next: Option<&BigUint>) -> Result<BigReal> {
    let top = q_next.unwrap_or(q_last);
    let low = if q_next.is_some() { q_last } else { q_prev };
    let bits = (top.bits() + low.bits()) as u32 + ERR_BITS;
    omega.enclosure_best_effort(bits)
}

fn signed_errors(omega: &Omega, p: &[BigUint], q: &[BigUint]) -> Result<Vec<BigReal>> {
    let k = q.len() - 1;
    let next = omega.prefix(q.len() + 1)?;
    let q_next = next.q.get(q.len());
    let q_prev = if k >= 1 { &q[k - 1] } else { &q[k] };
    let w = table_enclosure(omega, q_prev, &q[k], q_next)?;
    let wp = w.prec();
    Ok((0..q.len())
        .map(|i| {
            w.mul(&BigReal::from_biguint(&q[i], wp))
                .sub(&BigReal::from_biguint(&p[i], wp))
        })
        .collect())
}

fn build_table(
    omega: Arc<Omega>,
    a: Vec<BigUint>,
    p: Vec<BigUint>,
    q: Vec<BigUint>,
    end: Option<ExpansionEnd>,
) -> Result<ConvergentTable> {
    let err = signed_errors(&omega, &p, &q)?.iter().map(|e| e.abs()).collect();
    // Keep `end` only when the table really stops there.
    let total = omega.extend_to(a.len())?;
    let end = if total > a.len() { None } else { end };
    Ok(ConvergentTable {
        omega,
        a,
        p,
        q,
        err,
        end,
    })
}

/// Results of the structural checks every table must pass.
#[derive(Clone, Debug, Serialize)]
pub struct TableInvariants {
    pub recurrence: bool,
    pub lowest_terms: bool,
    pub growth: bool,
    pub reciprocal_sum: Num,
    pub reciprocal_sum_bounded: bool,
    /// One entry per index with a successor in the table.
    pub sandwich: Vec<SandwichEntry>,
    pub alternation: bool,
}

impl TableInvariants {
    pub fn all_hold(&self) -> bool {
        self.recurrence
            && self.lowest_terms
            && self.growth
            && self.reciprocal_sum_bounded
            && self.alternation
            && self.sandwich.iter().all(|s| s.status != Decision::Violated)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Holds,
    Violated,
    /// The margin is below the resolution of the precision cap.
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichEntry {
    pub n: usize,
    pub status: Decision,
}

/// Largest enclosure precision tried by the sandwich check.
const SANDWICH_CAP_BITS: u32 = 1 << 16;

fn sandwich_at(t: &ConvergentTable, n: usize) -> Result<Decision> {
    let sp = (t.q[n].bits() + t.q[n + 1].bits()) as u32 + 64;
    let lower = BigReal::from_biguint(&(&t.q[n] + &t.q[n + 1]), sp).recip().expect("positive");
    let upper = BigReal::from_biguint(&t.q[n + 1], sp).recip().expect("positive");
    let decide = |e: &BigReal| -> Option<Decision> {
        let lo_ok = lower.certain_cmp(e).map(|o| o != Ordering::Greater);
        let hi_ok = e.certain_cmp(&upper).map(|o| o == Ordering::Less);
        match (lo_ok, hi_ok) {
            (Some(false), _) | (_, Some(false)) => Some(Decision::Violated),
            (Some(true), Some(true)) => Some(Decision::Holds),
            _ => None,
        }
    };
    if let Some(d) = decide(&t.err[n]) {
        return Ok(d);
    }
    let mut bits = 2 * t.err[n].prec().max(sp);
    while bits <= SANDWICH_CAP_BITS {
        let w = match t.omega.enclosure(bits) {
            Ok(w) => w,
            Err(Error::PrecisionExhausted(_)) => break,
            Err(e) => return Err(e),
        };
        let wp = w.prec();
        let e = w
            .mul(&BigReal::from_biguint(&t.q[n], wp))
            .sub(&BigReal::from_biguint(&t.p[n], wp))
            .abs();
        if let Some(d) = decide(&e) {
            return Ok(d);
        }
        bits *= 2;
    }
    Ok(Decision::Undecided)
}

fn golden_ratio(prec: u32) -> BigReal {
    BigReal::from_i64(5, prec)
        .sqrt()
        .expect("positive")
        .add(&BigReal::one(prec))
        .mul_2exp(-1)
}

/// Checks the recurrences, lowest terms, `q_n >= G^(n-1)`, the bound on
/// `sum 1/q_k`, the sandwich `1/(q_n + q_{n+1}) <= |q_n w - p_n| < 1/q_{n+1}`
/// and the alternation of `q_n w - p_n`.
pub fn table_invariants(t: &ConvergentTable) -> Result<TableInvariants> {
    let prec = 128;
    let mut recurrence = true;
    let mut lowest_terms = true;
    for n in 0..t.len() {
        let (p2, p1) = if n >= 2 {
            (t.p[n - 2].clone(), t.p[n - 1].clone())
        } else if n == 1 {
            (BigUint::one(), t.p[0].clone())
        } else {
            (BigUint::zero(), BigUint::one())
        };
        let (q2, q1) = if n >= 2 {
            (t.q[n - 2].clone(), t.q[n - 1].clone())
        } else if n == 1 {
            (BigUint::zero(), t.q[0].clone())
        } else {
            (BigUint::one(), BigUint::zero())
        };
        recurrence &= t.p[n] == &t.a[n] * p1 + p2;
        recurrence &= t.q[n] == &t.a[n] * q1 + q2;
        lowest_terms &= t.p[n].gcd(&t.q[n]).is_one();
    }
    let g = golden_ratio(prec);
    let mut gp = BigReal::one(prec);
    let mut growth = true;
    for n in 1..t.len() {
        growth &= gp.le(&BigReal::from_biguint(&t.q[n], prec));
        gp = gp.mul(&g);
    }
    let sum = t
        .q
        .iter()
        .fold(BigReal::zero(prec), |acc, q| acc.add(&BigReal::from_biguint(q, prec).recip().expect("q >= 1")));
    let bound = BigReal::from_i64(5, prec).sqrt().expect("positive").add(&BigReal::from_i64(5, prec)).mul_2exp(-1);
    let reciprocal_sum_bounded = sum.le(&bound);
    let mut sandwich = Vec::new();
    for n in 1..t.len().saturating_sub(1) {
        sandwich.push(SandwichEntry {
            n,
            status: sandwich_at(t, n)?,
        });
    }
    // sign(q_n w - p_n) = (-1)^n. A capped or decimal tail may leave the
    // last signs unresolved; those are skipped, not counted as failures.
    let loose_tail = t.end.is_some() || t.omega.spec().is_decimal();
    let mut alternation = true;
    for (n, v) in signed_errors(&t.omega, &t.p, &t.q)?.iter().enumerate() {
        if v.contains_zero() && loose_tail {
            continue;
        }
        let want_pos = n % 2 == 0;
        alternation &= if want_pos { v.is_positive() } else { v.is_negative() };
    }
    Ok(TableInvariants {
        recurrence,
        lowest_terms,
        growth,
        reciprocal_sum: Num::certified(&sum),
        reciprocal_sum_bounded,
        sandwich,
        alternation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BestApproxReport {
    pub n: usize,
    pub q_n: String,
    pub checked: u64,
    pub vacuous: bool,
    pub holds: bool,
    /// First `(p, q)` with `|q w - p| <= |q_n w - p_n|`.
    pub counterexample: Option<(String, u64)>,
}

/// Exhaustive check of the best approximation property at index `n`.
pub fn best_approximation_check(t: &ConvergentTable, n: usize, brute_limit: u64) -> Result<BestApproxReport> {
    if n >= t.len() {
        return Err(Error::TableTooShort(format!("index {n} beyond table of length {}", t.len())));
    }
    let qn = t.q[n]
        .to_u64()
        .filter(|&v| v <= brute_limit)
        .ok_or_else(|| Error::BudgetExceeded(format!("q_{n} = {} exceeds brute-force limit {brute_limit}", t.q[n])))?;
    let mut report = BestApproxReport {
        n,
        q_n: t.q[n].to_string(),
        checked: 0,
        vacuous: false,
        holds: true,
        counterexample: None,
    };
    if n == 0 {
        report.vacuous = true;
        return Ok(report);
    }
    let pn = BigInt::from(t.p[n].clone());
    let base = 2 * t.q[n].bits() as u32 + 64;
    'ladder: for bits in Precision::new(base, base.max(8192)).ladder() {
        let w = t.omega.enclosure(bits)?;
        let wp = w.prec();
        let target = w.mul(&BigReal::from_biguint(&t.q[n], wp)).sub(&BigReal::from_bigint(&pn, wp)).abs();
        let mut checked = 0;
        for q in 1..=qn {
            let x = w.mul(&BigReal::from_i64(q as i64, wp));
            let p = x
                .mid()
                .add(&Float::from_f64(0.5).expect("finite"), 64, crate::arith::Round::Down)
                .floor();
            if q == qn && p == pn {
                continue;
            }
            checked += 1;
            let d = x.sub(&BigReal::from_bigint(&p, wp)).abs();
            match d.certain_cmp(&target) {
                Some(Ordering::Greater) => {}
                Some(_) => {
                    report.holds = false;
                    report.counterexample = Some((p.to_string(), q));
                    report.checked = checked;
                    return Ok(report);
                }
                None => continue 'ladder,
            }
        }
        report.checked = checked;
        return Ok(report);
    }
    Err(Error::PrecisionExhausted(format!("best approximation at n={n} undecided")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LegendreOutcome {
    /// Hypothesis holds and `r/s = p_k/q_k`.
    Convergent { k: usize },
    /// Hypothesis holds but `r/s` is not in the table: a violation.
    NotConvergent,
    /// `|w - r/s| > 1/(2 s^2)`.
    HypothesisUnmet,
}

impl LegendreOutcome {
    /// The check passes unless the hypothesis holds without a match.
    pub fn passes(&self) -> bool {
        !matches!(self, LegendreOutcome::NotConvergent)
    }
}

/// If `|w - r/s| <= 1/(2 s^2)`, checks that `r/s` is a convergent.
pub fn legendre_convergent_check(t: &ConvergentTable, r: &BigInt, s: &BigUint) -> Result<LegendreOutcome> {
    if s.is_zero() {
        return Err(Error::Precondition("s must be positive".into()));
    }
    if !r.gcd(&BigInt::from(s.clone())).is_one() {
        return Err(Error::Precondition(format!("gcd({r}, {s}) != 1")));
    }
    if t.q[t.last()] < *s {
        return Err(Error::TableTooShort(format!("q_K = {} < s = {s}", t.q[t.last()])));
    }
    let base = 2 * s.bits() as u32 + 64;
    for bits in Precision::new(base, base.max(8192)).ladder() {
        let w = t.omega.enclosure(bits)?;
        let wp = w.prec();
        // |s w - r| vs 1/(2s)
        let lhs = w.mul(&BigReal::from_biguint(s, wp)).sub(&BigReal::from_bigint(r, wp)).abs();
        let rhs = BigReal::from_biguint(s, wp).mul_2exp(1).recip().expect("positive");
        match lhs.certain_cmp(&rhs) {
            Some(Ordering::Greater) => return Ok(LegendreOutcome::HypothesisUnmet),
            Some(_) => {
                let hit = (0..t.len()).find(|&k| t.q[k] == *s && BigInt::from(t.p[k].clone()) == *r);
                return Ok(match hit {
                    Some(k) => LegendreOutcome::Convergent { k },
                    None => LegendreOutcome::NotConvergent,
                });
            }
            None => continue,
        }
    }
    Err(Error::PrecisionExhausted("Legendre hypothesis undecided".into()))
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GrowthVerdict {
    DiophantineLeaning,
    LiouvilleLeaning,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiophantineReport {
    /// `(n, ln q_{n+1} / ln q_n)` for `q_n >= 2`; the last entry may use the
    /// certified lower bound on a capped `q_{K+1}`.
    pub ratios: Vec<(usize, f64)>,
    /// Maximum of all ratios.
    pub tau_hat: f64,
    /// Maximum over the second half of the ratios.
    pub tau_hat_tail: f64,
    /// `max_n (ln q_{n+1} - tau_hat ln q_n)`.
    pub ln_c: f64,
    pub verdict: GrowthVerdict,
    pub note: &'static str,
}

/// Fits `q_{n+1} <= c q_n^tau` over the table.
pub fn classify_diophantine(t: &ConvergentTable) -> Result<DiophantineReport> {
    if t.len() < 4 {
        return Err(Error::TableTooShort(format!("need depth >= 4, have {}", t.len())));
    }
    let mut lnq: Vec<f64> = t.q.iter().map(ln_biguint_approx).collect();
    if let Some(l) = t.tail_ln_q_lower() {
        lnq.push(l.to_f64());
    }
    let ratios: Vec<(usize, f64)> = (0..lnq.len() - 1)
        .filter(|&n| t.q[n] >= BigUint::from(2u32))
        .map(|n| (n, lnq[n + 1] / lnq[n]))
        .collect();
    if ratios.len() < 2 {
        return Err(Error::TableTooShort("fewer than two usable ratios".into()));
    }
    let tau_hat = ratios.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let half = ratios.len() / 2;
    let head_max = ratios[..half.max(1)].iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let tau_hat_tail = ratios[half..].iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let ln_c = (0..lnq.len() - 1)
        .map(|n| lnq[n + 1] - tau_hat * lnq[n])
        .fold(f64::MIN, f64::max);
    let verdict = if tau_hat_tail > 1.5 * head_max && tau_hat_tail > 2.0 {
        GrowthVerdict::LiouvilleLeaning
    } else {
        GrowthVerdict::DiophantineLeaning
    };
    Ok(DiophantineReport {
        ratios,
        tau_hat,
        tau_hat_tail,
        ln_c,
        verdict,
        note: "finite-depth evidence",
    })
}
