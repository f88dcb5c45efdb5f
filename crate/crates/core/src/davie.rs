//! Davie's sets `A_k`, `A_k*`, the functions `h_k`, `g_k` and the
//! superadditive bound `K(n)`.
//!
//! `h_k` and `g_k` are stored exactly as integers over a per-layer common
//! denominator, so every inequality between them is decided exactly.

use std::io::Write;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::elementary::{ln, ln_biguint};
use crate::arith::{BigReal, Omega};
use crate::brjuno::k_of_n_u64;
use crate::contfrac::ConvergentTable;
use crate::error::{Error, Result};
use crate::report::{csv_f64, Num, SCHEMA_VERSION};

/// Largest window scanned member by member when looking for the next
/// element of `A_k`; wider windows use the arithmetic-progression search.
const DIRECT_SCAN: u64 = 200_000;

/// Precision cap for deciding `||n omega|| <= 1/(8 q_k)`.
const MEMBERSHIP_CAP_BITS: u32 = 1 << 14;

/// Decides `n in A_k`, i.e. `||n omega|| <= 1/(8 q_k)`.
struct Membership<'a> {
    omega: &'a Omega,
    /// `floor(omega 2^128)` and `ceil(omega 2^128)`.
    w: Option<(u128, u128)>,
}

impl<'a> Membership<'a> {
    fn new(omega: &'a Omega) -> Result<Self> {
        let e = omega.enclosure_best_effort(160)?;
        let lo = e.lo().mul_2exp(128).floor();
        let hi = e.hi().mul_2exp(128).ceil();
        let w = match (lo.to_u128(), hi.to_u128()) {
            (Some(l), Some(h)) if h.saturating_sub(l) < 1 << 20 => Some((l, h)),
            _ => None,
        };
        Ok(Membership { omega, w })
    }

    fn contains(&self, n: &BigUint, q: u64) -> Result<bool> {
        if n.is_zero() {
            return Ok(true);
        }
        if let (Some((wl, wh)), Some(nn)) = (self.w, n.to_u64()) {
            if let Some(b) = fast(wl, wh, nn, q) {
                return Ok(b);
            }
        }
        let thr = BigReal::from_ratio(&BigInt::one(), &(BigInt::from(q) * 8), 64);
        let mut prec = 96 + n.bits() as u32;
        while prec <= MEMBERSHIP_CAP_BITS {
            let d = self.omega.nearest_integer_distance(n, prec)?;
            let thr = thr.with_prec(prec + 8);
            if d.le(&thr) {
                return Ok(true);
            }
            if thr.lt(&d) {
                return Ok(false);
            }
            prec *= 2;
        }
        Err(Error::PrecisionExhausted(format!("||{n} omega|| too close to 1/(8*{q})")))
    }
}

/// Fixed-point decision; `None` when too close to call.
fn fast(wl: u128, wh: u128, n: u64, q: u64) -> Option<bool> {
    let x = wl.wrapping_mul(n as u128);
    let spread = (wh - wl).checked_mul(n as u128)?.checked_add(2)?;
    let d = x.min(x.wrapping_neg());
    let thr = (1u128 << 125) / q as u128;
    if d.checked_add(spread)? < thr {
        Some(true)
    } else if d > thr + 1 + spread {
        Some(false)
    } else {
        None
    }
}

/// One `k`-layer of the construction.
#[derive(Clone, Debug)]
pub struct Layer {
    pub k: usize,
    pub q: u64,
    pub q_next: BigUint,
    pub e: BigRational,
    pub eta: BigRational,
    /// Common denominator of `h_k`, `g_k`.
    pub den: BigInt,
    /// `A_k` on `[0, n_max + q_k]`.
    pub in_a: Vec<bool>,
    /// `A_k*` on `[0, n_max + q_k]`.
    pub in_a_star: Vec<bool>,
    /// First element of `A_k` past the scanned window, when it matters.
    pub next_beyond: Option<BigUint>,
    /// `m_n` for `n = 0..=n_max`.
    pub m: Vec<u64>,
    pub h_num: Vec<BigInt>,
    pub g_num: Vec<BigInt>,
}

impl Layer {
    pub fn h(&self, n: usize) -> BigRational {
        BigRational::new(self.h_num[n].clone(), self.den.clone())
    }

    pub fn g(&self, n: usize) -> BigRational {
        BigRational::new(self.g_num[n].clone(), self.den.clone())
    }

    /// `d < E_k` for a gap `d`.
    fn gap_below_e(&self, d: &BigUint) -> bool {
        BigRational::from_integer(BigInt::from(d.clone())) < self.e
    }
}

#[derive(Clone, Debug)]
pub struct DavieTable {
    pub omega: String,
    pub n_max: usize,
    pub prec: u32,
    pub layers: Vec<Layer>,
    /// `k(n)` for `n = 1..=n_max`; entry 0 is unused.
    pub k_of_n: Vec<usize>,
    /// `K(n)` for `n = 0..=n_max`.
    pub big_k: Vec<BigReal>,
    /// `ln(2 q_{k+1})` per layer.
    ln_2q: Vec<BigReal>,
}

/// Smallest element of `A_k` in `(x, limit)`, if any.
fn next_member(
    mem: &Membership,
    omega: &Omega,
    q: u64,
    q_next: &BigUint,
    x: u64,
    limit: &BigUint,
) -> Result<Option<BigUint>> {
    let start = BigUint::from(x) + 1u32;
    if limit <= &start {
        return Ok(None);
    }
    let width = limit - &start;
    if width <= BigUint::from(DIRECT_SCAN) {
        let end = limit.to_u64().expect("small window");
        for n in x + 1..end {
            if mem.contains(&BigUint::from(n), q)? {
                return Ok(Some(BigUint::from(n)));
            }
        }
        return Ok(None);
    }
    // n = start + r + m q: n omega = c_r + m eps (mod 1) with eps the signed
    // residual of q omega. The window is shorter than q_{k+1}/4 + 2 q_k, so
    // the total drift |m eps| stays below 1/2 and only the integers -1, 0, 1
    // can be approached.
    let bits = 2 * q_next.bits() as u32 + 2 * limit.bits() as u32 + 64;
    let eps = omega.signed_residual(&BigUint::from(q), bits)?;
    let delta = BigReal::from_ratio(&BigInt::one(), &(BigInt::from(q) * 8), bits);
    let mut best: Option<BigUint> = None;
    for r in 0..q {
        let n0 = &start + r;
        let c = omega.signed_residual(&n0, bits)?;
        for j in -1i64..=1 {
            let jr = BigReal::from_i64(j, bits);
            let a = jr.sub(&delta).sub(&c).div(&eps);
            let b = jr.add(&delta).sub(&c).div(&eps);
            let (Some(a), Some(b)) = (a, b) else { continue };
            let lo = a.min(&b);
            let hi = a.max(&b);
            if hi.hi().is_negative() {
                continue;
            }
            let m0 = lo.mid().ceil().max(BigInt::zero());
            let mut found = None;
            for dm in -1i64..=1 {
                let m = &m0 + dm;
                if m.is_negative() {
                    continue;
                }
                let n = &n0 + m.to_biguint().expect("non-negative") * q;
                if &n >= limit {
                    break;
                }
                if mem.contains(&n, q)? {
                    found = Some(n);
                    break;
                }
            }
            if let Some(n) = found {
                if best.as_ref().is_none_or(|b| &n < b) {
                    best = Some(n);
                }
            }
        }
    }
    Ok(best)
}

/// `A*` from a base set on `[0, len)` and the first base element beyond.
fn closure(base: &[bool], beyond: Option<&BigUint>, layer_q: u64, gap_ok: impl Fn(&BigUint) -> bool) -> Vec<bool> {
    let len = base.len();
    let mut next: Vec<Option<usize>> = vec![None; len];
    let mut nxt = None;
    for j in (0..len).rev() {
        next[j] = nxt;
        if base[j] {
            nxt = Some(j);
        }
    }
    let q = layer_q as usize;
    let mut last_in_class: Vec<Option<usize>> = vec![None; q];
    let mut out = vec![false; len];
    for j in 0..len {
        out[j] = base[j]
            || last_in_class[j % q].is_some_and(|j1| {
                let j2 = match next[j] {
                    Some(j2) => Some(BigUint::from(j2)),
                    None => beyond.cloned(),
                };
                j2.is_some_and(|j2| gap_ok(&(j2 - j1)))
            });
        if base[j] {
            last_in_class[j % q] = Some(j);
        }
    }
    out
}

fn build_layer(t: &ConvergentTable, mem: &Membership, k: usize, n_max: usize) -> Result<Layer> {
    let q = t.q[k].to_u64().ok_or_else(|| Error::Precondition("q_k beyond u64".into()))?;
    let q_next = t.q[k + 1].clone();
    let qr = BigRational::from_integer(BigInt::from(q));
    let quarter = BigRational::new(BigInt::from(q_next.clone()), BigInt::from(4));
    let e = if quarter > qr { quarter } else { qr.clone() };
    let eta = &qr / &e;
    let (a, b) = (eta.numer().clone(), eta.denom().clone());
    let den = BigInt::from(q) * &b;

    let top = n_max + q as usize;
    let mut in_a = Vec::with_capacity(top + 1);
    for n in 0..=top {
        in_a.push(mem.contains(&BigUint::from(n), q)?);
    }
    // Only an element within E_k of the window can complete a pair.
    let e_ceil = e.ceil().to_integer().to_biguint().expect("positive");
    let limit = BigUint::from(top) + e_ceil + 1u32;
    let next_beyond = next_member(mem, t.omega(), q, &q_next, top as u64, &limit)?;

    let mut layer = Layer {
        k,
        q,
        q_next,
        e,
        eta,
        den: den.clone(),
        in_a_star: Vec::new(),
        in_a,
        next_beyond,
        m: Vec::with_capacity(n_max + 1),
        h_num: Vec::with_capacity(n_max + 1),
        g_num: Vec::with_capacity(n_max + 1),
    };
    layer.in_a_star = closure(&layer.in_a, layer.next_beyond.as_ref(), q, |d| layer.gap_below_e(d));

    let mut m = 0u64;
    for n in 0..=n_max {
        if layer.in_a_star[n] {
            m = n as u64;
        }
        let nb = BigInt::from(n);
        let mb = BigInt::from(m);
        // h q b = m b + a n - q b, or l(n) q b with
        // l(n) = max((1 + eta) n / q - 2, (m eta + n) / q - 1).
        let h = if layer.in_a_star[m as usize + q as usize] {
            &mb * &b + &a * &nb - &den
        } else {
            let l1: BigInt = (&b + &a) * &nb - &den * 2;
            let l2: BigInt = &mb * &a + &nb * &b - &den;
            l1.max(l2)
        };
        let fl = BigInt::from(n as u64 / q) * &den;
        layer.g_num.push(h.clone().max(fl));
        layer.h_num.push(h);
        layer.m.push(m);
    }
    Ok(layer)
}

/// Builds all layers `k <= k(n_max)` and `K(n)` for `n <= n_max`.
pub fn build_davie(t: &ConvergentTable, n_max: usize, prec: u32) -> Result<DavieTable> {
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be positive".into()));
    }
    let kmax = k_of_n_u64(t, n_max as u64)?;
    if kmax + 1 > t.last() {
        return Err(Error::TableTooShort(format!("Davie layers up to k = {kmax} need q_{}", kmax + 1)));
    }
    let mem = Membership::new(t.omega())?;
    let layers: Vec<Layer> = (0..=kmax)
        .into_par_iter()
        .map(|k| build_layer(t, &mem, k, n_max))
        .collect::<Result<_>>()?;

    let mut kn = vec![0usize; n_max + 1];
    let mut k = 0;
    for (n, slot) in kn.iter_mut().enumerate().skip(1) {
        while k < kmax && t.q[k + 1].to_u64().is_some_and(|q| q <= n as u64) {
            k += 1;
        }
        *slot = k;
    }
    let wp = prec + 16;
    let ln_2q: Vec<BigReal> = (0..=kmax).map(|k| ln_biguint(&(&t.q[k + 1] * 2u32), wp)).collect();
    let ln2 = crate::arith::elementary::ln2(wp);
    let mut big_k = vec![BigReal::zero(prec)];
    for n in 1..=n_max {
        let mut acc = ln2.mul_i64(n as i64);
        for (layer, l2q) in layers.iter().zip(&ln_2q).take(kn[n] + 1) {
            let g = BigReal::from_ratio(&layer.g_num[n], &layer.den, wp);
            acc = acc.add(&g.mul(l2q));
        }
        big_k.push(acc.with_prec(prec));
    }
    Ok(DavieTable { omega: t.omega().label(), n_max, prec, layers, k_of_n: kn, big_k, ln_2q })
}

impl DavieTable {
    pub fn layer(&self, k: usize) -> Option<&Layer> {
        self.layers.get(k)
    }

    /// `(n, K(n))` rows.
    pub fn write_k_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
        wr.write_record(["n", "k_of_n", "K", "K_rad"]).map_err(io)?;
        for (n, k) in self.big_k.iter().enumerate() {
            wr.write_record([
                n.to_string(),
                self.k_of_n[n].to_string(),
                csv_f64(k.to_f64()),
                csv_f64(k.rad().to_f64()),
            ])
            .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Precondition(format!("csv: {e}")))
    }

    /// Per-layer rows `(k, n, in A, in A*, m_n, h, g)`.
    pub fn write_layers_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
        wr.write_record(["k", "n", "in_A", "in_A_star", "m_n", "h", "g"]).map_err(io)?;
        for l in &self.layers {
            for n in 0..=self.n_max {
                wr.write_record([
                    l.k.to_string(),
                    n.to_string(),
                    (l.in_a[n] as u8).to_string(),
                    (l.in_a_star[n] as u8).to_string(),
                    l.m[n].to_string(),
                    l.h(n).to_string(),
                    l.g(n).to_string(),
                ])
                .map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::Precondition(format!("csv: {e}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub k: Option<usize>,
    pub at: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub checked: u64,
    pub violations: u64,
    /// Comparisons the enclosures could not decide.
    pub undecided: u64,
    pub examples: Vec<Violation>,
}

impl PropertyCheck {
    fn new(name: &'static str) -> Self {
        PropertyCheck { name, checked: 0, violations: 0, undecided: 0, examples: Vec::new() }
    }

    fn record(&mut self, ok: bool, k: Option<usize>, at: &[u64]) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.examples.len() < 20 {
                self.examples.push(Violation { k, at: at.to_vec() });
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DavieReport {
    pub schema: &'static str,
    pub omega: String,
    pub n_max: usize,
    pub checks: Vec<PropertyCheck>,
    pub all_pass: bool,
}

/// Fits every numerator of a layer into `i128` when possible.
fn small(v: &[BigInt]) -> Option<Vec<i128>> {
    v.iter().map(|x| x.to_i128().filter(|y| y.abs() < 1 << 100)).collect()
}

/// Exhaustive check of the stated properties of `h_k`, `g_k` and `K` on
/// `0..=n_max`.
pub fn davie_properties_check(dt: &DavieTable, omega: &Omega, n_max: usize) -> Result<DavieReport> {
    let n_max = n_max.min(dt.n_max);
    let mut c = Vec::new();
    let mut hb = PropertyCheck::new("h-bounds");
    let mut hj = PropertyCheck::new("h-jump-on-A*");
    let mut hm = PropertyCheck::new("h-monotone");
    let mut hs = PropertyCheck::new("h-shift-by-q");
    let mut gn = PropertyCheck::new("g-nonnegative");
    let mut g0 = PropertyCheck::new("g-zero");
    let mut gu = PropertyCheck::new("g-upper");
    let mut gs = PropertyCheck::new("g-superadditive");
    let mut gj = PropertyCheck::new("g-jump-on-A");
    let mut sub = PropertyCheck::new("A-subset-A*");
    let mut idem = PropertyCheck::new("A*-idempotent");

    for l in &dt.layers {
        let k = Some(l.k);
        let (a, b) = (l.eta.numer(), l.eta.denom());
        let d = &l.den;
        for n in 0..=n_max {
            let nb = BigInt::from(n);
            let up = (b + a) * &nb - d;
            let lo = &up - d;
            let h = &l.h_num[n];
            hb.record(&lo <= h && h <= &up, k, &[n as u64]);
            let g = &l.g_num[n];
            gn.record(!g.is_negative(), k, &[n as u64]);
            gu.record(g <= &(&up + d), k, &[n as u64]);
            if n > 0 {
                let hp = &l.h_num[n - 1];
                hm.record(h >= hp, k, &[n as u64]);
                if l.in_a_star[n] {
                    hj.record(h >= &(hp + d), k, &[n as u64]);
                }
                if l.in_a[n] {
                    gj.record(g >= &(&l.g_num[n - 1] + d), k, &[n as u64]);
                }
            }
            if n + l.q as usize <= n_max {
                hs.record(l.h_num[n + l.q as usize] >= h + d, k, &[n as u64]);
            }
            sub.record(!l.in_a[n] || l.in_a_star[n], k, &[n as u64]);
        }
        g0.record(l.g_num[0].is_zero(), k, &[0]);
        let again = closure(&l.in_a_star, l.next_beyond.as_ref(), l.q, |x| l.gap_below_e(x));
        for n in 0..=n_max {
            idem.record(again[n] == l.in_a_star[n], k, &[n as u64]);
        }
        match small(&l.g_num[..=n_max]) {
            Some(g) => {
                for n1 in 1..=n_max / 2 {
                    for n2 in n1..=n_max - n1 {
                        gs.record(g[n1] + g[n2] <= g[n1 + n2], k, &[n1 as u64, n2 as u64]);
                    }
                }
            }
            None => {
                let g = &l.g_num;
                for n1 in 1..=n_max / 2 {
                    for n2 in n1..=n_max - n1 {
                        gs.record(&g[n1] + &g[n2] <= g[n1 + n2], k, &[n1 as u64, n2 as u64]);
                    }
                }
            }
        }
    }

    // K(n1) + K(n2) <= K(n1 + n2). The n log 2 parts cancel exactly, so the
    // difference is sum_k c_k ln(2 q_{k+1}) with exact c_k; enclosures decide
    // the sign unless every c_k <= 0.
    let mut ks = PropertyCheck::new("K-superadditive");
    let kf: Vec<(f64, f64)> = dt.big_k.iter().map(|x| (x.lo().to_f64(), x.hi().to_f64())).collect();
    for n1 in 1..=n_max / 2 {
        for n2 in n1..=n_max - n1 {
            let n = n1 + n2;
            let slack = kf[n].0 - kf[n1].1 - kf[n2].1;
            if slack > 1e-9 * kf[n].1.abs().max(1.0) {
                ks.record(true, None, &[n1 as u64, n2 as u64]);
                continue;
            }
            match k_superadditive_exact(dt, n1, n2) {
                Some(ok) => ks.record(ok, None, &[n1 as u64, n2 as u64]),
                None => {
                    ks.checked += 1;
                    ks.undecided += 1;
                }
            }
        }
    }

    let mut tel = PropertyCheck::new("K-telescoping");
    let wp = dt.prec + 16;
    for n in 1..=n_max {
        let sd = omega.small_divisor(n as u64 + 1, wp)?;
        let Some(lhs) = ln(&sd).map(|x| x.neg()) else {
            tel.checked += 1;
            tel.undecided += 1;
            continue;
        };
        let rhs = dt.big_k[n].sub(&dt.big_k[n - 1]);
        if lhs.le(&rhs) {
            tel.record(true, None, &[n as u64]);
        } else if rhs.lt(&lhs) {
            tel.record(false, None, &[n as u64]);
        } else {
            tel.checked += 1;
            tel.undecided += 1;
        }
    }

    c.extend([hb, hj, hm, hs, gn, g0, gu, gs, gj, sub, idem, ks, tel]);
    let all_pass = c.iter().all(|p| p.violations == 0 && p.undecided == 0);
    Ok(DavieReport { schema: SCHEMA_VERSION, omega: dt.omega.clone(), n_max, checks: c, all_pass })
}

fn k_superadditive_exact(dt: &DavieTable, n1: usize, n2: usize) -> Option<bool> {
    let n = n1 + n2;
    let mut coeffs = Vec::new();
    for (k, l) in dt.layers.iter().enumerate() {
        let pick = |m: usize| if k <= dt.k_of_n[m] { l.g_num[m].clone() } else { BigInt::zero() };
        coeffs.push(pick(n1) + pick(n2) - pick(n));
    }
    if coeffs.iter().all(|c| !c.is_positive()) {
        return Some(true);
    }
    let wp = dt.prec + 16;
    let mut diff = BigReal::zero(wp);
    for ((c, l), l2q) in coeffs.iter().zip(&dt.layers).zip(&dt.ln_2q) {
        diff = diff.add(&BigReal::from_ratio(c, &l.den, wp).mul(l2q));
    }
    if diff.is_positive() {
        Some(false)
    } else if !diff.hi().is_positive() {
        Some(true)
    } else {
        None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearBound {
    pub schema: &'static str,
    pub omega: String,
    /// `K(n)/n - sum_{k <= k(n)} ln q_{k+1} / q_k` for `n = 1..=n_max`.
    pub deficit: Vec<f64>,
    pub max: Num,
    pub argmax: usize,
}

/// The deficit sequence whose boundedness is Davie's linear estimate.
pub fn davie_linear_bound(dt: &DavieTable, t: &ConvergentTable, n_max: usize) -> Result<LinearBound> {
    let n_max = n_max.min(dt.n_max);
    let kmax = dt.k_of_n[n_max];
    let mut s = Vec::with_capacity(kmax + 1);
    let mut acc = BigReal::zero(dt.prec);
    for k in 0..=kmax {
        let x = ln_biguint(&t.q[k + 1], dt.prec)
            .div(&BigReal::from_biguint(&t.q[k], dt.prec))
            .expect("q_k > 0");
        acc = acc.add(&x);
        s.push(acc.clone());
    }
    let mut deficit = Vec::with_capacity(n_max);
    let mut best = (f64::NEG_INFINITY, 0, BigReal::zero(dt.prec));
    for n in 1..=n_max {
        let v = dt.big_k[n].div_i64(n as i64).sub(&s[dt.k_of_n[n]]);
        let f = v.to_f64();
        if f > best.0 {
            best = (f, n, v);
        }
        deficit.push(f);
    }
    Ok(LinearBound {
        schema: SCHEMA_VERSION,
        omega: dt.omega.clone(),
        deficit,
        max: Num::certified(&best.2),
        argmax: best.1,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::arith::{GeneratorRule, IrrationalSpec};
    use crate::contfrac::gauss_expand;

    fn table(spec: IrrationalSpec, depth: usize) -> ConvergentTable {
        gauss_expand(Arc::new(Omega::new(spec).unwrap()), depth).unwrap()
    }

    /// Literal transcription of the definitions in f64, cubic time.
    struct Naive {
        a: Vec<bool>,
        star: Vec<bool>,
        h: Vec<f64>,
        g: Vec<f64>,
    }

    fn naive(omega: f64, q: u64, qn: u64, n_max: usize) -> Naive {
        let e = (q as f64).max(qn as f64 / 4.0);
        let eta = q as f64 / e;
        let top = n_max + q as usize + e.ceil() as usize + 2;
        let dist = |n: usize| {
            let x = n as f64 * omega;
            (x - x.round()).abs()
        };
        let a: Vec<bool> = (0..=top).map(|n| dist(n) <= 1.0 / (8.0 * q as f64)).collect();
        let lim = n_max + q as usize;
        let mut star = vec![false; lim + 1];
        for j in 0..=lim {
            star[j] = a[j];
            for j1 in 0..j {
                if !a[j1] || (j - j1) % q as usize != 0 {
                    continue;
                }
                for j2 in j + 1..=top {
                    if a[j2] && ((j2 - j1) as f64) < e {
                        star[j] = true;
                    }
                }
            }
        }
        let (mut h, mut g) = (vec![], vec![]);
        let mut m = 0usize;
        for n in 0..=n_max {
            if star[n] {
                m = n;
            }
            let (nf, mf, qf) = (n as f64, m as f64, q as f64);
            let hv = if star[m + q as usize] {
                (mf + eta * nf) / qf - 1.0
            } else {
                ((1.0 + eta) * nf / qf - 2.0).max((mf * eta + nf) / qf - 1.0)
            };
            h.push(hv);
            g.push(hv.max((n as u64 / q) as f64));
        }
        Naive { a, star, h, g }
    }

    fn agrees_with_naive(spec: IrrationalSpec, n_max: usize) {
        let t = table(spec, 30);
        let dt = build_davie(&t, n_max, 128).unwrap();
        let w = t.omega().to_f64();
        for l in &dt.layers {
            let nv = naive(w, l.q, l.q_next.to_u64().unwrap(), n_max);
            for n in 0..=n_max {
                assert_eq!(l.in_a[n], nv.a[n], "A k={} n={n}", l.k);
                assert_eq!(l.in_a_star[n], nv.star[n], "A* k={} n={n}", l.k);
                let h = l.h(n);
                let h = h.numer().to_f64().unwrap() / h.denom().to_f64().unwrap();
                assert!((h - nv.h[n]).abs() < 1e-9, "h k={} n={n}", l.k);
                let g = l.g(n);
                let g = g.numer().to_f64().unwrap() / g.denom().to_f64().unwrap();
                assert!((g - nv.g[n]).abs() < 1e-9, "g k={} n={n}", l.k);
            }
        }
    }

    #[test]
    fn layers_match_literal_definition() {
        agrees_with_naive(IrrationalSpec::Golden, 120);
        agrees_with_naive(IrrationalSpec::Surd(2), 120);
        agrees_with_naive(IrrationalSpec::Rule(GeneratorRule::Square), 120);
    }

    #[test]
    fn golden_examples() {
        let t = table(IrrationalSpec::Golden, 30);
        let dt = build_davie(&t, 200, 128).unwrap();
        // k = 2 has q_2 = 2: 0 in A_2, 1 not (||omega|| = 0.382 > 1/16)
        let l2 = dt.layer(2).unwrap();
        assert_eq!(l2.q, 2);
        assert!(l2.in_a[0] && !l2.in_a[1]);
        for l in &dt.layers {
            assert!(l.g_num[0].is_zero());
        }
        assert!(dt.big_k[0].is_point() && dt.big_k[0].to_f64() == 0.0);
        // K(1) from the definition: k(1) = 1, layers 0 and 1 have q = 1.
        let n = Naive::k1_oracle(t.omega().to_f64());
        assert!((dt.big_k[1].to_f64() - n).abs() < 1e-12, "{} vs {n}", dt.big_k[1].to_f64());
    }

    impl Naive {
        /// K(1) = ln 2 + g_0(1) ln(2 q_1) + g_1(1) ln(2 q_2) for golden.
        fn k1_oracle(w: f64) -> f64 {
            let g0 = naive(w, 1, 1, 1).g[1];
            let g1 = naive(w, 1, 2, 1).g[1];
            2f64.ln() + g0 * 2f64.ln() + g1 * 4f64.ln()
        }
    }

    #[test]
    fn g_jump_fails_for_sqrt129() {
        // q_3 = 11, q_4 = 14, eta_3 = 1. The floor lifts g_3(13) to 1 while
        // 14 lies in A_3 with g_3(14) = 17/11.
        agrees_with_naive(IrrationalSpec::Surd(129), 60);
        let t = table(IrrationalSpec::Surd(129), 30);
        let dt = build_davie(&t, 60, 128).unwrap();
        let l = dt.layer(3).unwrap();
        assert_eq!((l.q, l.q_next.to_u64().unwrap()), (11, 14));
        assert!(l.in_a[14]);
        assert_eq!(l.g(13), BigRational::from_integer(1.into()));
        assert_eq!(l.g(14), BigRational::new(17.into(), 11.into()));
        let r = davie_properties_check(&dt, t.omega(), 60).unwrap();
        for c in &r.checks {
            let expect = u64::from(c.name == "g-jump-on-A");
            assert_eq!(c.violations, expect, "{}", c.name);
        }
        let gj = r.checks.iter().find(|c| c.name == "g-jump-on-A").unwrap();
        assert_eq!(gj.examples[0].k, Some(3));
        assert_eq!(gj.examples[0].at, vec![14]);
    }

    #[test]
    fn properties_hold_on_families() {
        for (spec, n) in [
            (IrrationalSpec::Golden, 400),
            (IrrationalSpec::Surd(2), 400),
            (IrrationalSpec::Rule(GeneratorRule::ExpQ { sigma: "1".parse().unwrap() }), 300),
        ] {
            let t = table(spec.clone(), 30);
            let dt = build_davie(&t, n, 128).unwrap();
            let r = davie_properties_check(&dt, t.omega(), n).unwrap();
            for c in &r.checks {
                assert_eq!(c.violations, 0, "{spec} {} {:?}", c.name, c.examples);
                assert_eq!(c.undecided, 0, "{spec} {}", c.name);
            }
            let lb = davie_linear_bound(&dt, &t, n).unwrap();
            assert_eq!(lb.deficit.len(), n);
            assert!(lb.max.approx().is_finite());
        }
    }

    #[test]
    fn progression_search_matches_scan() {
        // square family, k = 3: q_3 = 679, q_4 = 462424, E = q_4 / 4.
        let t = table(IrrationalSpec::Rule(GeneratorRule::Square), 30);
        let mem = Membership::new(t.omega()).unwrap();
        let q = t.q[3].to_u64().unwrap();
        let limit = BigUint::from(700_000u64);
        let mut direct = None;
        for n in 1001..700_000u64 {
            if mem.contains(&BigUint::from(n), q).unwrap() {
                direct = Some(BigUint::from(n));
                break;
            }
        }
        let via = next_member(&mem, t.omega(), q, &t.q[4], 1000, &limit).unwrap();
        assert_eq!(via, direct);
    }

    #[test]
    fn csv_output() {
        let t = table(IrrationalSpec::Golden, 20);
        let dt = build_davie(&t, 10, 64).unwrap();
        let mut buf = Vec::new();
        dt.write_k_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,k_of_n,K,K_rad\n0,0,"));
        assert_eq!(s.lines().count(), 12);
        let mut buf = Vec::new();
        dt.write_layers_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().count() > 11);
    }

    #[test]
    fn too_short_table() {
        let t = table(IrrationalSpec::Golden, 5);
        assert!(matches!(build_davie(&t, 100, 64), Err(Error::TableTooShort(_))));
    }
}
