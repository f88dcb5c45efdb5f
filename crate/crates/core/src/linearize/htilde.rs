//! The positive comparison series `h~_0 = 1`,
//! `h~_n = |lambda^n - 1|^{-1} sum_{m=2}^{n+1} |f_m| sum_{k_1+...+k_m = n+1-m, k_i >= 0} h~_{k_1}...h~_{k_m}`,
//! and the lower-bound witness built on it.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::germ::Germ;
use crate::arith::elementary::ln;
use crate::arith::BigReal;
use crate::contfrac::ConvergentTable;
use crate::error::{Error, Result};
use crate::weights::WeightSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum HTildeMode {
    /// Interval arithmetic at the given precision.
    BigFloat { prec: u32 },
    /// `ln h~_n` in doubles with log-sum-exp and compensated sums.
    LogDomain,
}

#[derive(Clone, Debug)]
pub struct HTilde {
    pub mode: HTildeMode,
    /// `ln h~_n` for `n = 0..=n_max` (midpoints in big-float mode).
    pub ln: Vec<f64>,
    /// Enclosures in big-float mode.
    pub big: Option<Vec<BigReal>>,
}

impl HTilde {
    pub fn n_max(&self) -> usize {
        self.ln.len() - 1
    }
}

/// `ln |lambda^n - 1|` for `n = 1..=n_max` (index 0 unused).
fn ln_divisors(germ: &Germ, n_max: usize) -> Result<Vec<f64>> {
    let w = germ.omega();
    let mut out = vec![0.0; n_max + 1];
    let vals: Vec<Result<f64>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let d = w.small_divisor(n as u64 + 1, 96)?;
            let l = ln(&d).ok_or_else(|| Error::PrecisionExhausted(format!("|lambda^{n} - 1| not separated from 0")))?;
            Ok(l.mid().to_f64())
        })
        .collect();
    for (n, v) in vals.into_iter().enumerate() {
        out[n + 1] = v?;
    }
    Ok(out)
}

/// Neumaier-compensated `ln sum exp(x_i)`.
fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let v = (x - m).exp();
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    m + (s + c).ln()
}

pub fn htilde_coeffs(germ: &Germ, n_max: usize, mode: HTildeMode) -> Result<HTilde> {
    let support = germ.support(n_max + 1);
    let top = support.last().copied().unwrap_or(1);
    match mode {
        HTildeMode::LogDomain => {
            let ld = ln_divisors(germ, n_max)?;
            let lf: Vec<(usize, f64)> = support.iter().map(|&m| (m, germ.source().ln_abs_f64(m))).collect();
            let mut l = vec![f64::NEG_INFINITY; n_max + 1];
            l[0] = 0.0;
            // pw[m - 2][k] = ln [z^k] T^m, T = sum h~_j z^j.
            let mut pw: Vec<Vec<f64>> = (2..=top).map(|_| vec![f64::NEG_INFINITY; n_max + 2]).collect();
            for row in pw.iter_mut() {
                row[0] = 0.0;
            }
            for n in 1..=n_max {
                let lv = &l;
                let prev = &pw;
                let fresh: Vec<(usize, f64)> = (2..=top.min(n + 1))
                    .into_par_iter()
                    .filter(|&m| n + 1 - m > 0)
                    .map(|m| {
                        let k = n + 1 - m;
                        let lower: &[f64] = if m == 2 { lv } else { &prev[m - 3] };
                        let xs: Vec<f64> = (0..=k).map(|i| lv[i] + lower[k - i]).collect();
                        (m, log_sum_exp(&xs))
                    })
                    .collect();
                for (m, v) in fresh {
                    pw[m - 2][n + 1 - m] = v;
                }
                let xs: Vec<f64> = lf.iter().filter(|(m, _)| *m <= n + 1).map(|(m, f)| f + pw[m - 2][n + 1 - m]).collect();
                l[n] = log_sum_exp(&xs) - ld[n];
            }
            Ok(HTilde { mode, ln: l, big: None })
        }
        HTildeMode::BigFloat { prec } => {
            let w = germ.omega();
            let zero = BigReal::zero(prec);
            let one = BigReal::one(prec);
            let fs: Vec<(usize, BigReal)> = support.iter().map(|&m| (m, germ.source().real(m, prec).abs())).collect();
            let mut h = vec![zero.clone(); n_max + 1];
            h[0] = one.clone();
            let mut pw: Vec<Vec<BigReal>> = (2..=top).map(|_| vec![zero.clone(); n_max + 2]).collect();
            for row in pw.iter_mut() {
                row[0] = one.clone();
            }
            for n in 1..=n_max {
                let hv = &h;
                let prev = &pw;
                let fresh: Vec<(usize, BigReal)> = (2..=top.min(n))
                    .into_par_iter()
                    .map(|m| {
                        let k = n + 1 - m;
                        let lower: &[BigReal] = if m == 2 { hv } else { &prev[m - 3] };
                        let acc = (0..=k).fold(zero.clone(), |a, i| a.add(&hv[i].mul(&lower[k - i])));
                        (m, acc)
                    })
                    .collect();
                for (m, v) in fresh {
                    pw[m - 2][n + 1 - m] = v;
                }
                let num = fs.iter().filter(|(m, _)| *m <= n + 1).fold(zero.clone(), |a, (m, f)| a.add(&f.mul(&pw[m - 2][n + 1 - m])));
                let d = w.small_divisor(n as u64 + 1, prec)?;
                h[n] = num
                    .div(&d)
                    .ok_or_else(|| Error::PrecisionExhausted(format!("|lambda^{n} - 1| not separated from 0")))?;
            }
            let l = h
                .iter()
                .map(|x| ln(x).map_or(f64::NEG_INFINITY, |v| v.mid().to_f64()))
                .collect();
            Ok(HTilde { mode, ln: l, big: Some(h) })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UEntry {
    /// Index `j` of the convergent denominator.
    pub j: usize,
    pub q: String,
    pub q_next: String,
    /// `n_i = floor(q'_{i+1} / (q'_i + 1))`, present when `q'_{i+1}` is known.
    pub n_i: Option<String>,
    /// `alpha_i = n_i q'_i / q'_{i+1}` and its lower bound `(1 - 1/(q'_i + 1))^2`.
    pub alpha: Option<f64>,
    pub alpha_lower: f64,
    /// Exact check of `(1 - 1/(q'_i + 1))^2 <= alpha_i <= 1`.
    pub alpha_in_range: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessPoint {
    pub i: usize,
    pub q: u64,
    pub ln_htilde: f64,
    pub ln_m: f64,
    /// `(1/q'_i) ln(h~_{q'_i} / M_{q'_i})`.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsequenceCheck {
    pub i: usize,
    /// `ln h~_{q'_{i+1}}`.
    pub lhs: f64,
    /// `n_i ln h~_{q'_i} - ln |lambda^{q'_{i+1}} - 1|`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometricCheck {
    pub exponent: String,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `ln h~_{2s-1} - (i ln h~_{s-1} - ln 2)`.
    pub worst_margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceWitness {
    pub schema: &'static str,
    pub omega: String,
    pub germ: String,
    pub weight: String,
    pub budget: usize,
    pub u: Vec<UEntry>,
    pub points: Vec<WitnessPoint>,
    pub subsequence: Vec<SubsequenceCheck>,
    pub geometric_i2: GeometricCheck,
    /// Sampled `i` in `3..=11`; diagnostic only.
    pub geometric_general: GeometricCheck,
    pub increasing: bool,
    pub enough_points: bool,
}

pub const MIN_POINTS: usize = 3;
const GENERAL_S_MAX: usize = 300;
const GENERAL_I_MAX: u32 = 11;

fn tol(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

/// Index set `U = {q_j : q_{j+1} >= (q_j + 1)^2, j >= 1}` within the table.
pub fn u_set(t: &ConvergentTable) -> Vec<UEntry> {
    let mut out = Vec::new();
    for j in 1..t.q.len().saturating_sub(1) {
        let (q, qn) = (&t.q[j], &t.q[j + 1]);
        let q1 = q + 1u32;
        if *qn < &q1 * &q1 {
            continue;
        }
        out.push(UEntry {
            j,
            q: q.to_string(),
            q_next: qn.to_string(),
            n_i: None,
            alpha: None,
            alpha_lower: {
                let qf = q.to_f64().unwrap_or(f64::INFINITY);
                (qf / (qf + 1.0)).powi(2)
            },
            alpha_in_range: None,
        });
    }
    let qs: Vec<BigUint> = out.iter().map(|e| e.q.parse().expect("decimal")).collect();
    for i in 0..out.len().saturating_sub(1) {
        let (a, b) = (&qs[i], &qs[i + 1]);
        let a1 = a + 1u32;
        let n = b / &a1;
        let upper = &n * a <= *b;
        let lower = &n * &a1 * &a1 >= a * b;
        out[i].alpha = Some((&n * a).to_f64().unwrap_or(f64::NAN) / b.to_f64().unwrap_or(f64::NAN));
        out[i].n_i = Some(n.to_string());
        out[i].alpha_in_range = Some(upper && lower);
    }
    out
}

/// Evaluates the divergence witness for `germ` against the weight `m` with
/// `h~` computed in the log domain up to `budget`.
pub fn divergence_witness(germ: &Germ, t: &ConvergentTable, m: &WeightSequence, budget: usize) -> Result<DivergenceWitness> {
    if !germ.f2_at_least_one() {
        return Err(Error::Precondition("the witness needs |f_2| >= 1".into()));
    }
    let u = u_set(t);
    if u.is_empty() {
        return Err(Error::EmptyU(t.len()));
    }
    let qs: Vec<Option<u64>> = u.iter().map(|e| e.q.parse::<u64>().ok().filter(|&q| q as usize <= budget)).collect();
    if qs[0].is_none() {
        return Err(Error::BudgetExceeded(format!("smallest element {} of U exceeds the budget {budget}", u[0].q)));
    }
    let reach = qs.iter().take_while(|q| q.is_some()).count();
    let top = qs[reach - 1].expect("reachable") as usize;
    let ht = htilde_coeffs(germ, top.max(1), HTildeMode::LogDomain)?;
    let l = &ht.ln;
    let mut points = Vec::with_capacity(reach);
    for (i, q) in qs.iter().take(reach).enumerate() {
        let q = q.expect("reachable");
        let lm = m.ln_m_f64(q as usize)?;
        points.push(WitnessPoint { i, q, ln_htilde: l[q as usize], ln_m: lm, value: (l[q as usize] - lm) / q as f64 });
    }
    let mut subsequence = Vec::new();
    for i in 0..reach.saturating_sub(1) {
        let (a, b) = (qs[i].expect("reachable") as usize, qs[i + 1].expect("reachable") as usize);
        let n_i: f64 = u[i].n_i.as_ref().expect("successor known").parse().expect("decimal");
        let d = germ.omega().small_divisor(b as u64 + 1, 96)?;
        let ld = ln(&d).ok_or_else(|| Error::PrecisionExhausted(format!("|lambda^{b} - 1| not separated from 0")))?;
        let rhs = n_i * l[a] - ld.mid().to_f64();
        subsequence.push(SubsequenceCheck { i, lhs: l[b], rhs, holds: l[b] >= rhs - tol(rhs) });
    }
    let geo = |exps: &[u32], s_max: usize| {
        let mut g = GeometricCheck { exponent: String::new(), checked: 0, violations: 0, worst_margin: f64::INFINITY };
        for s in 1..=s_max {
            if 2 * s - 1 > top {
                break;
            }
            for &i in exps {
                let rhs = i as f64 * l[s - 1] - std::f64::consts::LN_2;
                let margin = l[2 * s - 1] - rhs;
                g.checked += 1;
                if margin < -tol(rhs) {
                    g.violations += 1;
                }
                g.worst_margin = g.worst_margin.min(margin);
            }
        }
        g
    };
    let mut geometric_i2 = geo(&[2], usize::MAX);
    geometric_i2.exponent = "2".into();
    let exps: Vec<u32> = (3..=GENERAL_I_MAX).collect();
    let mut geometric_general = geo(&exps, GENERAL_S_MAX - 1);
    geometric_general.exponent = format!("3..={GENERAL_I_MAX}");
    let increasing = points.len() >= 2 && points.windows(2).all(|w| w[1].value > w[0].value);
    Ok(DivergenceWitness {
        schema: crate::report::SCHEMA_VERSION,
        omega: t.omega().label(),
        germ: germ.label(),
        weight: m.name().to_string(),
        budget,
        u,
        enough_points: points.len() >= MIN_POINTS,
        points,
        subsequence,
        geometric_i2,
        geometric_general,
        increasing,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::arith::{GeneratorRule, IrrationalSpec, Omega};
    use crate::contfrac::gauss_expand;
    use crate::linearize::germ::CoeffSource;
    use crate::weights::{gevrey, make_weight, DEFAULT_CHECK_TO};

    fn square() -> Arc<Omega> {
        Arc::new(Omega::new(IrrationalSpec::Rule(GeneratorRule::Square)).unwrap())
    }

    #[test]
    fn first_coefficient() {
        let g = Germ::with_default_norm(square(), CoeffSource::Poly(vec!["2".parse().unwrap()])).unwrap();
        let h = htilde_coeffs(&g, 3, HTildeMode::BigFloat { prec: 128 }).unwrap();
        let d1 = g.omega().small_divisor(2, 128).unwrap();
        let expect = BigReal::from_i64(2, 128).div(&d1).unwrap();
        assert!(h.big.as_ref().unwrap()[1].intersects(&expect));
        // h~_2 = |f_2| 2 h~_0 h~_1 / |lambda^2 - 1|.
        let d2 = g.omega().small_divisor(3, 128).unwrap();
        let e2 = BigReal::from_i64(4, 128).mul(&expect).div(&d2).unwrap();
        assert!(h.big.as_ref().unwrap()[2].intersects(&e2));
    }

    #[test]
    fn log_domain_matches_big_float() {
        for src in [CoeffSource::quad(), CoeffSource::Poly(vec!["1".parse().unwrap(), "0.5".parse().unwrap(), "3".parse().unwrap()])] {
            let g = Germ::with_default_norm(square(), src).unwrap();
            let a = htilde_coeffs(&g, 500, HTildeMode::LogDomain).unwrap();
            let b = htilde_coeffs(&g, 500, HTildeMode::BigFloat { prec: 160 }).unwrap();
            for n in 0..=500 {
                assert!((a.ln[n] - b.ln[n]).abs() <= 1e-8, "n = {n}: {} vs {}", a.ln[n], b.ln[n]);
            }
        }
    }

    #[test]
    fn lse_is_compensated() {
        let xs = vec![0.0; 1000];
        assert!((log_sum_exp(&xs) - 1000f64.ln()).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn witness_on_square_rule() {
        let w = square();
        let t = gauss_expand(w.clone(), 7).unwrap();
        let g = Germ::with_default_norm(w, CoeffSource::quad()).unwrap();
        let m = make_weight(gevrey("1").unwrap(), DEFAULT_CHECK_TO, false).unwrap();
        let wit = divergence_witness(&g, &t, &m, 1000).unwrap();
        let qs: Vec<u64> = wit.points.iter().map(|p| p.q).collect();
        assert_eq!(qs, vec![4, 25, 679]);
        assert!(wit.u.iter().all(|e| e.alpha_in_range != Some(false)));
        assert!(wit.subsequence.iter().all(|c| c.holds));
        assert_eq!(wit.geometric_i2.violations, 0);
        assert!(wit.enough_points);
    }

    #[test]
    fn witness_errors() {
        let w = Arc::new(Omega::new(IrrationalSpec::Golden).unwrap());
        let t = gauss_expand(w.clone(), 20).unwrap();
        let g = Germ::with_default_norm(w, CoeffSource::quad()).unwrap();
        let m = make_weight(gevrey("1").unwrap(), DEFAULT_CHECK_TO, false).unwrap();
        assert!(matches!(divergence_witness(&g, &t, &m, 100), Err(Error::EmptyU(_))));
        let w = square();
        let t = gauss_expand(w.clone(), 7).unwrap();
        let g = Germ::with_default_norm(w, CoeffSource::quad()).unwrap();
        assert!(matches!(divergence_witness(&g, &t, &m, 3), Err(Error::BudgetExceeded(_))));
    }
}
