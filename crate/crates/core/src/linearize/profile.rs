//! Per-order profile of a linearization: `ln |h_n|`, `ln s_n`, `K(n)`,
//! `ln h~_n`, small divisors and the derived estimators.

use std::io::Write;

use num_bigint::BigUint;
use serde::Serialize;

use super::estimators::{default_window, gevrey_order_estimate, radius_estimate, GevreyEstimate, RadiusEstimate};
use super::germ::Germ;
use super::htilde::{htilde_coeffs, HTildeMode};
use super::majorant::{majorant_coeffs, majorant_growth, MajorantGrowth};
use super::series::{linearize_coeffs, verify_conjugacy, ConjugacyReport};
use crate::arith::elementary::ln;
use crate::arith::real::ln_biguint_approx;
use crate::arith::{BigComplex, Precision};
use crate::contfrac::{table_covering, ConvergentTable};
use crate::davie::{build_davie, DavieTable};
use crate::error::{Error, Result};
use crate::report::{csv_f64, SCHEMA_VERSION};

const DAVIE_PREC: u32 = 128;

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    pub n_max: usize,
    pub prec: Precision,
    /// Also compute `h~` (log domain) when the germ allows it.
    pub htilde: bool,
    pub window: Option<usize>,
}

/// Counts of `|h_n| <= h~_{n+1}` and `|h_n| <= h~_{n-1}`; neither is asserted.
#[derive(Clone, Debug, Serialize)]
pub struct IndexAlignment {
    pub compared: usize,
    pub le_next: usize,
    pub le_prev: usize,
}

#[derive(Clone, Debug)]
pub struct SeriesProfile {
    pub omega: String,
    pub germ: String,
    pub n_max: usize,
    pub prec: Precision,
    /// Enclosures `h_0..h_N`.
    pub h: Vec<BigComplex>,
    pub s: Vec<BigUint>,
    /// Upper bounds on `ln |h_n|`, index 0 unused.
    pub log_abs_h: Vec<f64>,
    pub log_s: Vec<f64>,
    /// `K(n)` midpoints, `n = 0..=N`.
    pub big_k: Vec<f64>,
    /// `ln h~_n`, `n = 0..=N`.
    pub log_htilde: Option<Vec<f64>>,
    /// `ln |lambda^n - lambda|`, index 0 and 1 unused.
    pub log_divisor: Vec<f64>,
    pub radius: RadiusEstimate,
    pub gevrey: GevreyEstimate,
    pub growth: MajorantGrowth,
    pub conjugacy: ConjugacyReport,
    pub alignment: Option<IndexAlignment>,
    pub davie: DavieTable,
    pub table: ConvergentTable,
}

#[derive(Serialize)]
pub struct ProfileSummary<'a> {
    pub schema: &'static str,
    pub omega: &'a str,
    pub germ: &'a str,
    pub n_max: usize,
    pub prec: u32,
    pub radius: &'a RadiusEstimate,
    pub gevrey: &'a GevreyEstimate,
    pub majorant_growth: &'a MajorantGrowth,
    pub conjugacy_worst_ratio_log2: f64,
    pub conjugacy_pass: bool,
    pub index_alignment: &'a Option<IndexAlignment>,
}

pub fn build_profile(germ: &Germ, opts: &ProfileOptions) -> Result<SeriesProfile> {
    let n = opts.n_max;
    if n < 2 {
        return Err(Error::Precondition("profile needs N >= 2".into()));
    }
    let table = table_covering(germ.omega().clone(), n as u64)?;
    let davie = build_davie(&table, n, DAVIE_PREC)?;
    let h = linearize_coeffs(germ, n, opts.prec)?;
    let conjugacy = verify_conjugacy(germ, &h, n, opts.prec.bits)?;
    let s = majorant_coeffs(n);
    let log_abs_h: Vec<f64> = h.iter().map(|z| z.ln_abs_upper()).collect();
    let log_s: Vec<f64> = s.iter().map(ln_biguint_approx).collect();
    let big_k: Vec<f64> = davie.big_k.iter().map(|k| k.mid().to_f64()).collect();
    let mut log_divisor = vec![f64::NAN; n + 1];
    for (k, slot) in log_divisor.iter_mut().enumerate().skip(2) {
        let d = germ.omega().small_divisor(k as u64, 96)?;
        *slot = ln(&d).map_or(f64::NEG_INFINITY, |v| v.mid().to_f64());
    }
    let window = opts.window.unwrap_or_else(|| default_window(n));
    let radius = radius_estimate(&log_abs_h, window.max(super::estimators::MIN_WINDOW).min(n))?;
    let gevrey = gevrey_order_estimate(&log_abs_h, window.min(n - 1))?;
    let growth = majorant_growth(&s);
    let log_htilde = if opts.htilde && germ.f2_at_least_one() {
        Some(htilde_coeffs(germ, n + 1, HTildeMode::LogDomain)?.ln)
    } else {
        None
    };
    let alignment = log_htilde.as_ref().map(|lt| {
        let mut a = IndexAlignment { compared: 0, le_next: 0, le_prev: 0 };
        for k in 1..=n {
            a.compared += 1;
            a.le_next += usize::from(log_abs_h[k] <= lt[k + 1]);
            a.le_prev += usize::from(log_abs_h[k] <= lt[k - 1]);
        }
        a
    });
    Ok(SeriesProfile {
        omega: germ.omega().label(),
        germ: germ.label(),
        n_max: n,
        prec: opts.prec,
        h,
        s,
        log_abs_h,
        log_s,
        big_k,
        log_htilde: log_htilde.map(|mut v| {
            v.truncate(n + 1);
            v
        }),
        log_divisor,
        radius,
        gevrey,
        growth,
        conjugacy,
        alignment,
        davie,
        table,
    })
}

impl SeriesProfile {
    /// One row per order `n = 0..=N`; missing entries are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
        out.write_record(["n", "ln_abs_h", "ln_s", "K", "ln_htilde", "ln_divisor"]).map_err(io)?;
        let cell = |v: f64| if v.is_nan() { String::new() } else { csv_f64(v) };
        for n in 0..=self.n_max {
            let (lh, ls) = if n == 0 { (f64::NAN, f64::NAN) } else { (self.log_abs_h[n], self.log_s[n]) };
            let lt = self.log_htilde.as_ref().map_or(f64::NAN, |v| v[n]);
            out.write_record([n.to_string(), cell(lh), cell(ls), cell(self.big_k[n]), cell(lt), cell(self.log_divisor[n])])
                .map_err(io)?;
        }
        out.flush().map_err(|e| Error::Precondition(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn summary(&self) -> ProfileSummary<'_> {
        ProfileSummary {
            schema: SCHEMA_VERSION,
            omega: &self.omega,
            germ: &self.germ,
            n_max: self.n_max,
            prec: self.prec.bits,
            radius: &self.radius,
            gevrey: &self.gevrey,
            majorant_growth: &self.growth,
            conjugacy_worst_ratio_log2: self.conjugacy.worst_ratio_log2,
            conjugacy_pass: self.conjugacy.pass,
            index_alignment: &self.alignment,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::arith::{IrrationalSpec, Omega};
    use crate::linearize::germ::CoeffSource;

    #[test]
    fn profile_rows_and_invariants() {
        let w = Arc::new(Omega::new(IrrationalSpec::Surd(3)).unwrap());
        let g = Germ::with_default_norm(w, CoeffSource::quad()).unwrap();
        let p = build_profile(&g, &ProfileOptions { n_max: 60, prec: Precision::default(), htilde: true, window: None }).unwrap();
        assert!(p.conjugacy.pass);
        assert!(p.log_s[1..].iter().all(|&v| v >= 0.0));
        let lt = p.log_htilde.as_ref().unwrap();
        // h~_1 = |f_2| / |lambda - 1| can fall below h~_0 = 1; from there on the
        // term 2 h~_0 h~_{n-1} / |lambda^n - 1| forces growth.
        assert!(lt[1] < lt[0]);
        assert!(lt[1..].windows(2).all(|w| w[1] > w[0]));
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 62);
        assert!(text.starts_with("n,ln_abs_h,ln_s,K,ln_htilde,ln_divisor\n0,,"));
        let j = serde_json::to_string(&p.summary()).unwrap();
        assert!(j.contains("\"schema\""));
        assert_eq!(p.alignment.as_ref().unwrap().compared, 60);
    }
}
