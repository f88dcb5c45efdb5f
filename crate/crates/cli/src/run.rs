//! Command execution and report assembly.

use serde::Serialize;
use serde_json::{json, Value};
use siegel_core::brjuno::{brjuno_sum, condition_diagnostic, equivalency_consistency, max_exact_depth};
use siegel_core::contfrac::{classify_diophantine, gauss_expand, table_covering, table_invariants, Decision};
use siegel_core::davie::{build_davie, davie_linear_bound, davie_properties_check};
use siegel_core::linearize::{
    build_profile, certify_majorant_bound, certify_weight_bound, divergence_witness, BoundCertificate,
    ProfileOptions,
};
use siegel_core::report::{csv_f64, SCHEMA_VERSION};
use siegel_core::suite::Suite;
use siegel_core::{Error, Result};

use crate::config::{Certificate, Command, Resolved};

const DAVIE_PREC: u32 = 128;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub detail: Value,
}

impl Violation {
    fn new(check: impl Into<String>, detail: Value) -> Violation {
        Violation { check: check.into(), detail }
    }
}

/// Outcome of one command before it is written anywhere.
#[derive(Debug)]
pub struct Report {
    pub result: Value,
    pub violations: Vec<Violation>,
    /// `(file name, contents)`.
    pub csv: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    /// The JSON document emitted for a run: resolved config, verdict and result.
    pub fn envelope(&self, r: &Resolved) -> Value {
        json!({
            "schema": SCHEMA_VERSION,
            "tool": concat!("siegel ", env!("CARGO_PKG_VERSION")),
            "command": r.command.name(),
            "config": r.config,
            "status": if self.pass() { "pass" } else { "fail" },
            "violations": self.violations,
            "result": self.result,
        })
    }
}

/// Envelope for a run that stopped with a computation error.
pub fn error_envelope(r: &Resolved, e: &Error) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "tool": concat!("siegel ", env!("CARGO_PKG_VERSION")),
        "command": r.command.name(),
        "config": r.config,
        "status": "error",
        "violations": [Violation::new("error", json!(e.to_string()))],
        "result": Value::Null,
    })
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let io = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Precondition(format!("csv: {e}")))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub fn execute(r: &Resolved) -> Result<Report> {
    match r.command {
        Command::Cf => cf(r),
        Command::Brjuno => brjuno(r),
        Command::Davie => davie(r),
        Command::Weights => weights(r),
        Command::Linearize => linearize(r),
        Command::Diverge => diverge(r),
        Command::Suite => suite(r),
    }
}

fn cf(r: &Resolved) -> Result<Report> {
    let depth = r.orders().depth.expect("resolved");
    let t = gauss_expand(r.omega().clone(), depth)?;
    let inv = table_invariants(&t)?;
    let dioph = if t.len() >= 4 { Some(classify_diophantine(&t)?) } else { None };
    let mut violations = Vec::new();
    for (name, ok) in [
        ("recurrence", inv.recurrence),
        ("lowest_terms", inv.lowest_terms),
        ("growth", inv.growth),
        ("reciprocal_sum_bounded", inv.reciprocal_sum_bounded),
        ("alternation", inv.alternation),
    ] {
        if !ok {
            violations.push(Violation::new(name, Value::Null));
        }
    }
    let bad: Vec<usize> = inv.sandwich.iter().filter(|s| s.status == Decision::Violated).map(|s| s.n).collect();
    if !bad.is_empty() {
        violations.push(Violation::new("sandwich", json!(bad)));
    }
    let rows = (0..t.len()).map(|k| vec![k.to_string(), t.a[k].to_string(), t.p[k].to_string(), t.q[k].to_string()]);
    let csv = csv_bytes(&["k", "a", "p", "q"], rows)?;
    Ok(Report {
        result: json!({ "table": to_value(&t.to_json()), "invariants": to_value(&inv), "diophantine": to_value(&dioph) }),
        violations,
        csv: vec![("cf.csv".into(), csv)],
    })
}

fn brjuno(r: &Resolved) -> Result<Report> {
    let want = r.orders().depth.expect("resolved");
    let t = gauss_expand(r.omega().clone(), want + 2)?;
    let depth = want.min(max_exact_depth(&t).unwrap_or(0));
    let sum = brjuno_sum(&t, depth)?;
    let mut diags = Vec::new();
    for &c in &r.conditions {
        let w = match r.weights.as_slice() {
            [] => None,
            [m] => Some((m, None)),
            [m, n, ..] => Some((m, Some(n))),
        };
        diags.push(to_value(&condition_diagnostic(&t, c, w, depth)?));
    }
    let equiv = if depth >= 6 { Some(to_value(&equivalency_consistency(&t, depth)?)) } else { None };
    let rows = (0..=depth).map(|k| {
        let (x, s) = (&sum.terms[k], &sum.partial_sums[k]);
        vec![k.to_string(), csv_f64(x.to_f64()), csv_f64(x.rad().to_f64()), csv_f64(s.to_f64()), csv_f64(s.rad().to_f64())]
    });
    let csv = csv_bytes(&["k", "term", "term_rad", "partial_sum", "partial_sum_rad"], rows)?;
    Ok(Report {
        result: json!({
            "requested_depth": want,
            "sum": to_value(&sum.to_json()),
            "conditions": diags,
            "equivalency": equiv,
        }),
        violations: Vec::new(),
        csv: vec![("brjuno.csv".into(), csv)],
    })
}

fn davie(r: &Resolved) -> Result<Report> {
    let n = r.orders().n_max.expect("resolved");
    let t = table_covering(r.omega().clone(), n as u64)?;
    let dt = build_davie(&t, n, DAVIE_PREC)?;
    let rep = davie_properties_check(&dt, r.omega(), n)?;
    let lin = davie_linear_bound(&dt, &t, n)?;
    let violations = rep
        .checks
        .iter()
        .filter(|c| c.violations > 0 || c.undecided > 0)
        .map(|c| {
            Violation::new(
                c.name,
                json!({ "violations": c.violations, "undecided": c.undecided, "examples": to_value(&c.examples) }),
            )
        })
        .collect();
    let mut k = Vec::new();
    dt.write_k_csv(&mut k)?;
    let mut layers = Vec::new();
    dt.write_layers_csv(&mut layers)?;
    Ok(Report {
        result: json!({ "properties": to_value(&rep), "linear_bound": to_value(&lin) }),
        violations,
        csv: vec![("davie_k.csv".into(), k), ("davie_layers.csv".into(), layers)],
    })
}

fn weights(r: &Resolved) -> Result<Report> {
    let check_to = r.orders().check_to.expect("resolved");
    let mut violations = Vec::new();
    let mut out = Vec::new();
    for w in &r.weights {
        if !w.certificates().all_hold() {
            violations.push(Violation::new(format!("axioms:{}", w.name()), to_value(w.certificates())));
        }
        out.push(to_value(&w.to_json()));
    }
    let mut header = vec!["n".to_string()];
    header.extend(r.weights.iter().map(|w| format!("ln_M[{}]", w.name())));
    let mut rows = Vec::with_capacity(check_to);
    for n in 1..=check_to {
        let mut row = vec![n.to_string()];
        for w in &r.weights {
            row.push(csv_f64(w.ln_m_f64(n)?));
        }
        rows.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv = csv_bytes(&header, rows)?;
    Ok(Report { result: json!({ "weights": out }), violations, csv: vec![("weights.csv".into(), csv)] })
}

fn bound_csv(c: &BoundCertificate) -> Result<Vec<u8>> {
    csv_bytes(
        &["n", "ln_lhs_upper", "ln_rhs_lower", "pass"],
        c.entries.iter().map(|e| vec![e.n.to_string(), csv_f64(e.ln_lhs), csv_f64(e.ln_rhs), e.pass.to_string()]),
    )
}

fn linearize(r: &Resolved) -> Result<Report> {
    let n = r.orders().n_max.expect("resolved");
    let g = r.germ();
    let opts = ProfileOptions {
        n_max: n,
        prec: r.prec,
        htilde: r.config.htilde.unwrap_or(false),
        window: r.orders().window,
    };
    let p = build_profile(g, &opts)?;
    let mut violations = Vec::new();
    if !p.conjugacy.pass {
        violations.push(Violation::new(
            "conjugacy",
            json!({ "first_bad_order": p.conjugacy.first_bad_order, "worst_ratio_log2": p.conjugacy.worst_ratio_log2 }),
        ));
    }
    let mut csv = Vec::new();
    let mut buf = Vec::new();
    p.write_csv(&mut buf)?;
    csv.push(("profile.csv".into(), buf));
    csv.push((
        "conjugacy.csv".into(),
        csv_bytes(
            &["n", "log2_residual", "log2_scale"],
            p.conjugacy.entries.iter().map(|e| vec![e.n.to_string(), csv_f64(e.log2_residual), csv_f64(e.log2_scale)]),
        )?,
    ));
    let mut certs = serde_json::Map::new();
    for cert in r.config.certify.iter().flatten() {
        let (name, bound, extra) = match cert {
            Certificate::Hest3 => ("hest3", certify_majorant_bound(g, &p.h, &p.s, &p.davie, n)?, None),
            Certificate::Weight => {
                let w = certify_weight_bound(g, &p.h, &p.s, &r.weights[0], &p.davie, &p.table, n)?;
                let extra = json!({
                    "weight": w.weight,
                    "germ_weight": w.germ_weight,
                    "deficit": w.deficit,
                    "deficit_sup": w.deficit_sup,
                    "deficit_trend": to_value(&w.deficit_trend),
                    "tag": "estimate",
                });
                ("weight", w.bound, Some(extra))
            }
        };
        if !bound.all_pass {
            violations.push(Violation::new(name, json!({ "orders": bound.failures })));
        }
        csv.push((format!("certificate_{name}.csv"), bound_csv(&bound)?));
        let mut v = to_value(&bound);
        if let (Some(extra), Value::Object(m)) = (extra, &mut v) {
            m.insert("deficit".into(), extra);
        }
        certs.insert(name.into(), v);
    }
    Ok(Report {
        result: json!({ "summary": to_value(&p.summary()), "certificates": certs }),
        violations,
        csv,
    })
}

fn diverge(r: &Resolved) -> Result<Report> {
    let budget = r.orders().budget.expect("resolved");
    let t = table_covering(r.omega().clone(), budget as u64)?;
    let w = divergence_witness(r.germ(), &t, &r.weights[0], budget)?;
    let mut violations = Vec::new();
    if w.u.is_empty() {
        violations.push(Violation::new("u_nonempty", Value::Null));
    }
    let alpha: Vec<usize> = w.u.iter().filter(|u| u.alpha_in_range == Some(false)).map(|u| u.j).collect();
    if !alpha.is_empty() {
        violations.push(Violation::new("alpha_sandwich", json!({ "j": alpha })));
    }
    let sub: Vec<usize> = w.subsequence.iter().filter(|c| !c.holds).map(|c| c.i).collect();
    if !sub.is_empty() {
        violations.push(Violation::new("subsequence", json!({ "i": sub })));
    }
    if !w.enough_points {
        violations.push(Violation::new("enough_points", json!({ "points": w.points.len() })));
    }
    if !w.increasing {
        let v: Vec<f64> = w.points.iter().map(|p| p.value).collect();
        violations.push(Violation::new("increasing", json!({ "values": v })));
    }
    if w.geometric_i2.violations > 0 {
        violations.push(Violation::new("geometric_i2", to_value(&w.geometric_i2)));
    }
    let csv = csv_bytes(
        &["i", "q", "ln_htilde", "ln_m", "value"],
        w.points.iter().map(|p| {
            vec![p.i.to_string(), p.q.to_string(), csv_f64(p.ln_htilde), csv_f64(p.ln_m), csv_f64(p.value)]
        }),
    )?;
    Ok(Report { result: to_value(&w), violations, csv: vec![("witness.csv".into(), csv)] })
}

fn suite(r: &Resolved) -> Result<Report> {
    let ids = r.config.criteria.clone().unwrap_or_default();
    let rep = Suite::new(r.prec).run(&ids)?;
    for c in &rep.criteria {
        eprintln!(
            "{} criterion {} ({}) {:.2}s",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            c.elapsed.as_secs_f64()
        );
    }
    let violations = rep
        .criteria
        .iter()
        .filter(|c| !c.pass)
        .map(|c| Violation::new(format!("criterion:{}", c.id), c.detail.clone()))
        .collect();
    let csv = csv_bytes(
        &["id", "title", "pass", "within_budget"],
        rep.criteria.iter().map(|c| vec![c.id.to_string(), c.title.into(), c.pass.to_string(), c.within_budget.to_string()]),
    )?;
    Ok(Report { result: to_value(&rep), violations, csv: vec![("suite.csv".into(), csv)] })
}
