//! Serialisable number types shared by all JSON reports.
//!
//! Every number in a report is tagged: exact values, certified enclosures
//! (midpoint and radius) or floating point estimates without a guarantee.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::arith::{BigReal, Enclosure};

/// Version string written into every JSON document.
pub const SCHEMA_VERSION: &str = "siegel-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Num {
    Exact { value: String },
    Certified { mid: String, rad: String },
    Estimate { value: f64 },
}

impl Num {
    pub fn exact(v: impl ToString) -> Num {
        Num::Exact { value: v.to_string() }
    }

    pub fn certified(x: &BigReal) -> Num {
        let e = Enclosure::from(x);
        Num::Certified { mid: e.mid, rad: e.rad }
    }

    pub fn estimate(v: f64) -> Num {
        Num::Estimate { value: v }
    }

    pub fn biguint(v: &BigUint) -> Num {
        Num::exact(v)
    }

    /// Approximate value for display and tests.
    pub fn approx(&self) -> f64 {
        match self {
            Num::Exact { value } => value.parse().unwrap_or(f64::NAN),
            Num::Certified { mid, .. } => mid.parse().unwrap_or(f64::NAN),
            Num::Estimate { value } => *value,
        }
    }
}

/// Formats a float for CSV output with a stable representation.
pub fn csv_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.12e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_json() {
        let j = serde_json::to_string(&Num::estimate(1.5)).unwrap();
        assert_eq!(j, r#"{"kind":"estimate","value":1.5}"#);
        let j = serde_json::to_string(&Num::exact(42)).unwrap();
        assert_eq!(j, r#"{"kind":"exact","value":"42"}"#);
        let x = BigReal::from_i64(3, 64);
        match Num::certified(&x) {
            Num::Certified { mid, .. } => assert!(mid.starts_with("3.0")),
            _ => unreachable!(),
        }
    }
}
