//! Text forms of rotation numbers, germs and weights.
//!
//! ```text
//! golden | sqrt:D | cf:[0;a1,...,(p1,...)] | dec:V err=E
//! rule:expq sigma=S | rule:expqpow alpha=A beta=B | rule:square | rule:const a=N | rule:qpowq
//! quad | cubic | ones | koebe | poly:[f2,f3,...] | gevrey:S
//! gevrey:S | powertower:A,B | one | custom:[M1,M2,...]
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::arith::{GeneratorRule, IrrationalSpec, Param};
use crate::error::{Error, Result};
use crate::linearize::CoeffSource;
use crate::weights::WeightKind;

/// Longest accepted input; keeps pathological strings cheap to reject.
pub const MAX_LEN: usize = 1 << 16;

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn guard(s: &str) -> Result<&str> {
    if s.len() > MAX_LEN {
        return Err(perr("input too long"));
    }
    Ok(s.trim())
}

/// `k=v` pairs separated by whitespace; each key at most once and all required.
fn keyvals<'a>(rest: &'a str, keys: &[&str]) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut out = BTreeMap::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| perr(format!("expected key=value, got `{tok}`")))?;
        if !keys.contains(&k) {
            return Err(perr(format!("unknown key `{k}`")));
        }
        if out.insert(k, v).is_some() {
            return Err(perr(format!("duplicate key `{k}`")));
        }
    }
    for k in keys {
        if !out.contains_key(k) {
            return Err(perr(format!("missing `{k}=`")));
        }
    }
    Ok(out)
}

fn bracketed<'a>(s: &'a str, what: &str) -> Result<&'a str> {
    s.trim()
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .ok_or_else(|| perr(format!("{what} must be enclosed in [...]")))
}

fn list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| perr(format!("bad {what} `{}`", x.trim()))))
        .collect()
}

fn continued_fraction(body: &str) -> Result<IrrationalSpec> {
    let inner = bracketed(body, "cf")?;
    let (a0, rest) = inner.split_once(';').ok_or_else(|| perr("cf needs `a0;` before the quotients"))?;
    let _: BigUint = a0.trim().parse().map_err(|_| perr(format!("bad integer part `{a0}`")))?;
    let rest = rest.trim();
    let (head, period) = match rest.find('(') {
        Some(i) => {
            let p = rest[i + 1..].strip_suffix(')').ok_or_else(|| perr("period must close with `)` at the end"))?;
            let h = rest[..i].trim().trim_end_matches(',');
            (h, Some(p))
        }
        None => (rest, None),
    };
    if head.contains(')') {
        return Err(perr("unbalanced period"));
    }
    Ok(IrrationalSpec::Quotients {
        head: list(head, "partial quotient")?,
        period: match period {
            Some(p) => {
                let v: Vec<BigUint> = list(p, "partial quotient")?;
                if v.is_empty() {
                    return Err(perr("empty period"));
                }
                v
            }
            None => Vec::new(),
        },
    })
}

impl FromStr for GeneratorRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<GeneratorRule> {
        let s = guard(s)?;
        let body = s.strip_prefix("rule:").ok_or_else(|| perr("rules start with `rule:`"))?;
        let (name, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        match name {
            "expq" => {
                let kv = keyvals(rest, &["sigma"])?;
                Ok(GeneratorRule::ExpQ { sigma: kv["sigma"].parse()? })
            }
            "expqpow" => {
                let kv = keyvals(rest, &["alpha", "beta"])?;
                Ok(GeneratorRule::ExpQPow { alpha: kv["alpha"].parse()?, beta: kv["beta"].parse()? })
            }
            "const" => {
                let kv = keyvals(rest, &["a"])?;
                Ok(GeneratorRule::Const { a: kv["a"].parse().map_err(|_| perr("rule:const needs an integer a"))? })
            }
            "square" | "qpowq" => {
                keyvals(rest, &[])?;
                Ok(if name == "square" { GeneratorRule::Square } else { GeneratorRule::QPowQ })
            }
            _ => Err(perr(format!("unknown rule `{name}`"))),
        }
    }
}

impl FromStr for IrrationalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<IrrationalSpec> {
        let s = guard(s)?;
        if s == "golden" {
            return Ok(IrrationalSpec::Golden);
        }
        if let Some(d) = s.strip_prefix("sqrt:") {
            return d.trim().parse().map(IrrationalSpec::Surd).map_err(|_| perr(format!("bad radicand `{d}`")));
        }
        if let Some(body) = s.strip_prefix("cf:") {
            return continued_fraction(body);
        }
        if s.starts_with("rule:") {
            return Ok(IrrationalSpec::Rule(s.parse()?));
        }
        if let Some(body) = s.strip_prefix("dec:") {
            let (v, rest) = body.split_once(char::is_whitespace).ok_or_else(|| perr("dec needs `err=`"))?;
            let kv = keyvals(rest, &["err"])?;
            return Ok(IrrationalSpec::Decimal { value: v.parse()?, err: kv["err"].parse()? });
        }
        Err(perr(format!("unknown rotation number `{s}`")))
    }
}

impl FromStr for CoeffSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<CoeffSource> {
        let s = guard(s)?;
        match s {
            "quad" => return Ok(CoeffSource::quad()),
            "cubic" => return Ok(CoeffSource::Poly(vec![Param::from_i64(0), Param::from_i64(1)])),
            "ones" => return Ok(CoeffSource::Ones),
            "koebe" => return Ok(CoeffSource::Koebe),
            _ => {}
        }
        if let Some(body) = s.strip_prefix("poly:") {
            let c: Vec<Param> = list(bracketed(body, "poly")?, "coefficient")?;
            if c.iter().all(Param::is_zero) {
                return Err(perr("poly needs a nonzero coefficient"));
            }
            return Ok(CoeffSource::Poly(c));
        }
        if let Some(v) = s.strip_prefix("gevrey:") {
            let p: Param = v.parse()?;
            if !p.is_positive() {
                return Err(perr("gevrey germ needs s > 0"));
            }
            return Ok(CoeffSource::Gevrey { s: p });
        }
        Err(perr(format!("unknown germ `{s}`")))
    }
}

impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<WeightKind> {
        let s = guard(s)?;
        if s == "one" {
            return Ok(WeightKind::ConstantOne);
        }
        if let Some(v) = s.strip_prefix("gevrey:") {
            return Ok(WeightKind::Gevrey { s: v.parse()? });
        }
        if let Some(v) = s.strip_prefix("powertower:").or_else(|| s.strip_prefix("power-tower:")) {
            let (a, b) = v.split_once(',').ok_or_else(|| perr("powertower needs `a,b`"))?;
            return Ok(WeightKind::PowerTower { a: a.parse()?, b: b.parse()? });
        }
        if let Some(body) = s.strip_prefix("custom:") {
            let values: Vec<Param> = list(bracketed(body, "custom")?, "weight value")?;
            if values.is_empty() {
                return Err(perr("custom weight needs values"));
            }
            return Ok(WeightKind::Custom { values });
        }
        Err(perr(format!("unknown weight `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn bu(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn omega_forms() {
        assert_eq!("golden".parse::<IrrationalSpec>().unwrap(), IrrationalSpec::Golden);
        assert_eq!(" sqrt:2 ".parse::<IrrationalSpec>().unwrap(), IrrationalSpec::Surd(2));
        assert_eq!(
            "cf:[0;1,(2)]".parse::<IrrationalSpec>().unwrap(),
            IrrationalSpec::Quotients { head: bu(&[1]), period: bu(&[2]) }
        );
        assert_eq!(
            "cf:[0; (3, 1)]".parse::<IrrationalSpec>().unwrap(),
            IrrationalSpec::Quotients { head: vec![], period: bu(&[3, 1]) }
        );
        assert_eq!(
            "cf:[0;1,2]".parse::<IrrationalSpec>().unwrap(),
            IrrationalSpec::Quotients { head: bu(&[1, 2]), period: vec![] }
        );
        assert_eq!("cf:[6;]".parse::<IrrationalSpec>().unwrap().to_string(), "cf:[0;]");
        let r: IrrationalSpec = "rule:expqpow beta=0.5 alpha=2".parse().unwrap();
        assert_eq!(r.to_string(), "rule:expqpow alpha=2 beta=0.5");
        assert_eq!("rule:square".parse::<IrrationalSpec>().unwrap().to_string(), "rule:square");
        assert_eq!("rule:const a=3".parse::<IrrationalSpec>().unwrap().to_string(), "rule:const a=3");
        assert_eq!("dec:0.3 err=1e-6".parse::<IrrationalSpec>().unwrap().to_string(), "dec:0.3 err=1e-6");
        for bad in [
            "", "gold", "sqrt:", "sqrt:-2", "cf:0;1", "cf:[0;(1]", "cf:[0;()]", "cf:[0;1),(2]", "rule:expq",
            "rule:expq sigma=1 sigma=2", "rule:square x=1", "rule:nope", "dec:0.3", "dec:0.3 e=1",
        ] {
            assert!(bad.parse::<IrrationalSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn germ_and_weight_forms() {
        assert_eq!("quad".parse::<CoeffSource>().unwrap().to_string(), "quad");
        assert_eq!("cubic".parse::<CoeffSource>().unwrap().to_string(), "cubic");
        assert_eq!("poly:[1, -0.5]".parse::<CoeffSource>().unwrap().to_string(), "poly:[1,-0.5]");
        assert_eq!("gevrey:0.5".parse::<CoeffSource>().unwrap().to_string(), "gevrey:0.5");
        for bad in ["poly:[]", "poly:[0,0]", "poly:1,2", "gevrey:-1", "cube"] {
            assert!(bad.parse::<CoeffSource>().is_err(), "{bad}");
        }
        assert_eq!("powertower:1,1.5".parse::<WeightKind>().unwrap().to_string(), "powertower:1,1.5");
        assert_eq!("power-tower:1,1.5".parse::<WeightKind>().unwrap().to_string(), "powertower:1,1.5");
        assert_eq!("one".parse::<WeightKind>().unwrap(), WeightKind::ConstantOne);
        assert_eq!("custom:[1,2,6]".parse::<WeightKind>().unwrap().to_string(), "custom:[1,2,6]");
        for bad in ["gevrey:", "powertower:1", "custom:[]", "two"] {
            assert!(bad.parse::<WeightKind>().is_err(), "{bad}");
        }
    }

    fn spec_strategy() -> impl Strategy<Value = IrrationalSpec> {
        prop_oneof![
            Just(IrrationalSpec::Golden),
            (2u64..10_000).prop_map(IrrationalSpec::Surd),
            (prop::collection::vec(1u64..50, 0..5), prop::collection::vec(1u64..50, 1..4))
                .prop_map(|(h, p)| IrrationalSpec::Quotients { head: bu(&h), period: bu(&p) }),
            (1u64..100).prop_map(|a| IrrationalSpec::Rule(GeneratorRule::Const { a })),
            (1i64..20).prop_map(|s| IrrationalSpec::Rule(GeneratorRule::ExpQ { sigma: Param::from_i64(s) })),
            Just(IrrationalSpec::Rule(GeneratorRule::Square)),
            Just(IrrationalSpec::Rule(GeneratorRule::QPowQ)),
        ]
    }

    proptest! {
        #[test]
        fn omega_display_roundtrips(spec in spec_strategy()) {
            let text = spec.to_string();
            prop_assert_eq!(text.parse::<IrrationalSpec>().unwrap(), spec);
        }

        #[test]
        fn parsers_never_panic(s in "\\PC{0,40}") {
            let _ = s.parse::<IrrationalSpec>();
            let _ = s.parse::<CoeffSource>();
            let _ = s.parse::<WeightKind>();
        }
    }
}
