//! Experiment configuration: the TOML schema, flag overlays and resolution
//! into domain objects.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use siegel_core::arith::{IrrationalSpec, Omega, Precision};
use siegel_core::brjuno::Condition;
use siegel_core::linearize::{CoeffSource, Germ};
use siegel_core::suite::CRITERIA;
use siegel_core::weights::{make_weight, WeightKind, WeightSequence, DEFAULT_CHECK_TO};

/// Environment variable overriding the precision cap of a config file.
pub const PREC_CAP_ENV: &str = "SIEGEL_PREC_CAP";
pub const MAX_PREC_BITS: u32 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Cf,
    Brjuno,
    Davie,
    Weights,
    Linearize,
    Diverge,
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Cf => "cf",
            Command::Brjuno => "brjuno",
            Command::Davie => "davie",
            Command::Weights => "weights",
            Command::Linearize => "linearize",
            Command::Diverge => "diverge",
            Command::Suite => "suite",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Hest3,
    Weight,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orders {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_to: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

/// One experiment. Every field is optional so that files and flags can be
/// layered; [`ExperimentConfig::resolve`] fills in defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub germ: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certify: Option<Vec<Certificate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub htilde: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permissive: Option<bool>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub orders: Orders,
    #[serde(default, skip_serializing_if = "is_default")]
    pub precision: PrecisionConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputConfig,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<siegel_core::Error> for ConfigError {
    fn from(e: siegel_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn cerr(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| cerr(format!("config: {}", e.message())))
}

/// Everything a command needs, validated.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub command: Command,
    /// The fully specified config, as emitted with every report.
    pub config: ExperimentConfig,
    pub omega: Option<Arc<Omega>>,
    pub germ: Option<Germ>,
    pub weights: Vec<WeightSequence>,
    pub conditions: Vec<Condition>,
    pub prec: Precision,
}

impl Resolved {
    pub fn omega(&self) -> &Arc<Omega> {
        self.omega.as_ref().expect("resolved commands that need omega carry one")
    }

    pub fn germ(&self) -> &Germ {
        self.germ.as_ref().expect("resolved commands that need a germ carry one")
    }

    pub fn orders(&self) -> &Orders {
        &self.config.orders
    }
}

impl ExperimentConfig {
    /// Fields set in `top` win over those in `self`.
    pub fn overlay(mut self, top: ExperimentConfig) -> ExperimentConfig {
        macro_rules! take {
            ($($f:ident).+) => {
                if top.$($f).+.is_some() {
                    self.$($f).+ = top.$($f).+;
                }
            };
        }
        take!(command);
        take!(omega);
        take!(germ);
        take!(weights);
        take!(conditions);
        take!(certify);
        take!(criteria);
        take!(htilde);
        take!(permissive);
        take!(orders.n_max);
        take!(orders.depth);
        take!(orders.budget);
        take!(orders.check_to);
        take!(orders.window);
        take!(precision.bits);
        take!(precision.cap);
        take!(output.dir);
        take!(output.formats);
        self
    }

    /// Applies defaults and builds the domain objects. `env_cap` is the value
    /// of [`PREC_CAP_ENV`], which overrides the file but not an explicit flag.
    pub fn resolve(self, env_cap: Option<&str>, cap_flag: bool) -> Result<Resolved, ConfigError> {
        let mut c = self;
        let command = c.command.ok_or_else(|| cerr("no command given (use a subcommand or `command = ...`)"))?;
        if let (Some(v), false) = (env_cap, cap_flag) {
            let cap = v.trim().parse::<u32>().map_err(|_| cerr(format!("{PREC_CAP_ENV}: `{v}` is not a bit count")))?;
            c.precision.cap = Some(cap);
        }
        let bits = *c.precision.bits.get_or_insert(256);
        let cap = *c.precision.cap.get_or_insert(8192);
        if !(16..=MAX_PREC_BITS).contains(&bits) || cap > MAX_PREC_BITS {
            return Err(cerr(format!("precision must lie in 16..={MAX_PREC_BITS} bits")));
        }
        if cap < bits {
            return Err(cerr(format!("precision cap {cap} is below the working precision {bits}")));
        }
        let prec = Precision::new(bits, cap);
        if c.output.dir.is_some() && c.output.formats.is_none() {
            c.output.formats = Some(vec![Format::Json, Format::Csv]);
        }

        let uses_omega = !matches!(command, Command::Weights | Command::Suite);
        let uses_germ = matches!(command, Command::Linearize | Command::Diverge);
        let omega = if uses_omega {
            let text = c.omega.as_deref().ok_or_else(|| cerr(format!("`{}` needs an omega", command.name())))?;
            let spec: IrrationalSpec = text.parse()?;
            c.omega = Some(spec.to_string());
            Some(Arc::new(Omega::new(spec)?))
        } else {
            c.omega = None;
            None
        };
        let germ = if uses_germ {
            let src: CoeffSource = c.germ.as_deref().unwrap_or("quad").parse()?;
            c.germ = Some(src.to_string());
            Some(Germ::with_default_norm(omega.clone().expect("omega resolved"), src)?)
        } else {
            c.germ = None;
            None
        };

        let o = &mut c.orders;
        let mut keep = |n_max: bool, depth: bool, budget: bool, check_to: bool, window: bool| {
            if !n_max {
                o.n_max = None;
            }
            if !depth {
                o.depth = None;
            }
            if !budget {
                o.budget = None;
            }
            if !check_to {
                o.check_to = None;
            }
            if !window {
                o.window = None;
            }
        };
        match command {
            Command::Cf | Command::Brjuno => keep(false, true, false, false, false),
            Command::Davie | Command::Linearize => keep(true, false, false, false, command == Command::Linearize),
            Command::Weights => keep(false, false, false, true, false),
            Command::Diverge => keep(false, false, true, false, false),
            Command::Suite => keep(false, false, false, false, false),
        }
        match command {
            Command::Cf | Command::Brjuno => {
                let d = *o.depth.get_or_insert(siegel_core::contfrac::DEFAULT_DEPTH);
                if d == 0 || d > 10_000 {
                    return Err(cerr("depth must lie in 1..=10000"));
                }
            }
            Command::Davie => check_n(*o.n_max.get_or_insert(2000), 2)?,
            Command::Linearize => {
                let n = *o.n_max.get_or_insert(300);
                check_n(n, 2)?;
                if let Some(w) = o.window {
                    if w < siegel_core::linearize::estimators::MIN_WINDOW || w > n {
                        return Err(cerr(format!("window must lie in 20..={n}")));
                    }
                }
            }
            Command::Weights => {
                let k = *o.check_to.get_or_insert(DEFAULT_CHECK_TO);
                if !(2..=5000).contains(&k) {
                    return Err(cerr("check_to must lie in 2..=5000"));
                }
            }
            Command::Diverge => {
                let b = *o.budget.get_or_insert(10_000);
                check_n(b, 2)?;
            }
            Command::Suite => {}
        }

        let permissive = command == Command::Weights || c.permissive.unwrap_or(false);
        let weight_texts = match command {
            Command::Diverge => Some(c.weights.clone().unwrap_or_else(|| vec!["gevrey:1".into()])),
            Command::Weights | Command::Brjuno | Command::Linearize => c.weights.clone(),
            _ => None,
        };
        let check_to = c.orders.check_to.unwrap_or(DEFAULT_CHECK_TO);
        let mut weights = Vec::new();
        for text in weight_texts.iter().flatten() {
            let kind: WeightKind = text.parse()?;
            if let (WeightKind::Custom { values }, Command::Weights) = (&kind, command) {
                if values.len() < check_to {
                    return Err(cerr(format!("{kind} defines {} values; check_to is {check_to}", values.len())));
                }
            }
            weights.push(make_weight(kind, check_to, permissive)?);
        }
        c.weights = weight_texts.map(|_| weights.iter().map(WeightSequence::name).collect());
        if command == Command::Weights && weights.is_empty() {
            return Err(cerr("`weights` needs at least one weight"));
        }
        if command == Command::Diverge && weights.len() != 1 {
            return Err(cerr("`diverge` takes exactly one weight"));
        }

        let mut conditions = Vec::new();
        if command == Command::Brjuno {
            let texts = c.conditions.clone().unwrap_or_else(|| vec!["brjuno".into()]);
            for t in &texts {
                let cond: Condition = t.parse()?;
                let need = match cond {
                    Condition::BrjunoM => 1,
                    Condition::BrjunoMN => 2,
                    _ => 0,
                };
                if weights.len() < need {
                    return Err(cerr(format!("condition {cond} needs {need} weight(s)")));
                }
                conditions.push(cond);
            }
            c.conditions = Some(conditions.iter().map(|x| x.name().to_string()).collect());
        } else {
            c.conditions = None;
        }

        if command == Command::Linearize {
            let certs = c.certify.get_or_insert_with(Vec::new);
            certs.dedup();
            let g = germ.as_ref().expect("germ resolved");
            for cert in certs.iter() {
                match cert {
                    Certificate::Hest3 if !g.is_schlicht_bounded() => {
                        return Err(cerr(format!("hest3 needs a germ with |f_n| <= n; {} is not", g.label())))
                    }
                    Certificate::Weight if weights.is_empty() => {
                        return Err(cerr("the weight certificate needs --weight"))
                    }
                    Certificate::Weight if g.weight_bound().is_none() => {
                        return Err(cerr(format!("{} carries no weight bound", g.label())))
                    }
                    _ => {}
                }
            }
            c.htilde.get_or_insert(false);
        } else {
            c.certify = None;
            c.htilde = None;
        }

        if command == Command::Suite {
            let ids = c.criteria.get_or_insert_with(|| CRITERIA.to_vec());
            ids.sort_unstable();
            ids.dedup();
            if let Some(bad) = ids.iter().find(|i| !CRITERIA.contains(i)) {
                return Err(cerr(format!("no criterion {bad}")));
            }
        } else {
            c.criteria = None;
        }
        c.permissive = (command != Command::Weights && c.weights.is_some()).then_some(permissive);
        c.command = Some(command);
        Ok(Resolved { command, config: c, omega, germ, weights, conditions, prec })
    }
}

fn check_n(n: usize, lo: usize) -> Result<(), ConfigError> {
    if n < lo || n > 1_000_000 {
        return Err(cerr(format!("order {n} outside {lo}..=1000000")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("omega = \"golden\"\nbogus = 1").is_err());
        assert!(parse_config("[orders]\nN = 3").is_err());
        assert!(parse_config("command = \"fly\"").is_err());
        let c = parse_config("command = \"cf\"\nomega = \"golden\"\n[orders]\ndepth = 12").unwrap();
        assert_eq!(c.command, Some(Command::Cf));
        assert_eq!(c.orders.depth, Some(12));
    }

    #[test]
    fn overlay_and_defaults() {
        let file = parse_config("command = \"linearize\"\nomega = \"sqrt:2\"\n[orders]\nn_max = 50").unwrap();
        let flags = ExperimentConfig { omega: Some("golden".into()), ..Default::default() };
        let r = file.overlay(flags).resolve(None, false).unwrap();
        assert_eq!(r.config.omega.as_deref(), Some("golden"));
        assert_eq!(r.config.germ.as_deref(), Some("quad"));
        assert_eq!(r.config.orders.n_max, Some(50));
        assert_eq!(r.config.orders.depth, None);
        assert_eq!(r.prec, Precision::new(256, 8192));
        // The resolved config is itself a valid config that resolves to itself.
        let text = toml::to_string(&r.config).unwrap();
        let again = parse_config(&text).unwrap().resolve(None, false).unwrap();
        assert_eq!(again.config, r.config);
    }

    #[test]
    fn env_cap_overrides_file_but_not_flag() {
        let c = parse_config("command = \"cf\"\nomega = \"golden\"\n[precision]\ncap = 1024").unwrap();
        assert_eq!(c.clone().resolve(Some("4096"), false).unwrap().prec.cap, 4096);
        assert_eq!(c.clone().resolve(Some("4096"), true).unwrap().prec.cap, 1024);
        assert!(c.clone().resolve(Some("lots"), false).is_err());
        assert!(c.resolve(Some("100"), false).is_err());
    }

    #[test]
    fn invalid_experiments() {
        let bad = [
            "command = \"cf\"",
            "command = \"cf\"\nomega = \"cf:[0;]\"",
            "command = \"cf\"\nomega = \"dec:0.5 err=0\"",
            "command = \"weights\"",
            "command = \"linearize\"\nomega = \"golden\"\ngerm = \"poly:[5]\"\ncertify = [\"hest3\"]",
            "command = \"linearize\"\nomega = \"golden\"\ncertify = [\"weight\"]",
            "command = \"brjuno\"\nomega = \"golden\"\nconditions = [\"BrjunoM\"]",
            "command = \"suite\"\ncriteria = [10]",
            "command = \"diverge\"\nomega = \"golden\"\nweights = [\"gevrey:1\", \"one\"]",
            "command = \"davie\"\nomega = \"golden\"\n[orders]\nn_max = 1",
        ];
        for text in bad {
            let c = parse_config(text).unwrap();
            assert!(c.resolve(None, false).is_err(), "{text}");
        }
    }
}
