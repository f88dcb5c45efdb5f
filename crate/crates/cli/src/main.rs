use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;
use siegel_cli::config::{parse_config, Certificate, ConfigError, ExperimentConfig, Format, Resolved, PREC_CAP_ENV};
use siegel_cli::run::{error_envelope, execute, Report};

/// Certified small-divisor computations: continued fractions, Brjuno sums,
/// Davie bounds, weight sequences and linearization series.
///
/// Exit status: 0 when every requested certificate passes, 1 on a failed
/// certificate or computation, 2 on a configuration error.
#[derive(Parser, Debug)]
#[command(name = "siegel", version)]
struct Cli {
    /// TOML experiment config; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for JSON/CSV artifacts and the resolved config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact formats written to --out.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
    /// Working precision in bits.
    #[arg(long, global = true)]
    prec: Option<u32>,
    /// Precision cap in bits (also settable through SIEGEL_PREC_CAP).
    #[arg(long = "prec-cap", global = true)]
    prec_cap: Option<u32>,
    #[command(subcommand)]
    verb: Option<Verb>,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Convergent table with structural checks.
    Cf {
        /// Rotation number, e.g. golden, sqrt:2, cf:[0;1,(2)], rule:square.
        #[arg(long)]
        omega: Option<String>,
        /// Number of partial quotients.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Brjuno partial sums and arithmetical condition diagnostics.
    Brjuno {
        /// Rotation number, e.g. golden, sqrt:2, cf:[0;1,(2)], rule:square.
        #[arg(long)]
        omega: Option<String>,
        /// Number of partial quotients.
        #[arg(long)]
        depth: Option<usize>,
        /// Arithmetical condition to diagnose (repeatable).
        #[arg(long = "condition")]
        conditions: Vec<String>,
        /// Weight sequence, e.g. one, gevrey:1, powertower:1,1.5, custom:[1,1,2] (repeatable).
        #[arg(long = "weight")]
        weights: Vec<String>,
    },
    /// Davie's K(n) and its property checks.
    Davie {
        /// Rotation number, e.g. golden, sqrt:2, cf:[0;1,(2)], rule:square.
        #[arg(long)]
        omega: Option<String>,
        /// Largest order n.
        #[arg(long = "N", visible_alias = "n-max")]
        n_max: Option<usize>,
    },
    /// Axiom certificates for weight sequences.
    Weights {
        /// Weight sequence, e.g. one, gevrey:1, powertower:1,1.5, custom:[1,1,2] (repeatable).
        #[arg(long = "weight")]
        weights: Vec<String>,
        /// Index up to which the axioms are checked.
        #[arg(long = "check-to")]
        check_to: Option<usize>,
    },
    /// Linearization profile and bound certificates.
    Linearize {
        /// Rotation number, e.g. golden, sqrt:2, cf:[0;1,(2)], rule:square.
        #[arg(long)]
        omega: Option<String>,
        /// Germ coefficients, e.g. quad, cubic, poly:[1,-2], gevrey:1.
        #[arg(long)]
        germ: Option<String>,
        /// Largest order n.
        #[arg(long = "N", visible_alias = "n-max")]
        n_max: Option<usize>,
        /// Bound certificate to check (repeatable).
        #[arg(long, value_enum)]
        certify: Vec<Certificate>,
        /// Weight sequence, e.g. one, gevrey:1, powertower:1,1.5, custom:[1,1,2] (repeatable).
        #[arg(long = "weight")]
        weights: Vec<String>,
        /// Also compute the h~ majorant series.
        #[arg(long)]
        htilde: bool,
        /// Number of trailing orders used by the estimators.
        #[arg(long)]
        window: Option<usize>,
        /// Accept weights that fail an axiom.
        #[arg(long)]
        permissive: bool,
    },
    /// Divergence witness along the index set U.
    Diverge {
        /// Rotation number, e.g. golden, sqrt:2, cf:[0;1,(2)], rule:square.
        #[arg(long)]
        omega: Option<String>,
        /// Germ coefficients, e.g. quad, cubic, poly:[1,-2], gevrey:1.
        #[arg(long)]
        germ: Option<String>,
        /// Weight sequence M_n, e.g. gevrey:1.
        #[arg(long)]
        weight: Option<String>,
        /// Largest reachable order for the witness.
        #[arg(long)]
        budget: Option<usize>,
        /// Accept a weight that fails an axiom.
        #[arg(long)]
        permissive: bool,
    },
    /// The acceptance suite.
    Suite {
        /// Criteria to run, comma separated (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

fn some_vec<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

fn flags(cli: Cli) -> ExperimentConfig {
    use siegel_cli::config::Command as C;
    let mut c = ExperimentConfig::default();
    c.output.dir = cli.out;
    c.output.formats = some_vec(cli.format);
    c.precision.bits = cli.prec;
    c.precision.cap = cli.prec_cap;
    match cli.verb {
        None => {}
        Some(Verb::Cf { omega, depth }) => {
            c.command = Some(C::Cf);
            c.omega = omega;
            c.orders.depth = depth;
        }
        Some(Verb::Brjuno { omega, depth, conditions, weights }) => {
            c.command = Some(C::Brjuno);
            c.omega = omega;
            c.orders.depth = depth;
            c.conditions = some_vec(conditions);
            c.weights = some_vec(weights);
        }
        Some(Verb::Davie { omega, n_max }) => {
            c.command = Some(C::Davie);
            c.omega = omega;
            c.orders.n_max = n_max;
        }
        Some(Verb::Weights { weights, check_to }) => {
            c.command = Some(C::Weights);
            c.weights = some_vec(weights);
            c.orders.check_to = check_to;
        }
        Some(Verb::Linearize { omega, germ, n_max, certify, weights, htilde, window, permissive }) => {
            c.command = Some(C::Linearize);
            c.omega = omega;
            c.germ = germ;
            c.orders.n_max = n_max;
            c.certify = some_vec(certify);
            c.weights = some_vec(weights);
            c.htilde = htilde.then_some(true);
            c.orders.window = window;
            c.permissive = permissive.then_some(true);
        }
        Some(Verb::Diverge { omega, germ, weight, budget, permissive }) => {
            c.command = Some(C::Diverge);
            c.omega = omega;
            c.germ = germ;
            c.weights = weight.map(|w| vec![w]);
            c.orders.budget = budget;
            c.permissive = permissive.then_some(true);
        }
        Some(Verb::Suite { criteria }) => {
            c.command = Some(C::Suite);
            c.criteria = some_vec(criteria);
        }
    }
    c
}

fn resolve(cli: Cli) -> Result<Resolved, ConfigError> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let cap_flag = cli.prec_cap.is_some();
    let env = std::env::var(PREC_CAP_ENV).ok();
    base.overlay(flags(cli)).resolve(env.as_deref(), cap_flag)
}

fn write_artifacts(dir: &Path, r: &Resolved, doc: &str, report: Option<&Report>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let formats = r.config.output.formats.clone().unwrap_or_default();
    let config = toml::to_string(&r.config).expect("configs serialize");
    std::fs::write(dir.join("config.toml"), config)?;
    if formats.contains(&Format::Json) {
        std::fs::write(dir.join(format!("{}.json", r.command.name())), doc)?;
    }
    if let (true, Some(rep)) = (formats.contains(&Format::Csv), report) {
        for (name, bytes) in &rep.csv {
            std::fs::write(dir.join(name), bytes)?;
        }
    }
    Ok(())
}

fn emit(r: &Resolved, doc: &Value, report: Option<&Report>) -> Result<(), ExitCode> {
    let mut text = serde_json::to_string_pretty(doc).expect("reports serialize");
    text.push('\n');
    print!("{text}");
    if let Some(dir) = &r.config.output.dir {
        if let Err(e) = write_artifacts(dir, r, &text, report) {
            eprintln!("error: cannot write artifacts to {}: {e}", dir.display());
            return Err(ExitCode::from(2));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let resolved = match resolve(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&resolved) {
        Ok(report) => {
            let doc = report.envelope(&resolved);
            if let Err(code) = emit(&resolved, &doc, Some(&report)) {
                return code;
            }
            if report.pass() {
                ExitCode::SUCCESS
            } else {
                let names: Vec<&str> = report.violations.iter().map(|v| v.check.as_str()).collect();
                eprintln!("certificate failure: {}", names.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let doc = error_envelope(&resolved, &e);
            if let Err(code) = emit(&resolved, &doc, None) {
                return code;
            }
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
