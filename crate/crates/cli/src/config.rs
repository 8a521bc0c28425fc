//! Flat `key = value` configuration with command-line overrides.
//!
//! Resolution order: built-in default, then the `--config` file, then flags.
//! Every key a command reads is recorded in the resolved map, which is
//! embedded verbatim in the JSON artifact.

use crate::error::CliError;
use std::collections::BTreeMap;
use superefficiency::extraction::{select_epsilon, AssumptionSlack, ExtractionConfig, Interval};
use superefficiency::rational::{parse_rational, Rational};
use superefficiency::{EstimatorSpec, GaussianLocationModel, ParameterDomain};

pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, default, help }
}

pub const KEYS: &[KeySpec] = &[
    key("seed", "0", "Monte Carlo seed; row i of a table uses seed + i"),
    key("sigma", "1", "standard deviation of one observation"),
    key("domain_lower", "-inf", "lower end of the open parameter space"),
    key("domain_upper", "inf", "upper end of the open parameter space"),
    key("estimator", "mle", "one of mle, hodges, constant, piecewise-hodges"),
    key("pivot", "0", "Hodges pivot"),
    key("value", "0", "output of the constant estimator"),
    key("pivots", "0", "comma-separated pivots of the piecewise Hodges estimator"),
    key("theta1", "-0.5,0,0.3", "first parameters of the pair grid"),
    key("theta2", "0,0.1,0.5", "second parameters of the pair grid"),
    key("n", "1,10,100", "sample sizes"),
    key("p", "", "discrete distribution P (comma-separated, optional)"),
    key("q", "", "discrete distribution Q (comma-separated, optional)"),
    key("theta", "0", "parameter (comma-separated list for concentration)"),
    key("c", "1", "scale of the radius c n^-1/2 (rational for extract)"),
    key("samples", "100000", "Monte Carlo replications per row"),
    key("sampling", "sufficient-statistic", "sufficient-statistic or full-sample"),
    key("c_grid", "1,2,4,6,8,10", "ascending c values for the efficiency grid"),
    key(
        "n_grid",
        "10000,1000000,100000000,10000000000",
        "ascending n values for the efficiency grid; Hodges needs n^(1/4) well above c",
    ),
    key("a", "1/2", "threshold factor in (0, 1)"),
    key("i_bar", "1.01", "upper bound on the Fisher information over the interval"),
    key("epsilon", "1/10", "geometric shrink parameter, or auto for the largest admissible 2^-k"),
    key("assumption_slack", "0", "additive slack of the affinity condition, or epsilon to reuse epsilon"),
    key("n_min", "1", "smallest admissible sample size"),
    key("lower", "-0.05", "left end of the initial interval (rational)"),
    key("upper", "0.05", "right end of the initial interval (rational)"),
    key("grid_points", "64", "scan points per iteration"),
    key("tolerance", "0.001", "target interval width"),
    key("max_iterations", "60", "iteration cap"),
    key("assert_exists", "false", "exit 4 when no superefficient point is found"),
    key("lan_lambda", "0.5,1,2", "local alternatives for the LAN check"),
    key("lan_n", "25,100", "sample sizes for the LAN check"),
    key("lan_samples", "10000", "Monte Carlo draws per LAN configuration"),
    key("theta_list", "0,0.5", "parameters of the all-or-nothing table"),
];

const MODEL: &[&str] = &["sigma", "domain_lower", "domain_upper"];
const ESTIMATOR: &[&str] = &["estimator", "pivot", "value", "pivots"];
const EXTRACTION: &[&str] = &[
    "c",
    "a",
    "i_bar",
    "epsilon",
    "assumption_slack",
    "n_min",
    "lower",
    "upper",
    "grid_points",
    "tolerance",
    "max_iterations",
];

pub const COMMANDS: &[(&str, &str)] = &[
    ("affinity", "affinity tables: closed form against half-space and quadrature routes"),
    ("tv", "variation-distance tables: closed form against half-space and quadrature routes"),
    ("concentration", "exact against Monte Carlo concentration probabilities"),
    ("efficiency", "inner-value matrix and asymptotic efficiency estimate"),
    ("extract", "recover the superefficiency point by certified interval shrinking"),
    ("check-assumptions", "slack tables for the regularity conditions and the LAN report"),
    ("demo", "Hodges pivot recovery end to end"),
];

/// Keys read by `command`, in registry order.
pub fn command_keys(command: &str) -> Vec<&'static str> {
    let own: Vec<&[&str]> = match command {
        "affinity" | "tv" => vec![MODEL, &["theta1", "theta2", "n", "p", "q"]],
        "concentration" => vec![MODEL, ESTIMATOR, &["theta", "n", "c", "samples", "sampling", "seed"]],
        "efficiency" => vec![MODEL, ESTIMATOR, &["theta", "c_grid", "n_grid"]],
        "extract" => vec![MODEL, ESTIMATOR, EXTRACTION, &["assert_exists"]],
        "check-assumptions" => {
            vec![MODEL, &["theta", "theta1", "theta2", "n", "epsilon", "lan_lambda", "lan_n", "lan_samples", "seed"]]
        }
        "demo" => vec![&["pivot", "tolerance", "theta_list", "c_grid", "n_grid"]],
        _ => vec![],
    };
    let wanted: Vec<&str> = own.concat();
    KEYS.iter().map(|k| k.name).filter(|k| wanted.contains(k)).collect()
}

/// Per-command default overrides where the shared default does not fit.
fn command_default(command: &str, key: &str) -> Option<&'static str> {
    match (command, key) {
        ("check-assumptions", "epsilon") => Some("0"),
        ("check-assumptions", "n") => Some("1,10,100,1000"),
        ("extract", "estimator") => Some("hodges"),
        ("efficiency", "estimator") => Some("hodges"),
        ("concentration", "theta") => Some("0,0.1,0.5"),
        ("concentration", "n") => Some("10,100,1000"),
        ("concentration", "c") => Some("0.5,1,2"),
        _ => None,
    }
}

pub fn default_for(command: &str, key: &str) -> &'static str {
    command_default(command, key)
        .or_else(|| KEYS.iter().find(|k| k.name == key).map(|k| k.default))
        .unwrap_or("")
}

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::config(None, format!("line {}: expected key = value", lineno + 1)));
        };
        let k = k.trim().replace('-', "_");
        if !KEYS.iter().any(|spec| spec.name == k) {
            return Err(CliError::config(Some(&k), format!("line {}: unknown key", lineno + 1)));
        }
        entries.push((k, v.trim().to_string()));
    }
    Ok(entries)
}

/// The resolved configuration of one command.
#[derive(Debug, Clone)]
pub struct Settings {
    pub map: BTreeMap<String, String>,
}

impl Settings {
    pub fn resolve(
        command: &str,
        file_entries: &[(String, String)],
        flag_entries: &[(String, String)],
    ) -> Settings {
        let keys = command_keys(command);
        let mut map: BTreeMap<String, String> =
            keys.iter().map(|k| (k.to_string(), default_for(command, k).to_string())).collect();
        for (k, v) in file_entries.iter().chain(flag_entries) {
            if keys.contains(&k.as_str()) {
                map.insert(k.clone(), v.clone());
            }
        }
        Settings { map }
    }

    fn raw(&self, key: &str) -> &str {
        self.map.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T, CliError> {
        self.raw(key)
            .parse()
            .map_err(|_| CliError::config(Some(key), format!("expected {what}, got {:?}", self.raw(key))))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.parse(key, "a number")
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.parse(key, "a nonnegative integer")
    }

    pub fn u32(&self, key: &str) -> Result<u32, CliError> {
        self.parse(key, "a nonnegative integer")
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        self.parse(key, "true or false")
    }

    pub fn string(&self, key: &str) -> &str {
        self.raw(key)
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Vec<T>, CliError> {
        let raw = self.raw(key).trim();
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| CliError::config(Some(key), format!("expected a list of {what}, got {item:?}")))
            })
            .collect()
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.list(key, "numbers")
    }

    pub fn u64_list(&self, key: &str) -> Result<Vec<u64>, CliError> {
        self.list(key, "nonnegative integers")
    }

    pub fn nonempty_f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = self.f64_list(key)?;
        if v.is_empty() {
            return Err(CliError::config(Some(key), "list must not be empty"));
        }
        Ok(v)
    }

    pub fn nonempty_u64_list(&self, key: &str) -> Result<Vec<u64>, CliError> {
        let v = self.u64_list(key)?;
        if v.is_empty() {
            return Err(CliError::config(Some(key), "list must not be empty"));
        }
        Ok(v)
    }

    pub fn rational(&self, key: &str) -> Result<Rational, CliError> {
        parse_rational(self.raw(key)).map_err(|e| CliError::config(Some(key), e.to_string()))
    }

    pub fn model(&self) -> Result<GaussianLocationModel, CliError> {
        let domain = ParameterDomain::new(self.f64("domain_lower")?, self.f64("domain_upper")?)
            .map_err(|e| CliError::config(Some("domain_lower"), e.to_string()))?;
        GaussianLocationModel::new(self.f64("sigma")?, domain).map_err(|e| CliError::config(Some("sigma"), e.to_string()))
    }

    pub fn estimator(&self) -> Result<EstimatorSpec, CliError> {
        Ok(match self.string("estimator") {
            "mle" => EstimatorSpec::Mle,
            "hodges" => EstimatorSpec::hodges(self.f64("pivot")?),
            "constant" => EstimatorSpec::constant(self.f64("value")?),
            "piecewise-hodges" => EstimatorSpec::PiecewiseHodges { pivots: self.nonempty_f64_list("pivots")? },
            other => {
                return Err(CliError::config(
                    Some("estimator"),
                    format!("unknown estimator {other:?}; expected mle, hodges, constant or piecewise-hodges"),
                ))
            }
        })
    }

    pub fn extraction_config(&self) -> Result<ExtractionConfig, CliError> {
        let interval = Interval::new(self.rational("lower")?, self.rational("upper")?)
            .map_err(|e| CliError::config(Some("lower"), e.to_string()))?;
        let assumption_slack = match self.string("assumption_slack") {
            "epsilon" => AssumptionSlack::SameAsEpsilon,
            _ => AssumptionSlack::Fixed(self.f64("assumption_slack")?),
        };
        let mut config = ExtractionConfig {
            c: self.rational("c")?,
            a: self.rational("a")?,
            i_bar: self.rational("i_bar")?,
            epsilon: Rational::from_integer(1.into()),
            assumption_slack,
            n_min: self.u64("n_min")?,
            initial_interval: interval,
            grid_points: self.u32("grid_points")?,
            tolerance: self.f64("tolerance")?,
            max_iterations: self.u32("max_iterations")?,
        };
        config.epsilon = if self.string("epsilon") == "auto" {
            select_epsilon(&config, 60)
                .ok_or_else(|| CliError::config(Some("epsilon"), "no epsilon = 2^-k with k <= 60 satisfies the premise"))?
        } else {
            self.rational("epsilon")?
        };
        Ok(config)
    }
}

/// Markdown reference of every key, generated from the registry.
pub fn key_reference() -> String {
    let mut out = String::from("| key | default | commands | description |\n|---|---|---|---|\n");
    for k in KEYS {
        let users: Vec<&str> =
            COMMANDS.iter().map(|(c, _)| *c).filter(|c| command_keys(c).contains(&k.name)).collect();
        let default = if k.default.is_empty() { "(empty)" } else { k.default };
        out.push_str(&format!("| `{}` | `{}` | {} | {} |\n", k.name, default, users.join(", "), k.help));
    }
    out.push_str("\nPer-command defaults differing from the table:\n\n");
    for (command, _) in COMMANDS {
        for k in command_keys(command) {
            if let Some(d) = command_default(command, k) {
                out.push_str(&format!("- `{command}`: `{k} = {d}`\n"));
            }
        }
    }
    out
}
