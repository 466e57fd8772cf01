//! Command-line grammar, `key=value` config files and tolerance overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use averaging_core::sim::Dynamics;
use averaging_core::walk::KernelKind;

#[derive(Debug, Parser)]
#[command(name = "avglab", version, about = "Averaging process on Z^d: simulation and exact verification")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Monte Carlo runs of the mass dynamics: moments and mean field.
    Simulate(SimulateArgs),
    /// Exact or floating DP for a difference-walk kernel.
    WalkDp(WalkDpArgs),
    /// Exact check of the generating-function relations.
    SeriesVerify(SeriesArgs),
    /// Rescaled return probabilities against their predicted limits.
    Asymptotics(AsymptoticsArgs),
    /// Central-limit statistic over independent trials.
    Clt(CltArgs),
    /// Potlach relation and return-probability ratio.
    Potlach(PotlachArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::WalkDp(_) => "walk-dp",
            Command::SeriesVerify(_) => "series-verify",
            Command::Asymptotics(_) => "asymptotics",
            Command::Clt(_) => "clt",
            Command::Potlach(_) => "potlach",
            Command::Accept(_) => "accept",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Simulate(a) => &a.common,
            Command::WalkDp(a) => &a.common,
            Command::SeriesVerify(a) => &a.common,
            Command::Asymptotics(a) => &a.common,
            Command::Clt(a) => &a.common,
            Command::Potlach(a) => &a.common,
            Command::Accept(a) => &a.common,
        }
    }

    fn common_mut(&mut self) -> &mut Common {
        match self {
            Command::Simulate(a) => &mut a.common,
            Command::WalkDp(a) => &mut a.common,
            Command::SeriesVerify(a) => &mut a.common,
            Command::Asymptotics(a) => &mut a.common,
            Command::Clt(a) => &mut a.common,
            Command::Potlach(a) => &mut a.common,
            Command::Accept(a) => &mut a.common,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Master seed; trial seeds are split from it.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// CSV output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a JSON summary to this path.
    #[arg(long = "json-summary")]
    pub json_summary: Option<PathBuf>,
    /// `key=value` config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsArg {
    Averaging,
    Potlach,
}

impl From<DynamicsArg> for Dynamics {
    fn from(d: DynamicsArg) -> Self {
        match d {
            DynamicsArg::Averaging => Dynamics::Averaging,
            DynamicsArg::Potlach => Dynamics::Potlach,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelArg {
    Srw,
    AvgDiff,
    PotlachIndep,
    PotlachCoupled,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Srw => KernelKind::Srw,
            KernelArg::AvgDiff => KernelKind::AvgDifference,
            KernelArg::PotlachIndep => KernelKind::PotlachIndependent,
            KernelArg::PotlachCoupled => KernelKind::PotlachCoupled,
        }
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be finite and nonnegative"))
    }
}

fn dimension(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d) if (1..=6).contains(&d) => Ok(d),
        _ => Err(format!("dimension `{s}` must be an integer in 1..=6")),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long = "d", value_parser = dimension, default_value = "1")]
    pub d: usize,
    #[arg(long, value_parser = positive_f64, default_value = "16")]
    pub t: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    pub trials: u64,
    #[arg(long, value_enum, default_value = "averaging")]
    pub dynamics: DynamicsArg,
    /// `exact` runs dyadic-rational fields and checks conservation exactly.
    #[arg(long, value_enum, default_value = "float")]
    pub mode: ModeArg,
    /// Torus radius (default: ceil(6 sqrt(t * rate)) + 5).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub radius: Option<u64>,
    /// Initial masses as `x1,..,xd:mass;...` (default: unit mass at the origin).
    #[arg(long)]
    pub initial: Option<String>,
    /// Per-site dump of the first trial's field.
    #[arg(long = "field-out")]
    pub field_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WalkDpArgs {
    #[arg(long = "d", value_parser = dimension, default_value = "1")]
    pub d: usize,
    #[arg(long, value_enum, default_value = "avg-diff")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 16)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    /// Also emit the first-passage and taboo sequences (exact mode).
    #[arg(long = "first-passage")]
    pub first_passage: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeriesArgs {
    #[arg(long = "d", value_parser = dimension, default_value = "1")]
    pub d: usize,
    #[arg(long, default_value_t = 32)]
    pub order: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AsymptoticsArgs {
    #[arg(long = "d", value_parser = dimension, default_value = "1")]
    pub d: usize,
    /// Largest step index `N`.
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Terms used for alpha_d (d >= 3).
    #[arg(long = "alpha-terms", default_value_t = 400)]
    pub alpha_terms: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CltArgs {
    #[arg(long = "d", value_parser = dimension, default_value = "1")]
    pub d: usize,
    #[arg(long, value_parser = positive_f64, default_value = "400")]
    pub t: f64,
    #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(2..))]
    pub trials: u64,
    /// `one`, `cos[:a]`, `tanh` or `ball[:radius:width]`.
    #[arg(long, default_value = "cos")]
    pub function: String,
    #[arg(long, value_enum, default_value = "averaging")]
    pub dynamics: DynamicsArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PotlachArgs {
    #[arg(long = "d", value_parser = dimension, default_value = "1")]
    pub d: usize,
    /// Order of the exact relation check.
    #[arg(long, default_value_t = 48)]
    pub order: usize,
    /// Largest continuous time in the ratio table.
    #[arg(long, value_parser = positive_f64, default_value = "200")]
    pub t: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AcceptArgs {
    /// Reduced sizes for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    /// Comma-separated criterion numbers to run (default: all).
    #[arg(long)]
    pub only: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

/// Keys accepted in config files, as flag names without the leading dashes.
const CONFIG_KEYS: &[&str] = &[
    "d", "t", "steps", "order", "trials", "seed", "mode", "dynamics", "kernel", "out", "threads", "quick",
    "function", "radius", "initial", "field-out", "first-passage", "alpha-terms", "json-summary", "only",
];
const BOOL_KEYS: &[&str] = &["quick", "first-passage"];

/// A parsed invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    /// `--tol.<name>` overrides, file entries first, flags on top.
    pub tolerances: BTreeMap<String, f64>,
}

impl Invocation {
    /// Short SHA-256 of the effective configuration, excluding output paths.
    pub fn config_hash(&self) -> String {
        let mut cmd = self.command.clone();
        let c = cmd.common_mut();
        c.out = None;
        c.json_summary = None;
        c.config = None;
        c.threads = None;
        let mut text = serde_json::to_string(&cmd).expect("config serializes");
        for (k, v) in &self.tolerances {
            text.push_str(&format!(";tol.{k}={v}"));
        }
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Usage errors: reported with exit code 2.
#[derive(Debug)]
pub enum UsageError {
    Clap(clap::Error),
    Message(String),
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UsageError::Clap(e) => write!(f, "{e}"),
            UsageError::Message(m) => write!(f, "error: {m}"),
        }
    }
}

fn parse_tol(name: &str, value: &str) -> Result<(String, f64), UsageError> {
    let v: f64 = value
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite() && *v >= 0.0)
        .ok_or_else(|| UsageError::Message(format!("tolerance tol.{name} needs a nonnegative number, got `{value}`")))?;
    if name.is_empty() {
        return Err(UsageError::Message("empty tolerance name".into()));
    }
    Ok((name.to_string(), v))
}

/// Parses a config file into flag arguments and tolerance entries.
pub fn read_config_file(text: &str) -> Result<(Vec<String>, BTreeMap<String, f64>), UsageError> {
    let mut args = Vec::new();
    let mut tols = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| UsageError::Message(format!("config line {}: expected key=value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(name) = key.strip_prefix("tol.") {
            let (n, v) = parse_tol(name, value)?;
            tols.insert(n, v);
        } else if BOOL_KEYS.contains(&key) {
            match value {
                "true" | "1" | "yes" => args.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                _ => return Err(UsageError::Message(format!("config key `{key}` needs true or false"))),
            }
        } else if CONFIG_KEYS.contains(&key) {
            args.push(format!("--{key}"));
            args.push(value.to_string());
        } else {
            return Err(UsageError::Message(format!("unknown config key `{key}` on line {}", lineno + 1)));
        }
    }
    Ok((args, tols))
}

/// Parses `argv` (program name first).
pub fn parse_args<I, S>(argv: I) -> Result<Invocation, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let mut rest = Vec::with_capacity(argv.len());
    let mut flag_tols = BTreeMap::new();
    let mut config_path = None;
    let mut i = 0;
    while i < argv.len() {
        let a = &argv[i];
        if let Some(rest) = a.strip_prefix("--tol.") {
            let (name, value) = match rest.split_once('=') {
                Some((n, v)) => (n.to_string(), v.to_string()),
                None => {
                    i += 1;
                    let v = argv
                        .get(i)
                        .ok_or_else(|| UsageError::Message(format!("--tol.{rest} needs a value")))?;
                    (rest.to_string(), v.clone())
                }
            };
            let (n, v) = parse_tol(&name, &value)?;
            flag_tols.insert(n, v);
        } else {
            if a == "--config" {
                config_path = argv.get(i + 1).cloned();
            } else if let Some(p) = a.strip_prefix("--config=") {
                config_path = Some(p.to_string());
            }
            rest.push(a.clone());
        }
        i += 1;
    }

    let mut tolerances = BTreeMap::new();
    if let Some(path) = config_path {
        let text = fs::read_to_string(&path)
            .map_err(|e| UsageError::Message(format!("cannot read config file {path}: {e}")))?;
        let (file_args, file_tols) = read_config_file(&text)?;
        tolerances.extend(file_tols);
        // file flags go right after the subcommand so that later flags win
        if rest.len() >= 2 {
            rest.splice(2..2, file_args);
        }
    }
    tolerances.extend(flag_tols);

    let cli = Cli::try_parse_from(rest).map_err(UsageError::Clap)?;
    Ok(Invocation { command: cli.command, tolerances })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_keys() {
        let (args, tols) = read_config_file("# comment\nd = 2\nquick=true\ntol.clt=0.1 # trailing\n\n").unwrap();
        assert_eq!(args, ["--d", "2", "--quick"]);
        assert_eq!(tols["clt"], 0.1);
        assert!(read_config_file("colour=blue").is_err());
        assert!(read_config_file("d 2").is_err());
    }

    #[test]
    fn tolerance_flags_are_extracted() {
        let inv = parse_args(["avglab", "accept", "--quick", "--tol.asym_d1", "0.02", "--tol.clt=0.1"]).unwrap();
        assert_eq!(inv.tolerances.len(), 2);
        assert!(matches!(inv.command, Command::Accept(AcceptArgs { quick: true, .. })));
        assert!(parse_args(["avglab", "accept", "--tol.x", "abc"]).is_err());
    }

    #[test]
    fn later_flags_override() {
        let inv = parse_args(["avglab", "walk-dp", "--steps", "3", "--steps", "5"]).unwrap();
        match inv.command {
            Command::WalkDp(a) => assert_eq!(a.steps, 5),
            _ => unreachable!(),
        }
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = parse_args(["avglab", "series-verify", "--d", "2"]).unwrap();
        let b = parse_args(["avglab", "series-verify", "--d", "2", "--out", "x.csv"]).unwrap();
        let c = parse_args(["avglab", "series-verify", "--d", "3"]).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        assert!(parse_args(["avglab", "simulate", "--d", "0"]).is_err());
        assert!(parse_args(["avglab", "simulate", "--t", "-1"]).is_err());
        assert!(parse_args(["avglab", "simulate", "--trials", "1"]).is_err());
        assert!(parse_args(["avglab", "frobnicate"]).is_err());
    }
}
