//! Command-line driver: argument and config parsing, dispatch, exit codes.
//!
//! Exit codes: 0 success (or the criterion holds), 1 the criterion fails,
//! 2 usage error, 3 runtime error.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::model::{ModelError, SimpleParams, TransitionRule};
use crate::sim::SimError;
use crate::walks::WalkError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => EXIT_USAGE,
            HarnessError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> Self {
        HarnessError::Usage(e.to_string())
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::UnderResolved { .. } | SimError::WindowTooSmall { .. } => {
                HarnessError::Runtime(e.to_string())
            }
            _ => HarnessError::Usage(e.to_string()),
        }
    }
}

impl From<WalkError> for HarnessError {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::Unbounded { .. } => HarnessError::Runtime(e.to_string()),
            _ => HarnessError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is not in [0, 1]"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "ipsergo", version, about = "Coupled simulation and ergodicity criterion for one-sided two-state particle systems")]
pub struct Cli {
    /// JSON object of flags for the subcommand; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for replica-parallel commands.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// A two-state rule given by `P(1 | s0 s1)`, or a neighbor-blind rule.
#[derive(Args, Debug, Clone)]
pub struct RuleArgs {
    #[arg(long, value_parser = probability, required_unless_present = "blind")]
    pub p11: Option<f64>,
    #[arg(long, value_parser = probability, required_unless_present = "blind")]
    pub p10: Option<f64>,
    #[arg(long, value_parser = probability, required_unless_present = "blind")]
    pub p01: Option<f64>,
    #[arg(long, value_parser = probability, required_unless_present = "blind")]
    pub p00: Option<f64>,
    /// Neighbor-blind rule with `P(1 | ·) = q`.
    #[arg(long, value_parser = probability, value_name = "q", conflicts_with_all = ["p11", "p10", "p01", "p00"])]
    pub blind: Option<f64>,
}

impl RuleArgs {
    pub fn params(&self) -> Result<SimpleParams, HarnessError> {
        let p = match self.blind {
            Some(q) => SimpleParams::new(q, q, q, q)?,
            None => SimpleParams::new(
                self.p11.unwrap_or_default(),
                self.p10.unwrap_or_default(),
                self.p01.unwrap_or_default(),
                self.p00.unwrap_or_default(),
            )?,
        };
        Ok(p)
    }

    pub fn rule(&self) -> Result<TransitionRule, HarnessError> {
        Ok(self.params()?.to_rule()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Random,
    Zeros,
    Ones,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Coefficients and the criterion for a designated state.
    #[command(args_override_self = true)]
    Criterion {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long, default_value_t = 0)]
        state: u8,
    },
    /// Region of a two-state rule after reduction to a face of the cube.
    #[command(args_override_self = true)]
    Classify {
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Region map of the section `p11 = 0`, `p00` fixed.
    #[command(args_override_self = true)]
    Sweep {
        #[arg(long, value_parser = probability, default_value_t = 0.0)]
        p00: f64,
        #[arg(long, default_value_t = 101)]
        grid_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Space-time raster of one trajectory as a binary PGM.
    #[command(args_override_self = true)]
    Raster {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long, default_value_t = -150, allow_negative_numbers = true)]
        left: i64,
        #[arg(long, default_value_t = 149)]
        right: i64,
        #[arg(long, default_value_t = 300.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        state: u8,
        #[arg(long, value_enum, default_value_t = Init::Random)]
        init: Init,
        #[arg(long)]
        out: PathBuf,
    },
    /// Couples configurations that differ at site 0 and checks the walk bounds.
    #[command(args_override_self = true)]
    Couple {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long, default_value_t = -200, allow_negative_numbers = true)]
        left: i64,
        #[arg(long, default_value_t = 20)]
        right: i64,
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        state: u8,
        #[arg(long, value_enum, default_value_t = Init::Random)]
        background: Init,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo tail of the agreement time of site 0.
    #[command(args_override_self = true)]
    Tail {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_value = "50,100,150,200")]
        t_grid: Vec<f64>,
        #[arg(long, visible_alias = "replicas", default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        state: u8,
        /// Random product backgrounds per replica.
        #[arg(long, default_value_t = 1)]
        random_backgrounds: usize,
        /// Skip the constant backgrounds.
        #[arg(long)]
        no_constants: bool,
        #[arg(long, allow_negative_numbers = true, requires = "right")]
        left: Option<i64>,
        #[arg(long, requires = "left")]
        right: Option<i64>,
        #[arg(long, default_value_t = 0.01)]
        max_censored: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The bounding walks for given `β`, `δ`.
    #[command(args_override_self = true)]
    Walks {
        #[arg(long, required_unless_present = "rule")]
        beta: Option<f64>,
        #[arg(long, required_unless_present = "rule")]
        delta: Option<f64>,
        /// Take `β`, `δ` from the rule `p11,p10,p01,p00` and `--state`.
        #[arg(long, value_delimiter = ',', action = ArgAction::Set, conflicts_with_all = ["beta", "delta"])]
        rule: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        state: u8,
        /// Largest number of rows; defaults to a drift-based cap.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Time `T` for `σ`.
        #[arg(long, visible_alias = "T", default_value_t = 10.0)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Agreement intervals of the visited sites.
        #[arg(long)]
        agreement_out: Option<PathBuf>,
    },
    /// Closed-form and Monte Carlo one-step drifts.
    #[command(args_override_self = true)]
    Drift {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, visible_alias = "T", default_value_t = 200.0)]
        threshold: f64,
        #[arg(long, visible_alias = "replicas", default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leftward reach of the dependence cone.
    #[command(args_override_self = true)]
    Cone {
        #[arg(long = "t", visible_alias = "T", value_delimiter = ',', action = ArgAction::Set, default_value = "10")]
        t: Vec<f64>,
        #[arg(long, visible_alias = "replicas", default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn flag_value(args: &[OsString], i: usize, name: &str) -> Option<(OsString, usize)> {
    let a = args[i].to_str()?;
    if a == name {
        return args.get(i + 1).map(|v| (v.clone(), 2));
    }
    a.strip_prefix(name)
        .and_then(|rest| rest.strip_prefix('='))
        .map(|v| (OsString::from(v), 1))
}

/// Splices the flags of a `--config` file in right after the subcommand,
/// so flags given on the command line come later and win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, HarnessError> {
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        if let Some((v, w)) = flag_value(&args, i, "--config") {
            config = Some(PathBuf::from(v));
            i += w;
        } else if let Some((_, w)) = flag_value(&args, i, "--threads") {
            i += w;
        } else {
            if sub.is_none() && !args[i].to_string_lossy().starts_with('-') {
                sub = Some(i);
            }
            i += 1;
        }
    }
    let (Some(path), Some(sub)) = (config, sub) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| HarnessError::Usage(format!("config {}: {e}", path.display())))?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Usage(format!("config {}: {e}", path.display())))?;
    let serde_json::Value::Object(map) = doc else {
        return Err(HarnessError::Usage("config must be a JSON object".into()));
    };
    let mut extra = Vec::new();
    for (key, value) in map {
        if key == "config" {
            return Err(HarnessError::Usage("config files cannot nest".into()));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &serde_json::Value| match v {
            serde_json::Value::Number(n) => Ok(n.to_string()),
            serde_json::Value::String(s) => Ok(s.clone()),
            _ => Err(HarnessError::Usage(format!("config key {key}: unsupported value"))),
        };
        match &value {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => extra.push(flag),
            serde_json::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                extra.push(format!("{flag}={}", parts.join(",")));
            }
            v => extra.push(format!("{flag}={}", scalar(v)?)),
        }
    }
    let mut out = args[..=sub].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Usage(e.to_string()))?;
            pool.install(|| commands::dispatch(&cli.command))
        }
        None => commands::dispatch(&cli.command),
    }
}

/// Full entry point: config expansion, parsing, dispatch.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
