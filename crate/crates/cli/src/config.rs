//! Run configuration: command-line flags merged with an optional flat
//! `key = value` file, then validated into a [`RunConfig`].

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use mkdv_core::checks::CheckKind;
use mkdv_core::numeval::Profile;
use mkdv_core::AlgebraCtx;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UsageError {
    #[error("cannot read config file {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },
    #[error("config file line {line}: expected `key = value`, got `{text}`")]
    ConfigSyntax { line: usize, text: String },
    #[error("config file line {line}: unknown key `{key}`")]
    ConfigKey { line: usize, key: String },
    #[error("rank must be at least 1")]
    Rank,
    #[error("flow {n} is not an exponent of A_{rank}^(1) (multiples of {h} are excluded)")]
    NotExponent { n: u32, rank: usize, h: usize },
    #[error("no flows given")]
    NoFlows,
    #[error("degree bound {degree} is below max(flows) + 2 = {min}")]
    Degree { degree: i32, min: i32 },
    #[error("{0}")]
    Check(String),
    #[error("invalid numeric parameter: {0}")]
    Numeric(String),
    #[error("{0}")]
    Profile(String),
    #[error("`{command}` does not support --format {format}")]
    Format { command: &'static str, format: Format },
    #[error("simulate integrates one flow at a time, got {0:?}")]
    SingleFlow(Vec<u32>),
}

/// Keys accepted in a config file; each mirrors the long flag of the same name.
pub const CONFIG_KEYS: [&str; 14] = [
    "rank", "flows", "degree", "checks", "grid-n", "length", "dt", "steps", "stride", "profile", "out", "format",
    "drift-tol", "input",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Latex,
    Csv,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

/// A comma-separated list of positive integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowList(pub Vec<u32>);

impl FromStr for FlowList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|e| format!("bad flow `{t}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(FlowList)
    }
}

/// Reads `key = value` lines (`#` starts a comment) and turns them into
/// `--key value` arguments.
pub fn config_args(path: &Path) -> Result<Vec<OsString>, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|source| UsageError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| UsageError::ConfigSyntax {
            line: k + 1,
            text: raw.to_string(),
        })?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(UsageError::ConfigKey {
                line: k + 1,
                key: key.to_string(),
            });
        }
        out.push(format!("--{key}").into());
        out.push(value.trim().into());
    }
    Ok(out)
}

/// Everything a subcommand needs, validated.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub ctx: AlgebraCtx,
    pub flows: Vec<u32>,
    pub degree: i32,
    pub checks: Vec<CheckKind>,
    pub grid_n: usize,
    pub length: f64,
    pub dt: f64,
    pub steps: usize,
    pub stride: usize,
    pub profile: Profile,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub drift_tol: f64,
    pub perturb: Option<u32>,
}

/// Raw, possibly absent values before defaults and validation.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    pub rank: Option<usize>,
    pub flows: Option<FlowList>,
    pub degree: Option<i32>,
    pub checks: Option<String>,
    pub grid_n: Option<usize>,
    pub length: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub stride: Option<usize>,
    pub profile: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub drift_tol: Option<f64>,
    pub perturb: Option<u32>,
}

/// The first three exponents of `A_r^(1)`.
pub fn default_flows(ctx: AlgebraCtx) -> Vec<u32> {
    (1u32..).filter(|&n| ctx.is_exponent(n as i64)).take(3).collect()
}

impl RunConfig {
    pub fn resolve(raw: RawConfig, simulate: bool) -> Result<Self, UsageError> {
        let rank = raw.rank.unwrap_or(1);
        let ctx = AlgebraCtx::new(rank).map_err(|_| UsageError::Rank)?;

        let flows = match raw.flows {
            Some(FlowList(list)) => {
                let mut seen = BTreeSet::new();
                list.into_iter().filter(|n| seen.insert(*n)).collect()
            }
            None if simulate => vec![if ctx.is_exponent(3) { 3 } else { 2 }],
            None => default_flows(ctx),
        };
        if flows.is_empty() {
            return Err(UsageError::NoFlows);
        }
        for &n in &flows {
            if !ctx.is_exponent(n as i64) {
                return Err(UsageError::NotExponent {
                    n,
                    rank,
                    h: ctx.coxeter(),
                });
            }
        }
        if simulate && flows.len() != 1 {
            return Err(UsageError::SingleFlow(flows));
        }
        let min = flows.iter().copied().max().unwrap_or(1) as i32 + 2;
        let degree = raw.degree.unwrap_or(min);
        if degree < min {
            return Err(UsageError::Degree { degree, min });
        }

        let checks = match raw.checks.as_deref() {
            None | Some("all") => CheckKind::ALL.to_vec(),
            Some(list) => list
                .split(',')
                .map(|s| s.parse::<CheckKind>().map_err(|e| UsageError::Check(e.to_string())))
                .collect::<Result<_, _>>()?,
        };

        let grid_n = raw.grid_n.unwrap_or(256);
        let length = raw.length.unwrap_or(20.0);
        let dt = raw.dt.unwrap_or(1e-4);
        let steps = raw.steps.unwrap_or(10_000);
        let drift_tol = raw.drift_tol.unwrap_or(1e-6);
        if grid_n < 8 || !grid_n.is_multiple_of(2) {
            return Err(UsageError::Numeric(format!("grid-n = {grid_n} must be even and at least 8")));
        }
        for (name, v) in [("length", length), ("dt", dt), ("drift-tol", drift_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(UsageError::Numeric(format!("{name} = {v} must be positive")));
            }
        }
        if steps == 0 {
            return Err(UsageError::Numeric("steps must be at least 1".into()));
        }
        let stride = raw.stride.unwrap_or((steps / 100).max(1)).max(1);
        let profile = match raw.profile.as_deref() {
            Some(s) => s.parse().map_err(|e: mkdv_core::numeval::NumevalError| UsageError::Profile(e.to_string()))?,
            None => Profile::default(),
        };

        Ok(RunConfig {
            ctx,
            flows,
            degree,
            checks,
            grid_n,
            length,
            dt,
            steps,
            stride,
            profile,
            out: raw.out,
            format: raw.format,
            drift_tol,
            perturb: raw.perturb,
        })
    }
}
