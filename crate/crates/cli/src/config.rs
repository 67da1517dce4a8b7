//! Experiment configuration: flags over an optional key=value file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::{json, Value};
use spqm::moments::{MAX_KAPPA_DT, WARN_KAPPA_DT};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Measurement rate κ.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Final time T.
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
    /// Time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Fock truncation dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Monte Carlo paths.
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Plain-text key=value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kappa: f64,
    pub t_final: f64,
    pub dt: Option<f64>,
    pub dim: usize,
    pub paths: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_DIM: usize = 24;
pub const DEFAULT_PATHS: usize = 1000;
pub const DEFAULT_SEED: u64 = 7;

fn read_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        const KEYS: [&str; 8] = ["kappa", "t_final", "dt", "dim", "paths", "seed", "out", "format"];
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key '{}'", i + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    map.get(key)
        .map(|v| v.parse().map_err(|_| CliError::Usage(format!("config: invalid value '{v}' for {key}"))))
        .transpose()
}

impl CommonArgs {
    /// Merge with the config file and validate. `need_dt` marks subcommands
    /// that discretize time.
    pub fn resolve(&self, need_dt: bool) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(p) => read_file(p)?,
            None => BTreeMap::new(),
        };
        let missing = |name: &str| CliError::Usage(format!("missing required parameter --{name}"));
        let kappa = self.kappa.or(parse(&file, "kappa")?).ok_or_else(|| missing("kappa"))?;
        let t_final = self.t_final.or(parse(&file, "t_final")?).ok_or_else(|| missing("t-final"))?;
        let dt = self.dt.or(parse(&file, "dt")?);
        if need_dt && dt.is_none() {
            return Err(missing("dt"));
        }
        let format = match (self.format, file.get("format").map(String::as_str)) {
            (Some(f), _) => f,
            (None, Some("csv")) | (None, None) => Format::Csv,
            (None, Some("json")) => Format::Json,
            (None, Some(other)) => return Err(CliError::Usage(format!("config: unknown format '{other}'"))),
        };
        let cfg = ExperimentConfig {
            kappa,
            t_final,
            dt,
            dim: self.dim.or(parse(&file, "dim")?).unwrap_or(DEFAULT_DIM),
            paths: self.paths.or(parse(&file, "paths")?).unwrap_or(DEFAULT_PATHS),
            seed: self.seed.or(parse(&file, "seed")?).unwrap_or(DEFAULT_SEED),
            out: self.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
            format,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("--kappa must be positive, got {}", self.kappa));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("--t-final must be positive, got {}", self.t_final));
        }
        if self.dim < 2 {
            return bad(format!("--dim must be at least 2, got {}", self.dim));
        }
        if self.paths < 2 {
            return bad(format!("--paths must be at least 2, got {}", self.paths));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("--dt must be positive, got {dt}"));
            }
            let kdt = self.kappa * dt;
            if kdt >= MAX_KAPPA_DT {
                return bad(format!("κ·dt = {kdt} must be below {MAX_KAPPA_DT}"));
            }
            if kdt > WARN_KAPPA_DT {
                eprintln!("warning: κ·dt = {kdt} exceeds {WARN_KAPPA_DT}; discretization error will be large");
            }
            let ratio = self.t_final / dt;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                return bad(format!("--t-final {} is not a multiple of --dt {dt}", self.t_final));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.dt.map_or(0, |dt| (self.t_final / dt).round() as usize)
    }

    pub fn dt(&self) -> f64 {
        self.dt.expect("validated for subcommands that need dt")
    }

    pub fn kt(&self) -> f64 {
        self.kappa * self.t_final
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kappa": self.kappa,
            "t_final": self.t_final,
            "dt": self.dt,
            "dim": self.dim,
            "paths": self.paths,
            "format": match self.format { Format::Csv => "csv", Format::Json => "json" },
        })
    }
}
