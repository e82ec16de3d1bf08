use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::acquisition::AcquisitionKind;
use crate::benchmarks::{BenchmarkOptions, BENCHMARK_IDS};
use crate::error::{Error, Result};
use crate::msgp::{GammaPrior, NoiseSetting};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Active multi-source quadrature.
    Amsbq,
    /// Active quadrature on the primary only.
    Vbq,
    /// Percentile (right Riemann sum) estimator on the primary.
    Pe,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Amsbq => "amsbq",
            Method::Vbq => "vbq",
            Method::Pe => "pe",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "amsbq" => Ok(Method::Amsbq),
            "vbq" => Ok(Method::Vbq),
            "pe" => Ok(Method::Pe),
            other => Err(Error::Config(format!("unknown method '{other}'; expected amsbq, vbq or pe"))),
        }
    }
}

/// One experiment, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub benchmark: String,
    pub method: Method,
    pub acquisition: AcquisitionKind,
    pub allow_pathological: bool,
    pub budget: f64,
    /// Seeds to run; `run` uses the first, `compare` all of them.
    pub seeds: Vec<u64>,
    pub restarts: usize,
    pub prescan: usize,
    pub refit: bool,
    pub fit_restarts: usize,
    pub fit_restart_interval: usize,
    pub empirical_bayes: bool,
    pub max_iterations: usize,
    pub noise: Option<Vec<NoiseSetting>>,
    pub lengthscale_prior: Option<GammaPrior>,
    /// Nodes per axis of the percentile estimator.
    pub pe_nodes: usize,
    pub sir_reps: usize,
    /// Relative-error threshold reported by `compare`.
    pub tolerance: f64,
    /// Name shown by `compare`; defaults to `method[-acquisition]`.
    pub label: Option<String>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            benchmark: String::new(),
            method: Method::Amsbq,
            acquisition: AcquisitionKind::Mi,
            allow_pathological: false,
            budget: 0.0,
            seeds: Vec::new(),
            restarts: 10,
            prescan: 64,
            refit: true,
            fit_restarts: 2,
            fit_restart_interval: 10,
            empirical_bayes: true,
            max_iterations: 500,
            noise: None,
            lengthscale_prior: None,
            pe_nodes: 64,
            sir_reps: BenchmarkOptions::default().sir_reps,
            tolerance: 0.01,
            label: None,
            out: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

fn parse_noise(value: &str) -> Result<Vec<NoiseSetting>> {
    value
        .split(',')
        .map(|item| {
            let item = item.trim();
            if let Some(rest) = item.strip_prefix("learned") {
                let initial = match rest.strip_prefix(':') {
                    Some(v) => parse("noise", v)?,
                    None if rest.is_empty() => 1e-6,
                    None => return Err(Error::Config(format!("noise: cannot parse '{item}'"))),
                };
                Ok(NoiseSetting::Learned { initial })
            } else {
                let v: f64 = parse("noise", item)?;
                if !(v >= 0.0) {
                    return Err(Error::Config(format!("noise: variance must be non-negative, got {v}")));
                }
                Ok(NoiseSetting::Fixed(v))
            }
        })
        .collect()
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut ls_mode = None;
        let mut ls_shape = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "benchmark" => c.benchmark = value.to_string(),
                "method" => c.method = value.parse()?,
                "acquisition" | "acq" => c.acquisition = value.parse()?,
                "allow_pathological" => c.allow_pathological = parse_bool(key, value)?,
                "budget" => c.budget = parse(key, value)?,
                "seed" | "seeds" => {
                    c.seeds = value
                        .split(|ch: char| ch == ',' || ch.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| parse(key, s))
                        .collect::<Result<_>>()?
                }
                "restarts" => c.restarts = parse(key, value)?,
                "prescan" => c.prescan = parse(key, value)?,
                "refit" => c.refit = parse_bool(key, value)?,
                "fit_restarts" => c.fit_restarts = parse(key, value)?,
                "fit_restart_interval" => c.fit_restart_interval = parse(key, value)?,
                "empirical_bayes" => c.empirical_bayes = parse_bool(key, value)?,
                "max_iterations" => c.max_iterations = parse(key, value)?,
                "noise" => c.noise = Some(parse_noise(value)?),
                "lengthscale_prior_mode" => ls_mode = Some(parse(key, value)?),
                "lengthscale_prior_shape" => ls_shape = Some(parse(key, value)?),
                "pe_nodes" => c.pe_nodes = parse(key, value)?,
                "sir_reps" => c.sir_reps = parse(key, value)?,
                "tolerance" => c.tolerance = parse(key, value)?,
                "label" => c.label = Some(value.to_string()),
                "out" => c.out = Some(PathBuf::from(value)),
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", n + 1))),
            }
        }
        if ls_mode.is_some() || ls_shape.is_some() {
            let mode = ls_mode.ok_or_else(|| Error::Config("lengthscale_prior_shape needs lengthscale_prior_mode".into()))?;
            c.lengthscale_prior = Some(GammaPrior::with_mode(mode, ls_shape.unwrap_or(2.0))?);
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    /// Checks the fields that cannot be checked while parsing.
    pub fn validate(&self) -> Result<()> {
        if !BENCHMARK_IDS.contains(&self.benchmark.as_str()) {
            return Err(Error::Config(format!(
                "unknown benchmark '{}'; expected one of {}",
                self.benchmark,
                BENCHMARK_IDS.join(", ")
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("a seed is required".into()));
        }
        if self.method != Method::Pe && !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(Error::Config(format!("budget must be positive, got {}", self.budget)));
        }
        if self.method == Method::Pe && self.pe_nodes == 0 {
            return Err(Error::Config("pe_nodes must be positive".into()));
        }
        if self.method == Method::Amsbq && self.acquisition.is_pathological() && !self.allow_pathological {
            return Err(Error::Config(
                "acquisition 'ip' is pathological under non-constant cost; set allow_pathological to run it".into(),
            ));
        }
        if self.sir_reps == 0 {
            return Err(Error::Config("sir_reps must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seeds.first().copied().unwrap_or(0)
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match self.method {
            Method::Amsbq => format!("amsbq-{}", self.acquisition.name()),
            m => m.name().to_string(),
        })
    }

    /// Copy restricted to a single seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        RunConfig { seeds: vec![seed], ..self.clone() }
    }
}
