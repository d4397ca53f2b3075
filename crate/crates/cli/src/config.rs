//! Experiment configuration: defaults, JSON config files, flag overrides, validation.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use sandwich_core::coupling::CheckLevel;
use sandwich_core::edgeprob::EstimatorHandle;
use sandwich_core::params::{zeta_stage2_raw, ParamsError};
use sandwich_core::sampling::{mix64, FactorSampleMethod};
use sandwich_core::scheme::{resolve_params, ResolvedParams, SchemeConfig, SchemeError};

use crate::CliError;

/// Exact enumeration of factors of near-complete hosts stays within budget up to here.
pub const EXACT_MAX_N: usize = 8;

/// Slacks used when none are given. The asymptotic choice (`C = 10` with the
/// case formulas) puts ζ outside `(0, 1)` for every desk-scale `(n, d)`.
pub const DESK_C: f64 = 1.0;
pub const DESK_XI1: f64 = 0.4;
pub const DESK_XI: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Stage 1 only.
    One,
    /// Stage 2 on an empty stage-1 output.
    Two,
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// Sets `ξ = C·f·ξ₁·d/n` unless `xi` is also given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    /// Recorded only; the runs do not depend on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_steps1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_steps2: Option<u64>,
}

impl Overrides {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{assignment}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let real = || -> Result<f64, CliError> {
            value
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("{key}: `{value}` is not a finite number")))
        };
        let count = || -> Result<u64, CliError> {
            value
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("{key}: `{value}` is not a non-negative integer")))
        };
        match key {
            "xi1" => self.xi1 = Some(real()?),
            "xi" => self.xi = Some(real()?),
            "f" => self.f = Some(real()?),
            "sigma" => self.sigma = Some(real()?),
            "C" => self.c = Some(real()?),
            "mu1" => self.mu1 = Some(real()?),
            "mu2" => self.mu2 = Some(real()?),
            "zeta1" => self.zeta1 = Some(real()?),
            "zeta2" => self.zeta2 = Some(real()?),
            "fixedSteps1" => self.fixed_steps1 = Some(count()?),
            "fixedSteps2" => self.fixed_steps2 = Some(count()?),
            _ => {
                return Err(CliError::Config(format!(
                    "unknown override `{key}` (expected one of xi1, xi, f, sigma, C, mu1, mu2, zeta1, zeta2, fixedSteps1, fixedSteps2)"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub trials: usize,
    pub estimator: String,
    pub stage: Stage,
    pub overrides: Overrides,
    pub debug_asserts: bool,
    pub out_path: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    /// Scales `C` and any fixed ζ.
    pub zeta_mult: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 5,
            d: 2,
            seed: 0,
            trials: 1000,
            estimator: "exact".into(),
            stage: Stage::Full,
            overrides: Overrides::default(),
            debug_asserts: false,
            out_path: None,
            format: Format::Json,
            threads: None,
            zeta_mult: 1.0,
        }
    }
}

/// Flags shared by `run`, `verify` and `sweep`. Flags win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// exact, heuristic or empirical:K.
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long, value_enum)]
    pub stage: Option<Stage>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Check the coupling invariants after every step.
    #[arg(long)]
    pub debug_asserts: bool,
    /// Parameter override, e.g. `--set zeta1=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ExperimentArgs {
    pub fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.d {
            cfg.d = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = &self.estimator {
            cfg.estimator = v.clone();
        }
        if let Some(v) = self.stage {
            cfg.stage = v;
        }
        if let Some(v) = &self.out {
            cfg.out_path = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = Some(v);
        }
        cfg.debug_asserts |= self.debug_asserts;
        for s in &self.set {
            cfg.overrides.set(s)?;
        }
        Ok(cfg)
    }
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// `exact`, `heuristic` or `empirical:K`. Empirical draws are seeded from `seed`.
pub fn parse_estimator(s: &str, seed: u64) -> Result<EstimatorHandle, CliError> {
    match s.trim() {
        "exact" => Ok(EstimatorHandle::Exact),
        "heuristic" => Ok(EstimatorHandle::Heuristic),
        other => {
            let k = other
                .strip_prefix("empirical:")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k > 0)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "estimator: expected exact, heuristic or empirical:K, got `{other}`"
                    ))
                })?;
            Ok(EstimatorHandle::Empirical {
                samples: k,
                method: FactorSampleMethod::Rejection,
                seed: mix64(seed ^ 0x6573_7469_6d61_746f),
            })
        }
    }
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Plan {
    pub cfg: ExperimentConfig,
    pub scheme: SchemeConfig,
    pub params: ResolvedParams,
}

impl Plan {
    pub fn approximate(&self) -> bool {
        !self.scheme.estimator.is_exact()
    }
}

fn in_unit_interval(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl ExperimentConfig {
    pub fn plan(&self) -> Result<Plan, CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let (n, d) = (self.n, self.d);
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if n < 3 || d < 1 || d > n - 2 {
            return bad(format!("need n ≥ 3 and 1 ≤ d ≤ n − 2, got n = {n}, d = {d}"));
        }
        if n * d % 2 == 1 {
            return bad(format!("n·d must be even, got n = {n}, d = {d}"));
        }
        if !(self.zeta_mult.is_finite() && self.zeta_mult > 0.0) {
            return bad(format!("zetaMult = {} must be positive", self.zeta_mult));
        }
        let estimator = parse_estimator(&self.estimator, self.seed)?;
        if estimator.is_exact() && n > EXACT_MAX_N {
            return bad(format!(
                "the exact estimator enumerates factors and is capped at n ≤ {EXACT_MAX_N}; use heuristic or empirical:K"
            ));
        }

        let o = &self.overrides;
        let m = self.zeta_mult;
        let c = o.c.unwrap_or(DESK_C) * m;
        let xi1 = o.xi1.unwrap_or(DESK_XI1);
        let xi = match (o.xi, o.f) {
            (Some(x), _) => x,
            (None, Some(f)) => c * f * xi1 * d as f64 / n as f64,
            (None, None) => DESK_XI,
        };
        for (name, v) in [("C", c), ("xi1", xi1), ("xi", xi)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        for (name, v) in [("mu1", o.mu1), ("mu2", o.mu2)] {
            if let Some(v) = v.filter(|v| v.is_nan() || *v < 0.0) {
                return bad(format!("{name} = {v} must be non-negative"));
            }
        }
        let zeta1 = o.zeta1.map(|z| z * m);
        let zeta2 = o.zeta2.map(|z| z * m);
        for (name, v) in [("zeta1", zeta1), ("zeta2", zeta2)] {
            if let Some(v) = v.filter(|v| !in_unit_interval(*v)) {
                return bad(format!("{name} = {v} is outside (0, 1)"));
            }
        }

        let mut scheme = SchemeConfig {
            c,
            xi1: Some(xi1),
            xi: Some(xi),
            mu1: o.mu1,
            mu2: o.mu2,
            zeta1,
            zeta2,
            fixed_steps1: o.fixed_steps1,
            fixed_steps2: o.fixed_steps2,
            estimator,
            ind_sample_method: if estimator.is_exact() {
                FactorSampleMethod::Enumerate
            } else {
                FactorSampleMethod::Rejection
            },
            checks: if self.debug_asserts {
                CheckLevel::PerStep
            } else {
                CheckLevel::PhaseBoundary
            },
            ..Default::default()
        };
        if self.stage == Stage::Two {
            scheme.mu1 = Some(0.0);
            scheme.fixed_steps1 = Some(0);
        }
        let params = resolve_params(n, d, &scheme).map_err(|e| match e {
            SchemeError::Params(ParamsError::ZetaOutOfRange { value }) => {
                CliError::Config(format!("zeta1 = C·xi1 = {value} is outside (0, 1)"))
            }
            other => CliError::Config(other.to_string()),
        })?;
        if !in_unit_interval(params.zeta1) {
            return bad(format!("zeta1 = {} is outside (0, 1)", params.zeta1));
        }
        if self.stage != Stage::One && zeta2.is_none() {
            let worst = zeta_stage2_raw(d as u64, xi, n as u64, c);
            if !in_unit_interval(worst) {
                return bad(format!(
                    "zeta2 = C·Δ(t)/(xi·n) reaches {worst} at Δ(t) = d, outside (0, 1); lower C or raise xi"
                ));
            }
        }
        Ok(Plan {
            cfg: self.clone(),
            scheme,
            params,
        })
    }
}
