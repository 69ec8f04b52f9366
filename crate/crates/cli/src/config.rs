//! Experiment configuration: one TOML file, validated before any work starts.

use std::fmt;
use std::path::{Path, PathBuf};

use pavg_core::catalog::{SystemSpec, ToySystemParams};
use serde::{Deserialize, Serialize};

/// A configuration problem, located in the source file where possible.
#[derive(Debug)]
pub struct ConfigError {
    pub file: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.file, l, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    /// Step of the fast clock.
    pub dt: f64,
    /// Decreasing; used by `average` (first entry) and `verify-averaging`.
    pub epsilons: Vec<f64>,
    /// Horizon of the slow dynamics in slow time.
    pub t_total: f64,
    /// Frozen slow state, and the slow initial state of averaging runs.
    pub x: Vec<f64>,
    /// One axis per slow coordinate.
    pub x_grid: Vec<Vec<f64>>,
    pub seeds: Seeds,
    pub budgets: Budgets,
    pub out: PathBuf,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemSpec::ToyTurbulence(ToySystemParams::default()),
            dt: 0.01,
            epsilons: vec![0.1, 0.05, 0.02],
            t_total: 1.0,
            x: vec![0.5],
            x_grid: vec![vec![-1.0, -0.5, 0.0, 0.5, 1.0]],
            seeds: Seeds::default(),
            budgets: Budgets::default(),
            out: PathBuf::from("out"),
            workers: 0,
        }
    }
}

/// Base seeds, one per independent stream of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Single-path commands: simulate, pullback, coupling.
    pub path: u64,
    /// Pullback samples behind empirical measures.
    pub sampling: u64,
    /// Long path of the ergodic drift route.
    pub ergodic: u64,
    /// Monte Carlo runs of the error study.
    pub mc: u64,
    /// Diagnostics probes and Krylov–Bogolyubov paths.
    pub probe: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            path: 1,
            sampling: 2,
            ergodic: 3,
            mc: 9,
            probe: 5,
        }
    }
}

impl Seeds {
    pub fn named(&self) -> [(&'static str, u64); 5] {
        [
            ("path", self.path),
            ("sampling", self.sampling),
            ("ergodic", self.ergodic),
            ("mc", self.mc),
            ("probe", self.probe),
        ]
    }

    pub fn offset(&self, by: u64) -> Self {
        Self {
            path: self.path.wrapping_add(by),
            sampling: self.sampling.wrapping_add(by),
            ergodic: self.ergodic.wrapping_add(by),
            mc: self.mc.wrapping_add(by),
            probe: self.probe.wrapping_add(by),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftChoice {
    /// Closed form where the catalog has one, otherwise by measures.
    Auto,
    ClosedForm,
    Ergodic,
    Measure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub n_samples: usize,
    pub max_sections: usize,
    pub k_max: usize,
    pub tol: f64,
    pub t_erg: f64,
    pub burn_in: f64,
    pub n_batches: usize,
    pub n_mc: usize,
    /// Fast-time horizon of `simulate` and of the coupling probe.
    pub t_end: f64,
    pub m_max: usize,
    pub n_starts: usize,
    pub n_paths: usize,
    pub n_pairs: usize,
    pub hormander_level: usize,
    pub drift: DriftChoice,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            n_samples: 200,
            max_sections: 16,
            k_max: 40,
            tol: 1e-4,
            t_erg: 2000.0,
            burn_in: 20.0,
            n_batches: 32,
            n_mc: 50,
            t_end: 20.0,
            m_max: 32,
            n_starts: 64,
            n_paths: 16,
            n_pairs: 1000,
            hormander_level: 3,
            drift: DriftChoice::Auto,
        }
    }
}

/// Reads, parses and validates a configuration file.
pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let file = path.display().to_string();
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
        file: file.clone(),
        line: None,
        message: format!("cannot read: {e}"),
    })?;
    parse(&src, &file)
}

pub fn parse(src: &str, file: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
        let message = e.message().trim().to_string();
        // tagged tables report their own header; point at the key instead
        let key_line = message
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
            .and_then(|key| line_of(src, key));
        ConfigError {
            file: file.to_string(),
            line: key_line.or_else(|| e.span().map(|s| line_at(src, s.start))),
            message,
        }
    })?;
    validate(&cfg, src, file)?;
    Ok(cfg)
}

fn line_at(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of the first `key = ...` assignment in `src`.
fn line_of(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

pub fn validate(cfg: &ExperimentConfig, src: &str, file: &str) -> Result<(), ConfigError> {
    let fail = |key: &str, message: String| ConfigError {
        file: file.to_string(),
        line: line_of(src, key),
        message,
    };
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(fail("dt", format!("`dt` must be positive, got {}", cfg.dt)));
    }
    let sys = cfg.system.build().map_err(|e| {
        let line = line_of(src, "name").or_else(|| src.lines().position(|l| l.trim() == "[system]").map(|i| i + 1));
        ConfigError {
            file: file.to_string(),
            line,
            message: format!("`system`: {e}"),
        }
    })?;
    if let Err(e) = sys.period_steps(cfg.dt) {
        let key = if line_of(src, "tau").is_some() { "tau" } else { "dt" };
        return Err(fail(key, format!("`tau`: {e}")));
    }
    let max_eps = (-1.0f64).exp();
    if cfg.epsilons.is_empty() {
        return Err(fail("epsilons", "`epsilons` must not be empty".into()));
    }
    if let Some(e) = cfg.epsilons.iter().find(|&&e| !(e > 0.0 && e < max_eps)) {
        return Err(fail("epsilons", format!("`epsilons`: {e} lies outside (0, 1/e)")));
    }
    if cfg.epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(fail("epsilons", "`epsilons` must be strictly decreasing".into()));
    }
    if !(cfg.t_total > 0.0) {
        return Err(fail("t_total", "`t_total` must be positive".into()));
    }
    if cfg.x.len() != sys.slow_dim() {
        return Err(fail(
            "x",
            format!(
                "`x` has {} entries, the system has {} slow coordinates",
                cfg.x.len(),
                sys.slow_dim()
            ),
        ));
    }
    if cfg.x_grid.len() != sys.slow_dim() {
        return Err(fail(
            "x_grid",
            format!("`x_grid` needs one axis per slow coordinate ({})", sys.slow_dim()),
        ));
    }
    if cfg
        .x_grid
        .iter()
        .any(|a| a.len() < 2 || a.windows(2).any(|w| !(w[0] < w[1])))
    {
        return Err(fail(
            "x_grid",
            "each `x_grid` axis needs at least two increasing nodes".into(),
        ));
    }
    let named = cfg.seeds.named();
    for (i, (a, sa)) in named.iter().enumerate() {
        if let Some((b, _)) = named[i + 1..].iter().find(|(_, sb)| sb == sa) {
            return Err(fail(b, format!("seeds `{a}` and `{b}` coincide ({sa})")));
        }
    }
    let b = &cfg.budgets;
    let counts = [
        ("n_samples", b.n_samples),
        ("max_sections", b.max_sections),
        ("k_max", b.k_max),
        ("n_batches", b.n_batches),
        ("n_mc", b.n_mc),
        ("m_max", b.m_max),
        ("n_starts", b.n_starts),
        ("n_paths", b.n_paths),
        ("n_pairs", b.n_pairs),
    ];
    if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
        return Err(fail(k, format!("`budgets.{k}` must be positive")));
    }
    for (k, v) in [("tol", b.tol), ("t_erg", b.t_erg), ("t_end", b.t_end)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(fail(k, format!("`budgets.{k}` must be positive, got {v}")));
        }
    }
    if !(b.burn_in >= 0.0 && b.burn_in < b.t_erg) {
        return Err(fail("burn_in", "`budgets.burn_in` must lie in [0, t_erg)".into()));
    }
    Ok(())
}
