//! Flat `key = value` experiment configs.
//!
//! ```text
//! # comments run to end of line
//! mode = dmtrl          # dmtrl | stl | ssdca | centralized
//! dataset = synthetic1  # preset name or manifest path
//! lambda = 0.05
//! T = 200
//! H = 0.5n              # integer, or a multiple of n_i
//! ```
//!
//! Keys are case-insensitive. Flag overrides (`--key=value`) use the same
//! keys and are applied after the file.

use std::fmt;
use std::path::{Path, PathBuf};

use mtrl_core::data::SyntheticSpec;
use mtrl_core::{LocalIters, Loss, RhoMode, RunConfig};

use crate::error::{CliError, CliResult};

/// Solver used for the W-steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Dmtrl,
    Stl,
    Ssdca,
    /// Single-machine solver driven to a tight gap at every W-step.
    Centralized,
}

/// Gap tolerance enforced per W-step in centralized mode.
pub const CENTRALIZED_GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Preset(String),
    Manifest(PathBuf),
}

/// How `elapsed_ms` is reported in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    /// Cost model from step and round counts; reproducible byte for byte.
    Simulated,
    Wall,
}

/// Simulated cost of one coordinate step.
pub const SIM_STEP_MS: f64 = 1e-3;
/// Simulated cost of one communication round.
pub const SIM_ROUND_MS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub dataset: Dataset,
    /// Defaults to the preset's loss, or squared for manifests.
    pub loss: Option<Loss>,
    /// Defaults to the preset's lambda, or 0.05 for manifests.
    pub lambda: Option<f64>,
    pub eta: f64,
    pub t: usize,
    pub h: LocalIters,
    pub p: usize,
    pub gap_tol: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub rho: RhoMode,
    pub clock: Clock,
    pub threads: usize,
    pub gap_stride: usize,
    /// Held-out share per task; defaults to the preset's, or 0.3.
    pub test_fraction: Option<f64>,
    /// Preset resizing.
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub n: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let rc = RunConfig::default();
        ExperimentConfig {
            mode: Mode::Dmtrl,
            dataset: Dataset::Preset("synthetic1".into()),
            loss: None,
            lambda: None,
            eta: rc.eta,
            t: rc.t_max,
            h: rc.local_iters,
            p: rc.p_max,
            gap_tol: rc.gap_tol,
            seed: 0,
            out_dir: PathBuf::from("out"),
            rho: RhoMode::Bound,
            clock: Clock::Simulated,
            threads: 0,
            gap_stride: 1,
            test_fraction: None,
            m: None,
            d: None,
            n: None,
        }
    }
}

fn bad(key: &str, value: &str, want: &str) -> CliError {
    CliError::Config(format!("ConfigError: {key}={value:?}: expected {want}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str, want: &str) -> CliResult<T> {
    value.parse().map_err(|_| bad(key, value, want))
}

fn parse_h(key: &str, value: &str) -> CliResult<LocalIters> {
    let err = || bad(key, value, "an integer or a multiple like 0.5n");
    match value.strip_suffix('n') {
        Some("") => Ok(LocalIters::PerSample(1.0)),
        Some(frac) => frac.parse().map(LocalIters::PerSample).map_err(|_| err()),
        None => value.parse().map(LocalIters::Fixed).map_err(|_| err()),
    }
}

fn is_preset(name: &str) -> bool {
    SyntheticSpec::preset(name, 0).is_some()
}

impl ExperimentConfig {
    /// Set one key. Keys are matched case-insensitively.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let k = key.trim().to_ascii_lowercase();
        let v = value.trim();
        match k.as_str() {
            "mode" => {
                self.mode = match v {
                    "dmtrl" => Mode::Dmtrl,
                    "stl" => Mode::Stl,
                    "ssdca" => Mode::Ssdca,
                    "centralized" => Mode::Centralized,
                    _ => return Err(bad(&k, v, "dmtrl, stl, ssdca or centralized")),
                }
            }
            "dataset" => {
                self.dataset = if is_preset(v) {
                    Dataset::Preset(v.to_string())
                } else {
                    Dataset::Manifest(PathBuf::from(v))
                }
            }
            "loss" => {
                self.loss = Some(Loss::parse(v).ok_or_else(|| bad(&k, v, "hinge or squared"))?)
            }
            "lambda" => self.lambda = Some(num(&k, v, "a number")?),
            "eta" => self.eta = num(&k, v, "a number")?,
            "t" => self.t = num(&k, v, "an integer")?,
            "h" => self.h = parse_h(&k, v)?,
            "p" => self.p = num(&k, v, "an integer")?,
            "gap_tol" => self.gap_tol = num(&k, v, "a number")?,
            "seed" => self.seed = num(&k, v, "an integer")?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "rho" => {
                self.rho = match v {
                    "bound" => RhoMode::Bound,
                    _ => RhoMode::Fixed(num(&k, v, "`bound` or a number")?),
                }
            }
            "clock" => {
                self.clock = match v {
                    "simulated" => Clock::Simulated,
                    "wall" => Clock::Wall,
                    _ => return Err(bad(&k, v, "simulated or wall")),
                }
            }
            "threads" => self.threads = num(&k, v, "an integer")?,
            "gap_stride" => self.gap_stride = num(&k, v, "an integer")?,
            "test_fraction" => self.test_fraction = Some(num(&k, v, "a number")?),
            "m" => self.m = Some(num(&k, v, "an integer")?),
            "d" => self.d = Some(num(&k, v, "an integer")?),
            "n" => self.n = Some(num(&k, v, "an integer")?),
            _ => return Err(CliError::Config(format!("ConfigError: unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parse config text; later lines win.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("ConfigError: line {}: expected key = value", i + 1))
            })?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("IoError: {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Apply `key=value` overrides, with or without leading dashes.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> CliResult<()> {
        for o in overrides {
            let o = o.as_ref().trim_start_matches('-');
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("ConfigError: override {o:?} is not key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> CliResult<()> {
        let fail = |s: String| Err(CliError::Config(format!("ConfigError: {s}")));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return fail(format!("eta={} must lie in (0, 1]", self.eta));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return fail(format!("lambda={l} must be positive"));
            }
        }
        if let Some(f) = self.test_fraction {
            if !(f > 0.0 && f < 1.0) {
                return fail(format!("test_fraction={f} must lie in (0, 1)"));
            }
        }
        if matches!(self.dataset, Dataset::Manifest(_)) && (self.m.is_some() || self.d.is_some() || self.n.is_some()) {
            return fail("m, d and n only resize presets".into());
        }
        if [self.m, self.d, self.n].contains(&Some(0)) {
            return fail("m, d and n must be at least 1".into());
        }
        // the lower eta bound depends on m and is checked once the data is loaded
        self.run_config().validate(usize::MAX).map_err(CliError::from)
    }

    pub fn run_config(&self) -> RunConfig {
        let gap_tol = match self.mode {
            Mode::Centralized => self.gap_tol.min(CENTRALIZED_GAP_TOL),
            _ => self.gap_tol,
        };
        RunConfig {
            eta: self.eta,
            t_max: self.t,
            local_iters: self.h,
            p_max: self.p,
            gap_tol,
            seed: self.seed,
            rho_mode: self.rho,
            threads: self.threads,
            omega_step: true,
            gap_stride: self.gap_stride,
        }
    }
}

/// Canonical text form; parses back to the same config.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Dmtrl => "dmtrl",
            Mode::Stl => "stl",
            Mode::Ssdca => "ssdca",
            Mode::Centralized => "centralized",
        };
        writeln!(f, "mode = {mode}")?;
        match &self.dataset {
            Dataset::Preset(p) => writeln!(f, "dataset = {p}")?,
            Dataset::Manifest(p) => writeln!(f, "dataset = {}", p.display())?,
        }
        if let Some(l) = self.loss {
            writeln!(f, "loss = {}", l.name())?;
        }
        if let Some(l) = self.lambda {
            writeln!(f, "lambda = {l}")?;
        }
        writeln!(f, "eta = {}", self.eta)?;
        writeln!(f, "T = {}", self.t)?;
        match self.h {
            LocalIters::Fixed(h) => writeln!(f, "H = {h}")?,
            LocalIters::PerSample(x) => writeln!(f, "H = {x}n")?,
        }
        writeln!(f, "P = {}", self.p)?;
        writeln!(f, "gap_tol = {}", self.gap_tol)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "out_dir = {}", self.out_dir.display())?;
        match self.rho {
            RhoMode::Bound => writeln!(f, "rho = bound")?,
            RhoMode::Fixed(r) => writeln!(f, "rho = {r}")?,
        }
        let clock = match self.clock {
            Clock::Simulated => "simulated",
            Clock::Wall => "wall",
        };
        writeln!(f, "clock = {clock}")?;
        writeln!(f, "threads = {}", self.threads)?;
        writeln!(f, "gap_stride = {}", self.gap_stride)?;
        if let Some(v) = self.test_fraction {
            writeln!(f, "test_fraction = {v}")?;
        }
        for (k, v) in [("m", self.m), ("d", self.d), ("n", self.n)] {
            if let Some(v) = v {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}
