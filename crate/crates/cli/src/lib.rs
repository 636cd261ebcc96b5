//! Command-line driver: runs experiments from flat config files and writes
//! traces, covariance dumps, evaluation reports and SVG charts.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use mtrl_core::data::{gen_synthetic, write_problem, SyntheticSpec};
use mtrl_core::{MultiTaskProblem, TaskData};

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, Summary};

#[derive(Debug, Parser)]
#[command(name = "mtrl", about = "Distributed multi-task relationship learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Also write gap-vs-round and gap-vs-time charts.
        #[arg(long)]
        svg: bool,
        /// Number of random train/test splits to evaluate.
        #[arg(long, default_value_t = 1)]
        splits: usize,
        /// `key=value`; may repeat.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Extra `--key=value` overrides.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        extra: Vec<String>,
    },
    /// Write a synthetic preset as a dense manifest dataset.
    GenSynthetic {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse a config and load its dataset without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        extra: Vec<String>,
    },
}

fn load_config(path: &Path, overrides: &[String], extra: &[String]) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.apply_overrides(overrides)?;
    cfg.apply_overrides(extra)?;
    Ok(cfg)
}

fn pooled(train: &MultiTaskProblem, test: &MultiTaskProblem) -> MultiTaskProblem {
    let tasks = train
        .tasks
        .iter()
        .zip(&test.tasks)
        .map(|(a, b)| {
            let mut f = a.features.clone();
            f.extend_from_slice(&b.features);
            let mut y = a.labels.clone();
            y.extend_from_slice(&b.labels);
            TaskData::new(a.task_id, a.d, f, y)
        })
        .collect();
    MultiTaskProblem::new(tasks, train.lambda, train.loss)
}

fn gen_command(preset: &str, out: &Path, seed: u64) -> CliResult<String> {
    let spec = SyntheticSpec::preset(preset, seed)
        .ok_or_else(|| CliError::Config(format!("ConfigError: unknown preset {preset:?}")))?;
    let data = gen_synthetic(&spec)?;
    let manifest = write_problem(&pooled(&data.train, &data.test), out)?;
    let mut planted = String::from("task,parent,sign\n");
    for (i, (p, s)) in data.planted.parent.iter().zip(&data.planted.sign).enumerate() {
        let _ = writeln!(planted, "{i},{p},{s}");
    }
    std::fs::write(out.join("planted.csv"), planted)?;
    Ok(format!("wrote {}", manifest.display()))
}

fn summary_text(s: &Summary) -> String {
    let mut out = String::new();
    if let Some(last) = s.first.trace.last() {
        let _ = writeln!(
            out,
            "final gap {:.3e} after {} rounds (p={}, t={})",
            last.gap, last.comm_rounds, last.p, last.t
        );
    }
    let pooled: Vec<_> = s.evals.iter().map(|r| r.pooled).collect();
    let (rm, rs) = report::mean_std(&pooled.iter().map(|m| m.rmse).collect::<Vec<_>>());
    let _ = writeln!(out, "test rmse {rm:.4} +- {rs:.4} over {} split(s)", pooled.len());
    if let Some(errs) = pooled.iter().map(|m| m.error_rate).collect::<Option<Vec<_>>>() {
        let (em, es) = report::mean_std(&errs);
        let _ = writeln!(out, "test error {em:.4} +- {es:.4}");
    }
    let _ = write!(out, "artifacts in {}", s.out_dir.display());
    out
}

fn dispatch(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Run {
            config,
            svg,
            splits,
            overrides,
            extra,
        } => {
            let cfg = load_config(&config, &overrides, &extra)?;
            Ok(summary_text(&run_experiment(&cfg, splits, svg)?))
        }
        Command::GenSynthetic { preset, out, seed } => gen_command(&preset, &out, seed),
        Command::Validate {
            config,
            overrides,
            extra,
        } => {
            let cfg = load_config(&config, &overrides, &extra)?;
            cfg.validate()?;
            let data = experiment::load_data(&cfg)?;
            cfg.run_config().validate(data.train.m())?;
            Ok(format!(
                "ok: {} tasks, d={}, {} training samples",
                data.train.m(),
                data.train.d,
                data.train.total_samples()
            ))
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
