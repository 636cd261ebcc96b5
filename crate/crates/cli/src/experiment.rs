//! Loading data, running the chosen solver over one or more splits and
//! writing artifacts.

use std::fs;
use std::path::PathBuf;

use mtrl_core::data::{evaluate, gen_synthetic, load_tasks, resplit, EvalReport, Planted, SyntheticSpec};
use mtrl_core::{run_dmtrl, run_ssdca, run_stl, validate_problem, Loss, MultiTaskProblem, RunOutput};

use crate::config::{Clock, Dataset, ExperimentConfig, Mode, SIM_ROUND_MS, SIM_STEP_MS};
use crate::error::{CliError, CliResult};
use crate::report;
use crate::svg;

const MANIFEST_TEST_FRACTION: f64 = 0.3;
const MANIFEST_LAMBDA: f64 = 0.05;

/// Train/test pools plus whatever ground truth the source knows.
pub struct Data {
    pub train: MultiTaskProblem,
    pub test: MultiTaskProblem,
    pub planted: Option<Planted>,
    pub test_fraction: f64,
    /// Preset data comes with a native split 0; manifest data is split here.
    native_split: bool,
}

fn with_loss(mut p: MultiTaskProblem, loss: Loss, lambda: f64) -> MultiTaskProblem {
    p.loss = loss;
    p.lambda = lambda;
    p
}

pub fn load_data(cfg: &ExperimentConfig) -> CliResult<Data> {
    match &cfg.dataset {
        Dataset::Preset(name) => {
            let mut spec = SyntheticSpec::preset(name, cfg.seed)
                .ok_or_else(|| CliError::Config(format!("ConfigError: unknown preset {name:?}")))?;
            if let Some(m) = cfg.m {
                spec.m = m;
                spec.n_parents = spec.n_parents.min(m);
            }
            if let Some(d) = cfg.d {
                spec.d = d;
            }
            if let Some(n) = cfg.n {
                spec.per_task_n = (n, n);
            }
            if let Some(f) = cfg.test_fraction {
                spec.test_fraction = f;
            }
            let gen = gen_synthetic(&spec)?;
            let loss = cfg.loss.unwrap_or(gen.train.loss);
            let lambda = cfg.lambda.unwrap_or(spec.lambda);
            Ok(Data {
                train: validate_problem(with_loss(gen.train, loss, lambda))?,
                test: with_loss(gen.test, loss, lambda),
                planted: Some(gen.planted),
                test_fraction: spec.test_fraction,
                native_split: true,
            })
        }
        Dataset::Manifest(path) => {
            let tasks = load_tasks(path)?;
            let loss = cfg.loss.unwrap_or(Loss::Squared);
            let lambda = cfg.lambda.unwrap_or(MANIFEST_LAMBDA);
            let d = tasks[0].d;
            let empty = tasks
                .iter()
                .map(|t| mtrl_core::TaskData::new(t.task_id, d, Vec::new(), Vec::new()))
                .collect();
            Ok(Data {
                train: validate_problem(MultiTaskProblem::new(tasks, lambda, loss))?,
                test: MultiTaskProblem::new(empty, lambda, loss),
                planted: None,
                test_fraction: cfg.test_fraction.unwrap_or(MANIFEST_TEST_FRACTION),
                native_split: false,
            })
        }
    }
}

impl Data {
    /// Train/test problems for split `s`. Splits are reproducible per seed.
    pub fn split(&self, seed: u64, s: u64) -> CliResult<(MultiTaskProblem, MultiTaskProblem)> {
        if s == 0 && self.native_split {
            return Ok((self.train.clone(), self.test.clone()));
        }
        let (tr, te) = resplit(&self.train, &self.test, self.test_fraction, seed, s)?;
        Ok((validate_problem(tr)?, te))
    }
}

/// Run the configured solver on one training problem.
pub fn solve(cfg: &ExperimentConfig, train: &MultiTaskProblem) -> CliResult<RunOutput> {
    let rc = cfg.run_config();
    let mut out = match cfg.mode {
        Mode::Dmtrl => run_dmtrl(train, &rc)?,
        Mode::Stl => run_stl(train, &rc)?,
        Mode::Ssdca | Mode::Centralized => run_ssdca(train, &rc)?,
    };
    if cfg.clock == Clock::Simulated {
        for r in &mut out.trace {
            r.elapsed_ms = r.coord_steps as f64 * SIM_STEP_MS + r.comm_rounds as f64 * SIM_ROUND_MS;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub out_dir: PathBuf,
    /// Run on split 0.
    pub first: RunOutput,
    pub evals: Vec<EvalReport>,
}

/// Run `splits` independent splits and write artifacts for the first one
/// plus the aggregated evaluation.
pub fn run_experiment(cfg: &ExperimentConfig, splits: usize, svg_charts: bool) -> CliResult<Summary> {
    cfg.validate()?;
    if splits == 0 {
        return Err(CliError::Config("ConfigError: --splits must be at least 1".into()));
    }
    let data = load_data(cfg)?;
    cfg.run_config().validate(data.train.m())?;
    let mut first = None;
    let mut evals = Vec::with_capacity(splits);
    for s in 0..splits {
        let (train, test) = data.split(cfg.seed, s as u64)?;
        let out = solve(cfg, &train)?;
        evals.push(evaluate(&out.w, &test)?);
        if first.is_none() {
            first = Some(out);
        }
    }
    let first = first.expect("at least one split");

    let dir = &cfg.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), cfg.to_string())?;
    fs::write(dir.join("trace.csv"), report::trace_csv(&first.trace))?;
    fs::write(dir.join("sigma.csv"), report::matrix_csv(&first.cov.sigma))?;
    fs::write(dir.join("correlation.csv"), report::matrix_csv(&first.cov.correlation()))?;
    fs::write(dir.join("weights.csv"), report::weights_csv(&first.w))?;
    fs::write(dir.join("eval.csv"), report::eval_csv(&evals))?;
    if svg_charts {
        let x_round: Vec<f64> = first.trace.iter().map(|r| r.comm_rounds as f64).collect();
        let x_time: Vec<f64> = first.trace.iter().map(|r| r.elapsed_ms).collect();
        let gap: Vec<f64> = first.trace.iter().map(|r| r.gap).collect();
        fs::write(
            dir.join("gap_vs_round.svg"),
            svg::log_line_chart("duality gap by round", "communication rounds", &x_round, &gap),
        )?;
        fs::write(
            dir.join("gap_vs_time.svg"),
            svg::log_line_chart("duality gap by time", "elapsed ms", &x_time, &gap),
        )?;
    }
    Ok(Summary {
        out_dir: dir.clone(),
        first,
        evals,
    })
}
