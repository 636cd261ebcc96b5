//! Text dataset formats.
//!
//! Dense task file: a header line `n d`, then `n` rows `y v1 ... vd`.
//! Sparse task file: rows `y idx:val ...` with 1-based indices up to `d`.
//! Manifest: `key value` lines, `#` comments, blank lines ignored:
//!
//! ```text
//! format dense        # or sparse
//! d 28
//! task school/task_001.txt
//! task school/task_002.txt
//! ```
//!
//! Task paths are relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::problem::{validate_problem, MultiTaskProblem, TaskData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub format: Format,
    pub d: usize,
    pub tasks: Vec<PathBuf>,
}

fn parse_err(path: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::ParseError {
        path: path.to_string(),
        line,
        reason: reason.into(),
    }
}

fn number(path: &str, line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("not a number: {tok:?}")))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parse a dense task file. `path` is used only in error messages.
pub fn parse_dense(text: &str, task_id: usize, path: &str) -> Result<TaskData> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [n, d] = dims[..] else {
        return Err(parse_err(path, hline, "header must be `n d`"));
    };
    let n: usize = n
        .parse()
        .map_err(|_| parse_err(path, hline, "bad sample count"))?;
    let d: usize = d.parse().map_err(|_| parse_err(path, hline, "bad dimension"))?;
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d + 1 {
            return Err(parse_err(
                path,
                ln,
                format!("expected {} fields, found {}", d + 1, toks.len()),
            ));
        }
        labels.push(number(path, ln, toks[0])?);
        for t in &toks[1..] {
            features.push(number(path, ln, t)?);
        }
    }
    if labels.len() != n {
        return Err(parse_err(
            path,
            hline,
            format!("header promises {n} rows, file has {}", labels.len()),
        ));
    }
    Ok(TaskData::new(task_id, d, features, labels))
}

/// Parse a sparse task file into dense rows of width `d`.
pub fn parse_sparse(text: &str, task_id: usize, d: usize, path: &str) -> Result<TaskData> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (ln, line) in content_lines(text) {
        let mut toks = line.split_whitespace();
        let y = number(path, ln, toks.next().expect("line is nonempty"))?;
        let mut row = vec![0.0; d];
        for tok in toks {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, ln, format!("expected idx:val, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(path, ln, format!("bad index {idx:?}")))?;
            if idx == 0 || idx > d {
                return Err(parse_err(path, ln, format!("index {idx} outside 1..={d}")));
            }
            row[idx - 1] = number(path, ln, val)?;
        }
        labels.push(y);
        features.extend_from_slice(&row);
    }
    Ok(TaskData::new(task_id, d, features, labels))
}

pub fn parse_manifest(text: &str, path: &str) -> Result<Manifest> {
    let mut format = None;
    let mut d = None;
    let mut tasks = Vec::new();
    for (ln, line) in content_lines(text) {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(char::is_whitespace)
            .map(|(k, v)| (k, v.trim()))
            .ok_or_else(|| Error::ManifestError(format!("{path}:{ln}: expected `key value`")))?;
        match key {
            "format" => {
                format = Some(match value {
                    "dense" => Format::Dense,
                    "sparse" => Format::Sparse,
                    other => {
                        return Err(Error::ManifestError(format!(
                            "{path}:{ln}: unknown format {other:?}"
                        )))
                    }
                })
            }
            "d" => {
                d = Some(value.parse::<usize>().map_err(|_| {
                    Error::ManifestError(format!("{path}:{ln}: bad dimension {value:?}"))
                })?)
            }
            "task" => tasks.push(PathBuf::from(value)),
            other => {
                return Err(Error::ManifestError(format!(
                    "{path}:{ln}: unknown key {other:?}"
                )))
            }
        }
    }
    let format = format.ok_or_else(|| Error::ManifestError(format!("{path}: missing `format`")))?;
    let d = d.ok_or_else(|| Error::ManifestError(format!("{path}: missing `d`")))?;
    if tasks.is_empty() {
        return Err(Error::ManifestError(format!("{path}: no tasks listed")));
    }
    Ok(Manifest { format, d, tasks })
}

/// Read every task listed in a manifest. Tasks are densified.
pub fn load_tasks(manifest_path: &Path) -> Result<Vec<TaskData>> {
    let shown = manifest_path.display().to_string();
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| Error::ManifestError(format!("{shown}: {e}")))?;
    let manifest = parse_manifest(&text, &shown)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut tasks = Vec::with_capacity(manifest.tasks.len());
    for (i, rel) in manifest.tasks.iter().enumerate() {
        let path = base.join(rel);
        let shown = path.display().to_string();
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::ManifestError(format!("{shown}: {e}")))?;
        let task = match manifest.format {
            Format::Dense => {
                let t = parse_dense(&text, i, &shown)?;
                if t.d != manifest.d {
                    return Err(Error::DimensionMismatch {
                        task: i,
                        expected: manifest.d,
                        found: t.d,
                    });
                }
                t
            }
            Format::Sparse => parse_sparse(&text, i, manifest.d, &shown)?,
        };
        tasks.push(task);
    }
    Ok(tasks)
}

/// Load and validate a problem from a manifest.
pub fn load_problem(manifest_path: &Path, loss: Loss, lambda: f64) -> Result<MultiTaskProblem> {
    validate_problem(MultiTaskProblem::new(load_tasks(manifest_path)?, lambda, loss))
}

/// Shortest decimal text that parses back to the same double.
fn fmt_num(v: f64) -> String {
    format!("{v}")
}

pub fn format_dense(task: &TaskData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", task.n(), task.d);
    for (x, y) in task.rows().zip(&task.labels) {
        out.push_str(&fmt_num(*y));
        for v in x {
            out.push(' ');
            out.push_str(&fmt_num(*v));
        }
        out.push('\n');
    }
    out
}

/// Write a dense manifest plus one file per task into `dir`; returns the
/// manifest path.
pub fn write_problem(problem: &MultiTaskProblem, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut manifest = format!("format dense\nd {}\n", problem.d);
    for (i, task) in problem.tasks.iter().enumerate() {
        let name = format!("task_{i:03}.txt");
        fs::write(dir.join(&name), format_dense(task))?;
        let _ = writeln!(manifest, "task {name}");
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest)?;
    Ok(path)
}
