//! Problem sources and evaluation.

pub mod eval;
pub mod io;
pub mod synthetic;

pub use eval::{evaluate, EvalReport, Metrics};
pub use io::{format_dense, load_problem, load_tasks, parse_dense, parse_sparse, write_problem, Format, Manifest};
pub use synthetic::{gen_synthetic, resplit, LabelModel, Planted, SyntheticData, SyntheticSpec};
