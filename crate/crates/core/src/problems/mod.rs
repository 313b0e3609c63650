//! Problem model, expression language, problem files and the benchmark
//! registry.
//!
//! Objectives and constraint expressions are split into a constant, a linear
//! part and nonlinear terms. Addends of a top-level sum that share variables
//! (directly or through a chain of other addends) form one term; all other
//! addends become separate, lower-dimensional terms, which keeps the number
//! of simplices small.
//!
//! The Ackley constants are frozen at `a = 20`, `b = 0.2`, `c = 2π`, and each
//! benchmark uses its customary literature domain.

mod builtins;
mod expr;
mod file;
mod problem;

pub use builtins::{benchmark, benchmarks, builtin, Benchmark};
pub use expr::{
    parse_expr, parse_expr_with_vars, EvalError, Expr, Func, ParseError, ParseErrorKind,
};
pub use file::parse_problem;
pub use problem::{NonlinearTerm, ProblemSpec, TermFn, TermTarget, Variable};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unknown built-in problem `{0}`")]
    UnknownBuiltin(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{name}` has invalid bounds [{lo}, {hi}]")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("variable `{0}` appears in a nonlinear term and needs finite bounds")]
    UnboundedNonlinearVariable(String),
    #[error("nonlinear term targets missing row {0}")]
    UnknownRow(usize),
    #[error("{context}: {source}")]
    Expr { context: String, source: ParseError },
    #[error("{}{msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Syntax { line: Option<usize>, msg: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl ProblemError {
    /// Whether the error comes from malformed input text.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            ProblemError::Expr { .. } | ProblemError::Syntax { .. }
        )
    }
}
