use super::{parse_expr, ProblemError, ProblemSpec};
use crate::milp::ObjectiveSense;

/// A registered benchmark with its literature domain, known optimum and
/// default piece counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: &'static str,
    pub expression: &'static str,
    pub lo: f64,
    pub hi: f64,
    pub optimum: f64,
    pub optimizer: [f64; 2],
    pub initial_n_pieces: usize,
    pub n_pieces: usize,
    pub contract_frac: f64,
}

const BENCHMARKS: &[Benchmark] = &[
    Benchmark {
        name: "rosenbrock",
        expression: "(1 - x)^2 + 100*(y - x^2)^2",
        lo: -2.048,
        hi: 2.048,
        optimum: 0.0,
        optimizer: [1.0, 1.0],
        initial_n_pieces: 4,
        n_pieces: 4,
        contract_frac: 0.5,
    },
    Benchmark {
        name: "rastrigin",
        expression: "20 + x^2 + y^2 - 10*cos(2*pi*x) - 10*cos(2*pi*y)",
        lo: -5.12,
        hi: 5.12,
        optimum: 0.0,
        optimizer: [0.0, 0.0],
        initial_n_pieces: 6,
        n_pieces: 3,
        contract_frac: 0.5,
    },
    Benchmark {
        name: "ackley",
        expression:
            "-20*exp(-0.2*sqrt(0.5*(x^2 + y^2))) - exp(0.5*(cos(2*pi*x) + cos(2*pi*y))) + e + 20",
        lo: -5.0,
        hi: 5.0,
        optimum: 0.0,
        optimizer: [0.0, 0.0],
        initial_n_pieces: 3,
        n_pieces: 3,
        contract_frac: 0.5,
    },
    Benchmark {
        name: "eggholder",
        expression: "-(y + 47)*sin(sqrt(abs(x/2 + y + 47))) - x*sin(sqrt(abs(x - (y + 47))))",
        lo: -512.0,
        hi: 512.0,
        optimum: -959.6407,
        optimizer: [512.0, 404.2319],
        initial_n_pieces: 35,
        n_pieces: 3,
        contract_frac: 0.36,
    },
];

/// All registered benchmarks in a fixed order.
pub fn benchmarks() -> &'static [Benchmark] {
    BENCHMARKS
}

pub fn benchmark(name: &str) -> Option<&'static Benchmark> {
    BENCHMARKS
        .iter()
        .find(|b| b.name.eq_ignore_ascii_case(name))
}

/// Builds a registered benchmark as a minimization over `x, y`.
pub fn builtin(name: &str) -> Result<ProblemSpec, ProblemError> {
    let b = benchmark(name).ok_or_else(|| ProblemError::UnknownBuiltin(name.to_string()))?;
    let mut p = ProblemSpec::new(b.name, ObjectiveSense::Minimize);
    p.add_variable("x", b.lo, b.hi, false);
    p.add_variable("y", b.lo, b.hi, false);
    let e = parse_expr(b.expression).expect("registry expressions parse");
    p.set_objective_expr(&e, &[])?;
    Ok(p)
}
