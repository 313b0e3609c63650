//! Best-bound branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::model::{LpProblem, ModelError};
use super::simplex::{Basis, LpStatus, Simplex, StandardForm};
use super::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    /// Incumbent proven optimal within the relative gap.
    Optimal,
    Infeasible,
    Unbounded,
    /// Node limit reached with an incumbent.
    NodeLimit,
    /// Time limit reached with an incumbent.
    TimeLimit,
    /// A limit was reached before any integer-feasible point was found;
    /// `bound` still holds the best dual bound.
    NoIncumbent,
    NumericalFailure,
}

impl MilpStatus {
    pub fn has_solution(self) -> bool {
        matches!(
            self,
            MilpStatus::Optimal | MilpStatus::NodeLimit | MilpStatus::TimeLimit
        )
    }
}

/// Dual bound and incumbent after one node expansion, in the problem's sense.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEvent {
    pub node: usize,
    pub bound: f64,
    pub incumbent: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpStats {
    pub nodes: usize,
    pub branched: usize,
    pub lp_iterations: usize,
    pub seconds: f64,
    pub trace: Vec<BoundEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Incumbent values (empty when there is none).
    pub values: Vec<f64>,
    /// Incumbent objective in the problem's sense, NaN without incumbent.
    pub objective: f64,
    /// Best proven bound in the problem's sense.
    pub bound: f64,
    /// `|objective − bound| / max(|objective|, 1e-10)`, or infinity.
    pub gap: f64,
    pub stats: MilpStats,
}

struct Node {
    /// Relaxation value of the parent, minimization form.
    bound: f64,
    depth: usize,
    seq: usize,
    /// Tightened bounds `(var, lo, hi)` along the path from the root.
    fixes: Vec<(usize, f64, f64)>,
    warm: Option<Rc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: lowest bound first, then deeper, then older
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Solves `problem` to proven optimality within `config.rel_gap`, or until
/// a node or time limit is hit.
pub fn solve_milp(problem: &LpProblem, config: &SolverConfig) -> Result<MilpSolution, ModelError> {
    problem.validate()?;
    let start = Instant::now();
    let deadline = config
        .time_limit
        .map(|t| start + Duration::from_secs_f64(t.max(0.0)));
    let sf = StandardForm::new(problem, config);
    let sign = problem.sense.sign();
    let integer: Vec<usize> = (0..problem.vars.len())
        .filter(|&j| problem.vars[j].integer)
        .collect();
    // integer bounds are rounded inward once
    let mut root_lo = sf.lo.clone();
    let mut root_hi = sf.hi.clone();
    for &j in &integer {
        root_lo[j] = (root_lo[j] - config.int_tol).ceil();
        root_hi[j] = (root_hi[j] + config.int_tol).floor();
    }

    let mut stats = MilpStats::default();
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq,
        fixes: Vec::new(),
        warm: None,
    });
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut limit: Option<MilpStatus> = None;
    let mut failed_bound = f64::INFINITY;

    let prune_at = |inc: f64| inc - (config.rel_gap * inc.abs()).max(1e-9);

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= prune_at(*inc) {
                // best-bound order: every open node is at least as bad
                heap.clear();
                break;
            }
        }
        if stats.nodes >= config.node_limit {
            limit = Some(MilpStatus::NodeLimit);
            heap.push(node);
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            limit = Some(MilpStatus::TimeLimit);
            heap.push(node);
            break;
        }

        let mut lo = root_lo.clone();
        let mut hi = root_hi.clone();
        for &(j, l, h) in &node.fixes {
            lo[j] = l;
            hi[j] = h;
        }
        let mut lp = Simplex::new(&sf, lo, hi, node.warm.as_deref(), config);
        let status = lp.solve(deadline);
        stats.nodes += 1;
        stats.lp_iterations += lp.iterations;
        let values = lp.structural_values();
        let status = sf.check_caps(status, &values);

        match status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                record(&mut stats, config, &heap, &incumbent, failed_bound, sign);
                continue;
            }
            LpStatus::Unbounded => {
                if incumbent.is_none() && node.depth == 0 {
                    return Ok(finish(
                        MilpStatus::Unbounded,
                        None,
                        f64::NEG_INFINITY,
                        stats,
                        sign,
                        start,
                    ));
                }
                failed_bound = failed_bound.min(node.bound);
                continue;
            }
            LpStatus::TimeLimit => {
                limit = Some(MilpStatus::TimeLimit);
                heap.push(node);
                break;
            }
            LpStatus::IterationLimit | LpStatus::NumericalFailure => {
                if node.depth == 0 {
                    return Ok(finish(
                        MilpStatus::NumericalFailure,
                        None,
                        f64::NEG_INFINITY,
                        stats,
                        sign,
                        start,
                    ));
                }
                failed_bound = failed_bound.min(node.bound);
                continue;
            }
        }

        let obj = sign * problem.objective_value(&values);
        let pruned = incumbent
            .as_ref()
            .is_some_and(|(inc, _)| obj >= prune_at(*inc));
        if !pruned {
            // most fractional, ties to the lowest index
            let mut branch = None;
            let mut best = f64::INFINITY;
            for &j in &integer {
                let v = values[j];
                let frac = v - v.floor();
                if frac.min(1.0 - frac) <= config.int_tol {
                    continue;
                }
                let score = (frac - 0.5).abs();
                if score < best {
                    best = score;
                    branch = Some(j);
                }
            }
            match branch {
                None => {
                    let mut x = values;
                    for &j in &integer {
                        x[j] = x[j].round();
                    }
                    incumbent = Some((obj, x));
                }
                Some(j) => {
                    stats.branched += 1;
                    let v = values[j];
                    let warm = Rc::new(lp.basis());
                    let (cur_lo, cur_hi) = node
                        .fixes
                        .iter()
                        .rev()
                        .find(|f| f.0 == j)
                        .map(|f| (f.1, f.2))
                        .unwrap_or((root_lo[j], root_hi[j]));
                    for (l, h) in [(cur_lo, v.floor()), (v.ceil(), cur_hi)] {
                        let mut fixes = node.fixes.clone();
                        fixes.push((j, l, h));
                        seq += 1;
                        heap.push(Node {
                            bound: obj,
                            depth: node.depth + 1,
                            seq,
                            fixes,
                            warm: Some(warm.clone()),
                        });
                    }
                }
            }
        }
        record(&mut stats, config, &heap, &incumbent, failed_bound, sign);
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(failed_bound, f64::min);
    let status = match (&incumbent, limit) {
        (Some(_), Some(l)) => l,
        (None, Some(_)) => MilpStatus::NoIncumbent,
        (Some(_), None) => MilpStatus::Optimal,
        (None, None) if failed_bound.is_finite() => MilpStatus::NumericalFailure,
        (None, None) => MilpStatus::Infeasible,
    };
    let bound = match &incumbent {
        Some((inc, _)) => open_bound.min(*inc),
        None => open_bound,
    };
    Ok(finish(status, incumbent, bound, stats, sign, start))
}

fn record(
    stats: &mut MilpStats,
    config: &SolverConfig,
    heap: &BinaryHeap<Node>,
    incumbent: &Option<(f64, Vec<f64>)>,
    failed_bound: f64,
    sign: f64,
) {
    if !config.record_trace {
        return;
    }
    let open = heap
        .peek()
        .map_or(f64::INFINITY, |n| n.bound)
        .min(failed_bound);
    let inc = incumbent.as_ref().map(|(v, _)| *v);
    let bound = match inc {
        Some(v) => open.min(v),
        None => open,
    };
    stats.trace.push(BoundEvent {
        node: stats.nodes,
        bound: sign * bound,
        incumbent: inc.map(|v| sign * v),
    });
}

fn finish(
    status: MilpStatus,
    incumbent: Option<(f64, Vec<f64>)>,
    bound: f64,
    mut stats: MilpStats,
    sign: f64,
    start: Instant,
) -> MilpSolution {
    stats.seconds = start.elapsed().as_secs_f64();
    let (objective, values) = match incumbent {
        Some((v, x)) => (sign * v, x),
        None => (f64::NAN, Vec::new()),
    };
    let bound = sign * bound;
    let gap = if objective.is_finite() && bound.is_finite() {
        (objective - bound).abs() / objective.abs().max(1e-10)
    } else {
        f64::INFINITY
    };
    MilpSolution {
        status,
        values,
        objective,
        bound,
        gap,
        stats,
    }
}
