//! Run reports and their JSON/CSV serializations.
//!
//! Wall-clock data lives only in [`Timing`] (JSON) and the `seconds` column
//! (CSV), so two runs of the same command can be compared byte for byte
//! once those are dropped.

use std::io::Write;

use serde::Serialize;
use sppa_core::problems::ProblemSpec;
use sppa_core::{SppaConfig, SppaResult};

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub initial_n_pieces: usize,
    pub n_pieces: usize,
    pub contract_frac: f64,
    pub max_iters: usize,
    pub width_tol: f64,
    pub obj_stall_tol: f64,
    pub obj_stall_iters: usize,
    pub time_limit: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigEcho {
    pub fn new(cfg: &SppaConfig, seed: Option<u64>) -> Self {
        ConfigEcho {
            initial_n_pieces: cfg.initial_n_pieces,
            n_pieces: cfg.n_pieces,
            contract_frac: cfg.contract_frac,
            max_iters: cfg.max_iters,
            width_tol: cfg.width_tol,
            obj_stall_tol: cfg.obj_stall_tol,
            obj_stall_iters: cfg.obj_stall_iters,
            time_limit: cfg.time_budget,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub iter: usize,
    pub objective: f64,
    pub incumbent: Vec<f64>,
    pub max_width: f64,
    pub nodes: usize,
    pub binaries: usize,
    pub violation: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    /// MILP wall time per iteration, aligned with `rows`.
    pub iteration_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub problem: String,
    pub sense: String,
    pub variables: Vec<String>,
    pub config: ConfigEcho,
    pub rows: Vec<ReportRow>,
    pub final_objective: Option<f64>,
    pub final_point: Vec<f64>,
    pub best_iter: Option<usize>,
    pub termination: String,
    pub error: Option<String>,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(problem: &ProblemSpec, config: ConfigEcho) -> Self {
        RunReport {
            problem: problem.name.clone(),
            sense: format!("{:?}", problem.sense).to_lowercase(),
            variables: problem.var_names(),
            config,
            rows: Vec::new(),
            final_objective: None,
            final_point: Vec::new(),
            best_iter: None,
            termination: String::new(),
            error: None,
            timing: Timing::default(),
        }
    }

    pub fn record(&mut self, result: &SppaResult, total_seconds: f64) {
        for rec in &result.trace {
            self.rows.push(ReportRow {
                iter: rec.iter,
                objective: rec.objective,
                incumbent: rec.incumbent.clone(),
                max_width: rec.max_width,
                nodes: rec.milp.nodes,
                binaries: rec.binaries,
                violation: rec.violation,
            });
            self.timing.iteration_seconds.push(rec.milp.seconds);
        }
        self.final_objective = result.best_iter.map(|_| result.best_objective);
        self.final_point = result.best_point.clone();
        self.best_iter = result.best_iter;
        self.termination = result.termination.as_str().to_string();
        self.timing.total_seconds = total_seconds;
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per iteration: `iter, objective, x1..xd, max_width, nodes,
    /// seconds`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.variables.len();
        let mut header = vec!["iter".to_string(), "objective".to_string()];
        header.extend((1..=d).map(|k| format!("x{k}")));
        header.extend(["max_width", "nodes", "seconds"].map(String::from));
        w.write_record(&header)?;
        for (row, secs) in self.rows.iter().zip(&self.timing.iteration_seconds) {
            let mut rec = vec![row.iter.to_string(), fmt_f64(row.objective)];
            rec.extend(row.incumbent.iter().map(|&x| fmt_f64(x)));
            rec.push(fmt_f64(row.max_width));
            rec.push(row.nodes.to_string());
            rec.push(fmt_f64(*secs));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Shortest representation that parses back to the same value, matching
/// what the JSON writer emits for finite numbers.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:?}");
        s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub problem: String,
    pub found: Option<f64>,
    pub optimal: f64,
    pub pieces: String,
    pub iterations: usize,
    pub termination: String,
    pub error: Option<String>,
    pub seconds: f64,
}
