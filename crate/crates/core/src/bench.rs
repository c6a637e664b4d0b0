//! Seeded benchmark harness on random sparse feasibility instances, report
//! rendering, and a geometric-rate fit for iterate traces.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::dist;
use crate::problems::{default_sparsity, generate_instance, BMode, CompositeProblem};
use crate::scalar::Scalar;
use crate::solvers::{run, Method, MethodKind, RunOptions, TerminationSpec, Trace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("empty input")]
    EmptyInput,
    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Method settings used by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Certified fixed parameters ([`Method::bench_default`]).
    #[default]
    Certified,
    /// Large-start halving heuristic ([`Method::large_start`]).
    LargeStart,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Certified => "certified",
            Protocol::LargeStart => "large-start",
        }
    }

    pub fn method(&self, kind: MethodKind, l_grad_g: f64) -> Result<Method<f64>, crate::solvers::SolverError> {
        match self {
            Protocol::Certified => Method::bench_default(kind, l_grad_g),
            Protocol::LargeStart => Method::large_start(kind, l_grad_g),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "certified" => Ok(Protocol::Certified),
            "large-start" => Ok(Protocol::LargeStart),
            other => Err(format!("unknown protocol '{other}' (expected certified or large-start)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
    Md,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Md),
            other => Err(format!("unknown format '{other}' (expected csv, json or md)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// `(m, n)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub radius: f64,
    pub trials: usize,
    pub solvers: Vec<MethodKind>,
    pub master_seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub b_mode: BMode,
    pub protocol: Protocol,
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
    pub out_path: Option<PathBuf>,
    pub format: ReportFormat,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![(100, 4000)],
            radius: 1.0,
            trials: 50,
            solvers: MethodKind::ALL.to_vec(),
            master_seed: 42,
            tol: 1e-10,
            max_iter: 10001,
            b_mode: BMode::default(),
            protocol: Protocol::default(),
            jobs: None,
            out_path: None,
            format: ReportFormat::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::InvalidConfig(msg));
        if self.sizes.is_empty() {
            return bad("at least one size is required".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.solvers.is_empty() {
            return bad("at least one solver is required".into());
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive (got {})", self.radius));
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1".into());
        }
        for &(m, n) in &self.sizes {
            if m == 0 || m >= n {
                return bad(format!("size {m}x{n}: need 1 <= m < n"));
            }
        }
        self.termination()
            .validate()
            .map_err(|e| BenchError::InvalidConfig(e.to_string()))
    }

    pub fn termination(&self) -> TerminationSpec {
        TerminationSpec {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// One `(size, solver)` cell of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub solver: MethodKind,
    /// `None` when no trial succeeded.
    pub iter_mean_ceil: Option<u64>,
    pub fval_min: Option<f64>,
    pub trials_used: usize,
}

/// A trial that errored and was excluded from its cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub m: usize,
    pub n: usize,
    pub solver: MethodKind,
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchmarkRow>,
    pub failures: Vec<TrialFailure>,
    pub b_mode: BMode,
    pub protocol: Protocol,
    pub wall_time: Duration,
}

impl BenchReport {
    /// True when some cell has no successful trial.
    pub fn has_empty_cell(&self) -> bool {
        self.rows.iter().any(|r| r.trials_used == 0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Instance seed for `(master, size index, trial index)`.
pub fn derive_seed(master: u64, size_idx: usize, trial: usize) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ (size_idx as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ (trial as u64).wrapping_mul(0xA076_1D64_78BD_642F))
}

/// `(⌈mean(iters)⌉, min(fvals))`
pub fn aggregate(iters: &[usize], fvals: &[f64]) -> Result<(u64, f64), BenchError> {
    if iters.is_empty() || fvals.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    if iters.len() != fvals.len() {
        return Err(BenchError::LengthMismatch(iters.len(), fvals.len()));
    }
    let total: u64 = iters.iter().map(|&i| i as u64).sum();
    let mean_ceil = total.div_ceil(iters.len() as u64);
    let fmin = fvals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((mean_ceil, fmin))
}

type TrialResult = Result<(usize, f64), String>;

fn run_cell(config: &BenchConfig, size_idx: usize, trial: usize) -> Vec<TrialResult> {
    let (m, n) = config.sizes[size_idx];
    let seed = derive_seed(config.master_seed, size_idx, trial);
    let instance = match generate_instance::<f64>(m, n, default_sparsity(m), config.radius, seed, config.b_mode) {
        Ok(inst) => inst,
        Err(e) => return vec![Err(format!("instance generation: {e}")); config.solvers.len()],
    };
    let term = config.termination();
    config
        .solvers
        .iter()
        .map(|&kind| {
            let method = config.protocol.method(kind, instance.l_grad_g()).map_err(|e| e.to_string())?;
            let trace = run(&instance, &method, &term, &RunOptions::default()).map_err(|e| e.to_string())?;
            if !trace.final_objective.is_finite() {
                return Err("non-finite objective at termination".into());
            }
            Ok((trace.iterations, trace.final_objective))
        })
        .collect()
}

/// Runs every `(size, solver)` cell for `config.trials` seeded instances.
/// Each instance is shared by all solvers of its trial.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let start = Instant::now();
    let cells: Vec<(usize, usize)> = (0..config.sizes.len())
        .flat_map(|s| (0..config.trials).map(move |t| (s, t)))
        .collect();
    let work = || -> Vec<Vec<TrialResult>> { cells.par_iter().map(|&(s, t)| run_cell(config, s, t)).collect() };
    let results = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| BenchError::ThreadPool(e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (size_idx, &(m, n)) in config.sizes.iter().enumerate() {
        for (solver_idx, &solver) in config.solvers.iter().enumerate() {
            let mut iters = Vec::new();
            let mut fvals = Vec::new();
            for trial in 0..config.trials {
                match &results[size_idx * config.trials + trial][solver_idx] {
                    Ok((it, fv)) => {
                        iters.push(*it);
                        fvals.push(*fv);
                    }
                    Err(message) => failures.push(TrialFailure {
                        m,
                        n,
                        solver,
                        trial,
                        seed: derive_seed(config.master_seed, size_idx, trial),
                        message: message.clone(),
                    }),
                }
            }
            let agg = aggregate(&iters, &fvals).ok();
            rows.push(BenchmarkRow {
                m,
                n,
                radius: config.radius,
                solver,
                iter_mean_ceil: agg.map(|a| a.0),
                fval_min: agg.map(|a| a.1),
                trials_used: iters.len(),
            });
        }
    }
    Ok(BenchReport {
        rows,
        failures,
        b_mode: config.b_mode,
        protocol: config.protocol,
        wall_time: start.elapsed(),
    })
}

/// The nine standard benchmark sizes scaled by `scale`, dimensions rounded up.
pub fn table1_sizes(scale: f64) -> Result<Vec<(usize, usize)>, BenchError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(BenchError::InvalidConfig(format!("scale must be positive (got {scale})")));
    }
    let up = |d: usize| ((d as f64) * scale).ceil().max(1.0) as usize;
    let mut sizes = Vec::new();
    for m in [100, 200, 300] {
        for n in [4000, 5000, 6000] {
            sizes.push((up(m), up(n)));
        }
    }
    Ok(sizes)
}

/// `x` to 6 significant digits in scientific notation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.5e}")
}

fn rounded(x: f64) -> f64 {
    sig6(x).parse().unwrap_or(x)
}

const CSV_HEADER: &str = "m,n,R,solver,iter_mean_ceil,fval_min,trials_used";

pub fn render_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.m,
            r.n,
            r.radius,
            r.solver,
            r.iter_mean_ceil.map(|i| i.to_string()).unwrap_or_default(),
            r.fval_min.map(sig6).unwrap_or_default(),
            r.trials_used
        ));
    }
    out
}

pub fn render_json(rows: &[BenchmarkRow]) -> String {
    let rows: Vec<BenchmarkRow> = rows
        .iter()
        .map(|r| BenchmarkRow {
            fval_min: r.fval_min.map(rounded),
            ..r.clone()
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&rows).expect("rows serialize");
    out.push('\n');
    out
}

pub fn render_markdown(report: &BenchReport) -> String {
    let mut out = format!("b_mode: {}, protocol: {}\n\n", report.b_mode, report.protocol);
    out.push_str("| m | n | R | solver | iter_mean_ceil | fval_min | trials_used |\n");
    out.push_str("|---:|---:|---:|:---|---:|---:|---:|\n");
    for r in &report.rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            r.m,
            r.n,
            r.radius,
            r.solver,
            r.iter_mean_ceil.map(|i| i.to_string()).unwrap_or_else(|| "-".into()),
            r.fval_min.map(sig6).unwrap_or_else(|| "-".into()),
            r.trials_used
        ));
    }
    out
}

pub fn render(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(&report.rows),
        ReportFormat::Json => render_json(&report.rows),
        ReportFormat::Md => render_markdown(report),
    }
}

/// Result of a geometric fit `e_k ≈ c·Q^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct RateFit {
    #[serde(rename = "Q")]
    pub q: f64,
    pub r_squared: f64,
    /// Points that entered the regression.
    pub points: usize,
}

pub const MIN_TRACE_LEN: usize = 20;
const ERROR_FLOOR: f64 = 1e-14;

/// Least-squares fit of `log e_k` against `k` over the last `tail_fraction`
/// of `errors`, skipping entries below `1e-14`.
pub fn fit_geometric(errors: &[f64], tail_fraction: f64) -> Result<RateFit, BenchError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(BenchError::InvalidConfig(format!(
            "tail fraction must lie in (0, 1] (got {tail_fraction})"
        )));
    }
    if errors.len() < MIN_TRACE_LEN {
        return Err(BenchError::InsufficientData {
            needed: MIN_TRACE_LEN,
            got: errors.len(),
        });
    }
    let keep = ((errors.len() as f64) * tail_fraction).ceil() as usize;
    let start = errors.len() - keep.min(errors.len());
    let pts: Vec<(f64, f64)> = errors[start..]
        .iter()
        .enumerate()
        .filter(|(_, &e)| e.is_finite() && e >= ERROR_FLOOR)
        .map(|(i, &e)| ((start + i) as f64, e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(BenchError::InsufficientData {
            needed: 3,
            got: pts.len(),
        });
    }
    let len = pts.len() as f64;
    let kx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let ly = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - kx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - kx) * (p.1 - ly)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ly).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(RateFit {
        q: slope.exp(),
        r_squared,
        points: pts.len(),
    })
}

/// [`fit_geometric`] on `‖x_k − x*‖` for a trace recorded with
/// `keep_iterates`; `reference` defaults to the final iterate.
pub fn rate_fit<S: Scalar>(trace: &Trace<S>, reference: Option<&[S]>, tail_fraction: f64) -> Result<RateFit, BenchError> {
    let iterates = trace.iterates.as_ref().ok_or(BenchError::InsufficientData {
        needed: MIN_TRACE_LEN,
        got: 0,
    })?;
    let reference = match reference {
        Some(r) => r,
        None => iterates.last().ok_or(BenchError::EmptyInput)?.as_slice(),
    };
    let errors: Vec<f64> = iterates.iter().map(|x| dist(x, reference).as_f64()).collect();
    fit_geometric(&errors, tail_fraction)
}
