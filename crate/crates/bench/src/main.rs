use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bifrb::bench::{render, run_benchmark, table1_sizes, BenchConfig, BenchReport, Protocol, ReportFormat};
use bifrb::problems::BMode;
use bifrb::solvers::MethodKind;
use clap::{Args, Parser, Subcommand};

/// Seeded benchmarks of BiFRB and baselines on random sparse feasibility problems.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the given sizes and solvers.
    Run {
        /// Comma-separated `MxN` sizes, e.g. `100x4000,200x5000`.
        #[arg(long, value_delimiter = ',', value_parser = parse_size, required = true)]
        sizes: Vec<(usize, usize)>,
        /// Ball radius of the feasibility constraint.
        #[arg(long = "R", default_value_t = 1.0)]
        radius: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the nine standard benchmark sizes, scaled and rounded up.
    Table1 {
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Radius; both 1 and 1000 when omitted.
        #[arg(long = "R")]
        radius: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "bifrb,ifrb,frb,dr,itseng")]
    solvers: Vec<MethodKind>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10001)]
    max_iter: usize,
    /// Right-hand side: gaussian, planted or sparse.
    #[arg(long, default_value = "gaussian")]
    b_mode: BMode,
    /// Method settings: certified or large-start (halving heuristic).
    #[arg(long, default_value = "certified")]
    protocol: Protocol,
    /// csv, json or md.
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("size {s:?} is not of the form MxN"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("size {s:?}: {e}"));
    Ok((parse(m)?, parse(n)?))
}

impl Common {
    fn config(&self, sizes: Vec<(usize, usize)>, radius: f64) -> BenchConfig {
        BenchConfig {
            sizes,
            radius,
            trials: self.trials,
            solvers: self.solvers.clone(),
            master_seed: self.seed,
            tol: self.tol,
            max_iter: self.max_iter,
            b_mode: self.b_mode,
            protocol: self.protocol,
            jobs: self.jobs,
            out_path: self.out.clone(),
            format: self.format,
        }
    }
}

fn execute(configs: &[BenchConfig]) -> Result<BenchReport> {
    let mut merged: Option<BenchReport> = None;
    for cfg in configs {
        let report = run_benchmark(cfg).context("benchmark failed")?;
        for f in &report.failures {
            eprintln!(
                "trial failed: {}x{} {} trial {} (seed {}): {}",
                f.m, f.n, f.solver, f.trial, f.seed, f.message
            );
        }
        merged = Some(match merged {
            None => report,
            Some(mut acc) => {
                acc.rows.extend(report.rows);
                acc.failures.extend(report.failures);
                acc.wall_time += report.wall_time;
                acc
            }
        });
    }
    merged.context("nothing to run")
}

fn main_inner() -> Result<bool> {
    let cli = Cli::parse();
    let (configs, common) = match &cli.command {
        Command::Run { sizes, radius, common } => (vec![common.config(sizes.clone(), *radius)], common),
        Command::Table1 { scale, radius, common } => {
            let sizes = table1_sizes(*scale)?;
            let radii = radius.map_or(vec![1.0, 1000.0], |r| vec![r]);
            (radii.into_iter().map(|r| common.config(sizes.clone(), r)).collect(), common)
        }
    };
    if common.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let report = execute(&configs)?;
    let text = render(&report, common.format);
    match &common.out {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    eprintln!(
        "b_mode {}, protocol {}, {} rows, {} failed trials, wall time {:.2?}",
        report.b_mode,
        report.protocol,
        report.rows.len(),
        report.failures.len(),
        report.wall_time
    );
    let empty: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.trials_used == 0)
        .map(|r| format!("{}x{} R={} {}", r.m, r.n, r.radius, r.solver))
        .collect();
    if !empty.is_empty() {
        eprintln!("cells without a successful trial: {}", empty.join(", "));
    }
    Ok(empty.is_empty())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
