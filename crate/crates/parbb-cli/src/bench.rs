//! Scheduler-by-worker-count sweep over one instance, with wall times and
//! speedups against the sequential baseline. Speedups only mean anything
//! when each rank gets real hardware, i.e. with `--transport tcp` on a
//! multi-core machine; under the sim transport every rank shares one
//! thread and the numbers measure protocol overhead, not parallelism.

use crate::exec::{self, Outcome, RunKnobs, RunSpec, SchedulerChoice};
use crate::row::{self, CsvRow};
use anyhow::{Result, ensure};
use clap::Args;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// DIMACS instance to sweep.
    pub instance: PathBuf,
    /// Comma-separated worker counts forming the grid.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 8])]
    pub workers: Vec<usize>,
    /// Schedulers to sweep; the sequential baseline runs regardless, so
    /// listing `sequential` here is redundant and skipped.
    #[arg(
        long,
        value_delimiter = ',',
        value_enum,
        default_values_t = [SchedulerChoice::Semi, SchedulerChoice::Central]
    )]
    pub schedulers: Vec<SchedulerChoice>,
    #[command(flatten)]
    pub knobs: RunKnobs,
    /// Append every row, plus a speedup column, to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Reuse an already-measured sequential wall time instead of running
    /// the baseline again.
    #[arg(long)]
    pub sequential_secs: Option<f64>,
}

fn cell_size(out: &Outcome) -> String {
    match out.mvc_size {
        Some(k) => k.to_string(),
        None => "TIMEOUT".to_string(),
    }
}

fn cell_speedup(s: Option<f64>) -> String {
    match s {
        Some(s) => format!("{s:.2}"),
        None => "-".to_string(),
    }
}

fn print_row(scheduler: &str, workers: usize, out: &Outcome, speedup: Option<f64>) {
    let (tasks, ended) = match &out.report {
        Some(r) => (
            r.workers.iter().map(|w| w.tasks_sent + w.tasks_pushed).sum::<u64>().to_string(),
            r.center.ended_by.clone(),
        ),
        None => ("-".into(), "-".into()),
    };
    println!(
        "{:<10} {:>7} {:>10.3} {:>8} {:>8} {:>10}  {}",
        scheduler,
        workers,
        out.wall_seconds,
        cell_size(out),
        cell_speedup(speedup),
        tasks,
        ended
    );
}

fn append_csv(args: &BenchArgs, spec: &RunSpec, out: &Outcome, speedup: Option<f64>) -> Result<()> {
    if let Some(csv) = &args.csv {
        let mut r = CsvRow::from_outcome(spec, out);
        r.speedup = speedup;
        row::append_row(csv, &r, true)?;
    }
    Ok(())
}

pub fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    ensure!(!args.workers.is_empty(), "need at least one worker count");
    let mut any_timeout = false;

    println!(
        "{:<10} {:>7} {:>10} {:>8} {:>8} {:>10}  {}",
        "scheduler", "workers", "wall_s", "mvc", "speedup", "tasks", "ended_by"
    );

    let baseline: Option<f64> = match args.sequential_secs {
        Some(s) => {
            ensure!(s > 0.0, "--sequential-secs must be positive");
            Some(s)
        }
        None => {
            let spec = RunSpec::new(
                args.instance.clone(),
                SchedulerChoice::Sequential,
                Some(1),
                args.knobs.clone(),
            )?;
            let out = exec::run_spec(&spec)?;
            let base = (!out.timed_out).then_some(out.wall_seconds);
            let speedup = base.map(|_| 1.0);
            print_row("sequential", 1, &out, speedup);
            append_csv(&args, &spec, &out, speedup)?;
            if out.timed_out {
                any_timeout = true;
                eprintln!("sequential baseline hit its time limit; speedup column left empty");
            }
            base
        }
    };

    for &scheduler in &args.schedulers {
        if scheduler == SchedulerChoice::Sequential {
            continue;
        }
        for &w in &args.workers {
            let spec =
                RunSpec::new(args.instance.clone(), scheduler, Some(w), args.knobs.clone())?;
            let out = exec::run_spec(&spec)?;
            if out.timed_out {
                any_timeout = true;
            }
            let speedup = match (baseline, out.timed_out) {
                (Some(base), false) => Some(base / out.wall_seconds.max(1e-9)),
                _ => None,
            };
            print_row(scheduler.name(), w, &out, speedup);
            append_csv(&args, &spec, &out, speedup)?;
        }
    }

    Ok(if any_timeout { ExitCode::from(2) } else { ExitCode::SUCCESS })
}
