//! Cross-checks every instance in a directory against a brute-force oracle:
//! the sequential solver and both parallel schedulers (under both solution
//! encodings) must all report the same minimum cover size.

use crate::exec;
use anyhow::{Context, Result, bail};
use clap::Args;
use parbb::config::SchedulerKind;
use parbb::sim::{SimOptions, run_sim};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use vcover::adapter::VertexCover;
use vcover::encode::Encoding;
use vcover::solve::{BRUTE_FORCE_LIMIT, brute_force_mvc, mvc_sequential};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Directory of .col / .dimacs instances to check.
    pub dir: PathBuf,
    /// Simulated worker count for the parallel checks.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Base seed for the simulated runs.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn check_file(path: &PathBuf, args: &VerifyArgs) -> Result<()> {
    let graph = exec::load_graph(path)?;
    if graph.n() > BRUTE_FORCE_LIMIT {
        bail!("n={} exceeds the brute-force oracle limit of {BRUTE_FORCE_LIMIT}", graph.n());
    }
    let base = Arc::new(graph);
    let (oracle, _) = brute_force_mvc(&base).context("brute force found no cover")?;
    let oracle = oracle as i64;

    let seq = mvc_sequential(&base);
    if seq.size as i64 != oracle {
        bail!("sequential found {} but the oracle says {oracle}", seq.size);
    }

    let configs = [
        (SchedulerKind::Semi, Encoding::Basic),
        (SchedulerKind::Semi, Encoding::Optimized),
        (SchedulerKind::Central, Encoding::Basic),
        (SchedulerKind::Central, Encoding::Optimized),
    ];
    for (i, (kind, encoding)) in configs.into_iter().enumerate() {
        let problem = Arc::new(VertexCover::new(Arc::clone(&base), encoding));
        let mut opts = SimOptions::new(args.workers, args.seed + i as u64);
        opts.scheduler = kind;
        let outcome = run_sim(Arc::clone(&problem), &opts)
            .map_err(|e| anyhow::anyhow!("{kind:?}/{} run stalled: {e}", encoding.name()))?;
        let got = exec::verified_size(&problem, &outcome.report)
            .with_context(|| format!("{kind:?}/{}", encoding.name()))?;
        if got != oracle {
            bail!("{kind:?}/{} found {got} but the oracle says {oracle}", encoding.name());
        }
    }
    Ok(())
}

pub fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.dir)
        .with_context(|| format!("reading {}", args.dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|x| x.to_str()),
                Some("col") | Some("dimacs")
            )
        })
        .collect();
    paths.sort();

    let mut failures = 0usize;
    for path in &paths {
        match check_file(path, &args) {
            Ok(()) => println!("ok    {}", path.display()),
            Err(err) => {
                failures += 1;
                println!("FAIL  {}: {err:#}", path.display());
            }
        }
    }
    println!("{} instance(s) checked, {} failure(s)", paths.len(), failures);
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
