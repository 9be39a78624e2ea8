//! Command-line harness around the branch-and-bound runtime, instantiated
//! with the exact minimum vertex cover solver. Solves single instances
//! under any scheduler/transport combination, generates seeded random
//! corpora, cross-checks small graphs against the enumeration oracle, and
//! runs worker-count grids that report wall times and speedups.

mod bench;
mod exec;
mod gen;
mod row;
mod verify;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "parbb", version, about = "Parallel branch-and-bound harness for minimum vertex cover")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one DIMACS instance and print (optionally append) the result.
    Solve(exec::SolveArgs),
    /// Write a corpus of seeded random graphs in DIMACS form.
    Gen(gen::GenArgs),
    /// Solve every small graph in a directory under all scheduler and
    /// encoding combinations and compare against the enumeration oracle.
    Verify(verify::VerifyArgs),
    /// Run a grid of worker counts and emit wall times with speedups.
    Bench(bench::BenchArgs),
    /// Host one rank of a multi-process cluster (spawned internally).
    #[command(name = "__rank", hide = true)]
    Rank(exec::RankArgs),
}

/// 0 = solved, 2 = timed out, 1 = anything else went wrong.
fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes instead of panicking on
    // the next print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => exec::cmd_solve(args),
        Command::Gen(args) => gen::cmd_gen(args).map(|()| ExitCode::SUCCESS),
        Command::Verify(args) => verify::cmd_verify(args),
        Command::Bench(args) => bench::cmd_bench(args),
        Command::Rank(args) => exec::cmd_rank(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
