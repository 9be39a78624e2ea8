//! Seeded random-graph generation: writes reproducible G(n,p) instances in
//! DIMACS format, one file per seed.

use anyhow::{Context, Result, ensure};
use clap::Args;
use std::path::PathBuf;
use vcover::dimacs;
use vcover::gen::gen_gnp;

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Vertex count of every generated graph.
    #[arg(long)]
    pub n: usize,
    /// Edge probability; defaults to 4/(n-1) for average degree about 4.
    #[arg(long)]
    pub prob: Option<f64>,
    /// How many graphs to generate, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Base RNG seed; the same arguments always produce identical files.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Directory the .col files are written into (created if missing).
    #[arg(long)]
    pub outdir: PathBuf,
}

pub fn cmd_gen(args: GenArgs) -> Result<()> {
    ensure!(args.n >= 2, "need at least 2 vertices");
    let p = args.prob.unwrap_or(4.0 / (args.n as f64 - 1.0)).clamp(0.0, 1.0);
    std::fs::create_dir_all(&args.outdir)
        .with_context(|| format!("creating {}", args.outdir.display()))?;
    for i in 0..args.count {
        let file_seed = args.seed + i;
        let graph = gen_gnp(args.n, p, file_seed);
        let name = format!("gnp_n{}_p{:.4}_s{}.col", args.n, p, file_seed);
        let path = args.outdir.join(name);
        std::fs::write(&path, dimacs::to_string(&graph))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}
