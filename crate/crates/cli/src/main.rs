//! `curvedio`: batch front-end for the resonant-point laboratory.
//!
//! Exit codes: 0 = criterion passed, 1 = criterion failed, 2 = usage or
//! config error, 3 = budget exhaustion.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::Ctx;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "curvedio",
    version,
    about = "Resonant points, coverage, counting and dimension experiments on planar curves"
)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSONL/SVG files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker-pool size override.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Form-count budget override.
    #[arg(long, global = true)]
    budget: Option<u128>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coverage ratios of resonant-point ball unions on subintervals.
    Ubiquity,
    /// Box-counting dimension and cover-sum exponents per v.
    Dimension,
    /// Solution counts N(delta) and exceptional-set measures.
    Count,
    /// Seeded construction batches: nearby resonant points per Q.
    Construct,
    /// Slope classification and crowded-cell incidence diagnostics.
    Covers,
    /// Series classifier for the full-measure criterion.
    Divergence,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    let Some(config_path) = cli.config else {
        eprintln!("error: --config <path> is required");
        return 2;
    };
    let loaded = match config::load(&config_path) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut cfg = loaded.cfg;
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            return 2;
        }
        cfg.workers = w;
    }
    if let Some(b) = cli.budget {
        if b == 0 {
            eprintln!("error: --budget must be positive");
            return 2;
        }
        cfg.budget = b;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot build worker pool: {e}");
            return 2;
        }
    };
    let ctx = Ctx { cfg: &cfg, hash: &loaded.hash, out: &cli.out };
    let result = pool.install(|| match cli.command {
        Cmd::Ubiquity => commands::cmd_ubiquity(&ctx),
        Cmd::Dimension => commands::cmd_dimension(&ctx),
        Cmd::Count => commands::cmd_count(&ctx),
        Cmd::Construct => commands::cmd_construct(&ctx),
        Cmd::Covers => commands::cmd_covers(&ctx),
        Cmd::Divergence => commands::cmd_divergence(&ctx),
    });
    match result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("criterion failed; reports written to {}", cli.out.display());
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
