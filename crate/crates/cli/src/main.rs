use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use ch_core::harness::{Suite, SweepConfig};
use clap::{Parser, Subcommand};
use consensus_cli::commands::{self, Algo, QueryModelArg, ReduceSource};
use consensus_cli::instance::{read_instance, Overrides, TuckerSpec, Variant};
use serde::Serialize;

/// ε-consensus-halving solvers, reductions and query-count benchmarks.
#[derive(Parser)]
#[command(name = "consensus", version)]
struct Cli {
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "CONSENSUS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the report as JSON.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum)]
        algo: Option<Algo>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        lipschitz: Option<f64>,
        /// Construction for pipeline instances.
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        #[arg(long, value_enum, default_value = "grw")]
        query_model: QueryModelArg,
        /// Keep wall-clock time in the report.
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the Borsuk-Ulam and consensus-halving instances of a Tucker
    /// instance and print their parameters.
    Reduce {
        #[arg(long, value_enum, default_value = "general")]
        variant: Variant,
        #[arg(long)]
        eps: f64,
        /// Tucker instance as JSON ({"n", "N", "labels"}).
        #[arg(long, conflicts_with = "seed")]
        tucker: Option<PathBuf>,
        #[arg(long, requires_all = ["n", "grid"])]
        seed: Option<u64>,
        /// Number of agents.
        #[arg(long)]
        n: Option<usize>,
        /// Tucker grid size N.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a partition against an instance; exit 0 on acceptance.
    Verify {
        instance: PathBuf,
        partition: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep L/ε over powers of two and write one CSV row per solve.
    Bench {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 4)]
        k_min: u32,
        #[arg(long, default_value_t = 20)]
        k_max: u32,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        grid_agents: Vec<usize>,
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Exit codes: 0 success, 1 partition not within ε, 2 error.
fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Solve { instance, algo, eps, lipschitz, variant, query_model, timings, out } => {
            let spec = read_instance(&instance)?;
            let o = commands::solve(&spec, algo, Overrides { eps, lipschitz, variant }, query_model, timings)?;
            emit(&o, out.as_deref())?;
            Ok(if o.satisfied { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Reduce { variant, eps, tucker, seed, n, grid, out } => {
            let source = match (tucker, seed, n, grid) {
                (Some(path), ..) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
                    let spec: TuckerSpec = serde_json::from_str(&text).context("malformed Tucker JSON")?;
                    ReduceSource::Spec(spec)
                }
                (None, Some(seed), Some(n), Some(grid)) => ReduceSource::Seed { seed, n, grid },
                _ => anyhow::bail!("pass either --tucker FILE or --seed S --n n --grid N"),
            };
            emit(&commands::reduce(source, variant, eps)?, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { instance, partition, eps, out } => {
            let spec = read_instance(&instance)?;
            let text = std::fs::read_to_string(&partition).with_context(|| format!("cannot read {}", partition.display()))?;
            let p = commands::parse_partition(&text)?;
            let o = commands::verify(&spec, &p, Overrides { eps, ..Overrides::default() })?;
            emit(&o, out.as_deref())?;
            Ok(if o.accepted { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Bench { suite, seed, instances, k_min, k_max, grid_agents, timings, out } => {
            let cfg = SweepConfig { instances, seed, k_min, k_max, grid_agents, timings, ..SweepConfig::default() };
            let rows = commands::bench(suite, &cfg)?;
            commands::write_csv(&rows, writer(out.as_deref())?)?;
            for line in commands::summary(&rows) {
                eprintln!("{line}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
