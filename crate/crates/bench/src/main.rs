use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use splitmerge::linop::write_matrix_market;
use splitmerge::matgen::{generate, SyntheticSpec};
use splitmerge_bench::{
    run_experiment, BenchError, ExperimentConfig, MatrixSource, SolverSpec, StopModeSetting,
};

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Benchmark dominant-eigenvector solvers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json, report.csv and traces.
    Run(RunArgs),
    /// Export a synthetic matrix in Matrix Market format.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gap: Option<f64>,
    /// Comma-separated methods, e.g. `power,split_merge`.
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: bench-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run on a Matrix Market file instead of synthetic matrices.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    stop_mode: Option<StopModeSetting>,
}

const DEFAULT_N: usize = 256;
const DEFAULT_GAP: f64 = 1e-2;

fn build_config(args: RunArgs) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::synthetic(DEFAULT_N, DEFAULT_GAP),
    };
    if let Some(path) = args.matrix {
        if args.n.is_some() || args.gap.is_some() {
            return Err(BenchError::Config(
                "--matrix cannot be combined with --n or --gap".into(),
            ));
        }
        cfg.source = MatrixSource::MatrixMarket { path, shift: false };
    }
    if args.n.is_some() || args.gap.is_some() {
        match &mut cfg.source {
            MatrixSource::Synthetic { n, gap } => {
                *n = args.n.unwrap_or(*n);
                *gap = args.gap.unwrap_or(*gap);
            }
            MatrixSource::MatrixMarket { .. } => {
                return Err(BenchError::Config(
                    "--n and --gap apply to synthetic sources only".into(),
                ))
            }
        }
    }
    if let Some(names) = args.solvers {
        cfg.solvers = names.iter().map(|s| SolverSpec::named(s.trim())).collect();
        if cfg
            .baseline
            .as_ref()
            .is_some_and(|b| !cfg.solvers.iter().any(|s| &s.label() == b))
        {
            cfg.baseline = None;
        }
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(e) = args.eps {
        cfg.eps = e;
    }
    if let Some(m) = args.max_iter {
        cfg.max_iter = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.stop_mode {
        cfg.stop_mode = m;
    }
    if let Some(o) = args.out {
        cfg.out = Some(o);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), BenchError> {
    let cfg = build_config(args)?;
    let output = run_experiment(&cfg)?;
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("bench-out"));
    output.write(&dir, cfg.traces)?;
    print!("{}", output.report.render());
    println!("wrote {}", dir.display());
    Ok(())
}

fn gen(n: usize, gap: f64, seed: u64, out: PathBuf) -> Result<(), BenchError> {
    let (a, _) = generate(&SyntheticSpec::new(n, gap, seed))?;
    write_matrix_market(&a, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Gen { n, gap, seed, out } => gen(n, gap, seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
