//! `pdfp` — benchmark front end for the splitting primal-dual fixed-point
//! solver family: problem/graph generation, solver runs with CSV traces,
//! an independent reference solver, and trace comparison.
//!
//! Exit codes: 0 success/converged, 1 usage or configuration error,
//! 2 iteration budget exhausted without convergence.

mod benchcmd;
mod comparecmd;
mod config;
mod gencmd;
mod oraclecmd;
mod problem;
mod runcmd;
mod tracefile;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Algorithm, GraphKind, PartitionKind, ProblemKind, RunConfig, SamplerSpec, StepSpec};

#[derive(Parser)]
#[command(name = "pdfp", version, about = "Splitting primal-dual fixed-point benchmark CLI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver and write a per-iteration CSV trace.
    Solve(SolveArgs),
    /// Independent proximal-gradient reference solve with an optimality
    /// certificate; writes the solution as JSON.
    Oracle(OracleArgs),
    /// Generate a synthetic dataset (LIBSVM text plus a JSON sidecar).
    Gen(GenArgs),
    /// Generate a communication graph edge list.
    GraphGen(GraphGenArgs),
    /// Run a batch of solve configurations and print a summary table.
    Bench(BenchArgs),
    /// Compare solver traces against an oracle solution.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    algo: Option<Algorithm>,
    /// LIBSVM dataset file (requires --problem).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Interpretation of --data.
    #[arg(long, value_enum)]
    problem: Option<ProblemKind>,
    /// Generate a synthetic problem instead of reading a file.
    #[arg(long, value_enum)]
    gen: Option<ProblemKind>,
    /// Sample count for generated LASSO data (rows of A).
    #[arg(long)]
    p: Option<usize>,
    /// Sample count for generated logistic data.
    #[arg(short, long)]
    m: Option<usize>,
    /// Feature count for generated data.
    #[arg(short, long)]
    q: Option<usize>,
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    /// l1 regularization weight.
    #[arg(long)]
    tau: Option<f64>,
    /// Primal step size, number or `auto` (= beta).
    #[arg(long, value_parser = StepSpec::parse)]
    gamma: Option<StepSpec>,
    /// Dual step size, number or `auto` (= the operator-norm bound).
    #[arg(long, value_parser = StepSpec::parse)]
    lambda: Option<StepSpec>,
    /// Batch count for minibatch algorithms.
    #[arg(short = 'N', long)]
    batches: Option<usize>,
    #[arg(long, value_enum)]
    partition: Option<PartitionKind>,
    /// Graph edge-list file for distributed algorithms.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    graph_kind: Option<GraphKind>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Edge probability for --graph-kind er.
    #[arg(long)]
    p_edge: Option<f64>,
    #[arg(long)]
    graph_seed: Option<u64>,
    /// Batch/agent activation sampler: uniform | full | independent:<p> |
    /// weighted:<w1,...>.
    #[arg(long, value_parser = SamplerSpec::parse)]
    sampler: Option<SamplerSpec>,
    /// RNG seed (default: $PDFP_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed-point residual tolerance in the product norm.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Trace CSV output path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Record every k-th iteration (the final one is always kept).
    #[arg(long)]
    log_every: Option<usize>,
}

impl SolveArgs {
    fn into_config(self) -> Result<RunConfig> {
        let flags = RunConfig {
            algo: self.algo,
            problem: self.problem,
            data: self.data,
            gen: self.gen,
            p: self.p,
            m: self.m,
            q: self.q,
            sparsity: self.sparsity,
            noise: self.noise,
            tau: self.tau,
            gamma: self.gamma,
            lambda: self.lambda,
            batches: self.batches,
            partition: self.partition,
            graph: self.graph,
            graph_kind: self.graph_kind,
            nodes: self.nodes,
            p_edge: self.p_edge,
            graph_seed: self.graph_seed,
            sampler: self.sampler,
            seed: self.seed,
            tol: self.tol,
            max_iters: self.max_iters,
            trace: self.trace,
            log_every: self.log_every,
        };
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        base.merged_with(flags).finalize()
    }
}

#[derive(Args)]
struct OracleArgs {
    /// LIBSVM dataset file (requires --problem).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    problem: Option<ProblemKind>,
    #[arg(long, value_enum)]
    gen: Option<ProblemKind>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(short, long)]
    m: Option<usize>,
    #[arg(short, long)]
    q: Option<usize>,
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optimality-certificate tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 2_000_000)]
    max_iters: usize,
    /// JSON output path for the reference solution.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// Problem kind to generate.
    #[arg(value_enum)]
    kind: ProblemKind,
    #[arg(long)]
    p: Option<usize>,
    #[arg(short, long)]
    m: Option<usize>,
    #[arg(short, long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    sparsity: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset output path; the sidecar is written next to it as
    /// `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphGenArgs {
    #[arg(long, value_enum)]
    kind: GraphKind,
    #[arg(short, long)]
    n: usize,
    /// Edge probability for --kind er.
    #[arg(long)]
    p_edge: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON file with `{ "runs": [ { "name": ..., <run config> }, ... ] }`.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Oracle JSON produced by `pdfp oracle`.
    #[arg(long)]
    oracle: PathBuf,
    /// Relative objective-gap threshold for a pass.
    #[arg(long, default_value_t = 1e-4)]
    tol_obj: f64,
    /// Trace CSV files to judge.
    traces: Vec<PathBuf>,
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.into_config()?;
            runcmd::run_solve(&cfg)
        }
        Command::Oracle(args) => oraclecmd::run(args),
        Command::Gen(args) => gencmd::run(args),
        Command::GraphGen(args) => gencmd::run_graph(args),
        Command::Bench(args) => benchcmd::run(args),
        Command::Compare(args) => comparecmd::run(args),
    }
}

fn main() -> ExitCode {
    // clap's own usage errors default to exit 2; remap everything that is a
    // usage/config problem to exit 1, reserving 2 for non-convergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version are not errors
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
