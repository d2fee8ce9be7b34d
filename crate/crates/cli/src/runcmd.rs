//! The `solve` subcommand: build the configured problem, resolve and
//! validate step sizes, run the selected algorithm, write the trace.

use std::sync::Arc;

use anyhow::{Context, Result};

use pdfp::distributed::{run_async, run_sync, DistributedProblem, NetworkState};
use pdfp::graph::NetworkGraph;
use pdfp::minibatch::{run_minibatch, run_stochastic, MinibatchState};
use pdfp::solver::{default_stop, residual_norm};
use pdfp::{
    solve, Algo, CheckedParams, CompositeProblem, CoordinateSampler, IterationTrace, PdfpParams,
    SolverState, StoppingRule,
};

use crate::config::{Algorithm, GraphKind, RunConfig, SamplerSpec};
use crate::problem::{batched_problem, centralized_problem, load_source};
use crate::tracefile::write_trace;

pub struct RunSummary {
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub fp_residual: f64,
    pub consensus_residual: f64,
    pub gamma: f64,
    pub lambda: f64,
}

fn summarize(
    trace: &IterationTrace,
    converged: bool,
    iterations: usize,
    params: &CheckedParams,
) -> RunSummary {
    let last = trace.last();
    RunSummary {
        converged,
        iterations,
        objective: last.map_or(f64::NAN, |r| r.objective),
        fp_residual: last.map_or(f64::NAN, |r| r.fp_residual),
        consensus_residual: last.map_or(f64::NAN, |r| r.consensus_residual),
        gamma: params.gamma(),
        lambda: params.lambda(),
    }
}

fn print_summary(algo: Algorithm, s: &RunSummary) {
    println!("algorithm: {}", algo.name());
    println!("resolved gamma: {} lambda: {}", s.gamma, s.lambda);
    println!(
        "status: {} after {} iterations",
        if s.converged { "converged" } else { "max-iterations" },
        s.iterations
    );
    println!("final objective: {}", s.objective);
    println!("final fp_residual: {}", s.fp_residual);
    if !s.consensus_residual.is_nan() {
        println!("final consensus_residual: {}", s.consensus_residual);
    }
}

pub fn load_graph(cfg: &RunConfig) -> Result<NetworkGraph> {
    if let Some(path) = &cfg.graph {
        return Ok(NetworkGraph::from_file(path)?);
    }
    let kind = cfg
        .graph_kind
        .context("--graph-kind is required without --graph")?;
    let n = cfg.nodes.context("--nodes is required with --graph-kind")?;
    Ok(match kind {
        GraphKind::Ring => NetworkGraph::ring(n)?,
        GraphKind::Star => NetworkGraph::star(n)?,
        GraphKind::Complete => NetworkGraph::complete(n)?,
        GraphKind::Er => {
            let p = cfg.p_edge.context("--p-edge is required for --graph-kind er")?;
            NetworkGraph::erdos_renyi(n, p, cfg.graph_seed.or(cfg.seed).unwrap_or(0))?
        }
    })
}

fn resolve_checked(
    problem: &CompositeProblem,
    algo: Algo,
    cfg: &RunConfig,
) -> Result<CheckedParams> {
    let params = PdfpParams::resolve(
        problem,
        algo,
        cfg.gamma.and_then(|g| g.value()),
        cfg.lambda.and_then(|l| l.value()),
        cfg.seed.unwrap_or(0),
    )?;
    Ok(params.validate(problem, algo)?)
}

fn stop_rule(problem: &CompositeProblem, params: &CheckedParams, cfg: &RunConfig) -> StoppingRule {
    let mut stop = default_stop(problem, params);
    stop.max_iter = cfg.max_iters.unwrap_or(stop.max_iter);
    stop.tol = Some(cfg.tol.unwrap_or(1e-8));
    stop.norm = residual_norm(problem, params);
    stop
}

fn sampler_for(spec: &SamplerSpec, blocks: usize, seed: u64) -> Result<CoordinateSampler> {
    Ok(CoordinateSampler::new(spec.to_kind(blocks), blocks, seed)?)
}

/// Execute a finalized run config, returning the full trace and summary.
pub fn execute(cfg: &RunConfig) -> Result<(IterationTrace, RunSummary)> {
    let algo = cfg.algo.expect("finalize checked algo");
    let seed = cfg.seed.unwrap_or(0);
    let tau = cfg.tau.unwrap_or(1.0);
    let source = load_source(cfg)?;

    let (trace, summary) = match algo {
        Algorithm::Pdfp2o | Algorithm::Spdfp2o => {
            let problem = centralized_problem(&source, tau)?;
            let algo_kind = if algo == Algorithm::Pdfp2o {
                Algo::Pdfp2o
            } else {
                Algo::Spdfp2o
            };
            let checked = resolve_checked(&problem, algo_kind, cfg)?;
            let stop = stop_rule(&problem, &checked, cfg);
            let out = solve(&problem, &checked, SolverState::zeros(&problem), &stop)?;
            let s = summarize(&out.trace, out.converged, out.iterations, &checked);
            (out.trace, s)
        }
        Algorithm::Minibatch | Algorithm::Smspdfp2o => {
            let n = cfg.batches.expect("finalize checked batches");
            let batched = batched_problem(
                &source,
                tau,
                n,
                cfg.partition.expect("finalize set partition"),
                seed,
            )?;
            let lifted = batched.lift()?;
            let checked = resolve_checked(&lifted, Algo::Spdfp2o, cfg)?;
            let stop = stop_rule(&lifted, &checked, cfg);
            let init = MinibatchState::zeros(n, batched.dim());
            let out = if algo == Algorithm::Minibatch {
                run_minibatch(&batched, &checked, init, &stop)?
            } else {
                let mut sampler = sampler_for(
                    cfg.sampler.as_ref().expect("finalize set sampler"),
                    n,
                    seed,
                )?;
                run_stochastic(&batched, &checked, init, &mut sampler, &stop)?
            };
            let s = summarize(&out.trace, out.converged, out.iterations, &checked);
            (out.trace, s)
        }
        Algorithm::DistSync | Algorithm::DistAsync => {
            let graph = Arc::new(load_graph(cfg)?);
            let n = graph.node_count();
            let batched = batched_problem(
                &source,
                tau,
                n,
                cfg.partition.expect("finalize set partition"),
                seed,
            )?;
            let problem = DistributedProblem::new(graph, batched)?;
            let lifted = problem.lift()?;
            let checked = resolve_checked(&lifted, Algo::Spdfp2o, cfg)?;
            let stop = stop_rule(&lifted, &checked, cfg);
            let init = NetworkState::zeros(&problem, &checked)?;
            let out = if algo == Algorithm::DistSync {
                run_sync(&problem, &checked, init, &stop)?
            } else {
                let mut sampler = sampler_for(
                    cfg.sampler.as_ref().expect("finalize set sampler"),
                    n,
                    seed,
                )?;
                run_async(&problem, &checked, init, &mut sampler, &stop)?
            };
            let s = summarize(&out.trace, out.converged, out.iterations, &checked);
            (out.trace, s)
        }
    };

    Ok((trace, summary))
}

/// The `solve` subcommand. Returns the process exit code: 0 converged,
/// 2 iteration budget exhausted (errors propagate and exit 1).
pub fn run_solve(cfg: &RunConfig) -> Result<i32> {
    let (trace, summary) = execute(cfg)?;
    if let Some(path) = &cfg.trace {
        write_trace(path, &trace, cfg.log_every.unwrap_or(1))?;
    }
    print_summary(cfg.algo.expect("finalize checked algo"), &summary);
    Ok(if summary.converged { 0 } else { 2 })
}
