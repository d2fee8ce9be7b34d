//! The `oracle` subcommand: solve the centralized problem with the
//! independent proximal-gradient reference path and write the certified
//! solution as JSON.

use anyhow::Result;

use pdfp::reference::proximal_gradient_solve;

use crate::config::RunConfig;
use crate::problem::{load_source, oracle_smooth, problem_kind, SourceData};
use crate::OracleArgs;

pub fn run(args: OracleArgs) -> Result<i32> {
    let cfg = RunConfig {
        problem: args.problem,
        data: args.data.clone(),
        gen: args.gen,
        p: args.p,
        m: args.m,
        q: args.q,
        sparsity: args.sparsity,
        noise: args.noise,
        seed: args.seed,
        ..Default::default()
    };
    // reuse the solve-side source loader so oracle and solver see the same data
    problem_kind(&cfg)?;
    let source: SourceData = load_source(&cfg)?;
    let f = oracle_smooth(&source)?;
    let tau = args.tau.unwrap_or(1.0);

    let x0 = vec![0.0; source.feature_count()];
    let solution = proximal_gradient_solve(f.as_ref(), tau, &x0, args.tol, args.max_iters)?;

    std::fs::write(&args.out, serde_json::to_string_pretty(&solution)?)?;
    println!("oracle objective: {}", solution.objective);
    println!("certificate residual: {}", solution.certificate);
    println!(
        "status: {} after {} iterations",
        if solution.converged { "converged" } else { "max-iterations" },
        solution.iterations
    );
    Ok(if solution.converged { 0 } else { 2 })
}
