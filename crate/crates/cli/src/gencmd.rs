//! `gen` and `graph-gen`: deterministic file generation.

use anyhow::{Context, Result};

use pdfp::graph::NetworkGraph;
use pdfp::io::{save_libsvm, SyntheticSidecar};
use pdfp::linalg::RowMatrix;
use pdfp::problems::{generate_synthetic, Dataset, SyntheticProblem};

use crate::config::{GraphKind, RunConfig};
use crate::problem::synthetic_spec;
use crate::{GenArgs, GraphGenArgs};

pub fn run(args: GenArgs) -> Result<i32> {
    let cfg = RunConfig {
        gen: Some(args.kind),
        p: args.p,
        m: args.m,
        q: args.q,
        sparsity: Some(args.sparsity),
        noise: Some(args.noise),
        seed: args.seed,
        ..Default::default()
    };
    let spec = synthetic_spec(&cfg, args.kind)?;
    let (problem, truth) = generate_synthetic(&spec)?;

    let dataset = match problem {
        SyntheticProblem::Logistic { data } => data,
        SyntheticProblem::Lasso { a, b } => Dataset::new(RowMatrix::Dense(a), b)?,
    };
    save_libsvm(&dataset, &args.out)?;

    let sidecar = SyntheticSidecar {
        seed: spec.seed,
        m: spec.m,
        q: spec.q,
        sparsity: spec.sparsity,
        noise: spec.noise,
        ground_truth: truth,
    };
    let sidecar_path = args.out.with_file_name(format!(
        "{}.json",
        args.out
            .file_name()
            .context("output path has no file name")?
            .to_string_lossy()
    ));
    sidecar.save(&sidecar_path)?;

    println!(
        "wrote {} samples x {} features to {} (+ sidecar {})",
        spec.m,
        spec.q,
        args.out.display(),
        sidecar_path.display()
    );
    Ok(0)
}

pub fn run_graph(args: GraphGenArgs) -> Result<i32> {
    let graph = match args.kind {
        GraphKind::Ring => NetworkGraph::ring(args.n)?,
        GraphKind::Star => NetworkGraph::star(args.n)?,
        GraphKind::Complete => NetworkGraph::complete(args.n)?,
        GraphKind::Er => {
            let p = args.p_edge.context("--p-edge is required for --kind er")?;
            NetworkGraph::erdos_renyi(args.n, p, args.seed.unwrap_or(0))?
        }
    };
    std::fs::write(&args.out, graph.to_edge_text())?;
    println!(
        "wrote graph with {} nodes, {} edges, max degree {} to {}",
        graph.node_count(),
        graph.edge_count(),
        graph.max_degree(),
        args.out.display()
    );
    Ok(0)
}
