//! `bench`: run a list of solve configurations and print a summary table.

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::config::RunConfig;
use crate::runcmd::execute;
use crate::tracefile::write_trace;
use crate::BenchArgs;

#[derive(Deserialize)]
struct BenchFile {
    runs: Vec<BenchEntry>,
}

#[derive(Deserialize)]
struct BenchEntry {
    name: Option<String>,
    #[serde(flatten)]
    config: RunConfig,
}

pub fn run(args: BenchArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read bench config {}", args.config.display()))?;
    let file: BenchFile = serde_json::from_str(&text)
        .with_context(|| format!("invalid bench config {}", args.config.display()))?;
    if file.runs.is_empty() {
        bail!("bench config has no runs");
    }

    println!(
        "{:<20} {:>12} {:>10} {:>16} {:>12}",
        "run", "algorithm", "iters", "objective", "status"
    );
    let mut all_converged = true;
    for (i, entry) in file.runs.into_iter().enumerate() {
        let name = entry.name.unwrap_or_else(|| format!("run-{i}"));
        let cfg = entry
            .config
            .finalize()
            .with_context(|| format!("bench run `{name}`"))?;
        let (trace, summary) = execute(&cfg).with_context(|| format!("bench run `{name}`"))?;
        if let Some(path) = &cfg.trace {
            write_trace(path, &trace, cfg.log_every.unwrap_or(1))?;
        }
        all_converged &= summary.converged;
        println!(
            "{:<20} {:>12} {:>10} {:>16.8e} {:>12}",
            name,
            cfg.algo.expect("finalized").name(),
            summary.iterations,
            summary.objective,
            if summary.converged { "converged" } else { "max-iter" }
        );
    }
    Ok(if all_converged { 0 } else { 2 })
}
