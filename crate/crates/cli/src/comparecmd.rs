//! `compare`: judge solver traces against an oracle solution.

use anyhow::{bail, Context, Result};

use pdfp::reference::OracleSolution;

use crate::tracefile::{read_trace, TraceFile};
use crate::CompareArgs;

/// Empirical geometric decay rate fitted to the residual column:
/// `(r_last / r_first)^(1 / span)` over the positive entries. Purely a
/// diagnostic; no analytic rate constants are computed anywhere.
fn fitted_rate(trace: &TraceFile) -> Option<f64> {
    let pts: Vec<(usize, f64)> = trace
        .records
        .iter()
        .filter(|r| r.fp_residual.is_finite() && r.fp_residual > 0.0)
        .map(|r| (r.iter, r.fp_residual))
        .collect();
    let (first, last) = (pts.first()?, pts.last()?);
    if last.0 <= first.0 {
        return None;
    }
    Some((last.1 / first.1).powf(1.0 / (last.0 - first.0) as f64))
}

pub fn run(args: CompareArgs) -> Result<i32> {
    if args.traces.is_empty() {
        bail!("no trace files to compare");
    }
    let oracle: OracleSolution = serde_json::from_str(
        &std::fs::read_to_string(&args.oracle)
            .with_context(|| format!("cannot read oracle {}", args.oracle.display()))?,
    )
    .with_context(|| format!("invalid oracle file {}", args.oracle.display()))?;

    let denom = oracle.objective.abs().max(1.0);
    let mut all_pass = true;
    println!(
        "{:<28} {:>14} {:>12} {:>10} {:>10} {:>8}",
        "trace", "objective", "rel gap", "iters@tol", "fit rate", "result"
    );
    for path in &args.traces {
        let trace = read_trace(path)?;
        let objective = trace
            .final_objective()
            .context("trace has no records")?;
        let gap = (objective - oracle.objective).abs() / denom;
        // first recorded iteration whose objective is already within tolerance
        let hit = trace
            .records
            .iter()
            .find(|r| (r.objective - oracle.objective).abs() / denom <= args.tol_obj)
            .map(|r| r.iter);
        let pass = gap <= args.tol_obj;
        all_pass &= pass;
        println!(
            "{:<28} {:>14.8e} {:>12.3e} {:>10} {:>10} {:>8}",
            path.display(),
            objective,
            gap,
            hit.map_or_else(|| "-".to_string(), |k| k.to_string()),
            fitted_rate(&trace).map_or_else(|| "-".to_string(), |r| format!("{r:.4}")),
            if pass { "pass" } else { "FAIL" }
        );
    }
    Ok(if all_pass { 0 } else { 1 })
}
