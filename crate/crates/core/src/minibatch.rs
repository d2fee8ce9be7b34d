//! Minibatch splitting: the sum `min sum_n f_n(x) + g_n(x)` is lifted to the
//! product space by giving every batch its own copy of the unknown and
//! coupling the copies through the consensus indicator. One full update of
//! the lifted splitting operator touches every batch; the stochastic variant
//! updates one randomly chosen batch per tick and is exactly the
//! coordinate-masked application of the same operator under the per-batch
//! block partition.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{PdfpError, Result};
use crate::km::{BlockPartition, CoordinateSampler, StoppingRule};
use crate::linalg;
use crate::linop::IdentityMap;
use crate::prox::{ConsensusIndicator, ProxFn};
use crate::smooth::{BlockSmooth, SmoothFn};
use crate::solver::{as_fixed_point_operator, CheckedParams, CompositeProblem};
use crate::trace::{IterationTrace, TraceRecord};

/// One batch's private cost pair `(f_n, g_n)`.
#[derive(Clone)]
pub struct Batch {
    pub f: Arc<dyn SmoothFn>,
    pub g: Arc<dyn ProxFn>,
}

/// The batched problem `min sum_n (f_n(x) + g_n(x))` on a shared dimension.
#[derive(Clone)]
pub struct BatchedProblem {
    batches: Vec<Batch>,
    dim: usize,
}

impl BatchedProblem {
    pub fn new(batches: Vec<Batch>) -> Result<Self> {
        let dim = match batches.first() {
            Some(b) => b.f.dim(),
            None => return Err(PdfpError::parameter("batches", "need at least one batch")),
        };
        if let Some(bad) = batches.iter().find(|b| b.f.dim() != dim) {
            return Err(PdfpError::shape("BatchedProblem::new", dim, bad.f.dim()));
        }
        Ok(BatchedProblem { batches, dim })
    }

    pub fn batch_count(&self) -> usize {
        self.batches.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    /// Shared gradient Lipschitz bound: the max over batches (the lifted
    /// smooth term is block separable).
    pub fn lipschitz(&self) -> f64 {
        self.batches.iter().map(|b| b.f.lipschitz()).fold(0.0, f64::max)
    }

    /// The original objective `sum_n (f_n(x) + g_n(x))` at a common point.
    pub fn aggregate_objective(&self, x: &[f64]) -> f64 {
        self.batches
            .iter()
            .map(|b| b.f.value(x) + b.g.value(x))
            .sum()
    }

    /// Lift to the product space: block-separable `f` and `g`, consensus
    /// indicator as `h`, identity `D`. The operator-norm bound of the lifted
    /// `D` is 1, so the dual step obeys `lambda <= 1/2`.
    pub fn lift(&self) -> Result<CompositeProblem> {
        let n = self.batch_count();
        let f = BlockSmooth::new(self.batches.iter().map(|b| b.f.clone()).collect())?;
        let g = crate::prox::BlockProx::new(
            self.batches.iter().map(|b| b.g.clone()).collect(),
            self.dim,
        )?;
        CompositeProblem::new(
            Arc::new(f),
            Arc::new(g),
            Arc::new(ConsensusIndicator::new(n, self.dim)?),
            Arc::new(IdentityMap::new(n * self.dim)),
        )
    }

    /// Dual step bound of the lifted problem (`1/2`).
    pub fn lambda_bound(&self) -> f64 {
        0.5
    }
}

/// Per-batch iterate triples `(v_n, y_n, x_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinibatchState {
    pub v: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
}

impl MinibatchState {
    pub fn zeros(n: usize, q: usize) -> Self {
        MinibatchState {
            v: vec![vec![0.0; q]; n],
            y: vec![vec![0.0; q]; n],
            x: vec![vec![0.0; q]; n],
        }
    }

    /// All batches start from the same primal point, duals at zero.
    pub fn from_common_x(n: usize, x0: &[f64]) -> Self {
        MinibatchState {
            v: vec![vec![0.0; x0.len()]; n],
            y: vec![vec![0.0; x0.len()]; n],
            x: vec![x0.to_vec(); n],
        }
    }

    pub fn batch_count(&self) -> usize {
        self.x.len()
    }

    /// Flat `[v; y; x]` layout matching the lifted problem's solver state.
    pub fn flatten(&self) -> Vec<f64> {
        let mut u = Vec::new();
        for part in [&self.v, &self.y, &self.x] {
            for block in part {
                u.extend_from_slice(block);
            }
        }
        u
    }

    pub fn unflatten(n: usize, q: usize, u: &[f64]) -> Result<Self> {
        if u.len() != 3 * n * q {
            return Err(PdfpError::shape("MinibatchState::unflatten", 3 * n * q, u.len()));
        }
        let take = |offset: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|b| u[offset + b * q..offset + (b + 1) * q].to_vec())
                .collect()
        };
        Ok(MinibatchState {
            v: take(0),
            y: take(n * q),
            x: take(2 * n * q),
        })
    }

    pub fn mean_x(&self) -> Vec<f64> {
        mean_of(&self.x)
    }

    pub fn mean_v(&self) -> Vec<f64> {
        mean_of(&self.v)
    }

    /// `max_n |x_n - mean(x)|`.
    pub fn consensus_residual(&self) -> f64 {
        let xbar = self.mean_x();
        self.x
            .iter()
            .map(|xn| linalg::dist2(xn, &xbar))
            .fold(0.0, f64::max)
    }
}

fn mean_of(blocks: &[Vec<f64>]) -> Vec<f64> {
    let n = blocks.len();
    let q = blocks[0].len();
    let mut out = vec![0.0; q];
    for block in blocks {
        for i in 0..q {
            out[i] += block[i];
        }
    }
    for o in out.iter_mut() {
        *o /= n as f64;
    }
    out
}

/// Per-batch block partition of the lifted flat state: block `n` groups
/// `(v_n, y_n, x_n)`.
pub fn block_partition(n: usize, q: usize) -> BlockPartition {
    let blocks = (0..n)
        .map(|b| {
            let mut ids = Vec::with_capacity(3 * q);
            for part in 0..3 {
                let offset = part * n * q + b * q;
                ids.extend(offset..offset + q);
            }
            ids
        })
        .collect();
    BlockPartition::from_index_sets(3 * n * q, blocks).expect("partition built exhaustively")
}

/// The gradient-step average `s = (1/N) sum_n (x_n - gamma grad f_n(x_n) -
/// lambda y_n)`. The algorithm writes this quantity in averaged-iterate
/// notation, but the right-hand side is its definition; the average gradient
/// is never evaluated at the average point.
pub fn aggregate_s(
    state: &MinibatchState,
    problem: &BatchedProblem,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let grads: Vec<Vec<f64>> = problem
        .batches
        .iter()
        .zip(&state.x)
        .map(|(b, xn)| b.f.grad(xn))
        .collect();
    aggregate_s_cached(state, &grads, gamma, lambda)
}

#[allow(clippy::needless_range_loop)]
fn aggregate_s_cached(
    state: &MinibatchState,
    grads: &[Vec<f64>],
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = state.batch_count();
    let q = state.x[0].len();
    let mut s = vec![0.0; q];
    for b in 0..n {
        for i in 0..q {
            s[i] += state.x[b][i] - gamma * grads[b][i] - lambda * state.y[b][i];
        }
    }
    for si in s.iter_mut() {
        *si /= n as f64;
    }
    s
}

/// Tolerance for the zero-mean-dual precondition of the full minibatch
/// update (the algorithm's simplified aggregate is only valid there).
pub const MEAN_DUAL_TOL: f64 = 1e-12;

/// Core update shared by the full and stochastic variants. For each batch
/// `n` in `active`, with cached `grad_n = grad f_n(x_n)`:
///
/// ```text
/// v_n+ = x_n - gamma grad_n + (1 - lambda) v_n - lambda y_n - zbar
/// y_n+ = (I - prox_{(gamma/lambda) g_n})(x_n - gamma grad_n + (1 - lambda) y_n - lambda v_n)
/// x_n+ = x_n - gamma grad_n - lambda v_n+ - lambda y_n+
/// ```
///
/// where `zbar = s + (1 - lambda) vbar` is the blockwise mean of the dual
/// prox argument, i.e. the consensus projection the lifted operator
/// subtracts. Every read is from the old state, so updating a subset of
/// batches is exactly the masked application of the lifted operator.
fn step_batches(
    state: &MinibatchState,
    problem: &BatchedProblem,
    params: &CheckedParams,
    active: &[usize],
) -> Result<MinibatchState> {
    let n = problem.batch_count();
    if state.batch_count() != n {
        return Err(PdfpError::shape("minibatch step", n, state.batch_count()));
    }
    for &b in active {
        if b >= n {
            return Err(PdfpError::parameter(
                "zeta",
                format!("batch index {b} out of range ({n} batches)"),
            ));
        }
    }
    let (gamma, lambda) = (params.gamma(), params.lambda());
    let scale = params.prox_scale();

    // gradients evaluated once per batch and shared by all three updates
    let grads: Vec<Vec<f64>> = problem
        .batches
        .iter()
        .zip(&state.x)
        .map(|(b, xn)| b.f.grad(xn))
        .collect();
    let s = aggregate_s_cached(state, &grads, gamma, lambda);
    let vbar = state.mean_v();
    let q = state.x[0].len();
    let zbar: Vec<f64> = (0..q).map(|i| s[i] + (1.0 - lambda) * vbar[i]).collect();

    let mut next = state.clone();
    for &b in active {
        let xn = &state.x[b];
        let grad = &grads[b];
        let vn = &state.v[b];
        let yn = &state.y[b];

        let v_plus: Vec<f64> = (0..q)
            .map(|i| xn[i] - gamma * grad[i] + (1.0 - lambda) * vn[i] - lambda * yn[i] - zbar[i])
            .collect();

        let arg_y: Vec<f64> = (0..q)
            .map(|i| xn[i] - gamma * grad[i] + (1.0 - lambda) * yn[i] - lambda * vn[i])
            .collect();
        let y_plus = linalg::sub(&arg_y, &problem.batches[b].g.prox(&arg_y, scale));

        let x_plus: Vec<f64> = (0..q)
            .map(|i| xn[i] - gamma * grad[i] - lambda * v_plus[i] - lambda * y_plus[i])
            .collect();

        next.v[b] = v_plus;
        next.y[b] = y_plus;
        next.x[b] = x_plus;
    }
    Ok(next)
}

/// One full minibatch round (every batch updates). Requires the mean dual to
/// start at zero; the update then keeps it there, which is what licenses the
/// simplified aggregate in the written algorithm.
pub fn minibatch_step(
    state: &MinibatchState,
    problem: &BatchedProblem,
    params: &CheckedParams,
) -> Result<MinibatchState> {
    let vbar = state.mean_v();
    if linalg::norm_inf(&vbar) > MEAN_DUAL_TOL {
        return Err(PdfpError::Config(format!(
            "minibatch mode requires mean dual vbar = 0 (max |vbar_i| = {:.3e})",
            linalg::norm_inf(&vbar)
        )));
    }
    let all: Vec<usize> = (0..problem.batch_count()).collect();
    step_batches(state, problem, params, &all)
}

/// One stochastic step: only batch `zeta` updates, every other batch is
/// carried over unchanged. No zero-mean-dual requirement; the aggregate
/// carries the `(1 - lambda) vbar` term, which is nonzero in general since
/// single-batch updates do not preserve the mean dual.
pub fn smspdfp2o_step(
    state: &MinibatchState,
    problem: &BatchedProblem,
    params: &CheckedParams,
    zeta: usize,
) -> Result<MinibatchState> {
    step_batches(state, problem, params, &[zeta])
}

/// Masked step over an arbitrary batch subset; `smspdfp2o_step` is the
/// singleton case and a full subset is `minibatch_step` without the
/// mean-dual precondition.
pub fn stochastic_step(
    state: &MinibatchState,
    problem: &BatchedProblem,
    params: &CheckedParams,
    kappa: &[usize],
) -> Result<MinibatchState> {
    step_batches(state, problem, params, kappa)
}

pub struct BatchRunOutcome {
    pub state: MinibatchState,
    pub trace: IterationTrace,
    pub converged: bool,
    pub iterations: usize,
}

/// How long stochastic runs produce the per-step aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregateMode {
    /// Re-sum every batch contribution each iteration. Bitwise equal to the
    /// one-shot step functions.
    #[default]
    Scratch,
    /// Maintain running sums, adjusting only the updated batches' terms.
    /// Trajectories must stay within 1e-12 of scratch recomputation.
    Incremental,
}

/// Run-loop state: per-batch gradient cache (a batch's gradient only changes
/// when that batch updates) plus running aggregate sums for the incremental
/// mode.
struct StochasticEngine<'a> {
    problem: &'a BatchedProblem,
    params: CheckedParams,
    mode: AggregateMode,
    grads: Vec<Vec<f64>>,
    /// `sum_n (x_n - gamma grad_n - lambda y_n)`, incremental mode only.
    contrib_sum: Vec<f64>,
    /// `sum_n v_n`, incremental mode only.
    v_sum: Vec<f64>,
}

impl<'a> StochasticEngine<'a> {
    fn new(
        problem: &'a BatchedProblem,
        params: &CheckedParams,
        state: &MinibatchState,
        mode: AggregateMode,
    ) -> Self {
        let (gamma, lambda) = (params.gamma(), params.lambda());
        let grads: Vec<Vec<f64>> = problem
            .batches
            .iter()
            .zip(&state.x)
            .map(|(b, xn)| b.f.grad(xn))
            .collect();
        let q = problem.dim();
        let mut contrib_sum = vec![0.0; q];
        let mut v_sum = vec![0.0; q];
        for (b, grad) in grads.iter().enumerate() {
            for i in 0..q {
                contrib_sum[i] += state.x[b][i] - gamma * grad[i] - lambda * state.y[b][i];
                v_sum[i] += state.v[b][i];
            }
        }
        StochasticEngine {
            problem,
            params: *params,
            mode,
            grads,
            contrib_sum,
            v_sum,
        }
    }

    /// Advance `state` in place by one masked step.
    fn step(&mut self, state: &mut MinibatchState, active: &[usize]) -> Result<()> {
        let n = self.problem.batch_count();
        for &b in active {
            if b >= n {
                return Err(PdfpError::parameter(
                    "zeta",
                    format!("batch index {b} out of range ({n} batches)"),
                ));
            }
        }
        let (gamma, lambda) = (self.params.gamma(), self.params.lambda());
        let scale = self.params.prox_scale();
        let q = self.problem.dim();

        let zbar: Vec<f64> = match self.mode {
            AggregateMode::Scratch => {
                let s = aggregate_s_cached(state, &self.grads, gamma, lambda);
                let vbar = state.mean_v();
                (0..q).map(|i| s[i] + (1.0 - lambda) * vbar[i]).collect()
            }
            AggregateMode::Incremental => (0..q)
                .map(|i| {
                    self.contrib_sum[i] / n as f64
                        + (1.0 - lambda) * (self.v_sum[i] / n as f64)
                })
                .collect(),
        };

        // Jacobi: all updates read the pre-step state
        let mut updates = Vec::with_capacity(active.len());
        for &b in active {
            let (xn, grad, vn, yn) = (&state.x[b], &self.grads[b], &state.v[b], &state.y[b]);
            let v_plus: Vec<f64> = (0..q)
                .map(|i| {
                    xn[i] - gamma * grad[i] + (1.0 - lambda) * vn[i] - lambda * yn[i] - zbar[i]
                })
                .collect();
            let arg_y: Vec<f64> = (0..q)
                .map(|i| xn[i] - gamma * grad[i] + (1.0 - lambda) * yn[i] - lambda * vn[i])
                .collect();
            let y_plus = linalg::sub(&arg_y, &self.problem.batches[b].g.prox(&arg_y, scale));
            let x_plus: Vec<f64> = (0..q)
                .map(|i| xn[i] - gamma * grad[i] - lambda * v_plus[i] - lambda * y_plus[i])
                .collect();
            updates.push((b, v_plus, y_plus, x_plus));
        }

        for (b, v_plus, y_plus, x_plus) in updates {
            if self.mode == AggregateMode::Incremental {
                for i in 0..q {
                    self.contrib_sum[i] -=
                        state.x[b][i] - gamma * self.grads[b][i] - lambda * state.y[b][i];
                    self.v_sum[i] -= state.v[b][i];
                }
            }
            state.v[b] = v_plus;
            state.y[b] = y_plus;
            state.x[b] = x_plus;
            self.grads[b] = self.problem.batches[b].f.grad(&state.x[b]);
            if self.mode == AggregateMode::Incremental {
                for i in 0..q {
                    self.contrib_sum[i] +=
                        state.x[b][i] - gamma * self.grads[b][i] - lambda * state.y[b][i];
                    self.v_sum[i] += state.v[b][i];
                }
            }
        }
        Ok(())
    }
}

const DIVERGENCE_FACTOR: f64 = 1e12;

fn run_loop(
    problem: &BatchedProblem,
    params: &CheckedParams,
    init: MinibatchState,
    sampler: Option<&mut CoordinateSampler>,
    stop: &StoppingRule,
    mode: AggregateMode,
) -> Result<BatchRunOutcome> {
    let n = problem.batch_count();
    if init.batch_count() != n {
        return Err(PdfpError::shape("run_loop", n, init.batch_count()));
    }
    let lifted = problem.lift()?;
    let op = as_fixed_point_operator(&lifted, params, block_partition(n, problem.dim()))?;
    let norm = crate::solver::residual_norm(&lifted, params);

    let start = Instant::now();
    let u0_norm = linalg::norm2(&init.flatten());
    let divergence_bound = DIVERGENCE_FACTOR * (1.0 + u0_norm);

    let mut sampler = sampler;
    let mut state = init;
    let mut engine = StochasticEngine::new(problem, params, &state, mode);
    let mut trace = IterationTrace::new();
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=stop.max_iter {
        let active: Vec<usize> = match sampler.as_deref_mut() {
            Some(s) => s.sample(),
            None => (0..n).collect(),
        };
        engine.step(&mut state, &active)?;
        iterations = k;

        // exact fixed-point residual at the new state, in the product norm
        let flat = state.flatten();
        let residual = norm.eval_diff(&op.apply(&flat), &flat);
        let xbar = state.mean_x();
        trace.push(TraceRecord {
            iter: k,
            time_s: start.elapsed().as_secs_f64(),
            objective: problem.aggregate_objective(&xbar),
            fp_residual: residual,
            consensus_residual: state.consensus_residual(),
            active_set: if sampler.is_some() { active } else { Vec::new() },
        });

        let u_norm = linalg::norm2(&flat);
        if u_norm > divergence_bound {
            return Err(PdfpError::Divergence {
                iter: k,
                norm: u_norm,
                bound: divergence_bound,
            });
        }
        if let Some(tol) = stop.tol {
            if residual <= tol {
                converged = true;
                break;
            }
        }
    }

    Ok(BatchRunOutcome {
        state,
        trace,
        converged,
        iterations,
    })
}

/// Deterministic full-update run.
pub fn run_minibatch(
    problem: &BatchedProblem,
    params: &CheckedParams,
    init: MinibatchState,
    stop: &StoppingRule,
) -> Result<BatchRunOutcome> {
    let vbar = init.mean_v();
    if linalg::norm_inf(&vbar) > MEAN_DUAL_TOL {
        return Err(PdfpError::Config(
            "minibatch mode requires the initial mean dual to be zero".into(),
        ));
    }
    run_loop(problem, params, init, None, stop, AggregateMode::Scratch)
}

/// Randomized run: each tick updates the sampled batch subset. Every batch
/// must have positive selection probability (checked by the sampler).
/// The trace records the original objective at the averaged primal point,
/// the consensus residual, the lifted fixed-point residual, and the
/// activated set; runs are deterministic per sampler seed.
pub fn run_stochastic(
    problem: &BatchedProblem,
    params: &CheckedParams,
    init: MinibatchState,
    sampler: &mut CoordinateSampler,
    stop: &StoppingRule,
) -> Result<BatchRunOutcome> {
    run_stochastic_with(problem, params, init, sampler, stop, AggregateMode::Scratch)
}

/// [`run_stochastic`] with an explicit aggregate mode.
pub fn run_stochastic_with(
    problem: &BatchedProblem,
    params: &CheckedParams,
    init: MinibatchState,
    sampler: &mut CoordinateSampler,
    stop: &StoppingRule,
    mode: AggregateMode,
) -> Result<BatchRunOutcome> {
    if sampler.block_count() != problem.batch_count() {
        return Err(PdfpError::Config(format!(
            "sampler covers {} blocks but the problem has {} batches",
            sampler.block_count(),
            problem.batch_count()
        )));
    }
    run_loop(problem, params, init, Some(sampler), stop, mode)
}
