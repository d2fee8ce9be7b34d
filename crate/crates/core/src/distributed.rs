//! Graph-distributed splitting and its asynchronous randomized variant,
//! executed in a deterministic seeded event loop.
//!
//! Each agent `n` owns a private cost pair `(f_n, g_n)`, its primal/auxiliary
//! blocks `x_n`, `y_n`, and one dual slot `v_e(n)` per incident edge `e`.
//! Global consensus is encoded per edge: `D` stacks `(x_n, x_m)` for every
//! edge and `h` is the indicator of pairwise equality, whose prox averages
//! the two slots. An activated agent recomputes its dual slots, `y`, and `x`
//! from its own state and its neighbors' last published values, then
//! publishes; agents outside the activated set hold everything. A full
//! activation is one synchronous round and equals the centralized splitting
//! step on the lifted product problem; partial activations are exactly the
//! coordinate-masked operator under the per-agent block partition, which is
//! what makes the randomized convergence theory apply unchanged.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{PdfpError, Result};
use crate::graph::NetworkGraph;
use crate::km::{BlockPartition, CoordinateSampler, StoppingRule};
use crate::linalg;
use crate::linop::LinearMap;
use crate::minibatch::BatchedProblem;
use crate::prox::PairConsensusIndicator;
use crate::smooth::BlockSmooth;
use crate::solver::{as_fixed_point_operator, CheckedParams, CompositeProblem};
use crate::trace::{IterationTrace, TraceRecord};

/// The per-edge stacking operator `D(x) = ((x_n, x_m))_{e = {n,m}}` in
/// canonical edge order. Its adjoint sums a node's incident dual slots and
/// `D^T D` scales node `n` by its degree, so `lambda_max(D D^T)` is exactly
/// the maximum degree.
#[derive(Clone)]
pub struct EdgeOperator {
    graph: Arc<NetworkGraph>,
    block_len: usize,
}

impl EdgeOperator {
    pub fn new(graph: Arc<NetworkGraph>, block_len: usize) -> Result<Self> {
        if block_len == 0 {
            return Err(PdfpError::parameter("block_len", "must be positive"));
        }
        Ok(EdgeOperator { graph, block_len })
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }
}

impl LinearMap for EdgeOperator {
    fn in_dim(&self) -> usize {
        self.graph.node_count() * self.block_len
    }

    fn out_dim(&self) -> usize {
        2 * self.graph.edge_count() * self.block_len
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let q = self.block_len;
        let mut out = Vec::with_capacity(self.out_dim());
        for &(lo, hi) in self.graph.edges() {
            out.extend_from_slice(&x[lo * q..(lo + 1) * q]);
            out.extend_from_slice(&x[hi * q..(hi + 1) * q]);
        }
        out
    }

    #[allow(clippy::needless_range_loop)]
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let q = self.block_len;
        let mut out = vec![0.0; self.in_dim()];
        for (e, &(lo, hi)) in self.graph.edges().iter().enumerate() {
            let lo_slot = &y[2 * e * q..(2 * e + 1) * q];
            let hi_slot = &y[(2 * e + 1) * q..(2 * e + 2) * q];
            for i in 0..q {
                out[lo * q + i] += lo_slot[i];
                out[hi * q + i] += hi_slot[i];
            }
        }
        out
    }

    fn gram_opnorm_exact(&self) -> Option<f64> {
        Some(self.graph.max_degree() as f64)
    }
}

/// Edge-consensus indicator value on an edge-stacked vector: 0 when every
/// edge's two slots agree (within the indicator tolerance), `+inf` otherwise.
pub fn consensus_h(y: &[f64], edge_count: usize, block_len: usize) -> Result<f64> {
    if y.len() != 2 * edge_count * block_len {
        return Err(PdfpError::shape(
            "consensus_h",
            2 * edge_count * block_len,
            y.len(),
        ));
    }
    let ind = PairConsensusIndicator::new(edge_count, block_len)?;
    Ok(crate::prox::ProxFn::value(&ind, y))
}

/// A batched problem distributed over a graph: agent `n` owns batch `n`.
#[derive(Clone)]
pub struct DistributedProblem {
    graph: Arc<NetworkGraph>,
    batched: BatchedProblem,
}

impl DistributedProblem {
    pub fn new(graph: Arc<NetworkGraph>, batched: BatchedProblem) -> Result<Self> {
        if graph.node_count() != batched.batch_count() {
            return Err(PdfpError::shape(
                "DistributedProblem::new",
                graph.node_count(),
                batched.batch_count(),
            ));
        }
        Ok(DistributedProblem { graph, batched })
    }

    pub fn graph(&self) -> &Arc<NetworkGraph> {
        &self.graph
    }

    pub fn batched(&self) -> &BatchedProblem {
        &self.batched
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn dim(&self) -> usize {
        self.batched.dim()
    }

    /// Lift to the product problem: block-separable `f` and `g`, per-edge
    /// consensus indicator as `h`, the edge operator as `D`.
    pub fn lift(&self) -> Result<CompositeProblem> {
        let q = self.dim();
        let f = BlockSmooth::new(self.batched.batches().iter().map(|b| b.f.clone()).collect())?;
        let g = crate::prox::BlockProx::new(
            self.batched.batches().iter().map(|b| b.g.clone()).collect(),
            q,
        )?;
        CompositeProblem::new(
            Arc::new(f),
            Arc::new(g),
            Arc::new(PairConsensusIndicator::new(self.graph.edge_count(), q)?),
            Arc::new(EdgeOperator::new(self.graph.clone(), q)?),
        )
    }

    /// Per-agent block partition of the lifted flat `[v; y; x]` state:
    /// block `n` groups the dual slots owned by `n` with `y_n` and `x_n`.
    pub fn block_partition(&self) -> BlockPartition {
        let q = self.dim();
        let n_nodes = self.node_count();
        let v_len = 2 * self.graph.edge_count() * q;
        let blocks = (0..n_nodes)
            .map(|n| {
                let mut ids = Vec::new();
                for &(_, e) in self.graph.neighbors(n) {
                    let (lo, _) = self.graph.edge(e);
                    let slot = if n == lo { 2 * e } else { 2 * e + 1 };
                    ids.extend(slot * q..(slot + 1) * q);
                }
                ids.extend(v_len + n * q..v_len + (n + 1) * q);
                let x0 = v_len + n_nodes * q;
                ids.extend(x0 + n * q..x0 + (n + 1) * q);
                ids
            })
            .collect();
        BlockPartition::from_index_sets(v_len + 2 * n_nodes * q, blocks)
            .expect("partition built exhaustively")
    }
}

/// What an agent broadcasts after an activation: everything a neighbor needs
/// to run its own update without evaluating the sender's private gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborMsg {
    /// Gradient-carrying local quantity `a_m` (see [`local_quantity_a`]).
    pub a: Vec<f64>,
    /// The sender's dual slot for the shared edge.
    pub dual_slot: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Per-agent state. `duals` and `mailbox` are aligned with the graph's
/// adjacency list for this node. `grad` and `a` are caches of quantities
/// that only change when the agent itself is activated.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub duals: Vec<Vec<f64>>,
    grad: Vec<f64>,
    a: Vec<f64>,
    mailbox: Vec<Option<NeighborMsg>>,
}

impl AgentState {
    pub fn mailbox_entry(&self, slot: usize) -> Option<&NeighborMsg> {
        self.mailbox[slot].as_ref()
    }

    /// Sum of this agent's owned dual slots, `(D^T v)_n`.
    pub fn dual_sum(&self) -> Vec<f64> {
        let q = self.x.len();
        let mut out = vec![0.0; q];
        for d in &self.duals {
            for i in 0..q {
                out[i] += d[i];
            }
        }
        out
    }
}

/// Value-semantic network state: per-agent variables plus mailboxes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    agents: Vec<AgentState>,
}

/// The locality window an activated agent sees: its own state plus one
/// mailbox message per neighbor. Agent updates take this view instead of the
/// network, so they cannot read non-neighbor state by construction.
pub struct MailboxView<'a> {
    agent: usize,
    state: &'a AgentState,
    graph: &'a NetworkGraph,
}

impl<'a> MailboxView<'a> {
    /// Message last received from `neighbor`, or a protocol error if that
    /// neighbor never published.
    pub fn from_neighbor(&self, neighbor: usize) -> Result<&'a NeighborMsg> {
        let slot = self
            .graph
            .neighbors(self.agent)
            .iter()
            .position(|&(m, _)| m == neighbor)
            .ok_or(PdfpError::MissingMailbox {
                agent: self.agent,
                neighbor,
            })?;
        self.state.mailbox[slot]
            .as_ref()
            .ok_or(PdfpError::MissingMailbox {
                agent: self.agent,
                neighbor,
            })
    }
}

/// The broadcast quantity `a_n = x_n - gamma grad f_n(x_n) - lambda y_n -
/// lambda sum_{m ~ n} v_{n,m}(n)`, computed from the agent's own state only.
pub fn local_quantity_a(agent: &AgentState, gamma: f64, lambda: f64) -> Vec<f64> {
    let q = agent.x.len();
    let dual_sum = agent.dual_sum();
    (0..q)
        .map(|i| agent.x[i] - gamma * agent.grad[i] - lambda * agent.y[i] - lambda * dual_sum[i])
        .collect()
}

/// New dual slot for an edge, general (asynchronous) form:
/// `v+ = (a_n - a_m)/2 + (v(n) - v(m))/2`, with the neighbor's `a_m` and
/// slot read from the mailbox. Under edge-dual antisymmetry
/// (`v(m) = -v(n)`, guaranteed after any synchronous round) this reduces to
/// the synchronous form `(a_n - a_m)/2 + v(n)`.
pub fn local_dual_update(
    a_own: &[f64],
    own_slot: &[f64],
    mailbox: &MailboxView,
    neighbor: usize,
) -> Result<Vec<f64>> {
    let msg = mailbox.from_neighbor(neighbor)?;
    Ok((0..a_own.len())
        .map(|i| (a_own[i] - msg.a[i]) / 2.0 + (own_slot[i] - msg.dual_slot[i]) / 2.0)
        .collect())
}

/// Auxiliary dual update
/// `y+ = (I - prox_{(gamma/lambda) g_n})(x_n - gamma grad + (1 - lambda) y_n
/// - lambda sum v(n))`, reading old duals.
pub fn local_y_update(
    agent: &AgentState,
    g: &dyn crate::prox::ProxFn,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let q = agent.x.len();
    let dual_sum = agent.dual_sum();
    let arg: Vec<f64> = (0..q)
        .map(|i| {
            agent.x[i] - gamma * agent.grad[i] + (1.0 - lambda) * agent.y[i]
                - lambda * dual_sum[i]
        })
        .collect();
    linalg::sub(&arg, &g.prox(&arg, gamma / lambda))
}

/// Primal update `x+ = x_n - gamma grad - lambda sum v+(n) - lambda y+`,
/// consuming the freshly computed duals.
pub fn local_x_update(
    agent: &AgentState,
    new_duals: &[Vec<f64>],
    new_y: &[f64],
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let q = agent.x.len();
    let mut dual_sum = vec![0.0; q];
    for d in new_duals {
        for i in 0..q {
            dual_sum[i] += d[i];
        }
    }
    (0..q)
        .map(|i| agent.x[i] - gamma * agent.grad[i] - lambda * dual_sum[i] - lambda * new_y[i])
        .collect()
}

impl NetworkState {
    /// Build a state with caches and mailboxes consistent with the given
    /// variables: gradients are evaluated, `a` derived, and every agent's
    /// initial values delivered to its neighbors.
    pub fn init(
        problem: &DistributedProblem,
        params: &CheckedParams,
        x0: Vec<Vec<f64>>,
        y0: Vec<Vec<f64>>,
        v0: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = problem.node_count();
        let q = problem.dim();
        if x0.len() != n || y0.len() != n || v0.len() != n {
            return Err(PdfpError::shape("NetworkState::init", n, x0.len()));
        }
        let graph = problem.graph();
        let mut agents = Vec::with_capacity(n);
        for node in 0..n {
            if x0[node].len() != q || y0[node].len() != q {
                return Err(PdfpError::shape("NetworkState::init block", q, x0[node].len()));
            }
            if v0[node].len() != graph.degree(node) {
                return Err(PdfpError::shape(
                    "NetworkState::init duals",
                    graph.degree(node),
                    v0[node].len(),
                ));
            }
            let grad = problem.batched().batches()[node].f.grad(&x0[node]);
            let mut agent = AgentState {
                x: x0[node].clone(),
                y: y0[node].clone(),
                duals: v0[node].clone(),
                grad,
                a: Vec::new(),
                mailbox: vec![None; graph.degree(node)],
            };
            agent.a = local_quantity_a(&agent, params.gamma(), params.lambda());
            agents.push(agent);
        }
        let mut state = NetworkState { agents };
        let everyone: Vec<usize> = (0..n).collect();
        state.publish(problem, &everyone);
        Ok(state)
    }

    /// All-zero variables.
    pub fn zeros(problem: &DistributedProblem, params: &CheckedParams) -> Result<Self> {
        let n = problem.node_count();
        let q = problem.dim();
        let v0 = (0..n)
            .map(|node| vec![vec![0.0; q]; problem.graph().degree(node)])
            .collect();
        NetworkState::init(problem, params, vec![vec![0.0; q]; n], vec![vec![0.0; q]; n], v0)
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, n: usize) -> &AgentState {
        &self.agents[n]
    }

    /// The dual slot `v_{n,m}(n)` owned by `n` on the edge to `m`.
    pub fn dual_slot(&self, graph: &NetworkGraph, n: usize, m: usize) -> Option<&[f64]> {
        graph
            .neighbors(n)
            .iter()
            .position(|&(nbr, _)| nbr == m)
            .map(|slot| self.agents[n].duals[slot].as_slice())
    }

    pub fn mean_x(&self) -> Vec<f64> {
        let q = self.agents[0].x.len();
        let mut out = vec![0.0; q];
        for a in &self.agents {
            for (o, xi) in out.iter_mut().zip(&a.x) {
                *o += xi;
            }
        }
        for o in out.iter_mut() {
            *o /= self.agents.len() as f64;
        }
        out
    }

    /// `max_n |x_n - mean(x)|`.
    pub fn consensus_residual(&self) -> f64 {
        let xbar = self.mean_x();
        self.agents
            .iter()
            .map(|a| linalg::dist2(&a.x, &xbar))
            .fold(0.0, f64::max)
    }

    /// `max_e |v_e(n) + v_e(m)|`, the edge-dual antisymmetry defect. Any
    /// synchronous round forces this to zero because the pair-consensus
    /// residual is antisymmetric by construction.
    pub fn antisymmetry_defect(&self, graph: &NetworkGraph) -> f64 {
        let mut worst: f64 = 0.0;
        for &(lo, hi) in graph.edges() {
            let vlo = self.dual_slot(graph, lo, hi).expect("edge endpoint");
            let vhi = self.dual_slot(graph, hi, lo).expect("edge endpoint");
            let defect = vlo
                .iter()
                .zip(vhi)
                .map(|(a, b)| (a + b) * (a + b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(defect);
        }
        worst
    }

    /// Flat `[v; y; x]` layout matching the lifted problem.
    pub fn flatten(&self, problem: &DistributedProblem) -> Vec<f64> {
        let graph = problem.graph();
        let mut u = Vec::new();
        for (e, &(lo, hi)) in graph.edges().iter().enumerate() {
            for node in [lo, hi] {
                let slot = graph
                    .neighbors(node)
                    .iter()
                    .position(|&(_, ei)| ei == e)
                    .expect("edge is incident to its endpoint");
                u.extend_from_slice(&self.agents[node].duals[slot]);
            }
        }
        for a in &self.agents {
            u.extend_from_slice(&a.y);
        }
        for a in &self.agents {
            u.extend_from_slice(&a.x);
        }
        u
    }

    /// Rebuild a consistent network state from a flat lifted vector.
    pub fn from_flat(
        problem: &DistributedProblem,
        params: &CheckedParams,
        u: &[f64],
    ) -> Result<Self> {
        let graph = problem.graph();
        let n = problem.node_count();
        let q = problem.dim();
        let v_len = 2 * graph.edge_count() * q;
        if u.len() != v_len + 2 * n * q {
            return Err(PdfpError::shape("NetworkState::from_flat", v_len + 2 * n * q, u.len()));
        }
        let mut v0: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|node| vec![Vec::new(); graph.degree(node)])
            .collect();
        for (e, &(lo, hi)) in graph.edges().iter().enumerate() {
            for (k, node) in [lo, hi].into_iter().enumerate() {
                let slot = graph
                    .neighbors(node)
                    .iter()
                    .position(|&(_, ei)| ei == e)
                    .expect("edge is incident to its endpoint");
                let base = (2 * e + k) * q;
                v0[node][slot] = u[base..base + q].to_vec();
            }
        }
        let y0 = (0..n)
            .map(|node| u[v_len + node * q..v_len + (node + 1) * q].to_vec())
            .collect();
        let x_base = v_len + n * q;
        let x0 = (0..n)
            .map(|node| u[x_base + node * q..x_base + (node + 1) * q].to_vec())
            .collect();
        NetworkState::init(problem, params, x0, y0, v0)
    }

    /// Deliver each activated agent's current values into its neighbors'
    /// mailboxes (instant, atomic delivery).
    fn publish(&mut self, problem: &DistributedProblem, activated: &[usize]) {
        let graph = problem.graph();
        for &n in activated {
            let sender = &self.agents[n];
            let messages: Vec<(usize, usize, NeighborMsg)> = graph
                .neighbors(n)
                .iter()
                .enumerate()
                .map(|(slot, &(m, _))| {
                    let msg = NeighborMsg {
                        a: sender.a.clone(),
                        dual_slot: sender.duals[slot].clone(),
                        x: sender.x.clone(),
                        y: sender.y.clone(),
                    };
                    let back_slot = graph
                        .neighbors(m)
                        .iter()
                        .position(|&(nbr, _)| nbr == n)
                        .expect("adjacency is symmetric");
                    (m, back_slot, msg)
                })
                .collect();
            for (m, back_slot, msg) in messages {
                self.agents[m].mailbox[back_slot] = Some(msg);
            }
        }
    }
}

/// One asynchronous tick: every agent in `activated` recomputes its dual
/// slots (general two-sided form), `y`, and `x` from its own state and its
/// mailbox, all reads against the pre-tick state (Jacobi), then publishes.
/// Agents outside the set keep all variables and owned dual slots unchanged.
pub fn async_round(
    state: &NetworkState,
    problem: &DistributedProblem,
    params: &CheckedParams,
    activated: &[usize],
) -> Result<NetworkState> {
    let graph = problem.graph();
    let n_nodes = problem.node_count();
    let mut set: Vec<usize> = activated.to_vec();
    set.sort_unstable();
    set.dedup();
    if let Some(&bad) = set.iter().find(|&&n| n >= n_nodes) {
        return Err(PdfpError::parameter(
            "activated",
            format!("agent {bad} out of range ({n_nodes} agents)"),
        ));
    }
    let (gamma, lambda) = (params.gamma(), params.lambda());

    struct Update {
        node: usize,
        duals: Vec<Vec<f64>>,
        y: Vec<f64>,
        x: Vec<f64>,
    }

    let mut updates = Vec::with_capacity(set.len());
    for &n in &set {
        let agent = &state.agents[n];
        let view = MailboxView {
            agent: n,
            state: agent,
            graph,
        };
        // the cached `a` is exactly local_quantity_a at the current state
        let a_own = &agent.a;
        let mut duals = Vec::with_capacity(graph.degree(n));
        for (slot, &(m, _)) in graph.neighbors(n).iter().enumerate() {
            duals.push(local_dual_update(a_own, &agent.duals[slot], &view, m)?);
        }
        let y = local_y_update(
            agent,
            problem.batched().batches()[n].g.as_ref(),
            gamma,
            lambda,
        );
        let x = local_x_update(agent, &duals, &y, gamma, lambda);
        updates.push(Update { node: n, duals, y, x });
    }

    let mut next = state.clone();
    for u in updates {
        let agent = &mut next.agents[u.node];
        agent.duals = u.duals;
        agent.y = u.y;
        agent.x = u.x;
        agent.grad = problem.batched().batches()[u.node].f.grad(&agent.x);
        agent.a = local_quantity_a(agent, gamma, lambda);
    }
    next.publish(problem, &set);
    Ok(next)
}

/// One synchronous round: the full activation.
pub fn sync_round(
    state: &NetworkState,
    problem: &DistributedProblem,
    params: &CheckedParams,
) -> Result<NetworkState> {
    let everyone: Vec<usize> = (0..problem.node_count()).collect();
    async_round(state, problem, params, &everyone)
}

pub struct DistRunOutcome {
    pub state: NetworkState,
    pub trace: IterationTrace,
    pub converged: bool,
    pub iterations: usize,
}

const DIVERGENCE_FACTOR: f64 = 1e12;

fn run_rounds(
    problem: &DistributedProblem,
    params: &CheckedParams,
    init: NetworkState,
    sampler: Option<&mut CoordinateSampler>,
    stop: &StoppingRule,
) -> Result<DistRunOutcome> {
    let lifted = problem.lift()?;
    let op = as_fixed_point_operator(&lifted, params, problem.block_partition())?;
    let norm = crate::solver::residual_norm(&lifted, params);

    let start = Instant::now();
    let u0_norm = linalg::norm2(&init.flatten(problem));
    let divergence_bound = DIVERGENCE_FACTOR * (1.0 + u0_norm);

    let mut sampler = sampler;
    let mut state = init;
    let mut trace = IterationTrace::new();
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=stop.max_iter {
        let (active, record_set) = match sampler.as_deref_mut() {
            Some(s) => {
                let set = s.sample();
                (set.clone(), set)
            }
            None => ((0..problem.node_count()).collect(), Vec::new()),
        };
        state = async_round(&state, problem, params, &active)?;
        iterations = k;

        // exact fixed-point residual at the new state, in the product norm
        let flat = state.flatten(problem);
        let residual = norm.eval_diff(&op.apply(&flat), &flat);
        let xbar = state.mean_x();
        trace.push(TraceRecord {
            iter: k,
            time_s: start.elapsed().as_secs_f64(),
            objective: problem.batched().aggregate_objective(&xbar),
            fp_residual: residual,
            consensus_residual: state.consensus_residual(),
            active_set: record_set,
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

    Ok(DistRunOutcome {
        state,
        trace,
        converged,
        iterations,
    })
}

/// Deterministic synchronous run.
pub fn run_sync(
    problem: &DistributedProblem,
    params: &CheckedParams,
    init: NetworkState,
    stop: &StoppingRule,
) -> Result<DistRunOutcome> {
    run_rounds(problem, params, init, None, stop)
}

/// Asynchronous event loop: sample an activation set, run the tick, record.
/// The sampler must give every agent positive activation probability (its
/// constructor enforces this); runs are deterministic per seed.
pub fn run_async(
    problem: &DistributedProblem,
    params: &CheckedParams,
    init: NetworkState,
    sampler: &mut CoordinateSampler,
    stop: &StoppingRule,
) -> Result<DistRunOutcome> {
    if sampler.block_count() != problem.node_count() {
        return Err(PdfpError::Config(format!(
            "sampler covers {} blocks but the graph has {} agents",
            sampler.block_count(),
            problem.node_count()
        )));
    }
    run_rounds(problem, params, init, Some(sampler), stop)
}
