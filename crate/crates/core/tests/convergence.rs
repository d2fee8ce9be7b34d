//! End-to-end convergence checks against the independent proximal-gradient
//! reference solver.

use std::sync::Arc;

use pdfp::distributed::{run_async, run_sync, DistributedProblem, NetworkState};
use pdfp::graph::NetworkGraph;
use pdfp::km::{CoordinateSampler, SamplerKind, StoppingRule};
use pdfp::linalg::{dist2, DenseMatrix};
use pdfp::minibatch::{run_stochastic, MinibatchState};
use pdfp::problems::{
    build_batched_logistic, build_lasso, build_logistic, generate_synthetic, partition_dataset,
    Dataset, LogisticLoss, PartitionStrategy, QuadraticLoss, SyntheticKind, SyntheticProblem,
    SyntheticSpec,
};
use pdfp::reference::{
    l1_optimality_residual_thresholded, proximal_gradient_solve, OracleSolution,
};
use pdfp::solver::{default_stop, residual_norm};
use pdfp::{solve, Algo, PdfpParams, SolverState};

fn lasso_data(seed: u64, p: usize, q: usize) -> (DenseMatrix, Vec<f64>) {
    let spec = SyntheticSpec {
        kind: SyntheticKind::Lasso,
        seed,
        m: p,
        q,
        sparsity: 0.2,
        noise: 0.1,
    };
    match generate_synthetic(&spec).unwrap().0 {
        SyntheticProblem::Lasso { a, b } => (a, b),
        _ => unreachable!(),
    }
}

fn logistic_data(seed: u64, m: usize, q: usize) -> Arc<Dataset> {
    let spec = SyntheticSpec {
        kind: SyntheticKind::Logistic,
        seed,
        m,
        q,
        sparsity: 0.3,
        noise: 0.1,
    };
    match generate_synthetic(&spec).unwrap().0 {
        SyntheticProblem::Logistic { data } => Arc::new(data),
        _ => unreachable!(),
    }
}

fn rel_gap(objective: f64, oracle: &OracleSolution) -> f64 {
    (objective - oracle.objective).abs() / oracle.objective.abs().max(1.0)
}

#[test]
fn lasso_seed7_matches_oracle_to_1e6() {
    let (a, b) = lasso_data(7, 50, 20);
    let tau = 1.0;
    let f = QuadraticLoss::new(a.clone(), b.clone()).unwrap();
    let oracle = proximal_gradient_solve(&f, tau, &[0.0; 20], 1e-10, 1_000_000).unwrap();
    assert!(oracle.converged);

    let problem = build_lasso(a, b, tau).unwrap();
    let params = PdfpParams::auto(&problem, Algo::Spdfp2o, 7)
        .unwrap()
        .validate(&problem, Algo::Spdfp2o)
        .unwrap();
    let out = solve(
        &problem,
        &params,
        SolverState::zeros(&problem),
        &default_stop(&problem, &params),
    )
    .unwrap();
    assert!(out.converged, "no convergence in 1e5 iterations");
    assert!(out.trace.final_fp_residual().unwrap() <= 1e-8);

    let objective = problem.objective(&out.state.x);
    assert!(
        (objective - oracle.objective).abs() <= 1e-6,
        "objective gap {}",
        (objective - oracle.objective).abs()
    );

    // subgradient optimality certificate at the returned point (support
    // identified at 1e-6: primal-dual iterates carry residual-level dust on
    // zero coordinates instead of exact zeros)
    let grad = problem.f.grad(&out.state.x);
    assert!(l1_optimality_residual_thresholded(&grad, &out.state.x, tau, 1e-6) <= 1e-5);

    // residual monotonicity along the trace
    let residuals: Vec<f64> = out.trace.records.iter().map(|r| r.fp_residual).collect();
    for w in residuals.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "residual increased: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn centralized_logistic_matches_oracle() {
    let data = logistic_data(3, 80, 12);
    let tau = 0.02;
    let f = LogisticLoss::full(data.clone()).unwrap();
    let oracle = proximal_gradient_solve(&f, tau, &[0.0; 12], 1e-10, 2_000_000).unwrap();
    assert!(oracle.converged);

    let problem = build_logistic(data, tau).unwrap();
    let params = PdfpParams::auto(&problem, Algo::Spdfp2o, 0)
        .unwrap()
        .validate(&problem, Algo::Spdfp2o)
        .unwrap();
    let out = solve(
        &problem,
        &params,
        SolverState::zeros(&problem),
        &default_stop(&problem, &params),
    )
    .unwrap();
    assert!(out.converged);
    let objective = problem.objective(&out.state.x);
    assert!((objective - oracle.objective).abs() <= 1e-6);
}

#[test]
fn lasso_tau_zero_matches_normal_equations() {
    let (a, b) = lasso_data(11, 30, 6);
    // independent least-squares oracle: Gaussian elimination on A^T A x = A^T b
    let gram = a.gram();
    let atb = a.matvec_t(&b);
    let x_star = solve_dense(&gram, &atb);

    let problem = build_lasso(a, b, 0.0).unwrap();
    let params = PdfpParams::auto(&problem, Algo::Spdfp2o, 0)
        .unwrap()
        .validate(&problem, Algo::Spdfp2o)
        .unwrap();
    let mut stop = default_stop(&problem, &params);
    stop.tol = Some(1e-12);
    let out = solve(&problem, &params, SolverState::zeros(&problem), &stop).unwrap();
    assert!(out.converged);
    assert!(dist2(&out.state.x, &x_star) <= 1e-6, "{:?} vs {:?}", out.state.x, x_star);
}

#[test]
fn lasso_large_tau_gives_zero_solution() {
    let (a, b) = lasso_data(5, 25, 8);
    let atb = a.matvec_t(&b);
    let tau = atb.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1.01;
    let problem = build_lasso(a, b, tau).unwrap();
    let params = PdfpParams::auto(&problem, Algo::Spdfp2o, 0)
        .unwrap()
        .validate(&problem, Algo::Spdfp2o)
        .unwrap();
    let out = solve(
        &problem,
        &params,
        SolverState::zeros(&problem),
        &default_stop(&problem, &params),
    )
    .unwrap();
    assert!(out.converged);
    // the returned point satisfies the zero-solution optimality condition
    let grad = problem.f.grad(&out.state.x);
    assert!(l1_optimality_residual_thresholded(&grad, &out.state.x, tau, 1e-6) <= 1e-5);
    assert!(pdfp::linalg::norm_inf(&out.state.x) <= 1e-6);
}

#[test]
fn noiseless_lasso_recovers_support() {
    let spec = SyntheticSpec {
        kind: SyntheticKind::Lasso,
        seed: 21,
        m: 60,
        q: 12,
        sparsity: 0.25,
        noise: 0.0,
    };
    let (problem, truth) = generate_synthetic(&spec).unwrap();
    let (a, b) = match problem {
        SyntheticProblem::Lasso { a, b } => (a, b),
        _ => unreachable!(),
    };
    let f = QuadraticLoss::new(a, b).unwrap();
    let sol = proximal_gradient_solve(&f, 1e-4, &[0.0; 12], 1e-10, 1_000_000).unwrap();
    assert!(sol.converged);
    for (xi, ti) in sol.x.iter().zip(&truth) {
        if *ti != 0.0 {
            assert!((xi - ti).abs() < 0.05, "support entry off: {xi} vs {ti}");
        } else {
            assert!(xi.abs() < 0.05, "spurious entry {xi}");
        }
    }
}

#[test]
fn stochastic_minibatch_reaches_oracle_for_three_seeds() {
    let data = logistic_data(9, 60, 10);
    let tau = 0.05;
    let f = LogisticLoss::full(data.clone()).unwrap();
    let oracle = proximal_gradient_solve(&f, tau, &[0.0; 10], 1e-10, 2_000_000).unwrap();
    assert!(oracle.converged);

    let partition = partition_dataset(60, 3, PartitionStrategy::Contiguous).unwrap();
    let batched = build_batched_logistic(data, &partition, tau).unwrap();
    let lifted = batched.lift().unwrap();
    let params = PdfpParams::auto(&lifted, Algo::Spdfp2o, 0)
        .unwrap()
        .validate(&lifted, Algo::Spdfp2o)
        .unwrap();
    assert_eq!(params.lambda(), 0.5);

    for seed in [1, 2, 3] {
        let mut sampler = CoordinateSampler::new(SamplerKind::SingleUniform, 3, seed).unwrap();
        let mut stop = StoppingRule::new(200_000, Some(1e-7), residual_norm(&lifted, &params));
        stop.norm = residual_norm(&lifted, &params);
        let out = run_stochastic(
            &batched,
            &params,
            MinibatchState::zeros(3, 10),
            &mut sampler,
            &stop,
        )
        .unwrap();
        assert!(out.converged, "seed {seed} hit the budget");
        let xbar = out.state.mean_x();
        let gap = rel_gap(batched.aggregate_objective(&xbar), &oracle);
        assert!(gap <= 1e-4, "seed {seed}: gap {gap}");
        assert!(out.state.consensus_residual() <= 1e-4);
    }
}

#[test]
fn stochastic_minibatch_lasso_split_reaches_oracle() {
    let (a, b) = lasso_data(6, 45, 9);
    let tau = 1.0;
    let f = QuadraticLoss::new(a.clone(), b.clone()).unwrap();
    let oracle = proximal_gradient_solve(&f, tau, &[0.0; 9], 1e-10, 1_000_000).unwrap();
    assert!(oracle.converged);

    let partition = partition_dataset(45, 3, PartitionStrategy::Contiguous).unwrap();
    let batched = pdfp::problems::build_batched_lasso(&a, &b, &partition, tau).unwrap();
    // partition additivity: batch terms sum to the full objective
    let lifted = batched.lift().unwrap();
    let params = PdfpParams::auto(&lifted, Algo::Spdfp2o, 0)
        .unwrap()
        .validate(&lifted, Algo::Spdfp2o)
        .unwrap();
    for seed in [1, 2, 3] {
        let mut sampler = CoordinateSampler::new(SamplerKind::SingleUniform, 3, seed).unwrap();
        let stop = StoppingRule::new(300_000, Some(1e-7), residual_norm(&lifted, &params));
        let out = run_stochastic(
            &batched,
            &params,
            MinibatchState::zeros(3, 9),
            &mut sampler,
            &stop,
        )
        .unwrap();
        assert!(out.converged, "seed {seed}");
        let gap = rel_gap(batched.aggregate_objective(&out.state.mean_x()), &oracle);
        assert!(gap <= 1e-4, "seed {seed}: gap {gap}");
        assert!(out.state.consensus_residual() <= 1e-4);
    }
}

#[test]
fn batch_terms_sum_to_the_centralized_objective() {
    use pdfp::SmoothFn;
    use rand::Rng;
    use rand::SeedableRng;
    let data = logistic_data(41, 36, 7);
    let tau = 0.4;
    let partition = partition_dataset(36, 4, PartitionStrategy::Strided).unwrap();
    let batched = build_batched_logistic(data.clone(), &partition, tau).unwrap();
    let full = LogisticLoss::full(data.clone()).unwrap();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let x: Vec<f64> = (0..7).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let split_f: f64 = batched.batches().iter().map(|b| b.f.value(&x)).sum();
        assert!((split_f - full.value(&x)).abs() <= 1e-12 * (1.0 + full.value(&x).abs()));
        let split_g: f64 = batched.batches().iter().map(|b| b.g.value(&x)).sum();
        let tau_l1 = tau * x.iter().map(|v| v.abs()).sum::<f64>();
        assert!((split_g - tau_l1).abs() <= 1e-12 * (1.0 + tau_l1));
    }
}

fn ring_problem(
    data: &Arc<Dataset>,
    tau: f64,
    nodes: usize,
) -> (DistributedProblem, pdfp::CheckedParams) {
    let partition =
        partition_dataset(data.sample_count(), nodes, PartitionStrategy::Contiguous).unwrap();
    let batched = build_batched_logistic(data.clone(), &partition, tau).unwrap();
    let graph = Arc::new(NetworkGraph::ring(nodes).unwrap());
    let problem = DistributedProblem::new(graph, batched).unwrap();
    let lifted = problem.lift().unwrap();
    let params = PdfpParams::auto(&lifted, Algo::Spdfp2o, 0)
        .unwrap()
        .validate(&lifted, Algo::Spdfp2o)
        .unwrap();
    (problem, params)
}

#[test]
fn ring_sync_run_agrees_with_centralized_solution() {
    let data = logistic_data(17, 50, 8);
    let tau = 0.05;
    let f = LogisticLoss::full(data.clone()).unwrap();
    let oracle = proximal_gradient_solve(&f, tau, &[0.0; 8], 1e-12, 2_000_000).unwrap();
    assert!(oracle.converged);

    let (problem, params) = ring_problem(&data, tau, 5);
    let lifted = problem.lift().unwrap();
    let stop = StoppingRule::new(200_000, Some(1e-9), residual_norm(&lifted, &params));
    let init = NetworkState::zeros(&problem, &params).unwrap();
    let out = run_sync(&problem, &params, init, &stop).unwrap();
    assert!(out.converged);
    // every agent's iterate is close to the centralized minimizer
    for agent in out.state.agents() {
        assert!(
            dist2(&agent.x, &oracle.x) <= 1e-4,
            "agent off by {}",
            dist2(&agent.x, &oracle.x)
        );
    }
}

#[test]
fn full_activation_async_reproduces_sync_trajectories() {
    let data = logistic_data(23, 40, 6);
    let (problem, params) = ring_problem(&data, 0.05, 4);
    let lifted = problem.lift().unwrap();
    let stop = StoppingRule::new(50, None, residual_norm(&lifted, &params));
    let init = NetworkState::zeros(&problem, &params).unwrap();
    let sync = run_sync(&problem, &params, init.clone(), &stop).unwrap();
    let mut sampler = CoordinateSampler::new(SamplerKind::AlwaysFull, 4, 0).unwrap();
    let async_out = run_async(&problem, &params, init, &mut sampler, &stop).unwrap();
    assert_eq!(sync.state.flatten(&problem), async_out.state.flatten(&problem));
}

#[test]
fn star_graph_with_leaf_heavy_activation_converges() {
    let data = logistic_data(31, 40, 6);
    let tau = 0.05;
    let f = LogisticLoss::full(data.clone()).unwrap();
    let oracle = proximal_gradient_solve(&f, tau, &[0.0; 6], 1e-10, 2_000_000).unwrap();

    let partition = partition_dataset(40, 4, PartitionStrategy::Contiguous).unwrap();
    let batched = build_batched_logistic(data, &partition, tau).unwrap();
    let graph = Arc::new(NetworkGraph::star(4).unwrap());
    let problem = DistributedProblem::new(graph, batched).unwrap();
    let lifted = problem.lift().unwrap();
    let params = PdfpParams::auto(&lifted, Algo::Spdfp2o, 0)
        .unwrap()
        .validate(&lifted, Algo::Spdfp2o)
        .unwrap();

    // the hub is rarely activated, leaves often; coverage is what matters
    let mut sampler = CoordinateSampler::new(
        SamplerKind::SingleWeighted(vec![0.04, 0.32, 0.32, 0.32]),
        4,
        5,
    )
    .unwrap();
    let stop = StoppingRule::new(400_000, Some(1e-7), residual_norm(&lifted, &params));
    let init = NetworkState::zeros(&problem, &params).unwrap();
    let out = run_async(&problem, &params, init, &mut sampler, &stop).unwrap();
    assert!(out.converged);
    let xbar = out.state.mean_x();
    let gap = rel_gap(problem.batched().aggregate_objective(&xbar), &oracle);
    assert!(gap <= 1e-4, "gap {gap}");
    assert!(out.state.consensus_residual() <= 1e-4);
}

/// Tiny dense solver (partial-pivot Gaussian elimination) used as the
/// normal-equations oracle.
#[allow(clippy::needless_range_loop)]
fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = a.get(i, j);
        }
        m[i][n] = b[i];
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for j in col..=n {
            m[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let factor = m[i][col];
                for j in col..=n {
                    m[i][j] -= factor * m[col][j];
                }
            }
        }
    }
    (0..n).map(|i| m[i][n]).collect()
}
