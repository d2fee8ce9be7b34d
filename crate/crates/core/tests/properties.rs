//! Sampled operator properties and randomized invariants.

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pdfp::distributed::EdgeOperator;
use pdfp::graph::NetworkGraph;
use pdfp::linalg::{dot, DenseMatrix};
use pdfp::linop::MatrixMap;
use pdfp::prox::{ConsensusIndicator, L1Norm, PairConsensusIndicator, ProxFn, ZeroFn};
use pdfp::{lambda_norm, soft_threshold, LinearMap, ProductPoint};

fn rand_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Firm nonexpansiveness `|Tx - Tz|^2 <= <Tx - Tz, x - z>` for an operator.
fn firm_violation(tx: &[f64], tz: &[f64], x: &[f64], z: &[f64]) -> f64 {
    let diff_t: Vec<f64> = tx.iter().zip(tz).map(|(a, b)| a - b).collect();
    let diff: Vec<f64> = x.iter().zip(z).map(|(a, b)| a - b).collect();
    dot(&diff_t, &diff_t) - dot(&diff_t, &diff)
}

#[test]
fn prox_catalog_is_firmly_nonexpansive_on_seeded_pairs() {
    let dim = 6;
    let catalog: Vec<(&str, Box<dyn ProxFn>)> = vec![
        ("l1", Box::new(L1Norm::new(0.8).unwrap())),
        ("zero", Box::new(ZeroFn)),
        ("consensus", Box::new(ConsensusIndicator::new(3, 2).unwrap())),
        ("pair-consensus", Box::new(PairConsensusIndicator::new(3, 1).unwrap())),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (name, prox) in &catalog {
        for _ in 0..1000 {
            let x = rand_vec(&mut rng, dim, 5.0);
            let z = rand_vec(&mut rng, dim, 5.0);
            let scale = rng.gen_range(0.05..4.0);
            let tx = prox.prox(&x, scale);
            let tz = prox.prox(&z, scale);
            assert!(
                firm_violation(&tx, &tz, &x, &z) <= 1e-10,
                "{name}: prox violates firm nonexpansiveness"
            );
            // the residual I - prox is firmly nonexpansive as well
            let rx: Vec<f64> = x.iter().zip(&tx).map(|(a, b)| a - b).collect();
            let rz: Vec<f64> = z.iter().zip(&tz).map(|(a, b)| a - b).collect();
            assert!(
                firm_violation(&rx, &rz, &x, &z) <= 1e-10,
                "{name}: residual violates firm nonexpansiveness"
            );
        }
    }
}

#[test]
fn adjoint_consistency_on_seeded_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // a dense rectangular map
    let data = rand_vec(&mut rng, 7 * 4, 2.0);
    let dense = MatrixMap::new(DenseMatrix::from_vec(7, 4, data).unwrap());
    // and a graph edge operator
    let graph = Arc::new(NetworkGraph::erdos_renyi(6, 0.5, 3).unwrap());
    let edge = EdgeOperator::new(graph, 2).unwrap();

    let maps: Vec<(&str, &dyn LinearMap)> = vec![("dense", &dense), ("edge", &edge)];
    for (name, map) in maps {
        for _ in 0..1000 {
            let x = rand_vec(&mut rng, map.in_dim(), 3.0);
            let y = rand_vec(&mut rng, map.out_dim(), 3.0);
            let lhs = dot(&map.forward(&x), &y);
            let rhs = dot(&x, &map.adjoint(&y));
            assert!(
                (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()),
                "{name}: <Dx,y> = {lhs} vs <x,D^T y> = {rhs}"
            );
        }
    }
}

proptest! {
    #[test]
    fn soft_threshold_satisfies_its_optimality_condition(
        x in proptest::collection::vec(-100.0f64..100.0, 1..20),
        tau in 0.0f64..50.0,
    ) {
        let out = soft_threshold(&x, tau).unwrap();
        for (&o, &xi) in out.iter().zip(&x) {
            // 0 must lie in (out - x) + tau * subdiff |out|
            let g = o - xi;
            let gap = if o != 0.0 { (g + tau * o.signum()).abs() } else { (g.abs() - tau).max(0.0) };
            prop_assert!(gap <= 1e-10 * (1.0 + tau));
        }
    }

    #[test]
    fn lambda_norm_is_a_norm(
        v1 in proptest::collection::vec(-10.0f64..10.0, 3),
        x1 in proptest::collection::vec(-10.0f64..10.0, 4),
        v2 in proptest::collection::vec(-10.0f64..10.0, 3),
        x2 in proptest::collection::vec(-10.0f64..10.0, 4),
        lambda in 0.01f64..4.0,
        t in -5.0f64..5.0,
    ) {
        let a = ProductPoint::new(v1.clone(), x1.clone());
        let b = ProductPoint::new(v2.clone(), x2.clone());
        let sum = ProductPoint::new(
            v1.iter().zip(&v2).map(|(p, q)| p + q).collect(),
            x1.iter().zip(&x2).map(|(p, q)| p + q).collect(),
        );
        let (na, nb, ns) = (
            lambda_norm(&a, lambda).unwrap(),
            lambda_norm(&b, lambda).unwrap(),
            lambda_norm(&sum, lambda).unwrap(),
        );
        prop_assert!(ns <= na + nb + 1e-10);

        let scaled = ProductPoint::new(
            v1.iter().map(|p| t * p).collect(),
            x1.iter().map(|p| t * p).collect(),
        );
        let nscaled = lambda_norm(&scaled, lambda).unwrap();
        prop_assert!((nscaled - t.abs() * na).abs() <= 1e-10 * (1.0 + na));
    }

    #[test]
    fn libsvm_round_trip_reproduces_values(
        rows in proptest::collection::vec(
            proptest::collection::vec(proptest::option::weighted(0.4, -1e6f64..1e6), 1..8),
            1..10,
        ),
        labels_seed in any::<u64>(),
    ) {
        // build a dataset whose final column always has a nonzero so the
        // inferred feature count survives the round trip
        let q = rows.iter().map(Vec::len).max().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(labels_seed);
        let mut text = String::new();
        for row in &rows {
            let label: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            text.push_str(&format!("{label}"));
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    if *v != 0.0 {
                        text.push_str(&format!(" {}:{}", j + 1, v));
                    }
                }
            }
            text.push('\n');
        }
        text.push_str(&format!("1 {}:1\n", q)); // pin the width
        let data = pdfp::io::parse_libsvm(&text).unwrap();
        let again = pdfp::io::parse_libsvm(&pdfp::io::write_libsvm(&data)).unwrap();
        prop_assert_eq!(data.labels.clone(), again.labels.clone());
        prop_assert_eq!(data.feature_count(), again.feature_count());
        for i in 0..data.sample_count() {
            prop_assert_eq!(data.features.dense_row(i), again.features.dense_row(i));
        }
    }

    #[test]
    fn consensus_projection_is_idempotent_and_mean_preserving(
        x in proptest::collection::vec(-50.0f64..50.0, 6),
        blocks in 1usize..4,
    ) {
        prop_assume!(x.len() % blocks == 0);
        let p = pdfp::project_consensus(&x, blocks).unwrap();
        let pp = pdfp::project_consensus(&p, blocks).unwrap();
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        // projection preserves the blockwise sum
        let q = x.len() / blocks;
        for i in 0..q {
            let before: f64 = (0..blocks).map(|b| x[b * q + i]).sum();
            let after: f64 = (0..blocks).map(|b| p[b * q + i]).sum();
            prop_assert!((before - after).abs() <= 1e-10);
        }
    }
}
