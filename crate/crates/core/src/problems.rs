//! Concrete problem instantiations: least-squares/LASSO and l1-regularized
//! logistic regression, plus dataset partitioning and synthetic generation.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PdfpError, Result};
use crate::linalg::{DenseMatrix, RowMatrix};
use crate::linop::{power_iteration_opnorm, IdentityMap, RowMatrixMap};
use crate::minibatch::{Batch, BatchedProblem};
use crate::prox::{L1Norm, ZeroFn};
use crate::smooth::SmoothFn;
use crate::solver::CompositeProblem;

/// Labeled samples. Labels live in `{-1, +1}` for classification tasks;
/// regression targets are unrestricted.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: RowMatrix,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn new(features: RowMatrix, labels: Vec<f64>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(PdfpError::shape("Dataset::new", features.rows(), labels.len()));
        }
        for (i, &l) in labels.iter().enumerate() {
            if !l.is_finite() {
                return Err(PdfpError::parameter(
                    "labels",
                    format!("label {i} is not finite: {l}"),
                ));
            }
        }
        Ok(Dataset { features, labels })
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    /// Require `{-1, +1}` labels; `{0, 1}` inputs are remapped and reported
    /// via the returned flag so callers can warn.
    pub fn normalize_binary_labels(&mut self) -> Result<bool> {
        let is_pm1 = self.labels.iter().all(|&l| l == 1.0 || l == -1.0);
        if is_pm1 {
            return Ok(false);
        }
        let is_01 = self.labels.iter().all(|&l| l == 0.0 || l == 1.0);
        if is_01 {
            for l in self.labels.iter_mut() {
                *l = if *l == 0.0 { -1.0 } else { 1.0 };
            }
            return Ok(true);
        }
        Err(PdfpError::parameter(
            "labels",
            "classification labels must be in {-1,+1} (or {0,1}, which are remapped)",
        ))
    }
}

/// A partition of `{0..m}` into disjoint covering blocks, none empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionStrategy {
    Contiguous,
    Strided,
    SeededRandom(u64),
}

impl Partition {
    pub fn from_blocks(total: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; total];
        let mut count = 0;
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(PdfpError::parameter(
                    "blocks",
                    format!("block {b} is empty"),
                ));
            }
            for &i in block {
                if i >= total {
                    return Err(PdfpError::parameter(
                        "blocks",
                        format!("index {i} out of range for {total} samples"),
                    ));
                }
                if seen[i] {
                    return Err(PdfpError::parameter(
                        "blocks",
                        format!("index {i} appears in two blocks"),
                    ));
                }
                seen[i] = true;
                count += 1;
            }
        }
        if count != total {
            return Err(PdfpError::parameter(
                "blocks",
                format!("blocks cover {count} of {total} samples"),
            ));
        }
        Ok(Partition { blocks, total })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }
}

/// Split `{0..m}` into `n` blocks whose sizes differ by at most one.
pub fn partition_dataset(m: usize, n: usize, strategy: PartitionStrategy) -> Result<Partition> {
    if n == 0 || n > m {
        return Err(PdfpError::parameter(
            "n",
            format!("need 1 <= n <= m, got n = {n} with m = {m}"),
        ));
    }
    let order: Vec<usize> = match strategy {
        PartitionStrategy::Contiguous => (0..m).collect(),
        PartitionStrategy::Strided => {
            let mut blocks = vec![Vec::new(); n];
            for i in 0..m {
                blocks[i % n].push(i);
            }
            return Partition::from_blocks(m, blocks);
        }
        PartitionStrategy::SeededRandom(seed) => {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            order
        }
    };
    let base = m / n;
    let extra = m % n;
    let mut blocks = Vec::with_capacity(n);
    let mut cursor = 0;
    for b in 0..n {
        let size = base + usize::from(b < extra);
        blocks.push(order[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Partition::from_blocks(m, blocks)
}

/// Stable logistic pieces. `softplus(t) = ln(1 + e^t)` and the sigmoid are
/// computed without overflow for any margin.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Value and gradient of the (partial) logistic loss
/// `sum_{i in indices} (1/m) ln(1 + exp(-y_i a_i^T x))`, with `m` the full
/// sample count.
pub fn logistic_value_grad(
    x: &[f64],
    data: &Dataset,
    indices: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let m = data.sample_count();
    if x.len() != data.feature_count() {
        return Err(PdfpError::shape("logistic_value_grad", data.feature_count(), x.len()));
    }
    for &i in indices {
        if i >= m {
            return Err(PdfpError::parameter(
                "indices",
                format!("sample index {i} out of range for {m} samples"),
            ));
        }
    }
    let inv_m = 1.0 / m as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; x.len()];
    for &i in indices {
        let margin = data.labels[i] * data.features.row_dot(i, x);
        value += inv_m * softplus(-margin);
        // d/dx ln(1 + e^{-margin}) = -y_i sigma(-margin) a_i
        let coef = -inv_m * data.labels[i] * sigmoid(-margin);
        data.features.row_axpy(i, &mut grad, coef);
    }
    Ok((value, grad))
}

/// Value `0.5 |A x - b|^2` and gradient `A^T (A x - b)`.
pub fn quadratic_value_grad(x: &[f64], a: &DenseMatrix, b: &[f64]) -> Result<(f64, Vec<f64>)> {
    if x.len() != a.cols() {
        return Err(PdfpError::shape("quadratic_value_grad x", a.cols(), x.len()));
    }
    if b.len() != a.rows() {
        return Err(PdfpError::shape("quadratic_value_grad b", a.rows(), b.len()));
    }
    let mut r = a.matvec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    let value = 0.5 * crate::linalg::dot(&r, &r);
    Ok((value, a.matvec_t(&r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Quadratic,
    Logistic,
}

/// Gradient Lipschitz bound for the data matrix: `lambda_max(A^T A)` for
/// least squares, `lambda_max(A^T A) / (4 m)` for the logistic loss (the
/// sigmoid curvature is at most 1/4, so this over-estimates safely).
pub fn lipschitz_estimate(a: &RowMatrix, kind: LossKind, m: usize) -> Result<f64> {
    let map = RowMatrixMap::new(a);
    let top = power_iteration_opnorm(&map, 1e-10, 20_000, 0x4c69_7073)?;
    Ok(match kind {
        LossKind::Quadratic => top,
        LossKind::Logistic => top / (4.0 * m as f64),
    })
}

/// Least-squares data term `0.5 |A x - b|^2`.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    a: DenseMatrix,
    b: Vec<f64>,
    lipschitz: f64,
}

impl QuadraticLoss {
    /// Estimates the Lipschitz constant by power iteration.
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        let rows = RowMatrix::Dense(a.clone());
        let lipschitz = lipschitz_estimate(&rows, LossKind::Quadratic, a.rows())?;
        Self::with_lipschitz(a, b, lipschitz)
    }

    /// Injects a known Lipschitz constant (shared bounds across batches).
    pub fn with_lipschitz(a: DenseMatrix, b: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(PdfpError::shape("QuadraticLoss", a.rows(), b.len()));
        }
        if lipschitz.is_nan() || lipschitz <= 0.0 {
            return Err(PdfpError::parameter(
                "lipschitz",
                format!("must be positive, got {lipschitz}"),
            ));
        }
        Ok(QuadraticLoss { a, b, lipschitz })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
}

impl SmoothFn for QuadraticLoss {
    fn dim(&self) -> usize {
        self.a.cols()
    }
    fn value(&self, x: &[f64]) -> f64 {
        quadratic_value_grad(x, &self.a, &self.b)
            .expect("shape checked at construction")
            .0
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        quadratic_value_grad(x, &self.a, &self.b)
            .expect("shape checked at construction")
            .1
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Logistic loss over a subset of a shared dataset, scaled by the full
/// sample count so batch terms sum to the centralized objective.
#[derive(Clone)]
pub struct LogisticLoss {
    data: Arc<Dataset>,
    indices: Vec<usize>,
    lipschitz: f64,
}

impl LogisticLoss {
    pub fn new(data: Arc<Dataset>, indices: Vec<usize>, lipschitz: f64) -> Result<Self> {
        for &i in &indices {
            if i >= data.sample_count() {
                return Err(PdfpError::parameter(
                    "indices",
                    format!("sample index {i} out of range"),
                ));
            }
        }
        if lipschitz.is_nan() || lipschitz <= 0.0 {
            return Err(PdfpError::parameter(
                "lipschitz",
                format!("must be positive, got {lipschitz}"),
            ));
        }
        Ok(LogisticLoss {
            data,
            indices,
            lipschitz,
        })
    }

    /// Full-dataset loss with its own Lipschitz estimate.
    pub fn full(data: Arc<Dataset>) -> Result<Self> {
        let l = lipschitz_estimate(&data.features, LossKind::Logistic, data.sample_count())?;
        let indices = (0..data.sample_count()).collect();
        LogisticLoss::new(data, indices, l)
    }
}

impl SmoothFn for LogisticLoss {
    fn dim(&self) -> usize {
        self.data.feature_count()
    }
    fn value(&self, x: &[f64]) -> f64 {
        logistic_value_grad(x, &self.data, &self.indices)
            .expect("indices checked at construction")
            .0
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        logistic_value_grad(x, &self.data, &self.indices)
            .expect("indices checked at construction")
            .1
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// LASSO `min 0.5 |A x - b|^2 + tau |x|_1` with the regularizer on the dual
/// path (`h = tau |.|_1`, `D = I`, `g = 0`).
pub fn build_lasso(a: DenseMatrix, b: Vec<f64>, tau: f64) -> Result<CompositeProblem> {
    let q = a.cols();
    let f = Arc::new(QuadraticLoss::new(a, b)?);
    CompositeProblem::new(
        f,
        Arc::new(ZeroFn),
        Arc::new(L1Norm::new(tau)?),
        Arc::new(IdentityMap::new(q)),
    )
}

/// Centralized l1-regularized logistic regression, regularizer on the dual
/// path like the LASSO builder.
pub fn build_logistic(data: Arc<Dataset>, tau: f64) -> Result<CompositeProblem> {
    let q = data.feature_count();
    let f = Arc::new(LogisticLoss::full(data)?);
    CompositeProblem::new(
        f,
        Arc::new(ZeroFn),
        Arc::new(L1Norm::new(tau)?),
        Arc::new(IdentityMap::new(q)),
    )
}

/// Batched logistic regression: `f_n` is the loss over block `W_n` (scaled
/// by the global `1/m`), `g_n = (tau/N) |.|_1`, and every batch shares the
/// global Lipschitz bound.
pub fn build_batched_logistic(
    data: Arc<Dataset>,
    partition: &Partition,
    tau: f64,
) -> Result<BatchedProblem> {
    if partition.total() != data.sample_count() {
        return Err(PdfpError::shape(
            "build_batched_logistic",
            data.sample_count(),
            partition.total(),
        ));
    }
    let l = lipschitz_estimate(&data.features, LossKind::Logistic, data.sample_count())?;
    let n = partition.block_count();
    let g = Arc::new(L1Norm::new(tau / n as f64)?);
    let batches = partition
        .blocks()
        .iter()
        .map(|block| {
            Ok(Batch {
                f: Arc::new(LogisticLoss::new(data.clone(), block.clone(), l)?) as Arc<dyn SmoothFn>,
                g: g.clone() as Arc<dyn crate::prox::ProxFn>,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BatchedProblem::new(batches)
}

/// Batched LASSO: `f_n = 0.5 |A_{W_n} x - b_{W_n}|^2`, `g_n = (tau/N) |.|_1`,
/// all batches sharing the global `lambda_max(A^T A)` bound.
pub fn build_batched_lasso(
    a: &DenseMatrix,
    b: &[f64],
    partition: &Partition,
    tau: f64,
) -> Result<BatchedProblem> {
    if partition.total() != a.rows() {
        return Err(PdfpError::shape("build_batched_lasso", a.rows(), partition.total()));
    }
    let rows = RowMatrix::Dense(a.clone());
    let l = lipschitz_estimate(&rows, LossKind::Quadratic, a.rows())?;
    let n = partition.block_count();
    let g = Arc::new(L1Norm::new(tau / n as f64)?);
    let batches = partition
        .blocks()
        .iter()
        .map(|block| {
            let mut data = Vec::with_capacity(block.len() * a.cols());
            let mut rhs = Vec::with_capacity(block.len());
            for &i in block {
                data.extend_from_slice(a.row(i));
                rhs.push(b[i]);
            }
            let sub = DenseMatrix::from_vec(block.len(), a.cols(), data)?;
            Ok(Batch {
                f: Arc::new(QuadraticLoss::with_lipschitz(sub, rhs, l)?) as Arc<dyn SmoothFn>,
                g: g.clone() as Arc<dyn crate::prox::ProxFn>,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BatchedProblem::new(batches)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    Lasso,
    Logistic,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub seed: u64,
    pub m: usize,
    pub q: usize,
    /// Fraction of nonzero ground-truth coefficients, in `[0, 1]`.
    pub sparsity: f64,
    pub noise: f64,
}

#[derive(Debug, Clone)]
pub enum SyntheticProblem {
    Lasso { a: DenseMatrix, b: Vec<f64> },
    Logistic { data: Dataset },
}

/// Standard-normal features, a `ceil(sparsity * q)`-sparse ground truth with
/// unit-magnitude entries, and targets/labels from the linear model plus
/// Gaussian noise. Byte-deterministic for a fixed seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(SyntheticProblem, Vec<f64>)> {
    if spec.m == 0 || spec.q == 0 {
        return Err(PdfpError::parameter("m/q", "dimensions must be positive"));
    }
    if !(0.0..=1.0).contains(&spec.sparsity) {
        return Err(PdfpError::parameter(
            "sparsity",
            format!("must be in [0, 1], got {}", spec.sparsity),
        ));
    }
    if spec.noise.is_nan() || spec.noise < 0.0 {
        return Err(PdfpError::parameter(
            "noise",
            format!("must be nonnegative, got {}", spec.noise),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller keeps the only RNG dependency on `rand` itself.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };

    let mut data = Vec::with_capacity(spec.m * spec.q);
    for _ in 0..spec.m * spec.q {
        data.push(normal(&mut rng));
    }
    let a = DenseMatrix::from_vec(spec.m, spec.q, data)?;

    let k = (spec.sparsity * spec.q as f64).ceil() as usize;
    let mut truth = vec![0.0; spec.q];
    let mut coords: Vec<usize> = (0..spec.q).collect();
    coords.shuffle(&mut rng);
    for &j in coords.iter().take(k) {
        truth[j] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    }

    let clean = a.matvec(&truth);
    match spec.kind {
        SyntheticKind::Lasso => {
            let b: Vec<f64> = clean
                .iter()
                .map(|&c| c + spec.noise * normal(&mut rng))
                .collect();
            Ok((SyntheticProblem::Lasso { a, b }, truth))
        }
        SyntheticKind::Logistic => {
            let labels: Vec<f64> = clean
                .iter()
                .map(|&c| {
                    let noisy = c + spec.noise * normal(&mut rng);
                    if noisy >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let data = Dataset::new(RowMatrix::Dense(a), labels)?;
            Ok((SyntheticProblem::Logistic { data }, truth))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_inf;

    fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|j| {
                let mut lo = x.to_vec();
                let mut hi = x.to_vec();
                lo[j] -= h;
                hi[j] += h;
                (f(&hi) - f(&lo)) / (2.0 * h)
            })
            .collect()
    }

    fn small_dataset() -> Dataset {
        let a = DenseMatrix::from_vec(
            4,
            3,
            vec![0.5, -1.0, 2.0, 1.5, 0.3, -0.7, -2.0, 1.0, 0.4, 0.9, -0.2, 1.1],
        )
        .unwrap();
        Dataset::new(RowMatrix::Dense(a), vec![1.0, -1.0, 1.0, -1.0]).unwrap()
    }

    #[test]
    fn logistic_value_at_zero_is_log_two() {
        let data = small_dataset();
        let all: Vec<usize> = (0..4).collect();
        let (v, _) = logistic_value_grad(&[0.0; 3], &data, &all).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let data = small_dataset();
        let all: Vec<usize> = (0..4).collect();
        let x = [0.3, -0.8, 0.5];
        let (_, g) = logistic_value_grad(&x, &data, &all).unwrap();
        let fd = central_diff(
            &|x: &[f64]| logistic_value_grad(x, &data, &all).unwrap().0,
            &x,
            1e-6,
        );
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn logistic_saturates_without_overflow() {
        // a single sample with an enormous positive margin: value ~ 0, grad ~ 0
        let a = DenseMatrix::from_vec(1, 1, vec![1.0]).unwrap();
        let data = Dataset::new(RowMatrix::Dense(a), vec![1.0]).unwrap();
        let (v, g) = logistic_value_grad(&[1e4], &data, &[0]).unwrap();
        assert!(v.is_finite() && v < 1e-300);
        assert!(g[0].is_finite() && g[0].abs() < 1e-300);
        // and the opposite direction stays finite too
        let (v, g) = logistic_value_grad(&[-1e4], &data, &[0]).unwrap();
        assert!(v.is_finite() && g[0].is_finite());
    }

    #[test]
    fn logistic_rejects_bad_index() {
        let data = small_dataset();
        assert!(logistic_value_grad(&[0.0; 3], &data, &[7]).is_err());
    }

    #[test]
    fn quadratic_cases() {
        let a = DenseMatrix::identity(3);
        // A x = b gives (0, 0)
        let (v, g) = quadratic_value_grad(&[1.0, 2.0, 3.0], &a, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, vec![0.0; 3]);
        // A = I, b = 0: value = |x|^2 / 2, gradient = x
        let x = [2.0, -1.0, 0.5];
        let (v, g) = quadratic_value_grad(&x, &a, &[0.0; 3]).unwrap();
        assert!((v - 0.5 * (4.0 + 1.0 + 0.25)).abs() < 1e-15);
        assert_eq!(g, x.to_vec());
    }

    #[test]
    fn quadratic_gradient_matches_finite_differences() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, -1.0, 0.5, 0.0, 3.0]).unwrap();
        let b = [1.0, -2.0];
        let x = [0.7, -0.4, 0.2];
        let (_, g) = quadratic_value_grad(&x, &a, &b).unwrap();
        let fd = central_diff(
            &|x: &[f64]| quadratic_value_grad(x, &a, &b).unwrap().0,
            &x,
            1e-6,
        );
        for (u, w) in g.iter().zip(&fd) {
            assert!((u - w).abs() <= 1e-6 * (1.0 + w.abs()));
        }
    }

    #[test]
    fn lipschitz_identity_cases() {
        let id = RowMatrix::Dense(DenseMatrix::identity(5));
        let l = lipschitz_estimate(&id, LossKind::Quadratic, 5).unwrap();
        assert!((l - 1.0).abs() < 1e-9);
        let l = lipschitz_estimate(&id, LossKind::Logistic, 5).unwrap();
        assert!((l - 1.0 / 20.0).abs() < 1e-9);
    }

    #[test]
    fn partition_strategies() {
        let p = partition_dataset(10, 2, PartitionStrategy::Contiguous).unwrap();
        assert_eq!(p.blocks()[0], (0..5).collect::<Vec<_>>());
        assert_eq!(p.blocks()[1], (5..10).collect::<Vec<_>>());

        let p = partition_dataset(10, 3, PartitionStrategy::Strided).unwrap();
        assert_eq!(p.blocks()[0], vec![0, 3, 6, 9]);

        let a = partition_dataset(20, 3, PartitionStrategy::SeededRandom(9)).unwrap();
        let b = partition_dataset(20, 3, PartitionStrategy::SeededRandom(9)).unwrap();
        assert_eq!(a, b);
        let sizes: Vec<usize> = a.blocks().iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);

        assert!(partition_dataset(3, 4, PartitionStrategy::Contiguous).is_err());
        assert!(partition_dataset(3, 0, PartitionStrategy::Contiguous).is_err());
    }

    #[test]
    fn synthetic_is_seed_deterministic() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::Lasso,
            seed: 11,
            m: 8,
            q: 5,
            sparsity: 0.4,
            noise: 0.1,
        };
        let (a1, t1) = generate_synthetic(&spec).unwrap();
        let (a2, t2) = generate_synthetic(&spec).unwrap();
        assert_eq!(t1, t2);
        match (a1, a2) {
            (SyntheticProblem::Lasso { a, b }, SyntheticProblem::Lasso { a: a2, b: b2 }) => {
                assert_eq!(a, a2);
                assert_eq!(b, b2);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn synthetic_zero_sparsity_means_zero_truth() {
        let spec = SyntheticSpec {
            kind: SyntheticKind::Lasso,
            seed: 3,
            m: 6,
            q: 4,
            sparsity: 0.0,
            noise: 0.5,
        };
        let (prob, truth) = generate_synthetic(&spec).unwrap();
        assert_eq!(truth, vec![0.0; 4]);
        match prob {
            SyntheticProblem::Lasso { b, .. } => {
                // b is pure noise, so typically nonzero
                assert!(norm_inf(&b) > 0.0);
            }
            _ => unreachable!(),
        }
    }
}
