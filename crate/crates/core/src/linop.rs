//! Linear maps with adjoints, and power iteration for the operator-norm
//! bound `lambda_max(D D^T)` that drives the dual step size.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PdfpError, Result};
use crate::linalg::{self, DenseMatrix, RowMatrix};

/// A linear transform `D: X -> Y` given by matching forward/adjoint applies.
/// `D D^T` is never materialized; solvers compose the two applies.
pub trait LinearMap: Send + Sync {
    fn in_dim(&self) -> usize;

    fn out_dim(&self) -> usize;

    fn forward(&self, x: &[f64]) -> Vec<f64>;

    fn adjoint(&self, y: &[f64]) -> Vec<f64>;

    /// `lambda_max(D D^T)` when it is known in closed form (identity maps,
    /// graph edge operators). `None` means callers must estimate it.
    fn gram_opnorm_exact(&self) -> Option<f64> {
        None
    }
}

impl<T: LinearMap + ?Sized> LinearMap for Arc<T> {
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (**self).forward(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        (**self).adjoint(y)
    }
    fn gram_opnorm_exact(&self) -> Option<f64> {
        (**self).gram_opnorm_exact()
    }
}

/// The identity on `R^n`.
#[derive(Debug, Clone)]
pub struct IdentityMap {
    dim: usize,
}

impl IdentityMap {
    pub fn new(dim: usize) -> Self {
        IdentityMap { dim }
    }
}

impl LinearMap for IdentityMap {
    fn in_dim(&self) -> usize {
        self.dim
    }
    fn out_dim(&self) -> usize {
        self.dim
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
    fn gram_opnorm_exact(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// A dense matrix acting as a linear map.
#[derive(Debug, Clone)]
pub struct MatrixMap {
    matrix: DenseMatrix,
}

impl MatrixMap {
    pub fn new(matrix: DenseMatrix) -> Self {
        MatrixMap { matrix }
    }
}

impl LinearMap for MatrixMap {
    fn in_dim(&self) -> usize {
        self.matrix.cols()
    }
    fn out_dim(&self) -> usize {
        self.matrix.rows()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.matrix.matvec_t(y)
    }
}

/// Row-storage matrix (dense or sparse) as a linear map; used to estimate
/// `lambda_max(A^T A)` for Lipschitz bounds.
pub struct RowMatrixMap<'a> {
    matrix: &'a RowMatrix,
}

impl<'a> RowMatrixMap<'a> {
    pub fn new(matrix: &'a RowMatrix) -> Self {
        RowMatrixMap { matrix }
    }
}

impl LinearMap for RowMatrixMap<'_> {
    fn in_dim(&self) -> usize {
        self.matrix.cols()
    }
    fn out_dim(&self) -> usize {
        self.matrix.rows()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.matrix.matvec_t(y)
    }
}

/// The stacked map `x -> (D x, x)`, whose Gram matrix is `D^T D + I`, so its
/// operator-norm bound is exactly `lambda_max(D D^T) + 1`. This is the
/// construction that turns a three-term objective into a two-term one and is
/// the reason the dual step bound gains the `+ 1`.
#[derive(Clone)]
pub struct StackedMap {
    inner: Arc<dyn LinearMap>,
}

impl StackedMap {
    pub fn new(inner: Arc<dyn LinearMap>) -> Self {
        StackedMap { inner }
    }
}

impl LinearMap for StackedMap {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.inner.out_dim() + self.inner.in_dim()
    }
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.inner.forward(x);
        out.extend_from_slice(x);
        out
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let split = self.inner.out_dim();
        let mut out = self.inner.adjoint(&y[..split]);
        for (o, yi) in out.iter_mut().zip(&y[split..]) {
            *o += yi;
        }
        out
    }
    fn gram_opnorm_exact(&self) -> Option<f64> {
        self.inner.gram_opnorm_exact().map(|s| s + 1.0)
    }
}

/// Estimate `lambda_max(D D^T)` by power iteration on the Gram operator,
/// iterating in whichever of the two spaces is smaller (the nonzero spectra
/// of `D^T D` and `D D^T` coincide).
///
/// Converges when the relative change of the Rayleigh quotient drops below
/// `tol`; deterministic for a fixed `seed`. Fails with the last estimate
/// attached if `max_iter` is exhausted, and rejects the zero operator.
pub fn power_iteration_opnorm(
    map: &dyn LinearMap,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(PdfpError::parameter("tol", format!("must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(PdfpError::parameter("max_iter", "must be positive"));
    }

    let use_input_space = map.in_dim() <= map.out_dim();
    let dim = if use_input_space { map.in_dim() } else { map.out_dim() };
    let gram = |z: &[f64]| -> Vec<f64> {
        if use_input_space {
            map.adjoint(&map.forward(z))
        } else {
            map.forward(&map.adjoint(z))
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = linalg::norm2(&z);
    for zi in z.iter_mut() {
        *zi /= norm;
    }

    let mut rayleigh = f64::NAN;
    for _ in 0..max_iter {
        let w = gram(&z);
        let next = linalg::dot(&z, &w);
        if next <= f64::EPSILON {
            return Err(PdfpError::parameter(
                "map",
                "operator is (numerically) zero on the probe vector",
            ));
        }
        if rayleigh.is_finite() && (next - rayleigh).abs() <= tol * next.abs() {
            return Ok(next);
        }
        rayleigh = next;
        let wnorm = linalg::norm2(&w);
        z = w.into_iter().map(|v| v / wnorm).collect();
    }
    Err(PdfpError::PowerIteration {
        max_iter,
        last_estimate: rayleigh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_opnorm_is_one() {
        let id = IdentityMap::new(8);
        let est = power_iteration_opnorm(&id, 1e-12, 100, 7).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
        assert_eq!(id.gram_opnorm_exact(), Some(1.0));
    }

    #[test]
    fn stacked_identity_opnorm_is_two() {
        let stacked = StackedMap::new(Arc::new(IdentityMap::new(5)));
        let est = power_iteration_opnorm(&stacked, 1e-12, 100, 3).unwrap();
        assert!((est - 2.0).abs() < 1e-12);
        assert_eq!(stacked.gram_opnorm_exact(), Some(2.0));
    }

    #[test]
    fn diagonal_matrix_opnorm() {
        let mut m = DenseMatrix::zeros(4, 4);
        for (i, d) in [0.5, -3.0, 2.0, 1.0].iter().enumerate() {
            m.set(i, i, *d);
        }
        let est = power_iteration_opnorm(&MatrixMap::new(m), 1e-12, 10_000, 11).unwrap();
        assert!((est - 9.0).abs() / 9.0 < 1e-6, "est = {est}");
    }

    #[test]
    fn adjoint_consistency_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let data: Vec<f64> = (0..6 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let map = MatrixMap::new(DenseMatrix::from_vec(6, 4, data).unwrap());
        for _ in 0..1000 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = linalg::dot(&map.forward(&x), &y);
            let rhs = linalg::dot(&x, &map.adjoint(&y));
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn nonconvergence_carries_last_estimate() {
        // Two nearly equal top eigenvalues make the Rayleigh quotient move
        // forever at tol this tight with so few iterations allowed.
        let mut m = DenseMatrix::zeros(2, 2);
        m.set(0, 0, 1.0);
        m.set(1, 1, 0.999999);
        let err = power_iteration_opnorm(&MatrixMap::new(m), 1e-16, 2, 1).unwrap_err();
        match err {
            PdfpError::PowerIteration { last_estimate, .. } => {
                assert!(last_estimate > 0.9);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zero_map_rejected() {
        let m = DenseMatrix::zeros(3, 3);
        assert!(power_iteration_opnorm(&MatrixMap::new(m), 1e-10, 50, 5).is_err());
    }
}
