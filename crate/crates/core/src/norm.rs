//! The weighted product norm `|u|_lambda = sqrt(|x|^2 + lambda |v|^2)` on
//! dual-primal pairs. The splitting fixed-point operator is nonexpansive in
//! this norm (not in the plain Euclidean one), so stopping rules and
//! residual monotonicity checks measure in it.

use crate::error::{PdfpError, Result};
use crate::linalg;

/// A point of the product space `Y x X`: dual block `v`, primal block `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub v: Vec<f64>,
    pub x: Vec<f64>,
}

impl ProductPoint {
    pub fn new(v: Vec<f64>, x: Vec<f64>) -> Self {
        ProductPoint { v, x }
    }
}

/// `sqrt(|x|^2 + lambda |v|^2)`; requires `lambda > 0`.
pub fn lambda_norm(u: &ProductPoint, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(PdfpError::parameter(
            "lambda",
            format!("the product norm needs lambda > 0, got {lambda}"),
        ));
    }
    let x2 = linalg::dot(&u.x, &u.x);
    let v2 = linalg::dot(&u.v, &u.v);
    Ok((x2 + lambda * v2).sqrt())
}

/// Norm choice for residuals on flat state vectors laid out `[dual; primal]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualNorm {
    Euclidean,
    /// Product norm with weight `lambda` on the first `dual_dim` coordinates.
    Lambda { lambda: f64, dual_dim: usize },
}

impl ResidualNorm {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match *self {
            ResidualNorm::Euclidean => linalg::norm2(u),
            ResidualNorm::Lambda { lambda, dual_dim } => {
                let dual = &u[..dual_dim];
                let primal = &u[dual_dim..];
                (linalg::dot(primal, primal) + lambda * linalg::dot(dual, dual)).sqrt()
            }
        }
    }

    pub fn eval_diff(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match *self {
            ResidualNorm::Euclidean => linalg::dist2(a, b),
            ResidualNorm::Lambda { lambda, dual_dim } => {
                let mut dual = 0.0;
                let mut primal = 0.0;
                for (i, (x, y)) in a.iter().zip(b).enumerate() {
                    let d = x - y;
                    if i < dual_dim {
                        dual += d * d;
                    } else {
                        primal += d * d;
                    }
                }
                (primal + lambda * dual).sqrt()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_to_euclidean_with_zero_dual() {
        let u = ProductPoint::new(vec![0.0], vec![3.0, 4.0]);
        assert!((lambda_norm(&u, 0.5).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn weights_dual_block() {
        // sqrt(0.25 * 4) = 1
        let u = ProductPoint::new(vec![2.0], vec![0.0]);
        assert!((lambda_norm(&u, 0.25).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_point_has_zero_norm() {
        let u = ProductPoint::new(vec![0.0; 3], vec![0.0; 2]);
        assert_eq!(lambda_norm(&u, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let u = ProductPoint::new(vec![1.0], vec![1.0]);
        assert!(lambda_norm(&u, 0.0).is_err());
        assert!(lambda_norm(&u, -1.0).is_err());
    }

    #[test]
    fn flat_norm_matches_product_point() {
        let u = ProductPoint::new(vec![2.0, -1.0], vec![1.0, 1.0, 1.0]);
        let flat = [2.0, -1.0, 1.0, 1.0, 1.0];
        let norm = ResidualNorm::Lambda { lambda: 0.3, dual_dim: 2 };
        assert!((norm.eval(&flat) - lambda_norm(&u, 0.3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn triangle_inequality_and_homogeneity_sampled() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let lambda = rng.gen_range(0.01..2.0);
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                ProductPoint::new(
                    (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect(),
                    (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect(),
                )
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let sum = ProductPoint::new(
                a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect(),
                a.x.iter().zip(&b.x).map(|(x, y)| x + y).collect(),
            );
            let na = lambda_norm(&a, lambda).unwrap();
            let nb = lambda_norm(&b, lambda).unwrap();
            let ns = lambda_norm(&sum, lambda).unwrap();
            assert!(ns <= na + nb + 1e-12);

            let t: f64 = rng.gen_range(-3.0..3.0);
            let scaled = ProductPoint::new(
                a.v.iter().map(|x| t * x).collect(),
                a.x.iter().map(|x| t * x).collect(),
            );
            let nscaled = lambda_norm(&scaled, lambda).unwrap();
            assert!((nscaled - t.abs() * na).abs() <= 1e-12 * (1.0 + na));
        }
    }
}
