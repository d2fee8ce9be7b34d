//! Smooth (differentiable) objective terms with Lipschitz-continuous
//! gradients. The Lipschitz constant `L` bounds the step size: solvers
//! require `gamma < 2 / L`.

use std::sync::Arc;

use crate::error::{PdfpError, Result};

pub trait SmoothFn: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64>;

    /// Lipschitz constant of the gradient (`1 / beta` in step-size bounds).
    fn lipschitz(&self) -> f64;
}

impl<T: SmoothFn + ?Sized> SmoothFn for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        (**self).grad(x)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
}

/// The zero smooth term. The Lipschitz constant is a free choice here (any
/// positive value is valid for the constant-zero gradient); it defaults to 1
/// so `gamma < 2` stays a meaningful guard in degenerate test problems.
#[derive(Debug, Clone)]
pub struct ZeroSmooth {
    dim: usize,
    lipschitz: f64,
}

impl ZeroSmooth {
    pub fn new(dim: usize) -> Self {
        ZeroSmooth { dim, lipschitz: 1.0 }
    }

    pub fn with_lipschitz(dim: usize, lipschitz: f64) -> Result<Self> {
        if lipschitz.is_nan() || lipschitz <= 0.0 {
            return Err(PdfpError::parameter(
                "lipschitz",
                format!("must be positive, got {lipschitz}"),
            ));
        }
        Ok(ZeroSmooth { dim, lipschitz })
    }
}

impl SmoothFn for ZeroSmooth {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn grad(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim]
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Block-separable sum `F(x) = sum_n f_n(x_n)` on equal-length blocks.
///
/// The Hessian is block diagonal, so the Lipschitz constant of the full
/// gradient is the maximum over the parts.
#[derive(Clone)]
pub struct BlockSmooth {
    parts: Vec<Arc<dyn SmoothFn>>,
    block_len: usize,
}

impl BlockSmooth {
    pub fn new(parts: Vec<Arc<dyn SmoothFn>>) -> Result<Self> {
        let block_len = match parts.first() {
            Some(p) => p.dim(),
            None => return Err(PdfpError::parameter("parts", "need at least one block")),
        };
        if let Some(bad) = parts.iter().find(|p| p.dim() != block_len) {
            return Err(PdfpError::shape("BlockSmooth::new", block_len, bad.dim()));
        }
        Ok(BlockSmooth { parts, block_len })
    }
}

impl SmoothFn for BlockSmooth {
    fn dim(&self) -> usize {
        self.parts.len() * self.block_len
    }

    fn value(&self, x: &[f64]) -> f64 {
        let q = self.block_len;
        self.parts
            .iter()
            .enumerate()
            .map(|(n, p)| p.value(&x[n * q..(n + 1) * q]))
            .sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let q = self.block_len;
        let mut out = Vec::with_capacity(x.len());
        for (n, p) in self.parts.iter().enumerate() {
            out.extend(p.grad(&x[n * q..(n + 1) * q]));
        }
        out
    }

    fn lipschitz(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.lipschitz())
            .fold(0.0, f64::max)
    }
}
