//! Proximity-operator catalog.
//!
//! Every entry maps `(point, scale)` to `prox_{scale * f}(point)` and also
//! exposes the underlying convex function value (extended-real, so indicator
//! functions return `+inf` off their set). Proximity operators and their
//! residuals `I - prox` are firmly nonexpansive, which is what the whole
//! fixed-point machinery leans on; the test suite samples that property for
//! every catalog entry.

use std::sync::Arc;

use crate::error::{PdfpError, Result};

/// Feasibility tolerance used when evaluating indicator functions at a point:
/// within this distance of the set the value is 0, otherwise `+inf`.
pub const INDICATOR_TOL: f64 = 1e-9;

/// A convex function accessed through its proximity operator.
///
/// `scale` is the multiplier `c` in `prox_{c f}`; it is always positive when
/// called from the solvers (`gamma / lambda`). Indicator functions ignore it,
/// since `prox_{c * indicator} = projection` for every `c > 0`.
pub trait ProxFn: Send + Sync {
    fn prox(&self, x: &[f64], scale: f64) -> Vec<f64>;

    /// Function value, used only for objective logging.
    fn value(&self, x: &[f64]) -> f64;

    /// True for the zero function, whose prox is the identity. Solvers use
    /// this to pick the cheaper update path.
    fn is_zero(&self) -> bool {
        false
    }
}

impl<T: ProxFn + ?Sized> ProxFn for Arc<T> {
    fn prox(&self, x: &[f64], scale: f64) -> Vec<f64> {
        (**self).prox(x, scale)
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn is_zero(&self) -> bool {
        (**self).is_zero()
    }
}

/// Componentwise soft threshold `sign(x_i) * max(|x_i| - tau, 0)`, the closed
/// form of `prox_{tau |.|_1}`.
pub fn soft_threshold(x: &[f64], tau: f64) -> Result<Vec<f64>> {
    if tau.is_nan() || tau < 0.0 {
        return Err(PdfpError::parameter(
            "tau",
            format!("soft threshold requires tau >= 0, got {tau}"),
        ));
    }
    Ok(soft_threshold_unchecked(x, tau))
}

pub(crate) fn soft_threshold_unchecked(x: &[f64], tau: f64) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            if v > tau {
                v - tau
            } else if v < -tau {
                v + tau
            } else {
                0.0
            }
        })
        .collect()
}

/// Projection of an `N`-block vector onto the consensus set (all blocks
/// equal): every block is replaced by the blockwise mean.
pub fn project_consensus(x: &[f64], blocks: usize) -> Result<Vec<f64>> {
    if blocks == 0 {
        return Err(PdfpError::parameter("blocks", "need at least one block"));
    }
    if !x.len().is_multiple_of(blocks) {
        return Err(PdfpError::shape(
            "project_consensus",
            blocks,
            x.len(),
        ));
    }
    let q = x.len() / blocks;
    let mut mean = vec![0.0; q];
    for b in 0..blocks {
        for i in 0..q {
            mean[i] += x[b * q + i];
        }
    }
    for m in mean.iter_mut() {
        *m /= blocks as f64;
    }
    let mut out = Vec::with_capacity(x.len());
    for _ in 0..blocks {
        out.extend_from_slice(&mean);
    }
    Ok(out)
}

/// Projection of a slot pair onto the pairwise consensus set `{(x, x)}`:
/// both slots become the average `(a + b) / 2`.
pub fn project_pair_consensus(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(PdfpError::shape("project_pair_consensus", a.len(), b.len()));
    }
    let avg: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect();
    Ok((avg.clone(), avg))
}

/// Weighted l1 norm `weight * |x|_1`; prox is the soft threshold.
#[derive(Debug, Clone)]
pub struct L1Norm {
    weight: f64,
}

impl L1Norm {
    pub fn new(weight: f64) -> Result<Self> {
        if weight.is_nan() || weight < 0.0 {
            return Err(PdfpError::parameter(
                "weight",
                format!("l1 weight must be nonnegative, got {weight}"),
            ));
        }
        Ok(L1Norm { weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl ProxFn for L1Norm {
    fn prox(&self, x: &[f64], scale: f64) -> Vec<f64> {
        soft_threshold_unchecked(x, scale * self.weight)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// The zero function: value 0 everywhere, prox = identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFn;

impl ProxFn for ZeroFn {
    fn prox(&self, x: &[f64], _scale: f64) -> Vec<f64> {
        x.to_vec()
    }

    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Indicator of the global consensus set on `blocks` equal-length blocks.
/// The prox ignores the scale: it is the blockwise-mean projection.
#[derive(Debug, Clone)]
pub struct ConsensusIndicator {
    blocks: usize,
    block_len: usize,
}

impl ConsensusIndicator {
    pub fn new(blocks: usize, block_len: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(PdfpError::parameter("blocks", "need at least one block"));
        }
        Ok(ConsensusIndicator { blocks, block_len })
    }
}

impl ProxFn for ConsensusIndicator {
    fn prox(&self, x: &[f64], _scale: f64) -> Vec<f64> {
        project_consensus(x, self.blocks).expect("consensus block shape checked at construction")
    }

    fn value(&self, x: &[f64]) -> f64 {
        let q = self.block_len;
        for b in 1..self.blocks {
            for i in 0..q {
                if (x[b * q + i] - x[i]).abs() > INDICATOR_TOL {
                    return f64::INFINITY;
                }
            }
        }
        0.0
    }
}

/// Indicator of pairwise consensus on an edge-stacked vector laid out as
/// `pairs` consecutive `(slot_a, slot_b)` pairs of length `block_len` each.
/// The prox averages each pair; the scale is ignored.
#[derive(Debug, Clone)]
pub struct PairConsensusIndicator {
    pairs: usize,
    block_len: usize,
}

impl PairConsensusIndicator {
    pub fn new(pairs: usize, block_len: usize) -> Result<Self> {
        if pairs == 0 {
            return Err(PdfpError::parameter("pairs", "need at least one pair"));
        }
        Ok(PairConsensusIndicator { pairs, block_len })
    }
}

impl ProxFn for PairConsensusIndicator {
    fn prox(&self, x: &[f64], _scale: f64) -> Vec<f64> {
        let q = self.block_len;
        let mut out = vec![0.0; x.len()];
        for p in 0..self.pairs {
            let lo = 2 * p * q;
            for i in 0..q {
                let avg = (x[lo + i] + x[lo + q + i]) / 2.0;
                out[lo + i] = avg;
                out[lo + q + i] = avg;
            }
        }
        out
    }

    fn value(&self, x: &[f64]) -> f64 {
        let q = self.block_len;
        for p in 0..self.pairs {
            let lo = 2 * p * q;
            for i in 0..q {
                if (x[lo + i] - x[lo + q + i]).abs() > INDICATOR_TOL {
                    return f64::INFINITY;
                }
            }
        }
        0.0
    }
}

/// Separable sum of per-block prox functions on equal-length blocks,
/// `F(x) = sum_n f_n(x_n)`; the prox applies each part to its block.
#[derive(Clone)]
pub struct BlockProx {
    parts: Vec<Arc<dyn ProxFn>>,
    block_len: usize,
}

impl BlockProx {
    pub fn new(parts: Vec<Arc<dyn ProxFn>>, block_len: usize) -> Result<Self> {
        if parts.is_empty() {
            return Err(PdfpError::parameter("parts", "need at least one block"));
        }
        Ok(BlockProx { parts, block_len })
    }
}

impl ProxFn for BlockProx {
    fn prox(&self, x: &[f64], scale: f64) -> Vec<f64> {
        let q = self.block_len;
        let mut out = Vec::with_capacity(x.len());
        for (n, part) in self.parts.iter().enumerate() {
            out.extend(part.prox(&x[n * q..(n + 1) * q], scale));
        }
        out
    }

    fn value(&self, x: &[f64]) -> f64 {
        let q = self.block_len;
        self.parts
            .iter()
            .enumerate()
            .map(|(n, part)| part.value(&x[n * q..(n + 1) * q]))
            .sum()
    }

    fn is_zero(&self) -> bool {
        self.parts.iter().all(|p| p.is_zero())
    }
}
