//! Dense/sparse matrix storage and the handful of vector kernels the
//! solvers are built from. Everything is `f64` and row-major.

use crate::error::{PdfpError, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `a - b`, elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

/// `y += s * x`.
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(PdfpError::shape("DenseMatrix::from_vec", rows * cols, data.len()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^T y`.
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "matvec_t dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut out, *yi, self.row(i));
        }
        out
    }

    /// `A^T A` as a dense matrix (used only by small test oracles).
    pub fn gram(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                for b in 0..self.cols {
                    g.data[a * self.cols + b] += r[a] * r[b];
                }
            }
        }
        g
    }
}

/// One sparse row in coordinate form, indices strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&j, &v)| v * x[j])
            .sum()
    }

    /// `out += s * row`.
    pub fn axpy_into(&self, out: &mut [f64], s: f64) {
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j] += s * v;
        }
    }
}

/// Feature storage used by datasets: generated data is dense, loaded data
/// keeps the sparse rows of the input file.
#[derive(Debug, Clone, PartialEq)]
pub enum RowMatrix {
    Dense(DenseMatrix),
    Sparse { rows: Vec<SparseRow>, cols: usize },
}

impl RowMatrix {
    pub fn rows(&self) -> usize {
        match self {
            RowMatrix::Dense(m) => m.rows(),
            RowMatrix::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            RowMatrix::Dense(m) => m.cols(),
            RowMatrix::Sparse { cols, .. } => *cols,
        }
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            RowMatrix::Dense(m) => dot(m.row(i), x),
            RowMatrix::Sparse { rows, .. } => rows[i].dot(x),
        }
    }

    /// `out += s * row_i`.
    pub fn row_axpy(&self, i: usize, out: &mut [f64], s: f64) {
        match self {
            RowMatrix::Dense(m) => axpy(out, s, m.row(i)),
            RowMatrix::Sparse { rows, .. } => rows[i].axpy_into(out, s),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows()).map(|i| self.row_dot(i, x)).collect()
    }

    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        for (i, yi) in y.iter().enumerate() {
            self.row_axpy(i, &mut out, *yi);
        }
        out
    }

    /// Densify row `i` (sparse rows fill unset entries with zero).
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        match self {
            RowMatrix::Dense(m) => m.row(i).to_vec(),
            RowMatrix::Sparse { rows, cols } => {
                let mut out = vec![0.0; *cols];
                rows[i].axpy_into(&mut out, 1.0);
                out
            }
        }
    }
}
