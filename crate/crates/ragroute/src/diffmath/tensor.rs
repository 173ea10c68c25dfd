//! Dense row-major 2-D tensor over f64.

use crate::error::{Error, Result};

/// Row-major dense matrix. Vectors are `n x 1`, scalars `1 x 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {}x{}={} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("tensor entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Column vector `n x 1`.
    pub fn vector(data: Vec<f64>) -> Self {
        let rows = data.len();
        Self {
            rows,
            cols: 1,
            data,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Scalar payload of a `1 x 1` tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.len(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    pub fn same_shape(&self, other: &Tensor2) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `y = self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.cols, x.len());
        let mut y = vec![0.0; self.rows];
        for (r, out) in y.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            *out = acc;
        }
        y
    }

    /// `y = self^T * v`; used by matvec backward.
    pub fn matvec_transpose(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.rows, v.len());
        let mut y = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            let row = self.row(r);
            for (c, &w) in row.iter().enumerate() {
                y[c] += w * vr;
            }
        }
        y
    }

    /// `self += u * v^T`.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(self.rows, u.len());
        debug_assert_eq!(self.cols, v.len());
        for (r, &ur) in u.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (c, &vc) in v.iter().enumerate() {
                row[c] += ur * vc;
            }
        }
    }

    /// `self += other`, shapes must agree.
    pub fn add_assign(&mut self, other: &Tensor2) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
