//! Dense row-major matrices and a small CSR type for sparse propagation.
//!
//! All products go through `matrixmultiply::dgemm`, which is deterministic for
//! a fixed shape, so repeated runs give bit-identical results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Normal,
    Transposed,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::shape(
                "DenseMatrix::from_vec",
                format!("{} values", rows * cols),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::shape("DenseMatrix::from_rows", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn gemm(a: &Self, la: Layout, b: &Self, lb: Layout, alpha: f64, beta: f64, out: &mut Self) {
        let (m, k) = match la {
            Layout::Normal => (a.rows, a.cols),
            Layout::Transposed => (a.cols, a.rows),
        };
        let (kb, n) = match lb {
            Layout::Normal => (b.rows, b.cols),
            Layout::Transposed => (b.cols, b.rows),
        };
        assert_eq!(k, kb, "inner dimensions differ");
        assert_eq!(out.shape(), (m, n), "output shape differs");
        if m == 0 || n == 0 {
            return;
        }
        if k == 0 {
            out.scale_in_place(beta);
            return;
        }
        let (rsa, csa) = match la {
            Layout::Normal => (a.cols as isize, 1),
            Layout::Transposed => (1, a.cols as isize),
        };
        let (rsb, csb) = match lb {
            Layout::Normal => (b.cols as isize, 1),
            Layout::Transposed => (1, b.cols as isize),
        };
        // SAFETY: strides and dimensions describe exactly the backing buffers checked above.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                alpha,
                a.data.as_ptr(),
                rsa,
                csa,
                b.data.as_ptr(),
                rsb,
                csb,
                beta,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }

    /// `self · other`. Panics when the inner dimensions differ.
    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        Self::gemm(self, Layout::Normal, other, Layout::Normal, 1.0, 0.0, &mut out);
        out
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.cols, other.cols);
        Self::gemm(self, Layout::Transposed, other, Layout::Normal, 1.0, 0.0, &mut out);
        out
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.rows);
        Self::gemm(self, Layout::Normal, other, Layout::Transposed, 1.0, 0.0, &mut out);
        out
    }

    pub fn try_matmul(&self, other: &Self, op: &'static str) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape(
                op,
                format!("left cols == right rows ({})", self.cols),
                format!("{}x{} · {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        Ok(self.matmul(other))
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.same_shape(other), "zip_map shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn scale_in_place(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert!(self.same_shape(other), "axpy shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    /// Adds `bias` (length `cols`) to every row.
    pub fn add_row_vector(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.cols);
        for i in 0..self.rows {
            for (v, b) in self.row_mut(i).iter_mut().zip(bias) {
                *v += b;
            }
        }
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&self) -> Self {
        let mut out = self.clone();
        for i in 0..out.rows {
            let row = out.row_mut(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        out
    }

    /// Index of the largest entry per row; ties resolve to the lowest column.
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows).map(|i| argmax(self.row(i))).collect()
    }

    /// Concatenates matrices with the same row count side by side.
    pub fn hcat(parts: &[&DenseMatrix]) -> Result<Self> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if let Some(bad) = parts.iter().find(|p| p.rows != rows) {
            return Err(Error::shape("DenseMatrix::hcat", rows, bad.rows));
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Inverse of [`DenseMatrix::hcat`]: splits columns into blocks of the given widths.
    pub fn hsplit(&self, widths: &[usize]) -> Vec<Self> {
        assert_eq!(widths.iter().sum::<usize>(), self.cols);
        let mut out: Vec<Self> = widths.iter().map(|&w| Self::zeros(self.rows, w)).collect();
        for i in 0..self.rows {
            let mut offset = 0;
            for (block, &w) in out.iter_mut().zip(widths) {
                block.row_mut(i).copy_from_slice(&self.row(i)[offset..offset + w]);
                offset += w;
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

/// Compressed sparse row matrix with `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Columns within a row must be sorted and unique.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in &rows {
            for &(j, v) in row {
                debug_assert!(j < cols);
                indices.push(j);
                values.push(v);
            }
            offsets.push(indices.len());
        }
        Self {
            rows: rows.len(),
            cols,
            offsets,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                out.set(i, j, v);
            }
        }
        out
    }
}

/// A linear operator applied on the left of a feature matrix.
pub trait Propagator: Send + Sync {
    fn dim(&self) -> usize;
    /// `self · x`
    fn propagate(&self, x: &DenseMatrix) -> DenseMatrix;
    /// `selfᵀ · x`
    fn propagate_transposed(&self, x: &DenseMatrix) -> DenseMatrix;
}

impl Propagator for CsrMatrix {
    fn dim(&self) -> usize {
        self.rows
    }

    fn propagate(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, x.rows());
        let mut out = DenseMatrix::zeros(self.rows, x.cols());
        for i in 0..self.rows {
            let (head, _) = out.data.split_at_mut((i + 1) * x.cols());
            let dst = &mut head[i * x.cols()..];
            for (j, v) in self.row(i) {
                for (d, s) in dst.iter_mut().zip(x.row(j)) {
                    *d += v * s;
                }
            }
        }
        out
    }

    fn propagate_transposed(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, x.rows());
        let mut out = DenseMatrix::zeros(self.cols, x.cols());
        for i in 0..self.rows {
            let src = x.row(i);
            for (j, v) in self.row(i) {
                for (d, s) in out.row_mut(j).iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        out
    }
}

impl Propagator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows
    }

    fn propagate(&self, x: &DenseMatrix) -> DenseMatrix {
        self.matmul(x)
    }

    fn propagate_transposed(&self, x: &DenseMatrix) -> DenseMatrix {
        self.t_matmul(x)
    }
}
