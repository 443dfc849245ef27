//! Dense row-major `f64` matrices.
//!
//! Public operations never let a NaN or infinity escape: constructors reject
//! non-finite data and the arithmetic helpers check their results.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{})", self.rows, self.cols)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

fn check_finite(data: &[f64], what: &str) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::NonFinite(format!("{what}: entry {i} is {}", data[i]))),
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {rows}x{cols} = {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite(&data, "Matrix::from_vec")?;
        Ok(Matrix { rows, cols, data })
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    /// Wraps data produced by internal kernels. Only debug builds re-check
    /// finiteness; callers are responsible for producing finite values.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = vec![0.0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        Matrix::from_raw(self.cols, self.rows, out)
    }

    pub fn scale(&self, s: f64) -> Result<Matrix> {
        let data: Vec<f64> = self.data.iter().map(|v| v * s).collect();
        check_finite(&data, "scale")?;
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    /// Subtract each column's mean from that column.
    pub fn center_columns(&self) -> Matrix {
        let mut out = self.data.clone();
        if self.rows == 0 {
            return self.clone();
        }
        for c in 0..self.cols {
            let mean = (0..self.rows).map(|r| self.data[r * self.cols + c]).sum::<f64>()
                / self.rows as f64;
            for r in 0..self.rows {
                out[r * self.cols + c] -= mean;
            }
        }
        Matrix::from_raw(self.rows, self.cols, out)
    }
}

/// `out[m x n] = a[m x k] * b[k x n]`, accumulating in row order.
pub(crate) fn gemm(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    out.fill(0.0);
    gemm_acc(a, b, out, m, k, n);
}

/// `out += a * b`.
pub(crate) fn gemm_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out += aᵀ * b` where `a` is `k x m` and `b` is `k x n`.
pub(crate) fn gemm_tn_acc(a: &[f64], b: &[f64], out: &mut [f64], k: usize, m: usize, n: usize) {
    for p in 0..k {
        let arow = &a[p * m..(p + 1) * m];
        let brow = &b[p * n..(p + 1) * n];
        for (i, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out += a * bᵀ` where `a` is `m x k` and `b` is `n x k`.
pub(crate) fn gemm_nt_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            out[i * n + j] += dot(arow, brow);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = vec![0.0; a.rows * b.cols];
    gemm(&a.data, &b.data, &mut out, a.rows, a.cols, b.cols);
    check_finite(&out, "matmul")?;
    Ok(Matrix::from_raw(a.rows, b.cols, out))
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    // Scale by the largest magnitude so squares cannot overflow.
    let max = a.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let sum: f64 = a.data.iter().map(|v| (v / max) * (v / max)).sum();
    max * sum.sqrt()
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub fn row_softmax(a: &Matrix) -> Matrix {
    let mut out = a.data.clone();
    if a.cols > 0 {
        for row in out.chunks_mut(a.cols) {
            softmax_in_place(row);
        }
    }
    Matrix::from_raw(a.rows, a.cols, out)
}

pub fn layer_norm_rows(a: &Matrix, gain: &[f64], bias: &[f64], eps: f64) -> Result<Matrix> {
    if gain.len() != a.cols || bias.len() != a.cols {
        return Err(Error::Shape(format!(
            "layer_norm_rows: {} columns, gain {}, bias {}",
            a.cols,
            gain.len(),
            bias.len()
        )));
    }
    let mut out = vec![0.0; a.data.len()];
    for r in 0..a.rows {
        let row = a.row(r);
        let n = a.cols as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + eps).sqrt();
        for c in 0..a.cols {
            out[r * a.cols + c] = (row[c] - mean) * inv * gain[c] + bias[c];
        }
    }
    check_finite(&out, "layer_norm_rows")?;
    Ok(Matrix::from_raw(a.rows, a.cols, out))
}
