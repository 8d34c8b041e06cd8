//! Dense row-major matrix and the handful of BLAS-1/BLAS-2 kernels the
//! solvers need.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, invalid, Result};
use crate::random;

/// Dense real matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
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

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `out = X x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = Xᵀ z`
    pub fn tr_mul_vec_into(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for (i, &zi) in z.iter().enumerate() {
            if zi != 0.0 {
                axpy(zi, self.row(i), out);
            }
        }
    }

    pub fn tr_mul_vec(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.tr_mul_vec_into(z, &mut out);
        out
    }

    /// `out = X[:, cols] x` where `x` is indexed like `cols`.
    pub fn mul_cols_into(&self, cols: &[usize], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(cols.len(), x.len());
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            *o = cols.iter().zip(x).map(|(&j, &v)| row[j] * v).sum();
        }
    }

    /// `out = X[:, cols]ᵀ z`
    pub fn tr_mul_cols_into(&self, cols: &[usize], z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(cols.len(), out.len());
        out.fill(0.0);
        for (i, &zi) in z.iter().enumerate() {
            if zi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (o, &j) in out.iter_mut().zip(cols) {
                *o += zi * row[j];
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// `‖XᵀX‖_F`, computed through whichever Gram matrix is smaller
    /// (`‖XᵀX‖_F = ‖XXᵀ‖_F`).
    pub fn gram_frobenius_norm(&self) -> f64 {
        let gram = self.small_gram();
        norm2(gram.as_slice())
    }

    /// `XXᵀ` when `rows <= cols`, otherwise `XᵀX`.
    pub fn small_gram(&self) -> Matrix {
        if self.rows <= self.cols {
            let n = self.rows;
            let mut g = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = dot(self.row(i), self.row(j));
                    g.set(i, j, v);
                    g.set(j, i, v);
                }
            }
            g
        } else {
            let p = self.cols;
            let mut g = Matrix::zeros(p, p);
            for i in 0..self.rows {
                let r = self.row(i);
                for a in 0..p {
                    let ra = r[a];
                    if ra == 0.0 {
                        continue;
                    }
                    let ga = &mut g.data[a * p..a * p + a + 1];
                    axpy(ra, &r[..=a], ga);
                }
            }
            for a in 0..p {
                for b in 0..a {
                    let v = g.get(a, b);
                    g.set(b, a, v);
                }
            }
            g
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_len("matmul inner dimension", self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), orow);
                }
            }
        }
        Ok(out)
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `y += a x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(norm_sq(x))
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Largest eigenvalue of `AᵀA` for `A = X[:, cols]` (all columns when
/// `cols` is `None`) by power iteration from a fixed pseudo-random start.
pub fn spectral_norm_sq(x: &Matrix, cols: Option<&[usize]>, iters: usize) -> Result<f64> {
    if iters == 0 {
        return Err(invalid("iters", "power iteration needs at least one step"));
    }
    let width = cols.map_or(x.cols(), <[usize]>::len);
    if width == 0 {
        return Ok(0.0);
    }
    let mut rng = random::stream(0x5eed, random::ids::POWER);
    let mut v: Vec<f64> = (0..width).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut xv = vec![0.0; x.rows()];
    let mut w = vec![0.0; width];
    let mut estimate = 0.0;
    let nv = norm2(&v);
    v.iter_mut().for_each(|e| *e /= nv);
    for _ in 0..iters {
        match cols {
            Some(c) => {
                x.mul_cols_into(c, &v, &mut xv);
                x.tr_mul_cols_into(c, &xv, &mut w);
            }
            None => {
                x.mul_vec_into(&v, &mut xv);
                x.tr_mul_vec_into(&xv, &mut w);
            }
        }
        let nw = norm2(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        // Rayleigh quotient vᵀ(AᵀA)v with ‖v‖ = 1.
        estimate = dot(&v, &w);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Ok(estimate)
}
