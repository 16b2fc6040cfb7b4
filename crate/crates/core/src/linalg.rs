//! Dense LU factorisation with partial pivoting.
//!
//! The systems solved here are `(I - γP) x = b` over at most a few
//! thousand states, so a dense row-major factorisation is enough.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn mul_vec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(&self.data[i * self.n..(i + 1) * self.n]) {
                *o += a * xi;
            }
        }
        out
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }
}

/// `PA = LU` with unit-diagonal `L` stored below the diagonal.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    original: Matrix,
}

/// Pivots smaller than this count as singular.
const PIVOT_EPS: f64 = 1e-300;

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = math::abs(lu[k * n + k]);
            for r in k + 1..n {
                let v = math::abs(lu[r * n + k]);
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > PIVOT_EPS) {
                return Err(Error::Singular);
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                lu[r * n + k] = f;
                for c in k + 1..n {
                    lu[r * n + c] -= f * lu[k * n + c];
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            original: a.clone(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn solve_raw(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    fn solve_transpose_raw(&self, b: &[f64]) -> Vec<f64> {
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ w = y, then x = Pᵀ w.
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * y[j];
            }
            y[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Solve `Ax = b` with one step of iterative refinement, returning the
    /// solution and its max-norm residual.
    pub fn solve(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let mut x = self.solve_raw(b);
        let r = residual(&self.original.mul_vec(&x), b);
        let dx = self.solve_raw(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let res = max_abs(&residual(&self.original.mul_vec(&x), b));
        (x, res)
    }

    /// Solve `Aᵀx = b`, as [`Lu::solve`].
    pub fn solve_transpose(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let mut x = self.solve_transpose_raw(b);
        let r = residual(&self.original.mul_vec_transpose(&x), b);
        let dx = self.solve_transpose_raw(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let res = max_abs(&residual(&self.original.mul_vec_transpose(&x), b));
        (x, res)
    }
}

fn residual(ax: &[f64], b: &[f64]) -> Vec<f64> {
    b.iter().zip(ax).map(|(b, a)| b - a).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, math::abs(*x)))
}

/// Solve `Ax = b`, failing if the residual exceeds `tolerance`.
pub fn solve(a: &Matrix, b: &[f64], tolerance: f64) -> Result<Vec<f64>> {
    let (x, res) = Lu::factor(a)?.solve(b);
    if !(res <= tolerance) {
        return Err(Error::Residual(res));
    }
    Ok(x)
}
