//! Minimal dense square-matrix operations used by the grid diagnostics.
//!
//! Grids stay small (a few hundred cells), so plain row-major `Vec<f64>`
//! storage with O(n³) multiply/solve is all that is needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "rows must form a square matrix");
            a.extend_from_slice(r);
        }
        Mat { n, a }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            let lhs = self.row(i);
            let dst = out.row_mut(i);
            for (k, &lik) in lhs.iter().enumerate() {
                if lik == 0.0 {
                    continue;
                }
                let rhs = other.row(k);
                for j in 0..n {
                    dst[j] += lik * rhs[j];
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn vec_mat(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let n = self.n;
        let mut out = vec![0.0; n];
        for (k, &vk) in v.iter().enumerate() {
            if vk == 0.0 {
                continue;
            }
            let row = self.row(k);
            for j in 0..n {
                out[j] += vk * row[j];
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        self.a
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.a[i * n + j];
            }
        }
        out
    }
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Mat) -> Result<Self> {
        let n = a.n;
        let mut lu = a.a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            let mut best = math::abs(lu[perm[col] * n + col]);
            for (r, &pr) in perm.iter().enumerate().skip(col + 1) {
                let v = math::abs(lu[pr * n + col]);
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return Err(Error::NotConverged { what: "linear solve (singular matrix)", residual: 0.0 });
            }
            perm.swap(col, piv);
            let prow = perm[col];
            let diag = lu[prow * n + col];
            for &r in &perm[col + 1..] {
                let factor = lu[r * n + col] / diag;
                lu[r * n + col] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in col + 1..n {
                    lu[r * n + j] -= factor * lu[prow * n + j];
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // forward substitution on the permuted rows
        let mut y = vec![0.0; n];
        for col in 0..n {
            let prow = self.perm[col];
            let mut v = b[prow];
            for j in 0..col {
                v -= self.lu[prow * n + j] * y[j];
            }
            y[col] = v;
        }
        // back substitution
        let mut x = vec![0.0; n];
        for col in (0..n).rev() {
            let prow = self.perm[col];
            let mut v = y[col];
            for j in col + 1..n {
                v -= self.lu[prow * n + j] * x[j];
            }
            x[col] = v / self.lu[prow * n + col];
        }
        x
    }
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::new(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_identity() {
        let p = Mat::from_rows(&[vec![0.5, 0.5], vec![0.25, 0.75]]);
        let i = Mat::identity(2);
        assert_eq!(p.matmul(&i), p);
        let p2 = p.matmul(&p);
        assert!((p2.get(0, 0) - (0.5 * 0.5 + 0.5 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn solve_small_system() {
        let a = Mat::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let x_true = [1.0, -2.0, 3.0];
        let b = a.mat_vec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_reports_singular() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn vec_mat_matches_manual() {
        let p = Mat::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]);
        let v = p.vec_mat(&[0.3, 0.7]);
        assert!((v[0] - (0.3 * 0.9 + 0.7 * 0.2)).abs() < 1e-15);
        assert!((v[1] - (0.3 * 0.1 + 0.7 * 0.8)).abs() < 1e-15);
    }
}
