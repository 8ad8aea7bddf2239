//! Dense Cholesky factorization and a tridiagonal solver.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Lower-triangular factor stored row-major, `n * n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    /// Diagonal jitter that was needed, 0 if none.
    pub jitter: f64,
}

impl Cholesky {
    /// Factorizes the symmetric matrix `a` (row-major, `n * n`).
    ///
    /// On failure retries with diagonal jitter `1e-14, 1e-13, ..., 1e-8` times
    /// the mean diagonal.
    pub fn new(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix must be n x n");
        if let Some(l) = factor(a, n, 0.0) {
            return Ok(Self { n, l, jitter: 0.0 });
        }
        let mean_diag = (0..n).map(|i| a[i * n + i]).sum::<f64>() / n.max(1) as f64;
        let mut jitter = 0.0;
        for e in -14..=-8 {
            jitter = mean_diag.abs().max(f64::MIN_POSITIVE) * 10f64.powi(e);
            if let Some(l) = factor(a, n, jitter) {
                return Ok(Self { n, l, jitter });
            }
        }
        Err(Error::NotPositiveDefinite { jitter })
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `out = L z`.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.l[i * n..i * n + i + 1];
            *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }

    /// Entry `L[i][j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }
}

fn factor(a: &[f64], n: usize, jitter: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (`lower[0]` unused), `upper[i]`
/// multiplies `x[i+1]` (`upper[n-1]` unused). `rhs` is overwritten by the
/// solution; `scratch` must have length `n`.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) {
    let n = diag.len();
    let mut denom = diag[0];
    rhs[0] /= denom;
    for i in 1..n {
        scratch[i] = upper[i - 1] / denom;
        denom = diag[i] - lower[i] * scratch[i];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_matrix() {
        let a = [4.0, 2.0, 0.6, 2.0, 2.0, 0.5, 0.6, 0.5, 3.0];
        let c = Cholesky::new(&a, 3).unwrap();
        assert_eq!(c.jitter, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| c.get(i, k) * c.get(j, k)).sum();
                assert!((s - a[i * 3 + j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn semidefinite_needs_jitter() {
        let a = [1.0, 1.0, 1.0, 1.0];
        let c = Cholesky::new(&a, 2).unwrap();
        assert!(c.jitter > 0.0);
        let bad = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            Cholesky::new(&bad, 2),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn tridiagonal_solve() {
        let lower = [0.0, 1.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [1.0, 1.0, 1.0, 0.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let mut rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i < 3 {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        let mut scratch = [0.0; 4];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch);
        for i in 0..4 {
            assert!((rhs[i] - x[i]).abs() < 1e-14);
        }
    }
}
