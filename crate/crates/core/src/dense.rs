//! Row-major dense square matrices.
//!
//! Deliberately minimal: just the storage and kernels the spectral, truncation
//! and perturbation modules need (symmetric matvec, matmul, norms, row sums).

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Bounds("from_rows: non-square input".into()));
        }
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Squared Frobenius norm, summed exactly in entry order.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>()
    }

    /// Maximum absolute row sum (the l-infinity to l-infinity operator norm).
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
    }

    /// C = A B with an ikj loop order to keep the inner loop sequential.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut c = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a_ik = self.data[i * n + k];
                if a_ik == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                let crow = &mut c.data[i * n..(i + 1) * n];
                for j in 0..n {
                    crow[j] += a_ik * brow[j];
                }
            }
        }
        c
    }

    /// Principal submatrix on the given (not necessarily sorted) indices.
    pub fn principal_submatrix(&self, idx: &[usize]) -> DenseMatrix {
        let l = idx.len();
        let mut b = DenseMatrix::zeros(l);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                b[(r, c)] = self[(i, j)];
            }
        }
        b
    }

    /// Copy with rows/columns in `remove` deleted (indices must be sorted ascending).
    pub fn remove_rows_cols(&self, remove: &[usize]) -> DenseMatrix {
        let keep: Vec<usize> = (0..self.n).filter(|i| !remove.contains(i)).collect();
        self.principal_submatrix(&keep)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Anything that can act as a symmetric linear operator. Lanczos and the
/// residual certification run against this, so iterative results can be
/// checked against the same operator that produced them.
pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y);
    }
}

/// Negated view of an operator, used to reach the low end of a spectrum.
pub struct Negated<'a, T: SymOperator>(pub &'a T);

impl<T: SymOperator> SymOperator for Negated<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
        for v in y.iter_mut() {
            *v = -*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_against_hand_computed() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c[(0, 0)], 19.0);
        assert_eq!(c[(0, 1)], 22.0);
        assert_eq!(c[(1, 0)], 43.0);
        assert_eq!(c[(1, 1)], 50.0);
    }

    #[test]
    fn submatrix_and_row_sums() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, -2.0, 0.0],
            vec![-2.0, 0.0, 5.0],
            vec![0.0, 5.0, 3.0],
        ])
        .unwrap();
        assert_eq!(a.max_abs_row_sum(), 8.0);
        let s = a.principal_submatrix(&[0, 2]);
        assert_eq!(s[(0, 0)], 1.0);
        assert_eq!(s[(0, 1)], 0.0);
        assert_eq!(s[(1, 1)], 3.0);
        let r = a.remove_rows_cols(&[1]);
        assert_eq!(r, s);
    }
}
