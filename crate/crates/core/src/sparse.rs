//! Compressed sparse row storage and a sparse Cholesky wrapper.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("sparse matrix construction failed: {0}")]
    Construction(String),
}

/// Square CSR matrix. Duplicate triplets are summed in insertion order,
/// so symmetric element contributions give an exactly symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, j, _) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside a {n}x{n} matrix");
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        // bucket by row, keeping insertion order, then sort each row stably by column
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (k, &(i, _, _)) in triplets.iter().enumerate() {
            order[next[i]] = k;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let row = &mut order[counts[i]..counts[i + 1]];
            row.sort_by_key(|&k| triplets[k].1);
            for &k in row.iter() {
                let (_, j, v) = triplets[k];
                if cols.len() > row_ptr[i] && *cols.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut t = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "dense input must be square");
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `alpha A + gamma B`.
    pub fn combine(&self, alpha: f64, other: &CsrMatrix, gamma: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut t: Vec<(usize, usize, f64)> = self.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)).collect();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, gamma * v)));
        CsrMatrix::from_triplets(self.n, &t)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on the leading `k` indices.
    pub fn leading_block(&self, k: usize) -> CsrMatrix {
        let t: Vec<_> = self.triplets().into_iter().filter(|&(i, j, _)| i < k && j < k).collect();
        CsrMatrix::from_triplets(k, &t)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>, SparseError> {
        let t: Vec<Triplet<usize, usize, f64>> = self.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &t).map_err(|e| SparseError::Construction(format!("{e:?}")))
    }
}

/// Sparse `L L^T` factorization of a symmetric positive definite matrix.
#[derive(Debug)]
pub struct Cholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl Cholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self, SparseError> {
        let llt = a.to_faer()?.sp_cholesky(Side::Lower).map_err(|_| SparseError::NotPositiveDefinite)?;
        Ok(Self { n: a.size(), llt })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solves in place for every column of `rhs`.
    pub fn solve_columns(&self, rhs: &mut Mat<f64>) {
        self.llt.solve_in_place(rhs.as_mut());
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.solve_columns(&mut m);
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (0, 1, 2.0), (1, 1, 5.0)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![6.0, 7.0]);
        assert_eq!(a.quadratic(&[1.0, -1.0]), 4.0 - 4.0 + 5.0);
        assert_eq!(a.max_asymmetry(), 0.0);
    }

    #[test]
    fn cholesky_solves() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let x = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let y = Cholesky::new(&a).unwrap().solve(&b);
        for (p, q) in x.iter().zip(y.iter()) {
            assert!((p - q).abs() < 1e-14);
        }
        let indefinite = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(Cholesky::new(&indefinite).is_err());
    }

    #[test]
    fn combination_and_blocks() {
        let a = CsrMatrix::identity(3);
        let b = CsrMatrix::from_triplets(3, &[(0, 2, 1.0), (2, 0, 1.0)]);
        let c = a.combine(2.0, &b, -1.0);
        assert_eq!(c.get(0, 0), 2.0);
        assert_eq!(c.get(2, 0), -1.0);
        assert_eq!(c.leading_block(2).nnz(), 2);
    }
}
