//! Lowest eigenpairs of symmetric pencils `A v = lambda M v`.
//!
//! Small pencils are reduced to a dense standard problem with the Cholesky
//! factor of `M`. Larger ones use block shift-and-invert subspace iteration
//! with Rayleigh-Ritz projection, which resolves repeated eigenvalues without
//! special handling. Both paths report the same residual,
//! `|lambda - sigma| ||(A - sigma M)^{-1} (A v - lambda M v)||_M`, against a
//! shift `sigma` below the spectrum.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::OperatorPencil;
use crate::sparse::{Cholesky, CsrMatrix};

/// Pencils up to this size take the dense path under [`Method::Auto`].
pub const DENSE_LIMIT: usize = 600;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("no convergence after {iterations} iterations (residuals {residuals:?})")]
    NotConverged { iterations: usize, residuals: Vec<f64> },
    #[error("factorization failed: {0}")]
    Factorization(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub tol: f64,
    pub method: Method,
    pub max_iterations: usize,
    pub seed: u64,
    pub cluster_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            method: Method::Auto,
            max_iterations: 1000,
            seed: 0,
            cluster_tol: 1e-6,
        }
    }
}

/// Lowest eigenpairs with `M`-orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub clusters: Vec<Vec<usize>>,
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Cluster index holding eigenvalue `j` (0-based).
    pub fn cluster_id(&self, j: usize) -> usize {
        self.clusters.iter().position(|c| c.contains(&j)).expect("index outside the spectrum")
    }

    pub fn cluster_of(&self, j: usize) -> &[usize] {
        &self.clusters[self.cluster_id(j)]
    }
}

/// Greedy grouping: `l[i+1]` joins the cluster of `l[i]` when
/// `l[i+1] - l[i] <= rel_tol max(1, l[i])`.
pub fn cluster_multiplicity(eigenvalues: &[f64], rel_tol: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in eigenvalues.iter().enumerate() {
        match out.last_mut() {
            Some(c) if l - eigenvalues[i - 1] <= rel_tol * eigenvalues[i - 1].max(1.0) => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
pub fn fix_sign(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Eigenpairs of a small dense symmetric pencil `(a, m)` with `m` positive
/// definite, ascending, with `m`-orthonormal columns.
pub fn dense_symmetric_pencil(a: &Mat<f64>, m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>), SolverError> {
    let n = a.nrows();
    let llt = m
        .llt(Side::Lower)
        .map_err(|_| SolverError::Factorization("mass matrix is not positive definite".into()))?;
    let l = llt.L().to_owned();
    // C = L^{-1} A L^{-T}
    let mut x = a.clone();
    solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let eig = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| SolverError::Factorization("dense eigensolver did not converge".into()))?;
    let s = eig.S();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let values: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    let u = eig.U();
    let mut vecs = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
    solve_upper_triangular_in_place(l.transpose(), vecs.as_mut(), Par::Seq);
    Ok((values, vecs))
}

fn csr_times(a: &CsrMatrix, x: &Mat<f64>) -> Mat<f64> {
    let mut out = Mat::zeros(x.nrows(), x.ncols());
    for i in 0..a.size() {
        for (j, v) in a.row(i) {
            for c in 0..x.ncols() {
                out[(i, c)] += v * x[(j, c)];
            }
        }
    }
    out
}

fn column(x: &Mat<f64>, c: usize) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, c)]).collect()
}

/// Lowest `k` eigenpairs of the pencil.
pub fn solve_generalized(pencil: &OperatorPencil, k: usize, options: &SolverOptions) -> Result<Spectrum, SolverError> {
    let n = pencil.size();
    if k == 0 || k > n {
        return Err(SolverError::InvalidInput(format!("requested {k} eigenpairs from a pencil of size {n}")));
    }
    if !(options.tol > 0.0) {
        return Err(SolverError::InvalidInput(format!("tolerance must be positive, got {}", options.tol)));
    }
    let sigma = lower_shift(pencil);
    let shifted = Cholesky::new(&pencil.a.combine(1.0, &pencil.m, -sigma))
        .map_err(|e| SolverError::Factorization(format!("shifted operator: {e}")))?;
    let block = (2 * k).max(k + 10).min(n);
    let dense = match options.method {
        Method::Dense => true,
        Method::ShiftInvert => block >= n,
        Method::Auto => n <= DENSE_LIMIT || block >= n,
    };
    let (values, vectors) = if dense {
        let (vals, vecs) = dense_symmetric_pencil(&pencil.a.to_dense(), &pencil.m.to_dense())?;
        (vals[..k].to_vec(), Mat::from_fn(n, k, |i, j| vecs[(i, j)]))
    } else {
        subspace_iteration(pencil, &shifted, sigma, k, block, options)?
    };
    let residuals = residuals(pencil, &shifted, sigma, &values, &vectors);
    let eigenvectors = (0..k).map(|j| fix_sign(column(&vectors, j))).collect();
    Ok(Spectrum {
        clusters: cluster_multiplicity(&values, options.cluster_tol),
        eigenvalues: values,
        eigenvectors,
        residuals,
    })
}

/// A shift strictly below the smallest eigenvalue: the Rayleigh quotient of
/// the constant vector bounds it from above, and the spectrum is non-negative.
fn lower_shift(pencil: &OperatorPencil) -> f64 {
    let ones = vec![1.0; pencil.size()];
    let r = pencil.rayleigh(&ones).unwrap_or(0.0);
    -(1.0 + r.abs())
}

fn residuals(pencil: &OperatorPencil, shifted: &Cholesky, sigma: f64, values: &[f64], x: &Mat<f64>) -> Vec<f64> {
    let mx = csr_times(&pencil.m, x);
    let ax = csr_times(&pencil.a, x);
    let mut r = Mat::from_fn(x.nrows(), x.ncols(), |i, j| ax[(i, j)] - values[j] * mx[(i, j)]);
    shifted.solve_columns(&mut r);
    let mr = csr_times(&pencil.m, &r);
    (0..x.ncols())
        .map(|j| {
            let q: f64 = (0..x.nrows()).map(|i| r[(i, j)] * mr[(i, j)]).sum();
            (values[j] - sigma).abs() * q.max(0.0).sqrt()
        })
        .collect()
}

fn project(a: &CsrMatrix, y: &Mat<f64>) -> Mat<f64> {
    let ay = csr_times(a, y);
    let p = y.ncols();
    let raw = y.transpose() * &ay;
    Mat::from_fn(p, p, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]))
}

/// Cholesky QR in the `m` inner product.
fn m_orthonormalize(m: &CsrMatrix, y: &mut Mat<f64>) -> Result<(), SolverError> {
    let g = project(m, y);
    let llt = g
        .llt(Side::Lower)
        .map_err(|_| SolverError::Factorization("iteration block lost rank".into()))?;
    // Y <- Y L^{-T}, i.e. solve L Y^T = Y^T
    let mut yt = y.transpose().to_owned();
    solve_lower_triangular_in_place(llt.L(), yt.as_mut(), Par::Seq);
    *y = yt.transpose().to_owned();
    Ok(())
}

fn subspace_iteration(
    pencil: &OperatorPencil,
    shifted: &Cholesky,
    sigma: f64,
    k: usize,
    block: usize,
    options: &SolverOptions,
) -> Result<(Vec<f64>, Mat<f64>), SolverError> {
    let n = pencil.size();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut x = Mat::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0));
    let mut last = vec![f64::INFINITY; k];
    for _ in 0..options.max_iterations {
        m_orthonormalize(&pencil.m, &mut x)?;
        m_orthonormalize(&pencil.m, &mut x)?;
        // Rayleigh-Ritz for T = (A - sigma M)^{-1} M in the M inner product;
        // X^T M T X avoids the cancellation in X^T A X on fine meshes
        let mx = csr_times(&pencil.m, &x);
        let mut w = mx.clone();
        shifted.solve_columns(&mut w);
        let raw = w.transpose() * &mx;
        let h = Mat::from_fn(block, block, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]));
        let eig = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| SolverError::Factorization("projected eigensolver did not converge".into()))?;
        let theta = eig.S();
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&i, &j| theta[j].total_cmp(&theta[i]));
        if !(theta[order[block - 1]] > 0.0) {
            return Err(SolverError::Factorization("shifted operator is not positive definite".into()));
        }
        let values: Vec<f64> = order.iter().map(|&i| sigma + 1.0 / theta[i]).collect();
        let u = eig.U();
        let z = Mat::from_fn(block, block, |i, j| u[(i, order[j])]);
        let ritz = &x * &z;
        let advanced = &w * &z;
        // eta_j = ||x_j - (lambda_j - sigma) T x_j||_M
        let mut done = true;
        for j in 0..k {
            let d: Vec<f64> = (0..n).map(|i| ritz[(i, j)] - (values[j] - sigma) * advanced[(i, j)]).collect();
            let eta = pencil.m.quadratic(&d).max(0.0).sqrt();
            last[j] = (values[j] - sigma).abs() * eta;
            if last[j] > options.tol * (1.0 + values[j].abs()) {
                done = false;
            }
        }
        if done {
            let vectors = Mat::from_fn(n, k, |i, j| ritz[(i, j)]);
            return Ok((values[..k].to_vec(), vectors));
        }
        x = advanced;
    }
    Err(SolverError::NotConverged {
        iterations: options.max_iterations,
        residuals: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_limit, ConstantWeight};
    use crate::geometry::BoundarySpec;
    use crate::mesh::{build_mesh, MeshOptions};
    use proptest::prelude::*;
    use rand::Rng;

    fn diag(v: &[f64]) -> CsrMatrix {
        CsrMatrix::from_triplets(v.len(), &v.iter().enumerate().map(|(i, &x)| (i, i, x)).collect::<Vec<_>>())
    }

    #[test]
    fn diagonal_pencil() {
        let p = OperatorPencil::from_matrices(diag(&[3.0, 1.0, 2.0]), CsrMatrix::identity(3)).unwrap();
        let s = solve_generalized(&p, 3, &SolverOptions::default()).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert_eq!(s.eigenvectors[0], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn equal_forms_give_unit_spectrum() {
        let m = CsrMatrix::from_dense(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let p = OperatorPencil::from_matrices(m.clone(), m).unwrap();
        let s = solve_generalized(&p, 3, &SolverOptions::default()).unwrap();
        assert!(s.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-13));
        assert_eq!(s.clusters, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn neumann_interval() {
        let spec = BoundarySpec::Interval {
            length: std::f64::consts::PI,
        };
        let mesh = build_mesh(&spec, None, 0.0, MeshOptions::new(std::f64::consts::PI / 1e4, 1)).unwrap();
        let p = assemble_limit(&mesh, &ConstantWeight(0.0)).unwrap();
        let s = solve_generalized(&p, 5, &SolverOptions::default()).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-9);
        for j in 1..5 {
            let want = (j * j) as f64;
            assert!((s.eigenvalues[j] - want).abs() < 1e-6 * want, "{j}: {}", s.eigenvalues[j]);
        }
    }

    #[test]
    fn paths_agree_and_vectors_are_orthonormal() {
        let spec = BoundarySpec::Disk { radius: 1.0 };
        let mesh = build_mesh(&spec, None, 0.0, MeshOptions::new(0.1, 1)).unwrap();
        let p = assemble_limit(&mesh, &ConstantWeight(0.5)).unwrap();
        let dense = solve_generalized(
            &p,
            8,
            &SolverOptions {
                method: Method::Dense,
                ..Default::default()
            },
        )
        .unwrap();
        let iter = solve_generalized(
            &p,
            8,
            &SolverOptions {
                method: Method::ShiftInvert,
                ..Default::default()
            },
        )
        .unwrap();
        for j in 0..8 {
            assert!((dense.eigenvalues[j] - iter.eigenvalues[j]).abs() < 1e-9 * dense.eigenvalues[j].max(1.0));
            assert!(iter.residuals[j] <= 1e-10 * (1.0 + iter.eigenvalues[j]));
            assert!(dense.residuals[j] <= 1e-10 * (1.0 + dense.eigenvalues[j]));
            for i in 0..8 {
                let g = p.m.bilinear(&iter.eigenvectors[i], &iter.eigenvectors[j]);
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
        // symmetric ring mesh keeps the m = 1 and m = 2 pairs exactly double
        assert_eq!(&iter.clusters[..3], &[vec![0], vec![1, 2], vec![3, 4]]);
        for j in 0..8 {
            let r = p.rayleigh(&iter.eigenvectors[j]).unwrap();
            assert!((r - iter.eigenvalues[j]).abs() < 1e-12 * r.max(1.0));
        }
    }

    #[test]
    fn min_max_consistency() {
        let spec = BoundarySpec::Ellipse { a: 1.2, b: 0.9 };
        let mesh = build_mesh(&spec, None, 0.0, MeshOptions::new(0.1, 1)).unwrap();
        let p = assemble_limit(&mesh, &ConstantWeight(1.0)).unwrap();
        let s = solve_generalized(&p, 6, &SolverOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for j in 1..=6 {
            // max of the Rayleigh quotient over random elements of span(v_1..v_j)
            let mut best = f64::NEG_INFINITY;
            for _ in 0..200 {
                let c: Vec<f64> = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let w: Vec<f64> = (0..p.size())
                    .map(|i| (0..j).map(|q| c[q] * s.eigenvectors[q][i]).sum())
                    .collect();
                best = best.max(p.rayleigh(&w).unwrap());
            }
            assert!(best <= s.eigenvalues[j - 1] + 1e-8);
            let top = p.rayleigh(&s.eigenvectors[j - 1]).unwrap();
            assert!(top >= s.eigenvalues[j - 1] - 1e-8);
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let spec = BoundarySpec::Disk { radius: 1.0 };
        let mesh = build_mesh(&spec, None, 0.0, MeshOptions::new(0.08, 1)).unwrap();
        let p = assemble_limit(&mesh, &ConstantWeight(2.0)).unwrap();
        let o = SolverOptions {
            method: Method::ShiftInvert,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(solve_generalized(&p, 4, &o).unwrap(), solve_generalized(&p, 4, &o).unwrap());
    }

    #[test]
    fn budget_exhaustion_reports_residuals() {
        let spec = BoundarySpec::Disk { radius: 1.0 };
        let mesh = build_mesh(&spec, None, 0.0, MeshOptions::new(0.08, 1)).unwrap();
        let p = assemble_limit(&mesh, &ConstantWeight(2.0)).unwrap();
        let o = SolverOptions {
            method: Method::ShiftInvert,
            max_iterations: 2,
            ..Default::default()
        };
        match solve_generalized(&p, 4, &o) {
            Err(SolverError::NotConverged { residuals, .. }) => assert_eq!(residuals.len(), 4),
            other => panic!("{other:?}"),
        }
        assert!(solve_generalized(&p, 0, &SolverOptions::default()).is_err());
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(cluster_multiplicity(&[1.0, 1.0 + 1e-12, 2.0], 1e-6), vec![vec![0, 1], vec![2]]);
        assert_eq!(cluster_multiplicity(&[1.0, 2.0, 3.0], 1e-6), vec![vec![0], vec![1], vec![2]]);
        assert!(cluster_multiplicity(&[], 1e-6).is_empty());
    }

    #[test]
    fn sign_fixing() {
        assert_eq!(fix_sign(vec![-3.0, 1.0]), vec![3.0, -1.0]);
        assert_eq!(fix_sign(vec![0.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(fix_sign(vec![-2.0, 2.0]), vec![2.0, -2.0]);
    }

    proptest! {
        #[test]
        fn fix_sign_is_idempotent(v in proptest::collection::vec(-10.0f64..10.0, 1..20)) {
            let once = fix_sign(v);
            prop_assert_eq!(fix_sign(once.clone()), once);
        }

        #[test]
        fn clusters_partition_indices(mut v in proptest::collection::vec(0.0f64..10.0, 0..30)) {
            v.sort_by(f64::total_cmp);
            let c = cluster_multiplicity(&v, 1e-6);
            let flat: Vec<usize> = c.into_iter().flatten().collect();
            prop_assert_eq!(flat, (0..v.len()).collect::<Vec<_>>());
        }
    }
}
