//! First-order behaviour of the two-phase spectrum as the layer thins.
//!
//! The correction quotient of a limit eigenfunction `v` is
//!
//! ```text
//! Q(v) = [ int_dO H c1(h) v^2 - lambda int_dO c2(h) v^2 ] / int_O v^2
//! c1(h) = beta h (2 + beta h) / (2 (1 + beta h)^2)
//! c2(h) = h (3 + 3 beta h + beta^2 h^2) / (3 (1 + beta h)^2)
//! ```
//!
//! and the slope of `lambda_eps - lambda` at `eps = 0` lies between the
//! extremes of `Q` over the limit eigenspace.

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{OperatorPencil, PencilKind};
use crate::eigensolve::dense_symmetric_pencil;
use crate::error::{Error, Result};
use crate::geometry::BoundarySpec;
use crate::mesh::{fiber_sample, DomainMesh, FacetTag};
use crate::problem::{solve_limit, solve_twophase, Discretization, Solution};
use crate::profiles::ThicknessProfile;
use crate::quadrature::gauss_legendre_unit;
use crate::sparse::CsrMatrix;

/// Coefficient of the curvature term.
pub fn curvature_weight(h: f64, beta: f64) -> f64 {
    let bh = beta * h;
    bh * (2.0 + bh) / (2.0 * (1.0 + bh) * (1.0 + bh))
}

/// Coefficient of the layer-inertia term.
pub fn inertia_weight(h: f64, beta: f64) -> f64 {
    let bh = beta * h;
    h * (3.0 + 3.0 * bh + bh * bh) / (3.0 * (1.0 + bh) * (1.0 + bh))
}

/// The boundary integrand of the numerator of `Q` at parameter `tau`, without `v^2`.
pub fn boundary_density(spec: &BoundarySpec, h: &ThicknessProfile, beta: f64, lambda: f64, tau: f64) -> Result<f64> {
    let hv = h.value(tau);
    let curvature = spec.curvature(tau)?;
    Ok(curvature * curvature_weight(hv, beta) - lambda * inertia_weight(hv, beta))
}

/// `Q` restricted to a finite basis: numerator form `B` and `int_Omega` form `D`.
#[derive(Debug, Clone)]
pub struct QuotientForms {
    pub numerator: Mat<f64>,
    pub mass: Mat<f64>,
}

/// Extremes of `Q` over the span of a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientExtremes {
    pub q_min: f64,
    pub q_max: f64,
    /// all stationary values, ascending
    pub values: Vec<f64>,
    /// basis coefficients of the minimizer, `D`-normalized
    pub argmin: Vec<f64>,
}

impl QuotientForms {
    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    /// `Q` of the combination `sum c_i v_i`.
    pub fn quotient(&self, c: &[f64]) -> Result<f64> {
        let n = self.dim();
        if c.len() != n {
            return Err(Error::Invalid(format!("{} coefficients for a basis of {n}", c.len())));
        }
        let form = |m: &Mat<f64>| -> f64 { (0..n).map(|i| (0..n).map(|j| c[i] * m[(i, j)] * c[j]).sum::<f64>()).sum() };
        let d = form(&self.mass);
        if !(d > 0.0) {
            return Err(Error::Degenerate("zero L2 norm in Omega".into()));
        }
        Ok(form(&self.numerator) / d)
    }

    pub fn extremes(&self) -> Result<QuotientExtremes> {
        if self.dim() == 0 {
            return Err(Error::Invalid("empty eigenspace basis".into()));
        }
        let (values, vectors) =
            dense_symmetric_pencil(&self.numerator, &self.mass).map_err(|_| Error::Degenerate("singular L2 Gram matrix".into()))?;
        let argmin = (0..self.dim()).map(|i| vectors[(i, 0)]).collect();
        Ok(QuotientExtremes {
            q_min: values[0],
            q_max: values[values.len() - 1],
            values,
            argmin,
        })
    }
}

fn symmetric_from(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Mat<f64> {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = entry(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Forms for FEM limit eigenvectors. The boundary integral runs over the
/// interface facets with the analytic curvature and line element, split at
/// profile breakpoints.
pub fn fem_forms(
    mesh: &DomainMesh,
    pencil: &OperatorPencil,
    basis: &[&[f64]],
    h: &ThicknessProfile,
    beta: f64,
    lambda: f64,
) -> Result<QuotientForms> {
    let n = basis.len();
    for v in basis {
        if v.len() != pencil.size() || pencil.size() < mesh.interior_vertex_count() {
            return Err(Error::Invalid(format!("basis vector of length {} for a pencil of size {}", v.len(), pencil.size())));
        }
    }
    let spec = mesh.spec();
    let breakpoints = h.breakpoints();
    let rule = gauss_legendre_unit(3);
    // boundary mass matrix with the Q density, kept as triplets on the trace
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for f in mesh.facets().iter().filter(|f| f.tag == FacetTag::Interface) {
        let v = mesh.facet_vertices(f);
        if v.len() == 1 {
            entries.push((v[0], v[0], boundary_density(spec, h, beta, lambda, f.tau[0])?));
            continue;
        }
        let (t0, t1) = (f.tau[0], f.tau[1]);
        let mut cuts = vec![t0];
        cuts.extend(breakpoints.iter().copied().filter(|&b| b > t0 && b < t1));
        cuts.push(t1);
        let mut local = [[0.0; 2]; 2];
        for piece in cuts.windows(2) {
            for &(x, w) in &rule {
                let tau = piece[0] + (piece[1] - piece[0]) * x;
                let s = (tau - t0) / (t1 - t0);
                let wt = w * (piece[1] - piece[0]) * spec.speed(tau) * boundary_density(spec, h, beta, lambda, tau)?;
                let phi = [1.0 - s, s];
                for i in 0..2 {
                    for j in 0..2 {
                        local[i][j] += wt * (phi[i] * phi[j]);
                    }
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                entries.push((v[i], v[j], local[i][j]));
            }
        }
    }
    let b = CsrMatrix::from_triplets(pencil.size(), &entries);
    Ok(QuotientForms {
        numerator: symmetric_from(n, |i, j| b.bilinear(basis[i], basis[j])),
        mass: symmetric_from(n, |i, j| pencil.m_interior.bilinear(basis[i], basis[j])),
    })
}

/// Forms for analytically known functions. `traces(tau)` returns the boundary
/// values of every basis function; `interior_gram` is their `L2(Omega)` Gram
/// matrix. Closed curves use `panels` Gauss panels of 8 points between
/// breakpoints.
pub fn trace_forms(
    spec: &BoundarySpec,
    h: &ThicknessProfile,
    beta: f64,
    lambda: f64,
    traces: &dyn Fn(f64) -> Vec<f64>,
    interior_gram: Mat<f64>,
    panels: usize,
) -> Result<QuotientForms> {
    let n = interior_gram.nrows();
    let mut b = Mat::<f64>::zeros(n, n);
    let mut add = |tau: f64, weight: f64| -> Result<()> {
        let t = traces(tau);
        if t.len() != n {
            return Err(Error::Invalid(format!("{} traces for a Gram matrix of size {n}", t.len())));
        }
        let w = weight * boundary_density(spec, h, beta, lambda, tau)?;
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] += w * t[i] * t[j];
            }
        }
        Ok(())
    };
    if spec.is_closed_curve() {
        let mut cuts: Vec<f64> = (0..=panels.max(1)).map(|i| i as f64 / panels.max(1) as f64).collect();
        cuts.extend(h.breakpoints().into_iter().filter(|&t| t > 0.0 && t < 1.0));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let rule = gauss_legendre_unit(8);
        for piece in cuts.windows(2) {
            for &(x, w) in &rule {
                let tau = piece[0] + (piece[1] - piece[0]) * x;
                add(tau, w * (piece[1] - piece[0]) * spec.speed(tau))?;
            }
        }
    } else {
        add(0.0, 1.0)?;
        add(0.5, 1.0)?;
    }
    let numerator = symmetric_from(n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]));
    Ok(QuotientForms {
        numerator,
        mass: interior_gram,
    })
}

/// `Q` of a single FEM limit eigenfunction.
pub fn q_quotient(mesh: &DomainMesh, pencil: &OperatorPencil, v: &[f64], h: &ThicknessProfile, beta: f64, lambda: f64) -> Result<f64> {
    fem_forms(mesh, pencil, &[v], h, beta, lambda)?.quotient(&[1.0])
}

/// Extremes of `Q` over the span of FEM limit eigenvectors; the minimizer is
/// returned as a vector on the mesh.
pub fn eigenspace_extremes(
    mesh: &DomainMesh,
    pencil: &OperatorPencil,
    basis: &[&[f64]],
    h: &ThicknessProfile,
    beta: f64,
    lambda: f64,
) -> Result<(QuotientExtremes, Vec<f64>)> {
    let ext = fem_forms(mesh, pencil, basis, h, beta, lambda)?.extremes()?;
    let mut w = vec![0.0; pencil.size()];
    for (c, v) in ext.argmin.iter().zip(basis) {
        for (wi, vi) in w.iter_mut().zip(v.iter()) {
            *wi += c * vi;
        }
    }
    Ok((ext, w))
}

/// Linear decay of the eigenfunction across the layer: `v (1 - beta t / (eps (1 + beta h)))`.
pub fn layer_profile_prediction(v_trace: f64, h: f64, beta: f64, eps: f64, t: f64) -> Result<f64> {
    if !(eps > 0.0 && h >= 0.0 && beta > 0.0) {
        return Err(Error::Invalid(format!("need eps > 0, h >= 0, beta > 0 (got {eps}, {h}, {beta})")));
    }
    let top = eps * h;
    if !(t >= 0.0 && t <= top * (1.0 + 1e-12)) {
        return Err(Error::Invalid(format!("offset {t} outside the layer [0, {top}]")));
    }
    Ok(v_trace * (1.0 - beta * t / (eps * (1.0 + beta * h))))
}

/// Least-squares fit `lambda_eps = lambda0 + s eps + q eps^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// `lambda0`, either prescribed or fitted
    pub intercept: f64,
    pub slope: f64,
    pub curvature: f64,
    /// root mean square of the quotient residuals, in slope units
    pub residual: f64,
    /// raw `(lambda_eps - lambda0) / eps`, in input order
    pub quotients: Vec<f64>,
}

fn check_sweep(sweep: &[(f64, f64)], needed: usize) -> Result<f64> {
    let mut distinct: Vec<f64> = sweep.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < needed {
        return Err(Error::Invalid(format!("slope fit needs {needed} distinct eps values, got {}", distinct.len())));
    }
    if sweep.iter().any(|&(e, l)| !(e > 0.0 && e.is_finite() && l.is_finite())) {
        return Err(Error::Invalid("sweep points need finite eps > 0 and finite eigenvalues".into()));
    }
    Ok(distinct[distinct.len() - 1])
}

/// Least squares `y ~ X c` for a tall matrix with few columns, by twice
/// applied modified Gram-Schmidt.
fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = columns.len();
    let mut q: Vec<Vec<f64>> = columns.to_vec();
    let mut r = vec![vec![0.0; p]; p];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for j in 0..p {
        for _ in 0..2 {
            for i in 0..j {
                let c = dot(&q[i], &q[j]);
                r[i][j] += c;
                let qi = q[i].clone();
                q[j].iter_mut().zip(&qi).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = dot(&q[j], &q[j]).sqrt();
        r[j][j] = norm;
        q[j].iter_mut().for_each(|a| *a /= norm);
    }
    let qty: Vec<f64> = q.iter().map(|qj| dot(qj, y)).collect();
    let mut c = vec![0.0; p];
    for i in (0..p).rev() {
        c[i] = (qty[i] - (i + 1..p).map(|k| r[i][k] * c[k]).sum::<f64>()) / r[i][i];
    }
    c
}

fn fit(sweep: &[(f64, f64)], intercept: Option<f64>, scale: f64) -> SlopeFit {
    let xs: Vec<f64> = sweep.iter().map(|p| p.0 / scale).collect();
    let (lambda0, slope, curvature) = match intercept {
        // dividing by eps turns the model into a line in eps
        Some(l) => {
            let q: Vec<f64> = sweep.iter().map(|&(e, v)| (v - l) / e).collect();
            let c = least_squares(&[vec![1.0; xs.len()], xs.clone()], &q);
            (l, c[0], c[1] / scale)
        }
        None => {
            let y: Vec<f64> = sweep.iter().map(|p| p.1).collect();
            let c = least_squares(&[vec![1.0; xs.len()], xs.clone(), xs.iter().map(|x| x * x).collect()], &y);
            (c[0], c[1] / scale, c[2] / (scale * scale))
        }
    };
    let quotients: Vec<f64> = sweep.iter().map(|&(e, l)| (l - lambda0) / e).collect();
    let n = sweep.len() as f64;
    let residual = (sweep
        .iter()
        .zip(&quotients)
        .map(|(&(e, _), q)| (q - slope - curvature * e).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    SlopeFit {
        intercept: lambda0,
        slope,
        curvature,
        residual,
        quotients,
    }
}

/// Fit with the limit eigenvalue prescribed; needs 3 distinct eps.
pub fn slope_estimate(sweep: &[(f64, f64)], lambda: f64) -> Result<SlopeFit> {
    let scale = check_sweep(sweep, 3)?;
    Ok(fit(sweep, Some(lambda), scale))
}

/// Fit with the intercept free as well; needs 4 distinct eps. Used for
/// discrete sweeps whose eps -> 0 limit differs from the separately
/// discretized limit problem by a mesh-dependent constant.
pub fn expansion_fit(sweep: &[(f64, f64)]) -> Result<SlopeFit> {
    let scale = check_sweep(sweep, 4)?;
    Ok(fit(sweep, None, scale))
}

/// Layer mass of a two-phase eigenvector relative to its total mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerMass {
    pub eps: f64,
    pub layer_mass: f64,
    pub ratio: f64,
}

pub fn nonconcentration_check(pencil: &OperatorPencil, u: &[f64]) -> Result<LayerMass> {
    let PencilKind::TwoPhase { eps, .. } = pencil.kind else {
        return Err(Error::Invalid("layer mass needs a two-phase pencil".into()));
    };
    if u.len() != pencil.size() {
        return Err(Error::Invalid(format!("vector of length {} for a pencil of size {}", u.len(), pencil.size())));
    }
    let total = pencil.m.quadratic(u);
    if !(total > 0.0) {
        return Err(Error::Degenerate("zero vector".into()));
    }
    let layer_mass = pencil.layer_mass(u) / total;
    Ok(LayerMass {
        eps,
        layer_mass,
        ratio: layer_mass / eps,
    })
}

/// Change of `layer mass / eps` between successive sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationTrend {
    /// largest relative change between neighbours in decreasing eps
    pub max_change: f64,
    /// the ratio grew by more than 20% under some refinement
    pub growth_flag: bool,
    /// every change is within 20%
    pub stable: bool,
}

pub fn concentration_trend(points: &[LayerMass]) -> ConcentrationTrend {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let changes: Vec<f64> = sorted.windows(2).map(|w| w[1].ratio / w[0].ratio - 1.0).collect();
    ConcentrationTrend {
        max_change: changes.iter().fold(0.0, |m, c| m.max(c.abs())),
        growth_flag: changes.iter().any(|&c| c > 0.2),
        stable: changes.iter().all(|c| c.abs() <= 0.2),
    }
}

fn gram(m: &CsrMatrix, a: &[&[f64]], b: &[&[f64]]) -> Mat<f64> {
    Mat::from_fn(a.len(), b.len(), |i, j| m.bilinear(a[i], b[j]))
}

/// `M`-orthogonal projection of `u` onto the span of `basis`.
pub fn project(m: &CsrMatrix, basis: &[&[f64]], u: &[f64]) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    let g = gram(m, basis, basis);
    let rhs = Mat::from_fn(basis.len(), 1, |i, _| m.bilinear(basis[i], u));
    let llt = g.llt(Side::Lower).map_err(|_| Error::Degenerate("linearly dependent basis".into()))?;
    let c = llt.solve(&rhs);
    let mut p = vec![0.0; u.len()];
    for (i, v) in basis.iter().enumerate() {
        for (pk, vk) in p.iter_mut().zip(v.iter()) {
            *pk += c[(i, 0)] * vk;
        }
    }
    Ok(p)
}

fn m_norm_of_difference(m: &CsrMatrix, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    m.quadratic(&d).max(0.0).sqrt()
}

/// `min(|u - v|, |u + v|)` in the `M` norm.
pub fn aligned_distance(m: &CsrMatrix, v: &[f64], u: &[f64]) -> f64 {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    m_norm_of_difference(m, v, u).min(m_norm_of_difference(m, &neg, u))
}

/// `|u - P u|` in the `M` norm, `P` the projection onto the span of `basis`.
pub fn subspace_distance(m: &CsrMatrix, basis: &[&[f64]], u: &[f64]) -> Result<f64> {
    let p = project(m, basis, u)?;
    Ok(m_norm_of_difference(m, &p, u))
}

/// Sine of the largest principal angle between `span(b)` and its best match
/// in `span(a)`; needs `b.len() <= a.len()`.
pub fn principal_angle_sine(m: &CsrMatrix, a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    use faer::linalg::solvers::Solve;
    if b.is_empty() || b.len() > a.len() {
        return Err(Error::Invalid(format!("cannot compare a {}-dim span against a {}-dim span", b.len(), a.len())));
    }
    let ga = gram(m, a, a);
    let gb = gram(m, b, b);
    let c = gram(m, a, b);
    let llt = ga.llt(Side::Lower).map_err(|_| Error::Degenerate("linearly dependent basis".into()))?;
    let x = llt.solve(&c);
    let k = c.transpose() * &x;
    let k = Mat::from_fn(b.len(), b.len(), |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
    let (cos2, _) = dense_symmetric_pencil(&k, &gb).map_err(|_| Error::Degenerate("linearly dependent basis".into()))?;
    Ok((1.0 - cos2[0].clamp(0.0, 1.0)).sqrt())
}

/// Coefficient of determination of `observed` against a fixed prediction.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - ss_res / ss_tot
}

/// Pooled `R^2` of a two-phase field sampled along normal fibers against the
/// linear layer profile built from `trace` (interface values indexed by
/// vertex). At most `max_fibers` evenly spaced fibers are used.
pub fn layer_profile_fit(
    mesh: &DomainMesh,
    u: &[f64],
    trace: &[f64],
    beta: f64,
    n_samples: usize,
    max_fibers: usize,
) -> Result<f64> {
    let h = mesh.profile().ok_or_else(|| Error::Invalid("mesh has no layer".into()))?;
    let eps = mesh.eps();
    let fibers = mesh.fibers();
    if fibers.is_empty() {
        return Err(Error::Invalid("mesh has no layer".into()));
    }
    let stride = fibers.len().div_ceil(max_fibers.max(1));
    let mut observed = Vec::new();
    let mut predicted = Vec::new();
    for fiber in fibers.iter().step_by(stride) {
        let hv = h.value(fiber.tau);
        let v = trace[fiber.vertices[0]];
        for (t, value) in fiber_sample(mesh, u, fiber.tau, n_samples)? {
            observed.push(value);
            predicted.push(layer_profile_prediction(v, hv, beta, eps, t.min(eps * hv))?);
        }
    }
    Ok(r_squared(&observed, &predicted))
}

/// Settings of an asymptotic sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsSettings {
    /// layer scales; empty selects [`default_eps_grid`]
    pub eps: Vec<f64>,
    /// 1-based eigenvalue indices
    pub indices: Vec<usize>,
    pub fiber_samples: usize,
    pub max_fibers: usize,
}

impl Default for AsymptoticsSettings {
    fn default() -> Self {
        Self {
            eps: Vec::new(),
            indices: vec![1],
            fiber_samples: 9,
            max_fibers: 64,
        }
    }
}

/// Five halvings from `eps0 = 0.02 min(1, 1 / sup h)`.
pub fn default_eps_grid(h: &ThicknessProfile) -> Vec<f64> {
    let eps0 = 0.02 * if h.sup() > 1.0 { 1.0 / h.sup() } else { 1.0 };
    (0..5).map(|k| eps0 / f64::powi(2.0, k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub lambda_eps: f64,
    pub quotient: f64,
    /// distance of the restricted two-phase eigenvector from the limit eigenspace
    pub distance: f64,
    pub layer: LayerMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    /// slope within `[Q_min - delta, Q_max + delta]`
    pub sandwich: bool,
    /// slope equals `Q_min` within 1%; only decided at the first index of a cluster
    pub equality: Option<bool>,
    /// eigenvector distance decreases along the sweep
    pub convergence: bool,
    /// pooled fiber `R^2` at the smallest eps
    pub profile_r2: f64,
    pub profile_linear: bool,
    pub concentration: ConcentrationTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    /// 1-based index
    pub j: usize,
    pub lambda_limit: f64,
    /// 1-based indices of the limit eigenspace containing `j`
    pub cluster: Vec<usize>,
    pub q_min: f64,
    pub q_max: f64,
    pub sweep: Vec<SweepPoint>,
    /// free-intercept fit (prescribed intercept when fewer than 4 points); its slope is the extrapolated slope
    pub fit: SlopeFit,
    /// fit with the intercept fixed at the discrete limit eigenvalue
    pub fixed_fit: SlopeFit,
    pub delta: f64,
    pub verdicts: Verdicts,
}

/// Limit solve, two-phase solves over the eps grid and one report per index.
pub fn run_asymptotics(
    spec: &BoundarySpec,
    h: &ThicknessProfile,
    beta: f64,
    settings: &AsymptoticsSettings,
    disc: &Discretization,
) -> Result<Vec<AsymptoticReport>> {
    if settings.indices.is_empty() || settings.indices.contains(&0) {
        return Err(Error::Invalid("eigenvalue indices are 1-based and must be non-empty".into()));
    }
    let grid = if settings.eps.is_empty() { default_eps_grid(h) } else { settings.eps.clone() };
    if grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Invalid("eps values must be positive".into()));
    }
    let j_max = *settings.indices.iter().max().unwrap();
    let k = j_max + 3;
    let limit = solve_limit(spec, h, beta, k, disc)?;
    let solves: Vec<Solution> = grid.par_iter().map(|&eps| solve_twophase(spec, h, beta, eps, k, disc)).collect::<Result<_>>()?;
    for s in &solves {
        if s.mesh.interior_vertex_count() != limit.mesh.vertex_count() {
            return Err(Error::Invalid("two-phase and limit meshes of Omega differ".into()));
        }
    }
    settings.indices.iter().map(|&j| report(&limit, &solves, h, beta, j, settings)).collect()
}

fn report(
    limit: &Solution,
    solves: &[Solution],
    h: &ThicknessProfile,
    beta: f64,
    j: usize,
    settings: &AsymptoticsSettings,
) -> Result<AsymptoticReport> {
    let idx = j - 1;
    let lambda = limit.spectrum.eigenvalues[idx];
    let cluster = limit.spectrum.cluster_of(idx).to_vec();
    let basis: Vec<&[f64]> = cluster.iter().map(|&i| limit.spectrum.eigenvectors[i].as_slice()).collect();
    let (ext, _) = eigenspace_extremes(&limit.mesh, &limit.pencil, &basis, h, beta, lambda)?;
    let m = &limit.pencil.m;
    let mut sweep = Vec::with_capacity(solves.len());
    for s in solves {
        let u = &s.spectrum.eigenvectors[idx];
        let restricted = s.mesh.restrict_to_interior(u);
        let distance = if basis.len() == 1 {
            aligned_distance(m, basis[0], restricted)
        } else {
            subspace_distance(m, &basis, restricted)?
        };
        let eps = s.mesh.eps();
        let lambda_eps = s.spectrum.eigenvalues[idx];
        sweep.push(SweepPoint {
            eps,
            lambda_eps,
            quotient: (lambda_eps - lambda) / eps,
            distance,
            layer: nonconcentration_check(&s.pencil, u)?,
        });
    }
    let pairs: Vec<(f64, f64)> = sweep.iter().map(|p| (p.eps, p.lambda_eps)).collect();
    let fixed_fit = slope_estimate(&pairs, lambda)?;
    let fit = if pairs.len() >= 4 { expansion_fit(&pairs)? } else { fixed_fit.clone() };
    let delta = (1e-3 * lambda.abs()).max(2.0 * fit.residual);
    let first_of_cluster = cluster[0] == idx;

    let mut by_eps: Vec<&SweepPoint> = sweep.iter().collect();
    by_eps.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let convergence = by_eps.windows(2).all(|w| w[1].distance <= w[0].distance);

    let finest = solves.iter().min_by(|a, b| a.mesh.eps().total_cmp(&b.mesh.eps())).unwrap();
    let u = &finest.spectrum.eigenvectors[idx];
    let trace = project(m, &basis, finest.mesh.restrict_to_interior(u))?;
    let profile_r2 = layer_profile_fit(&finest.mesh, u, &trace, beta, settings.fiber_samples, settings.max_fibers)?;

    Ok(AsymptoticReport {
        j,
        lambda_limit: lambda,
        cluster: cluster.iter().map(|i| i + 1).collect(),
        q_min: ext.q_min,
        q_max: ext.q_max,
        verdicts: Verdicts {
            sandwich: fit.slope >= ext.q_min - delta && fit.slope <= ext.q_max + delta,
            equality: first_of_cluster.then(|| (fit.slope - ext.q_min).abs() <= 0.01 * ext.q_min.abs()),
            convergence,
            profile_r2,
            profile_linear: profile_r2 >= 0.99,
            concentration: concentration_trend(&sweep.iter().map(|p| p.layer).collect::<Vec<_>>()),
        },
        sweep,
        fit,
        fixed_fit,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshOptions};
    use crate::profiles::robin_coefficient;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn constant(c: f64) -> ThicknessProfile {
        ThicknessProfile::constant(c).unwrap()
    }

    #[test]
    fn weights() {
        // beta h = 1: c1 = 3/8, c2 = 7/12
        assert!((curvature_weight(1.0, 1.0) - 0.375).abs() < 1e-15);
        assert!((inertia_weight(1.0, 1.0) - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(curvature_weight(0.0, 2.0), 0.0);
        assert_eq!(inertia_weight(0.0, 2.0), 0.0);
    }

    #[test]
    fn layer_profile_values() {
        assert_eq!(layer_profile_prediction(2.0, 1.0, 1.0, 0.1, 0.0).unwrap(), 2.0);
        assert!((layer_profile_prediction(2.0, 1.0, 1.0, 0.1, 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert!((layer_profile_prediction(1.0, 1.0, 1.0, 0.1, 0.05).unwrap() - 0.75).abs() < 1e-15);
        assert!(layer_profile_prediction(1.0, 1.0, 1.0, 0.1, 0.2).is_err());
        assert!(layer_profile_prediction(1.0, 1.0, 1.0, 0.1, -1e-3).is_err());
    }

    #[test]
    fn slope_of_exact_quadratic() {
        let sweep: Vec<_> = [0.1, 0.05, 0.025].iter().map(|&e| (e, 3.0 + 2.0 * e + 5.0 * e * e)).collect();
        let fit = slope_estimate(&sweep, 3.0).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10);
        assert!((fit.curvature - 5.0).abs() < 1e-8);
        assert!(fit.residual < 1e-12);
        let flat = slope_estimate(&[(0.1, 3.0), (0.05, 3.0), (0.025, 3.0)], 3.0).unwrap();
        assert_eq!(flat.slope, 0.0);
        let grid = [0.1, 0.05, 0.025, 0.0125];
        let free = expansion_fit(&grid.map(|e| (e, 3.001 + 2.0 * e + 5.0 * e * e))).unwrap();
        assert!((free.intercept - 3.001).abs() < 1e-12);
        assert!((free.slope - 2.0).abs() < 1e-9);
        assert!(expansion_fit(&grid[..3].iter().map(|&e| (e, 3.0)).collect::<Vec<_>>()).is_err());
        assert!(slope_estimate(&[(0.1, 3.0), (0.1, 3.0), (0.05, 3.0)], 3.0).is_err());
    }

    fn limit_disk(h: f64, res: f64, k: usize) -> Solution {
        let disc = Discretization {
            resolution: res,
            ..Default::default()
        };
        solve_limit(&BoundarySpec::Disk { radius: 1.0 }, &constant(h), 1.0, k, &disc).unwrap()
    }

    #[test]
    fn zero_profile_gives_zero_quotient() {
        let s = limit_disk(0.0, 0.1, 3);
        let q = q_quotient(&s.mesh, &s.pencil, &s.spectrum.eigenvectors[0], &constant(0.0), 1.0, s.spectrum.eigenvalues[0]).unwrap();
        assert_eq!(q, 0.0);
        assert!(q_quotient(&s.mesh, &s.pencil, &vec![0.0; s.pencil.size()], &constant(0.5), 1.0, 1.0).is_err());
    }

    #[test]
    fn interval_quotient_is_endpoint_sum() {
        let spec = BoundarySpec::Interval { length: 1.0 };
        let h = constant(0.3);
        let disc = Discretization {
            resolution: 1e-3,
            ..Default::default()
        };
        let s = solve_limit(&spec, &h, 1.0, 2, &disc).unwrap();
        let v = &s.spectrum.eigenvectors[0];
        let lam = s.spectrum.eigenvalues[0];
        let n = v.len() - 1;
        let expected = -lam * inertia_weight(0.3, 1.0) * (v[0] * v[0] + v[n] * v[n]) / s.pencil.m.quadratic(v);
        let q = q_quotient(&s.mesh, &s.pencil, v, &h, 1.0, lam).unwrap();
        assert!((q - expected).abs() < 1e-14 * expected.abs());
    }

    #[test]
    fn disk_pair_is_rotation_invariant() {
        let h = constant(0.5);
        let s = limit_disk(0.5, 0.05, 3);
        let (l1, l2) = (&s.spectrum.eigenvectors[1], &s.spectrum.eigenvectors[2]);
        assert_eq!(s.spectrum.cluster_of(1), &[1, 2]);
        let lam = s.spectrum.eigenvalues[1];
        let forms = fem_forms(&s.mesh, &s.pencil, &[l1, l2], &h, 1.0, lam).unwrap();
        let ext = forms.extremes().unwrap();
        assert!(ext.q_max - ext.q_min < 1e-8, "{ext:?}");
        for k in 0..16 {
            let a = 2.0 * PI * k as f64 / 16.0 + 0.1;
            let q = forms.quotient(&[a.cos(), a.sin()]).unwrap();
            assert!((q - ext.q_min).abs() < 1e-8);
        }
        // orthogonal recombination of the basis
        let (c, sn) = (0.6, 0.8);
        let r1: Vec<f64> = l1.iter().zip(l2).map(|(a, b)| c * a + sn * b).collect();
        let r2: Vec<f64> = l1.iter().zip(l2).map(|(a, b)| -sn * a + c * b).collect();
        let rot = fem_forms(&s.mesh, &s.pencil, &[&r1, &r2], &h, 1.0, lam).unwrap().extremes().unwrap();
        assert!((rot.q_min - ext.q_min).abs() < 1e-10);
        assert!((rot.q_max - ext.q_max).abs() < 1e-10);
    }

    #[test]
    fn single_vector_extremes_match_quotient() {
        let h = constant(0.5);
        let s = limit_disk(0.5, 0.1, 2);
        let v = &s.spectrum.eigenvectors[0];
        let lam = s.spectrum.eigenvalues[0];
        let (ext, w) = eigenspace_extremes(&s.mesh, &s.pencil, &[v], &h, 1.0, lam).unwrap();
        let q = q_quotient(&s.mesh, &s.pencil, v, &h, 1.0, lam).unwrap();
        assert!((ext.q_min - q).abs() < 1e-12 * q.abs());
        assert_eq!(ext.q_min, ext.q_max);
        assert!((s.pencil.m.quadratic(&w) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_and_fem_forms_agree_for_constants() {
        // v = 1 on the unit disk: B = 2 pi (c1 - lambda c2), D = pi
        let spec = BoundarySpec::Disk { radius: 1.0 };
        let h = constant(0.5);
        let lam = 0.7;
        let f = trace_forms(&spec, &h, 1.0, lam, &|_| vec![1.0], Mat::from_fn(1, 1, |_, _| PI), 8).unwrap();
        let expected = 2.0 * (curvature_weight(0.5, 1.0) - lam * inertia_weight(0.5, 1.0));
        assert!((f.quotient(&[1.0]).unwrap() - expected).abs() < 1e-13);
        let mesh = build_mesh(&spec, None, 0.0, MeshOptions::new(0.02, 1)).unwrap();
        let pencil = crate::assembly::assemble_limit(&mesh, &robin_coefficient(&h, 1.0).unwrap()).unwrap();
        let ones = vec![1.0; pencil.size()];
        let q = q_quotient(&mesh, &pencil, &ones, &h, 1.0, lam).unwrap();
        // polygon area vs disk area
        assert!((q - expected).abs() < 1e-3 * expected.abs());
    }

    #[test]
    fn layer_mass_of_constant_field() {
        let spec = BoundarySpec::Disk { radius: 1.0 };
        let h = constant(0.5);
        let s = solve_twophase(
            &spec,
            &h,
            1.0,
            0.01,
            1,
            &Discretization {
                resolution: 0.05,
                layers: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let ones = vec![1.0; s.pencil.size()];
        let lm = nonconcentration_check(&s.pencil, &ones).unwrap();
        let total = s.mesh.total_measure();
        assert!((lm.layer_mass * total - 0.01 * PI).abs() < 0.02 * 0.01 * PI);
        // a hat function at the centre never reaches the layer
        let mut interior_only = vec![0.0; s.pencil.size()];
        interior_only[0] = 1.0;
        assert_eq!(nonconcentration_check(&s.pencil, &interior_only).unwrap().layer_mass, 0.0);
    }

    #[test]
    fn trends() {
        let p = |eps: f64, ratio: f64| LayerMass {
            eps,
            layer_mass: ratio * eps,
            ratio,
        };
        let stable = concentration_trend(&[p(0.01, 1.0), p(0.005, 1.05), p(0.0025, 1.08)]);
        assert!(stable.stable && !stable.growth_flag);
        let growing = concentration_trend(&[p(0.0025, 2.0), p(0.01, 1.0), p(0.005, 1.5)]);
        assert!(growing.growth_flag && !growing.stable);
    }

    #[test]
    fn distances() {
        let m = CsrMatrix::identity(3);
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0];
        let u = [-1.0, 0.0, 0.1];
        assert!((aligned_distance(&m, &e1, &u) - 0.1).abs() < 1e-15);
        assert!((subspace_distance(&m, &[&e1, &e2], &[3.0, 4.0, 0.5]).unwrap() - 0.5).abs() < 1e-14);
        let s = principal_angle_sine(&m, &[&e1, &e2], &[&[1.0, 1.0, 1.0]]).unwrap();
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!(principal_angle_sine(&m, &[&e1, &e2], &[&e2, &e1]).unwrap() < 1e-7);
    }

    #[test]
    fn r_squared_basics() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert!((r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]) - 0.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn slope_recovers_linear_models(s in -10.0f64..10.0, q in -50.0f64..50.0, lam in 0.0f64..20.0) {
            let sweep: Vec<_> = (0..5).map(|k| 0.02 / f64::powi(2.0, k)).map(|e| (e, lam + s * e + q * e * e)).collect();
            let fit = slope_estimate(&sweep, lam).unwrap();
            prop_assert!((fit.slope - s).abs() < 1e-8 * (1.0 + s.abs() + q.abs()));
        }

        #[test]
        fn prediction_is_linear_in_t(v in -5.0f64..5.0, h in 0.01f64..3.0, beta in 0.1f64..5.0, x in 0.0f64..1.0) {
            let eps = 0.01;
            let p0 = layer_profile_prediction(v, h, beta, eps, 0.0).unwrap();
            let p1 = layer_profile_prediction(v, h, beta, eps, eps * h).unwrap();
            let px = layer_profile_prediction(v, h, beta, eps, x * eps * h).unwrap();
            prop_assert!((px - (p0 + x * (p1 - p0))).abs() < 1e-12 * (1.0 + v.abs()));
            prop_assert!((p1 - v / (1.0 + beta * h)).abs() < 1e-12 * (1.0 + v.abs()));
        }
    }
}
