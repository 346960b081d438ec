//! P1 assembly of the limit Robin pencil and the two-phase pencil.

use thiserror::Error;

use crate::mesh::{DomainMesh, Facet, FacetTag, Region};
use crate::profiles::RobinCoefficient;
use crate::quadrature::gauss_legendre_unit;
use crate::sparse::{Cholesky, CsrMatrix, SparseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("mesh does not fit the requested pencil: {0}")]
    MeshMismatch(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("vector has {got} entries, pencil has {want} unknowns")]
    Dimension { got: usize, want: usize },
    #[error("zero mass form on the given vector")]
    ZeroMass,
    #[error(transparent)]
    Solver(#[from] SparseError),
}

/// Which problem a pencil discretizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PencilKind {
    Limit,
    TwoPhase { eps: f64, beta: f64 },
    /// built from user matrices
    Custom,
}

/// A coefficient on the boundary, as a function of the boundary parameter.
pub trait BoundaryWeight {
    fn value(&self, tau: f64) -> f64;
    /// parameters where the coefficient may jump
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl BoundaryWeight for RobinCoefficient {
    fn value(&self, tau: f64) -> f64 {
        RobinCoefficient::value(self, tau)
    }

    fn breakpoints(&self) -> Vec<f64> {
        RobinCoefficient::breakpoints(self)
    }
}

/// A constant boundary coefficient, zero allowed (Neumann).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantWeight(pub f64);

impl BoundaryWeight for ConstantWeight {
    fn value(&self, _tau: f64) -> f64 {
        self.0
    }
}

/// Symmetric pencil `A v = lambda M v` with the mass form split by region.
#[derive(Debug, Clone)]
pub struct OperatorPencil {
    pub a: CsrMatrix,
    pub m: CsrMatrix,
    /// `int_Omega u v`
    pub m_interior: CsrMatrix,
    /// `int_Sigma u v`
    pub m_layer: CsrMatrix,
    pub kind: PencilKind,
    /// leading unknowns that live on `Omega` (vertex index = unknown index)
    pub interior_dofs: usize,
}

struct Accumulator {
    a: Vec<(usize, usize, f64)>,
    m_int: Vec<(usize, usize, f64)>,
    m_lay: Vec<(usize, usize, f64)>,
}

fn cell_matrices(mesh: &DomainMesh, cell: usize) -> (Vec<usize>, [[f64; 3]; 3], [[f64; 3]; 3]) {
    let c = mesh.cell(cell).to_vec();
    let p = mesh.vertices();
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    if c.len() == 2 {
        let len = (p[c[1]][0] - p[c[0]][0]).abs();
        k[0][0] = 1.0 / len;
        k[1][1] = 1.0 / len;
        k[0][1] = -1.0 / len;
        k[1][0] = -1.0 / len;
        m[0][0] = len / 3.0;
        m[1][1] = len / 3.0;
        m[0][1] = len / 6.0;
        m[1][0] = len / 6.0;
    } else {
        let x = [p[c[0]], p[c[1]], p[c[2]]];
        let area = crate::mesh::signed_area(x[0], x[1], x[2]).abs();
        // edge opposite each vertex
        let e: Vec<[f64; 2]> = (0..3)
            .map(|i| {
                let (a, b) = (x[(i + 1) % 3], x[(i + 2) % 3]);
                [b[0] - a[0], b[1] - a[1]]
            })
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                k[i][j] = (e[i][0] * e[j][0] + e[i][1] * e[j][1]) / (4.0 * area);
                m[i][j] = if i == j { area / 6.0 } else { area / 12.0 };
            }
        }
    }
    (c, k, m)
}

impl Accumulator {
    fn new() -> Self {
        Self {
            a: Vec::new(),
            m_int: Vec::new(),
            m_lay: Vec::new(),
        }
    }

    fn cells(&mut self, mesh: &DomainMesh, layer_coefficient: f64) {
        for cell in 0..mesh.cell_count() {
            let (c, k, m) = cell_matrices(mesh, cell);
            let (coef, target) = match mesh.region(cell) {
                Region::Interior => (1.0, &mut self.m_int),
                Region::Layer => (layer_coefficient, &mut self.m_lay),
            };
            for (i, &vi) in c.iter().enumerate() {
                for (j, &vj) in c.iter().enumerate() {
                    self.a.push((vi, vj, coef * k[i][j]));
                    target.push((vi, vj, m[i][j]));
                }
            }
        }
    }

    /// `int_facet w u v`, split at the weight's breakpoints with 3 Gauss points per piece.
    fn facet(&mut self, mesh: &DomainMesh, f: &Facet, weight: &dyn BoundaryWeight, breakpoints: &[f64]) {
        let v = mesh.facet_vertices(f);
        if v.len() == 1 {
            let w = weight.value(f.tau[0]);
            self.a.push((v[0], v[0], w));
            return;
        }
        let len = mesh.facet_measure(f);
        let (t0, t1) = (f.tau[0], f.tau[1]);
        let mut cuts = vec![t0];
        cuts.extend(breakpoints.iter().copied().filter(|&b| b > t0 && b < t1));
        cuts.push(t1);
        let rule = gauss_legendre_unit(3);
        let mut local = [[0.0; 2]; 2];
        for piece in cuts.windows(2) {
            let (sa, sb) = ((piece[0] - t0) / (t1 - t0), (piece[1] - t0) / (t1 - t0));
            for &(x, wq) in &rule {
                let s = sa + (sb - sa) * x;
                let tau = t0 + s * (t1 - t0);
                let wt = wq * (sb - sa) * len * weight.value(tau);
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
                self.a.push((v[i], v[j], local[i][j]));
            }
        }
    }

    fn finish(self, n: usize, kind: PencilKind, interior_dofs: usize) -> OperatorPencil {
        let m_interior = CsrMatrix::from_triplets(n, &self.m_int);
        let m_layer = CsrMatrix::from_triplets(n, &self.m_lay);
        let mut all = self.m_int;
        all.extend(self.m_lay);
        OperatorPencil {
            a: CsrMatrix::from_triplets(n, &self.a),
            m: CsrMatrix::from_triplets(n, &all),
            m_interior,
            m_layer,
            kind,
            interior_dofs,
        }
    }
}

/// `A = int_Omega grad u . grad v + int_{partial Omega} b u v`, `M = int_Omega u v`.
pub fn assemble_limit(mesh: &DomainMesh, b: &dyn BoundaryWeight) -> Result<OperatorPencil, AssemblyError> {
    if mesh.has_layer() || mesh.eps() > 0.0 {
        return Err(AssemblyError::MeshMismatch("the limit pencil needs a mesh of Omega without a layer".into()));
    }
    let breakpoints = b.breakpoints();
    let mut acc = Accumulator::new();
    acc.cells(mesh, 1.0);
    for f in mesh.facets().iter().filter(|f| f.tag == FacetTag::Interface) {
        acc.facet(mesh, f, b, &breakpoints);
    }
    Ok(acc.finish(mesh.vertex_count(), PencilKind::Limit, mesh.interior_vertex_count()))
}

/// `A = int_Omega grad u . grad v + eps int_Sigma grad u . grad v + beta int_{partial Omega_eps} u v`,
/// `M = int_{Omega_eps} u v`.
pub fn assemble_twophase(mesh: &DomainMesh, eps: f64, beta: f64) -> Result<OperatorPencil, AssemblyError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(AssemblyError::Parameter(format!("eps must be positive, got {eps}")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(AssemblyError::Parameter(format!("beta must be positive, got {beta}")));
    }
    if mesh.eps() != eps {
        return Err(AssemblyError::MeshMismatch(format!("mesh was built for eps = {}, not {eps}", mesh.eps())));
    }
    let weight = ConstantWeight(beta);
    let mut acc = Accumulator::new();
    acc.cells(mesh, eps);
    for f in mesh.facets().iter().filter(|f| f.tag == FacetTag::Outer) {
        acc.facet(mesh, f, &weight, &[]);
    }
    Ok(acc.finish(mesh.vertex_count(), PencilKind::TwoPhase { eps, beta }, mesh.interior_vertex_count()))
}

impl OperatorPencil {
    /// A pencil from explicit matrices; the whole space counts as interior.
    pub fn from_matrices(a: CsrMatrix, m: CsrMatrix) -> Result<Self, AssemblyError> {
        if a.size() != m.size() {
            return Err(AssemblyError::Dimension {
                got: a.size(),
                want: m.size(),
            });
        }
        let n = a.size();
        Ok(Self {
            m_interior: m.clone(),
            m_layer: CsrMatrix::from_triplets(n, &[]),
            a,
            m,
            kind: PencilKind::Custom,
            interior_dofs: n,
        })
    }

    pub fn size(&self) -> usize {
        self.a.size()
    }

    fn check(&self, w: &[f64]) -> Result<(), AssemblyError> {
        if w.len() != self.size() {
            return Err(AssemblyError::Dimension {
                got: w.len(),
                want: self.size(),
            });
        }
        Ok(())
    }

    /// `w^T A w / w^T M w`.
    pub fn rayleigh(&self, w: &[f64]) -> Result<f64, AssemblyError> {
        self.check(w)?;
        let mass = self.m.quadratic(w);
        if !(mass > 0.0) {
            return Err(AssemblyError::ZeroMass);
        }
        Ok(self.a.quadratic(w) / mass)
    }

    /// Solves `A v = M f`, the discrete resolvent applied to `f`.
    pub fn solve_source(&self, f: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        self.check(f)?;
        let chol = Cholesky::new(&self.a)?;
        Ok(chol.solve(&self.m.mul_vec(f)))
    }

    /// `int_Omega w^2`.
    pub fn interior_mass(&self, w: &[f64]) -> f64 {
        self.m_interior.quadratic(w)
    }

    /// `int_Sigma w^2`.
    pub fn layer_mass(&self, w: &[f64]) -> f64 {
        self.m_layer.quadratic(w)
    }
}
