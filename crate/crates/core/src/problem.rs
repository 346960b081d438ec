//! One-call solves of the limit and two-phase problems.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_limit, assemble_twophase, BoundaryWeight, OperatorPencil};
use crate::eigensolve::{solve_generalized, SolverOptions, Spectrum};
use crate::error::{Error, Result};
use crate::geometry::BoundarySpec;
use crate::mesh::{build_mesh, DomainMesh, MeshOptions};
use crate::profiles::{robin_coefficient, ThicknessProfile};

/// Mesh and solver settings shared by every solve of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    /// target edge length in `Omega`
    pub resolution: f64,
    /// cell layers across the insulating layer
    pub layers: usize,
    pub solver: SolverOptions,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            resolution: 0.02,
            layers: 8,
            solver: SolverOptions::default(),
        }
    }
}

impl Discretization {
    pub fn mesh_options(&self) -> MeshOptions {
        MeshOptions::new(self.resolution, self.layers)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: DomainMesh,
    pub pencil: OperatorPencil,
    pub spectrum: Spectrum,
}

impl Solution {
    /// Eigenvector `j` (0-based) restricted to `Omega`.
    pub fn interior_vector(&self, j: usize) -> &[f64] {
        self.mesh.restrict_to_interior(&self.spectrum.eigenvectors[j])
    }
}

/// Lowest `k` eigenpairs of the limit problem with `b = beta / (1 + beta h)`.
pub fn solve_limit(spec: &BoundarySpec, h: &ThicknessProfile, beta: f64, k: usize, disc: &Discretization) -> Result<Solution> {
    let b = robin_coefficient(h, beta)?;
    solve_limit_weight(spec, &b, k, disc)
}

/// Lowest `k` eigenpairs of the Robin problem with an arbitrary coefficient.
pub fn solve_limit_weight(spec: &BoundarySpec, b: &dyn BoundaryWeight, k: usize, disc: &Discretization) -> Result<Solution> {
    let mesh = build_mesh(spec, None, 0.0, disc.mesh_options())?;
    let pencil = assemble_limit(&mesh, b)?;
    let spectrum = solve_generalized(&pencil, k, &disc.solver)?;
    Ok(Solution { mesh, pencil, spectrum })
}

/// Lowest `k` eigenpairs of the two-phase problem at thickness `eps h`.
pub fn solve_twophase(
    spec: &BoundarySpec,
    h: &ThicknessProfile,
    beta: f64,
    eps: f64,
    k: usize,
    disc: &Discretization,
) -> Result<Solution> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Invalid(format!("beta must be positive, got {beta}")));
    }
    let mesh = build_mesh(spec, Some(h), eps, disc.mesh_options())?;
    let pencil = assemble_twophase(&mesh, eps, beta)?;
    let spectrum = solve_generalized(&pencil, k, &disc.solver)?;
    Ok(Solution { mesh, pencil, spectrum })
}
