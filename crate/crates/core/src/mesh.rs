//! Tagged simplicial meshes of `Omega` and of the insulated domain `Omega_eps`.
//!
//! Vertices of `Omega` come first, so a field on the two-phase mesh restricts
//! to `Omega` by truncation to [`DomainMesh::interior_vertex_count`]. Layer
//! vertices are stored fiber by fiber: the fiber over interface vertex `i`
//! holds the points `sigma_i + t nu0(sigma_i)` for `t = l eps h(sigma_i) / n_t`.
//!
//! Planar domains are meshed by rings: ring `k` of `K` carries `S k` vertices
//! at `(k / K) gamma(tau)`, so the disk mesh is invariant under rotation by
//! `2 pi / S` and angular modes with `m` not a multiple of `S / 2` stay
//! exactly degenerate.

use serde::Serialize;

use crate::geometry::{offset_point, validate_embedding, BoundarySpec, GeometryError};
use crate::profiles::ThicknessProfile;

/// Angular sectors of the ring mesh.
pub const SECTORS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    Interior,
    Layer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FacetTag {
    /// `partial Omega`
    Interface,
    /// `partial Omega_eps`
    Outer,
}

/// A boundary facet (a point in 1-D, a segment in 2-D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    /// the second entry is unused in 1-D
    pub vertices: [usize; 2],
    pub tag: FacetTag,
    /// boundary parameter at each vertex, increasing (the closing facet ends at 1)
    pub tau: [f64; 2],
    /// curvature and thickness at the facet midpoint parameter
    pub curvature: f64,
    pub thickness: f64,
}

/// The layer vertices above one interface vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub tau: f64,
    pub normal: [f64; 2],
    /// starts with the interface vertex
    pub vertices: Vec<usize>,
    /// normal offsets `t` of `vertices`
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// target edge length in `Omega`
    pub resolution: f64,
    /// cell layers across the thickness
    pub layers: usize,
}

impl MeshOptions {
    pub fn new(resolution: f64, layers: usize) -> Self {
        Self { resolution, layers }
    }
}

#[derive(Debug, Clone)]
pub struct DomainMesh {
    spec: BoundarySpec,
    eps: f64,
    profile: Option<ThicknessProfile>,
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    regions: Vec<Region>,
    facets: Vec<Facet>,
    fibers: Vec<Fiber>,
    interior_vertices: usize,
}

fn cell_measure_of(dim: usize, v: &[[f64; 2]], c: &[usize; 3]) -> f64 {
    if dim == 1 {
        (v[c[1]][0] - v[c[0]][0]).abs()
    } else {
        signed_area(v[c[0]], v[c[1]], v[c[2]]).abs()
    }
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl DomainMesh {
    pub fn spec(&self) -> &BoundarySpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Layer scale `eps`; zero for a mesh of `Omega` alone.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn profile(&self) -> Option<&ThicknessProfile> {
        self.profile.as_ref()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn interior_vertex_count(&self) -> usize {
        self.interior_vertices
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Vertices of cell `i`: two in 1-D, three in 2-D.
    pub fn cell(&self, i: usize) -> &[usize] {
        &self.cells[i][..self.dim() + 1]
    }

    pub fn region(&self, i: usize) -> Region {
        self.regions[i]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet_vertices<'a>(&self, f: &'a Facet) -> &'a [usize] {
        &f.vertices[..self.dim()]
    }

    pub fn fibers(&self) -> &[Fiber] {
        &self.fibers
    }

    pub fn has_layer(&self) -> bool {
        self.regions.contains(&Region::Layer)
    }

    pub fn cell_measure(&self, i: usize) -> f64 {
        cell_measure_of(self.dim(), &self.vertices, &self.cells[i])
    }

    pub fn region_measure(&self, region: Region) -> f64 {
        (0..self.cells.len())
            .filter(|&i| self.regions[i] == region)
            .map(|i| self.cell_measure(i))
            .sum()
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.cells.len()).map(|i| self.cell_measure(i)).sum()
    }

    /// Length of a facet (1 for a point facet, the counting measure).
    pub fn facet_measure(&self, f: &Facet) -> f64 {
        if self.dim() == 1 {
            1.0
        } else {
            distance(self.vertices[f.vertices[0]], self.vertices[f.vertices[1]])
        }
    }

    pub fn boundary_measure(&self, tag: FacetTag) -> f64 {
        self.facets
            .iter()
            .filter(|f| f.tag == tag)
            .map(|f| self.facet_measure(f))
            .sum()
    }

    /// Smallest edge length over interface facets (2-D) or interior cells (1-D).
    pub fn boundary_spacing(&self) -> f64 {
        if self.dim() == 1 {
            self.spec_length() / (self.interior_vertices - 1) as f64
        } else {
            self.facets
                .iter()
                .filter(|f| f.tag == FacetTag::Interface)
                .map(|f| self.facet_measure(f))
                .fold(f64::INFINITY, f64::min)
        }
    }

    fn spec_length(&self) -> f64 {
        match self.spec {
            BoundarySpec::Interval { length } => length,
            _ => unreachable!(),
        }
    }

    /// Number of interface vertices (2 in 1-D).
    pub fn interface_vertex_count(&self) -> usize {
        self.fibers.len()
    }

    /// Restriction of a vertex field on this mesh to `Omega`.
    pub fn restrict_to_interior<'a>(&self, u: &'a [f64]) -> &'a [f64] {
        &u[..self.interior_vertices]
    }
}

/// Builds the mesh of `Omega` (`eps = 0`) or of `Omega_eps` (`eps > 0`).
///
/// A profile that vanishes identically produces no layer cells; the outer
/// facets then coincide with the interface. Otherwise the two-phase mesh
/// needs `inf h > 0` and a Lipschitz profile.
pub fn build_mesh(
    spec: &BoundarySpec,
    h: Option<&ThicknessProfile>,
    eps: f64,
    options: MeshOptions,
) -> Result<DomainMesh, GeometryError> {
    spec.validate()?;
    if !(options.resolution.is_finite() && options.resolution > 0.0) {
        return Err(GeometryError::Mesh(format!("resolution must be positive, got {}", options.resolution)));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(GeometryError::Mesh(format!("eps must be non-negative, got {eps}")));
    }
    let layered = if eps > 0.0 {
        let h = h.ok_or_else(|| GeometryError::Mesh("a two-phase mesh needs a thickness profile".into()))?;
        if options.layers == 0 {
            return Err(GeometryError::Mesh("at least one layer across the thickness is required".into()));
        }
        if !h.is_zero() {
            if h.inf() <= 0.0 {
                return Err(GeometryError::Mesh(format!(
                    "two-phase layer needs a strictly positive thickness, minimum is {}",
                    h.inf()
                )));
            }
            if !h.lipschitz().is_finite() && spec.is_closed_curve() {
                return Err(GeometryError::Mesh("two-phase layer needs a Lipschitz thickness profile".into()));
            }
            validate_embedding(spec, h, eps).into_result()?;
        }
        Some(h)
    } else {
        None
    };
    let mut mesh = match spec {
        BoundarySpec::Interval { length } => interval_mesh(*length, options.resolution),
        _ => ring_mesh(spec, options.resolution)?,
    };
    mesh.spec = spec.clone();
    if let Some(h) = layered {
        mesh.eps = eps;
        mesh.profile = Some(h.clone());
        extrude_layer(&mut mesh, h, eps, options.layers);
    }
    check_cells(&mesh)?;
    Ok(mesh)
}

fn empty_mesh(spec: BoundarySpec) -> DomainMesh {
    DomainMesh {
        spec,
        eps: 0.0,
        profile: None,
        vertices: Vec::new(),
        cells: Vec::new(),
        regions: Vec::new(),
        facets: Vec::new(),
        fibers: Vec::new(),
        interior_vertices: 0,
    }
}

fn interval_mesh(length: f64, resolution: f64) -> DomainMesh {
    let n = ((length / resolution).round() as usize).max(1);
    let mut mesh = empty_mesh(BoundarySpec::Interval { length });
    mesh.vertices = (0..=n).map(|i| [length * i as f64 / n as f64, 0.0]).collect();
    mesh.cells = (0..n).map(|i| [i, i + 1, usize::MAX]).collect();
    mesh.regions = vec![Region::Interior; n];
    mesh.interior_vertices = n + 1;
    for (v, tau, normal) in [(0, 0.0, -1.0), (n, 0.5, 1.0)] {
        mesh.facets.push(Facet {
            vertices: [v, usize::MAX],
            tag: FacetTag::Interface,
            tau: [tau, tau],
            curvature: 0.0,
            thickness: 0.0,
        });
        mesh.fibers.push(Fiber {
            tau,
            normal: [normal, 0.0],
            vertices: vec![v],
            offsets: vec![0.0],
        });
    }
    mesh
}

fn ring_start(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        1 + SECTORS * k * (k - 1) / 2
    }
}

fn ring_vertex(k: usize, i: usize) -> usize {
    if k == 0 {
        0
    } else {
        ring_start(k) + i % (SECTORS * k)
    }
}

fn ring_mesh(spec: &BoundarySpec, resolution: f64) -> Result<DomainMesh, GeometryError> {
    let rings = ((spec.max_radius() / resolution - 1e-9).ceil() as usize).max(1);
    let mut mesh = empty_mesh(spec.clone());
    mesh.vertices.push([0.0, 0.0]);
    for k in 1..=rings {
        let count = SECTORS * k;
        let scale = k as f64 / rings as f64;
        for i in 0..count {
            let p = spec.point(i as f64 / count as f64)?.x;
            mesh.vertices.push([scale * p[0], scale * p[1]]);
        }
    }
    mesh.interior_vertices = mesh.vertices.len();
    for k in 1..=rings {
        for s in 0..SECTORS {
            // outer vertices s k ..= s k + k, inner s (k-1) ..= s (k-1) + k - 1
            for j in 0..k {
                let o0 = ring_vertex(k, s * k + j);
                let o1 = ring_vertex(k, s * k + j + 1);
                let i0 = ring_vertex(k - 1, s * (k - 1) + j);
                mesh.cells.push([o0, o1, i0]);
                if j + 1 < k {
                    let i1 = ring_vertex(k - 1, s * (k - 1) + j + 1);
                    mesh.cells.push([i0, o1, i1]);
                }
            }
        }
    }
    for c in mesh.cells.iter_mut() {
        if signed_area(mesh.vertices[c[0]], mesh.vertices[c[1]], mesh.vertices[c[2]]) < 0.0 {
            c.swap(1, 2);
        }
    }
    mesh.regions = vec![Region::Interior; mesh.cells.len()];
    let nb = SECTORS * rings;
    for i in 0..nb {
        let t0 = i as f64 / nb as f64;
        let t1 = (i + 1) as f64 / nb as f64;
        let bp = spec.point(t0)?;
        mesh.facets.push(Facet {
            vertices: [ring_vertex(rings, i), ring_vertex(rings, i + 1)],
            tag: FacetTag::Interface,
            tau: [t0, t1],
            curvature: spec.curvature(0.5 * (t0 + t1))?,
            thickness: 0.0,
        });
        mesh.fibers.push(Fiber {
            tau: t0,
            normal: bp.normal,
            vertices: vec![ring_vertex(rings, i)],
            offsets: vec![0.0],
        });
    }
    Ok(mesh)
}

fn extrude_layer(mesh: &mut DomainMesh, h: &ThicknessProfile, eps: f64, layers: usize) {
    let dim = mesh.dim();
    let interface: Vec<Facet> = mesh.facets.clone();
    for f in mesh.facets.iter_mut() {
        f.thickness = h.value(0.5 * (f.tau[0] + f.tau[1]));
    }
    if h.is_zero() {
        for f in &interface {
            mesh.facets.push(Facet {
                tag: FacetTag::Outer,
                thickness: 0.0,
                ..*f
            });
        }
        return;
    }
    for fiber in mesh.fibers.iter_mut() {
        let base = mesh.vertices[fiber.vertices[0]];
        let thickness = eps * h.value(fiber.tau);
        let bp = crate::geometry::BoundaryPoint {
            tau: fiber.tau,
            x: base,
            normal: fiber.normal,
            curvature: 0.0,
        };
        for l in 1..=layers {
            let t = thickness * l as f64 / layers as f64;
            fiber.vertices.push(mesh.vertices.len());
            fiber.offsets.push(t);
            mesh.vertices.push(offset_point(&bp, t));
        }
    }
    if dim == 1 {
        for (fi, fiber) in mesh.fibers.iter().enumerate() {
            for w in fiber.vertices.windows(2) {
                let c = if fi == 0 { [w[1], w[0], usize::MAX] } else { [w[0], w[1], usize::MAX] };
                mesh.cells.push(c);
                mesh.regions.push(Region::Layer);
            }
            let f = &interface[fi];
            mesh.facets.push(Facet {
                vertices: [*fiber.vertices.last().unwrap(), usize::MAX],
                tag: FacetTag::Outer,
                tau: f.tau,
                curvature: 0.0,
                thickness: h.value(f.tau[0]),
            });
        }
        return;
    }
    let nb = mesh.fibers.len();
    for (i, f) in interface.iter().enumerate() {
        let a = &mesh.fibers[i];
        let b = &mesh.fibers[(i + 1) % nb];
        for l in 0..layers {
            let (a0, a1, b0, b1) = (a.vertices[l], a.vertices[l + 1], b.vertices[l], b.vertices[l + 1]);
            // the interface runs counter-clockwise with the layer on its right
            mesh.cells.push([a0, b1, b0]);
            mesh.cells.push([a0, a1, b1]);
            mesh.regions.push(Region::Layer);
            mesh.regions.push(Region::Layer);
        }
        mesh.facets.push(Facet {
            vertices: [a.vertices[layers], b.vertices[layers]],
            tag: FacetTag::Outer,
            tau: f.tau,
            curvature: f.curvature,
            thickness: h.value(0.5 * (f.tau[0] + f.tau[1])),
        });
    }
}

fn check_cells(mesh: &DomainMesh) -> Result<(), GeometryError> {
    for (i, c) in mesh.cells.iter().enumerate() {
        let (measure, scale) = if mesh.dim() == 1 {
            (mesh.vertices[c[1]][0] - mesh.vertices[c[0]][0], 1.0)
        } else {
            let (a, b, d) = (mesh.vertices[c[0]], mesh.vertices[c[1]], mesh.vertices[c[2]]);
            let longest = distance(a, b).max(distance(b, d)).max(distance(a, d));
            (signed_area(a, b, d), longest * longest)
        };
        if !(measure > 1e-14 * scale) {
            return Err(GeometryError::Mesh(format!("cell {i} is degenerate or inverted (measure {measure})")));
        }
    }
    Ok(())
}

/// Samples of `u` along the normal fiber through `sigma(tau)` at `n_samples`
/// equispaced offsets `t` in `[0, eps h(tau)]`, by P1 interpolation.
pub fn fiber_sample(mesh: &DomainMesh, u: &[f64], tau: f64, n_samples: usize) -> Result<Vec<(f64, f64)>, GeometryError> {
    let h = match mesh.profile() {
        Some(h) if mesh.has_layer() => h,
        _ => return Err(GeometryError::Mesh("fiber sampling needs a two-phase mesh with a layer".into())),
    };
    if u.len() != mesh.vertex_count() {
        return Err(GeometryError::Mesh(format!(
            "field has {} entries, mesh has {} vertices",
            u.len(),
            mesh.vertex_count()
        )));
    }
    if n_samples < 2 {
        return Err(GeometryError::Mesh("at least two fiber samples are required".into()));
    }
    if !tau.is_finite() {
        return Err(GeometryError::Parameter(tau));
    }
    let thickness = mesh.eps() * h.value(tau);
    let ts: Vec<f64> = (0..n_samples)
        .map(|i| thickness * i as f64 / (n_samples - 1) as f64)
        .collect();

    // Fibers sit at tau_i = i / nb (closed curves) or at the two endpoints.
    let fibers = mesh.fibers();
    let (ia, ib, s) = if mesh.dim() == 1 {
        let i = if tau.rem_euclid(1.0) < 0.5 { 0 } else { 1 };
        (i, i, 0.0)
    } else {
        let nb = fibers.len();
        let x = tau.rem_euclid(1.0) * nb as f64;
        let i = (x.floor() as usize).min(nb - 1);
        let s = x - i as f64;
        if s < 1e-12 {
            (i, i, 0.0)
        } else if s > 1.0 - 1e-12 {
            ((i + 1) % nb, (i + 1) % nb, 0.0)
        } else {
            (i, (i + 1) % nb, s)
        }
    };
    let (fa, fb) = (&fibers[ia], &fibers[ib]);
    let layers = fa.vertices.len() - 1;
    let mut out = Vec::with_capacity(n_samples);
    for &t in &ts {
        let r = if thickness > 0.0 { (t / thickness).clamp(0.0, 1.0) } else { 0.0 };
        let l = ((r * layers as f64).floor() as usize).min(layers - 1);
        let q = r * layers as f64 - l as f64;
        let value = if ia == ib {
            (1.0 - q) * u[fa.vertices[l]] + q * u[fa.vertices[l + 1]]
        } else {
            let corner = |f: &Fiber, k: usize| mesh.vertices[f.vertices[k]];
            let (a0, a1, b0, b1) = (corner(fa, l), corner(fa, l + 1), corner(fb, l), corner(fb, l + 1));
            let lerp = |p: [f64; 2], q_: [f64; 2], w: f64| [p[0] + w * (q_[0] - p[0]), p[1] + w * (q_[1] - p[1])];
            let point = lerp(lerp(a0, b0, s), lerp(a1, b1, s), q);
            let tris = [
                [fa.vertices[l], fb.vertices[l + 1], fb.vertices[l]],
                [fa.vertices[l], fa.vertices[l + 1], fb.vertices[l + 1]],
            ];
            let mut best = (f64::NEG_INFINITY, 0.0);
            for tri in tris {
                let p = tri.map(|v| mesh.vertices[v]);
                let area = signed_area(p[0], p[1], p[2]);
                let w = [
                    signed_area(point, p[1], p[2]) / area,
                    signed_area(p[0], point, p[2]) / area,
                    signed_area(p[0], p[1], point) / area,
                ];
                let worst = w[0].min(w[1]).min(w[2]);
                if worst > best.0 {
                    best = (worst, w[0] * u[tri[0]] + w[1] * u[tri[1]] + w[2] * u[tri[2]]);
                }
            }
            if best.0 < -1e-9 {
                return Err(GeometryError::Mesh(format!("fiber point at tau = {tau}, t = {t} left the layer")));
            }
            best.1
        };
        out.push((t, value));
    }
    Ok(out)
}
