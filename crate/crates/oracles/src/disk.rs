//! Separated-variable spectra of the disk and the insulated disk.
//!
//! Eigenfunctions are `R_m(r) cos(m t)` and `R_m(r) sin(m t)`. In the disk the
//! radial part is `J_m(w r)`; in the annular layer `R < r < R + eps h` it is a
//! combination of `J_m` and `Y_m` at wavenumber `w / sqrt(eps)` chosen to
//! satisfy the outer Robin condition. Roots of the matching condition are
//! found by scanning in `w` and bisecting.

use std::f64::consts::PI;

use crate::bessel::{bessel_j_with_derivative, bessel_y_with_derivative, CylinderValue};
use crate::error::OracleError;
use crate::roots::{roots_below, scan_roots};

/// Angular dependence of a disk mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Cos,
    Sin,
}

impl Parity {
    pub fn angular(&self, order: usize, theta: f64) -> f64 {
        match self {
            Parity::Cos => (order as f64 * theta).cos(),
            Parity::Sin => (order as f64 * theta).sin(),
        }
    }
}

/// `int_0^{2 pi}` of the squared angular factor.
pub fn angular_norm_squared(order: usize) -> f64 {
    if order == 0 {
        2.0 * PI
    } else {
        PI
    }
}

/// One entry of a merged disk spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskEigenvalue {
    pub value: f64,
    /// angular order `m`
    pub order: usize,
    /// 1-based radial index within the order
    pub radial_index: usize,
    pub parity: Parity,
}

const MAX_SCAN_STEPS: usize = 2_000_000;

fn check(name: &str, v: f64) -> Result<(), OracleError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(OracleError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn merge(per_order: Vec<(usize, Vec<f64>)>) -> Vec<DiskEigenvalue> {
    let mut out = Vec::new();
    for (order, omegas) in per_order {
        for (i, w) in omegas.iter().enumerate() {
            let parities: &[Parity] = if order == 0 { &[Parity::Cos] } else { &[Parity::Cos, Parity::Sin] };
            for &parity in parities {
                out.push(DiskEigenvalue {
                    value: w * w,
                    order,
                    radial_index: i + 1,
                    parity,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.order.cmp(&b.order))
            .then((a.parity == Parity::Sin).cmp(&(b.parity == Parity::Sin)))
    });
    out
}

/// Shared driver: a radial matching function per order, a scan step, and
/// the order-dependent scan start.
trait RadialProblem {
    fn matching(&self, order: usize, omega: f64) -> Result<f64, OracleError>;
    fn scan_step(&self) -> f64;
    fn scan_start(&self, order: usize) -> f64;

    fn radial_roots(&self, order: usize, count: usize) -> Result<Vec<f64>, OracleError> {
        let mut err = None;
        let f = |w: f64| match self.matching(order, w) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        };
        let res = scan_roots(f, self.scan_start(order), self.scan_step(), count, MAX_SCAN_STEPS);
        if let Some(e) = err {
            return Err(e);
        }
        res.map_err(|(lo, hi)| OracleError::BracketExhausted { lo, hi })
    }

    fn radial_roots_below(&self, order: usize, omega_max: f64) -> Result<Vec<f64>, OracleError> {
        let mut err = None;
        let f = |w: f64| match self.matching(order, w) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        };
        let start = self.scan_start(order);
        let roots = if start >= omega_max {
            Vec::new()
        } else {
            roots_below(f, start, omega_max, self.scan_step())
        };
        match err {
            Some(e) => Err(e),
            None => Ok(roots),
        }
    }

    fn spectrum(&self, m_max: usize, k_per_m: usize) -> Result<Vec<DiskEigenvalue>, OracleError> {
        let mut per_order = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            per_order.push((m, self.radial_roots(m, k_per_m)?));
        }
        Ok(merge(per_order))
    }

    /// The `count` smallest eigenvalues (with multiplicity) over all orders.
    fn lowest(&self, count: usize) -> Result<Vec<DiskEigenvalue>, OracleError> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let base = self.radial_roots(0, count)?;
        let mut bound = base[count - 1];
        let mut per_order = vec![(0, base)];
        let mut m = 1;
        loop {
            let roots = self.radial_roots_below(m, bound)?;
            if roots.is_empty() {
                break;
            }
            per_order.push((m, roots));
            let merged = merge(per_order.clone());
            if merged.len() >= count {
                bound = bound.min(merged[count - 1].value.sqrt());
            }
            m += 1;
        }
        let mut merged = merge(per_order);
        merged.retain(|e| e.value <= bound * bound * (1.0 + 1e-14));
        merged.truncate(count);
        Ok(merged)
    }
}

/// The limit problem on the disk: `dw/dr + b w = 0` at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskLimit {
    pub radius: f64,
    pub b: f64,
}

impl DiskLimit {
    pub fn new(radius: f64, b: f64) -> Result<Self, OracleError> {
        check("radius", radius)?;
        check("b", b)?;
        Ok(Self { radius, b })
    }

    /// `w J_m'(w R) + b J_m(w R)`.
    pub fn dispersion(&self, order: usize, omega: f64) -> Result<f64, OracleError> {
        let j = bessel_j_with_derivative(order, omega * self.radius)?;
        Ok(omega * j.derivative + self.b * j.value)
    }

    pub fn roots(&self, order: usize, count: usize) -> Result<Vec<f64>, OracleError> {
        self.radial_roots(order, count)
    }

    pub fn spectrum(&self, m_max: usize, k_per_m: usize) -> Result<Vec<DiskEigenvalue>, OracleError> {
        RadialProblem::spectrum(self, m_max, k_per_m)
    }

    pub fn lowest(&self, count: usize) -> Result<Vec<DiskEigenvalue>, OracleError> {
        RadialProblem::lowest(self, count)
    }

    pub fn mode(&self, e: &DiskEigenvalue) -> DiskLimitMode {
        DiskLimitMode {
            problem: *self,
            order: e.order,
            parity: e.parity,
            omega: e.value.sqrt(),
        }
    }
}

impl RadialProblem for DiskLimit {
    fn matching(&self, order: usize, omega: f64) -> Result<f64, OracleError> {
        self.dispersion(order, omega)
    }

    fn scan_step(&self) -> f64 {
        PI / self.radius / 16.0
    }

    fn scan_start(&self, order: usize) -> f64 {
        // first Robin root lies above j'_{m,1} > m for m >= 1
        if order == 0 {
            1e-9 / self.radius
        } else {
            0.5 * order as f64 / self.radius
        }
    }
}

/// A limit eigenmode `J_m(w r) * angular(m t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskLimitMode {
    pub problem: DiskLimit,
    pub order: usize,
    pub parity: Parity,
    pub omega: f64,
}

impl DiskLimitMode {
    pub fn eigenvalue(&self) -> f64 {
        self.omega * self.omega
    }

    pub fn radial(&self, r: f64) -> Result<f64, OracleError> {
        Ok(bessel_j_with_derivative(self.order, self.omega * r)?.value)
    }

    pub fn value(&self, r: f64, theta: f64) -> Result<f64, OracleError> {
        Ok(self.radial(r)? * self.parity.angular(self.order, theta))
    }

    /// `int_0^R J_m(w r)^2 r dr`.
    pub fn radial_norm_squared(&self) -> Result<f64, OracleError> {
        let r = self.problem.radius;
        let j = bessel_j_with_derivative(self.order, self.omega * r)?;
        Ok(lommel(self.order, self.omega, r, j))
    }

    /// `int_Omega u^2`.
    pub fn norm_squared(&self) -> Result<f64, OracleError> {
        Ok(self.radial_norm_squared()? * angular_norm_squared(self.order))
    }
}

/// `int^r C_m(k s)^2 s ds` antiderivative for any cylinder function `C_m`.
fn lommel(order: usize, kappa: f64, r: f64, c: CylinderValue) -> f64 {
    let x = kappa * r;
    let m2 = (order * order) as f64;
    0.5 * r * r * (c.derivative * c.derivative + (1.0 - m2 / (x * x)) * c.value * c.value)
}

/// The insulated disk: conductivity 1 in `r < R`, `eps` in `R < r < R + eps h`,
/// `eps dw/dr + beta w = 0` at `r = R + eps h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskTwoPhase {
    pub radius: f64,
    pub eps: f64,
    pub thickness: f64,
    pub beta: f64,
}

/// Layer solution coefficients `(c_j, c_y)` for a given frequency.
#[derive(Debug, Clone, Copy)]
struct LayerSolution {
    kappa: f64,
    cj: f64,
    cy: f64,
}

impl LayerSolution {
    fn eval(&self, order: usize, r: f64) -> Result<CylinderValue, OracleError> {
        let x = self.kappa * r;
        let j = bessel_j_with_derivative(order, x)?;
        let y = bessel_y_with_derivative(order, x)?;
        Ok(CylinderValue {
            value: self.cj * j.value + self.cy * y.value,
            derivative: self.cj * j.derivative + self.cy * y.derivative,
        })
    }
}

impl DiskTwoPhase {
    pub fn new(radius: f64, eps: f64, thickness: f64, beta: f64) -> Result<Self, OracleError> {
        check("radius", radius)?;
        check("thickness", thickness)?;
        check("beta", beta)?;
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(OracleError::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        Ok(Self {
            radius,
            eps,
            thickness,
            beta,
        })
    }

    pub fn outer_radius(&self) -> f64 {
        self.radius + self.eps * self.thickness
    }

    /// The limit problem this family converges to.
    pub fn limit(&self) -> DiskLimit {
        DiskLimit {
            radius: self.radius,
            b: self.beta / (1.0 + self.beta * self.thickness),
        }
    }

    fn layer(&self, order: usize, omega: f64) -> Result<LayerSolution, OracleError> {
        let kappa = omega / self.eps.sqrt();
        let x = kappa * self.outer_radius();
        let j = bessel_j_with_derivative(order, x)?;
        let y = bessel_y_with_derivative(order, x)?;
        let ek = self.eps * kappa;
        Ok(LayerSolution {
            kappa,
            cj: ek * y.derivative + self.beta * y.value,
            cy: -(ek * j.derivative + self.beta * j.value),
        })
    }

    /// Interface matching `w J_m'(wR) W(R) - eps J_m(wR) W'(R)`, where `W`
    /// solves the layer equation with the outer Robin condition.
    pub fn matching_function(&self, order: usize, omega: f64) -> Result<f64, OracleError> {
        let inner = bessel_j_with_derivative(order, omega * self.radius)?;
        let layer = self.layer(order, omega)?;
        let w = layer.eval(order, self.radius)?;
        let v = omega * inner.derivative * w.value - self.eps * inner.value * layer.kappa * w.derivative;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(OracleError::BesselRange { x: omega * self.radius })
        }
    }

    pub fn roots(&self, order: usize, count: usize) -> Result<Vec<f64>, OracleError> {
        self.radial_roots(order, count)
    }

    pub fn spectrum(&self, m_max: usize, k_per_m: usize) -> Result<Vec<DiskEigenvalue>, OracleError> {
        RadialProblem::spectrum(self, m_max, k_per_m)
    }

    pub fn lowest(&self, count: usize) -> Result<Vec<DiskEigenvalue>, OracleError> {
        RadialProblem::lowest(self, count)
    }

    pub fn mode(&self, e: &DiskEigenvalue) -> Result<DiskTwoPhaseMode, OracleError> {
        let omega = e.value.sqrt();
        let layer = self.layer(e.order, omega)?;
        let inner = bessel_j_with_derivative(e.order, omega * self.radius)?;
        let w = layer.eval(e.order, self.radius)?;
        // match the trace, or the flux when the trace is (near) zero
        let scale = if w.value.abs() * layer.kappa >= (w.derivative * layer.kappa).abs() * 1e-3 && w.value != 0.0 {
            inner.value / w.value
        } else {
            omega * inner.derivative / (self.eps * layer.kappa * w.derivative)
        };
        Ok(DiskTwoPhaseMode {
            problem: *self,
            order: e.order,
            parity: e.parity,
            omega,
            layer: LayerSolution {
                kappa: layer.kappa,
                cj: layer.cj * scale,
                cy: layer.cy * scale,
            },
        })
    }
}

impl RadialProblem for DiskTwoPhase {
    fn matching(&self, order: usize, omega: f64) -> Result<f64, OracleError> {
        self.matching_function(order, omega)
    }

    fn scan_step(&self) -> f64 {
        let layer_period = PI / (self.eps.sqrt() * self.thickness);
        (PI / self.radius).min(layer_period) / 16.0
    }

    fn scan_start(&self, order: usize) -> f64 {
        if order == 0 {
            1e-9 / self.radius
        } else {
            0.5 * order as f64 / self.outer_radius()
        }
    }
}

/// An eigenmode of the insulated disk.
#[derive(Debug, Clone, Copy)]
pub struct DiskTwoPhaseMode {
    pub problem: DiskTwoPhase,
    pub order: usize,
    pub parity: Parity,
    pub omega: f64,
    layer: LayerSolution,
}

impl DiskTwoPhaseMode {
    pub fn eigenvalue(&self) -> f64 {
        self.omega * self.omega
    }

    /// Radial factor on `[0, R + eps h]`.
    pub fn radial(&self, r: f64) -> Result<f64, OracleError> {
        if r <= self.problem.radius {
            Ok(bessel_j_with_derivative(self.order, self.omega * r)?.value)
        } else {
            Ok(self.layer.eval(self.order, r)?.value)
        }
    }

    /// `int_0^R` of the squared radial factor times `r`.
    pub fn interior_radial_norm_squared(&self) -> Result<f64, OracleError> {
        let r = self.problem.radius;
        let j = bessel_j_with_derivative(self.order, self.omega * r)?;
        Ok(lommel(self.order, self.omega, r, j))
    }

    /// Same over the layer `R < r < R + eps h`.
    pub fn layer_radial_norm_squared(&self) -> Result<f64, OracleError> {
        let a = self.problem.radius;
        let b = self.problem.outer_radius();
        let k = self.layer.kappa;
        Ok(lommel(self.order, k, b, self.layer.eval(self.order, b)?) - lommel(self.order, k, a, self.layer.eval(self.order, a)?))
    }

    pub fn interior_norm_squared(&self) -> Result<f64, OracleError> {
        Ok(self.interior_radial_norm_squared()? * angular_norm_squared(self.order))
    }

    pub fn layer_norm_squared(&self) -> Result<f64, OracleError> {
        Ok(self.layer_radial_norm_squared()? * angular_norm_squared(self.order))
    }
}

/// Limit spectrum on the disk, `m <= m_max`, `k_per_m` radial roots each,
/// merged ascending with `m >= 1` listed twice.
pub fn disk_limit_spectrum(radius: f64, b: f64, m_max: usize, k_per_m: usize) -> Result<Vec<DiskEigenvalue>, OracleError> {
    DiskLimit::new(radius, b)?.spectrum(m_max, k_per_m)
}

/// Insulated-disk spectrum, same layout as [`disk_limit_spectrum`].
pub fn disk_twophase_spectrum(
    radius: f64,
    eps: f64,
    thickness: f64,
    beta: f64,
    m_max: usize,
    k_per_m: usize,
) -> Result<Vec<DiskEigenvalue>, OracleError> {
    DiskTwoPhase::new(radius, eps, thickness, beta)?.spectrum(m_max, k_per_m)
}
