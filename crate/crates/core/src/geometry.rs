//! Analytic boundary descriptions.
//!
//! Every boundary is parametrized by a normalized coordinate `tau` in `[0, 1)`.
//! Closed curves are traversed counter-clockwise with `theta = 2 pi tau`; the
//! interval's two endpoints sit at `tau = 0` (left) and `tau = 0.5` (right).
//! Curvature is the signed curvature of the curve, positive on convex arcs,
//! which is also the first-order coefficient of the offset Jacobian
//! `1 + t H` in two dimensions.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::ThicknessProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid boundary: {0}")]
    InvalidSpec(String),
    #[error("boundary parameter {0} outside [0, 1)")]
    Parameter(f64),
    #[error("curvature is not bounded near tau = {tau} (value {value})")]
    Irregular { tau: f64, value: f64 },
    #[error("layer offset {offset} exceeds the admissible reach {reach}")]
    Embedding { offset: f64, reach: f64 },
    #[error("mesh error: {0}")]
    Mesh(String),
}

/// Samples used for numerical checks on closed curves (min radius, curvature bounds).
const CURVE_SAMPLES: usize = 4096;

/// Shape of `Omega`. All lengths are dimensionless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundarySpec {
    Interval { length: f64 },
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    /// `r(theta) = r0 + sum_k cos[k-1] cos(k theta) + sin[k-1] sin(k theta)`
    PolarCurve {
        r0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

/// A point on the boundary with its outward normal and curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub tau: f64,
    pub x: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
}

/// Position, first and second derivative in `theta`.
struct CurveJet {
    p: [f64; 2],
    d1: [f64; 2],
    d2: [f64; 2],
}

impl BoundarySpec {
    /// Spatial dimension of `Omega`.
    pub fn dim(&self) -> usize {
        match self {
            BoundarySpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn is_closed_curve(&self) -> bool {
        self.dim() == 2
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(GeometryError::InvalidSpec(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            BoundarySpec::Interval { length } => positive("length", *length),
            BoundarySpec::Disk { radius } => positive("radius", *radius),
            BoundarySpec::Ellipse { a, b } => {
                positive("a", *a)?;
                positive("b", *b)
            }
            BoundarySpec::PolarCurve { r0, cos, sin } => {
                positive("r0", *r0)?;
                if cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
                    return Err(GeometryError::InvalidSpec("non-finite polar coefficient".into()));
                }
                let rmin = self.min_radius();
                if rmin <= 0.0 {
                    return Err(GeometryError::InvalidSpec(format!("polar radius reaches {rmin} <= 0")));
                }
                // a trigonometric radius is smooth; guard against coefficient sets
                // whose curvature is numerically unbounded
                let limit = 1e8 / rmin;
                for i in 0..CURVE_SAMPLES {
                    let tau = i as f64 / CURVE_SAMPLES as f64;
                    let k = self.curve_curvature(tau);
                    if !k.is_finite() || k.abs() > limit {
                        return Err(GeometryError::Irregular { tau, value: k });
                    }
                }
                Ok(())
            }
        }
    }

    fn polar_radius(&self, theta: f64) -> (f64, f64, f64) {
        match self {
            BoundarySpec::PolarCurve { r0, cos, sin } => {
                let (mut r, mut r1, mut r2) = (*r0, 0.0, 0.0);
                for (k, c) in cos.iter().enumerate() {
                    let k = (k + 1) as f64;
                    let (s_, c_) = (k * theta).sin_cos();
                    r += c * c_;
                    r1 -= c * k * s_;
                    r2 -= c * k * k * c_;
                }
                for (k, s) in sin.iter().enumerate() {
                    let k = (k + 1) as f64;
                    let (s_, c_) = (k * theta).sin_cos();
                    r += s * s_;
                    r1 += s * k * c_;
                    r2 -= s * k * k * s_;
                }
                (r, r1, r2)
            }
            _ => unreachable!("polar radius of a non-polar boundary"),
        }
    }

    /// Smallest sampled polar radius (`r0` for the disk, `min(a, b)` for the ellipse).
    pub fn min_radius(&self) -> f64 {
        match self {
            BoundarySpec::Interval { length } => 0.5 * length,
            BoundarySpec::Disk { radius } => *radius,
            BoundarySpec::Ellipse { a, b } => a.min(*b),
            BoundarySpec::PolarCurve { .. } => (0..CURVE_SAMPLES)
                .map(|i| self.polar_radius(TAU * i as f64 / CURVE_SAMPLES as f64).0)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest distance from the origin to the boundary.
    pub fn max_radius(&self) -> f64 {
        match self {
            BoundarySpec::Interval { length } => *length,
            BoundarySpec::Disk { radius } => *radius,
            BoundarySpec::Ellipse { a, b } => a.max(*b),
            BoundarySpec::PolarCurve { .. } => (0..CURVE_SAMPLES)
                .map(|i| self.polar_radius(TAU * i as f64 / CURVE_SAMPLES as f64).0)
                .fold(0.0, f64::max),
        }
    }

    fn jet(&self, theta: f64) -> CurveJet {
        let (s, c) = theta.sin_cos();
        match self {
            BoundarySpec::Disk { radius: r } => CurveJet {
                p: [r * c, r * s],
                d1: [-r * s, r * c],
                d2: [-r * c, -r * s],
            },
            BoundarySpec::Ellipse { a, b } => CurveJet {
                p: [a * c, b * s],
                d1: [-a * s, b * c],
                d2: [-a * c, -b * s],
            },
            BoundarySpec::PolarCurve { .. } => {
                let (r, r1, r2) = self.polar_radius(theta);
                CurveJet {
                    p: [r * c, r * s],
                    d1: [r1 * c - r * s, r1 * s + r * c],
                    d2: [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
                }
            }
            BoundarySpec::Interval { .. } => unreachable!("interval has no curve jet"),
        }
    }

    fn curve_curvature(&self, tau: f64) -> f64 {
        let j = self.jet(TAU * tau);
        let speed = j.d1[0].hypot(j.d1[1]);
        (j.d1[0] * j.d2[1] - j.d1[1] * j.d2[0]) / speed.powi(3)
    }

    fn check_tau(tau: f64) -> Result<(), GeometryError> {
        if (0.0..1.0).contains(&tau) {
            Ok(())
        } else {
            Err(GeometryError::Parameter(tau))
        }
    }

    /// Boundary point at `tau`, wrapping `tau` into `[0, 1)` for closed curves.
    pub fn point(&self, tau: f64) -> Result<BoundaryPoint, GeometryError> {
        match self {
            BoundarySpec::Interval { length } => {
                Self::check_tau(tau)?;
                Ok(if tau < 0.5 {
                    BoundaryPoint {
                        tau: 0.0,
                        x: [0.0, 0.0],
                        normal: [-1.0, 0.0],
                        curvature: 0.0,
                    }
                } else {
                    BoundaryPoint {
                        tau: 0.5,
                        x: [*length, 0.0],
                        normal: [1.0, 0.0],
                        curvature: 0.0,
                    }
                })
            }
            _ => {
                if !tau.is_finite() {
                    return Err(GeometryError::Parameter(tau));
                }
                let tau = tau.rem_euclid(1.0);
                let j = self.jet(TAU * tau);
                let speed = j.d1[0].hypot(j.d1[1]);
                Ok(BoundaryPoint {
                    tau,
                    x: j.p,
                    normal: [j.d1[1] / speed, -j.d1[0] / speed],
                    curvature: (j.d1[0] * j.d2[1] - j.d1[1] * j.d2[0]) / speed.powi(3),
                })
            }
        }
    }

    /// Signed curvature at `tau` (0 for the interval).
    pub fn curvature(&self, tau: f64) -> Result<f64, GeometryError> {
        let k = self.point(tau)?.curvature;
        if k.is_finite() {
            Ok(k)
        } else {
            Err(GeometryError::Irregular { tau, value: k })
        }
    }

    /// Arc-length density `|d gamma / d tau|`; for the interval the counting
    /// measure puts unit mass on each endpoint.
    pub fn speed(&self, tau: f64) -> f64 {
        match self {
            BoundarySpec::Interval { .. } => 1.0,
            _ => {
                let j = self.jet(TAU * tau.rem_euclid(1.0));
                TAU * j.d1[0].hypot(j.d1[1])
            }
        }
    }

    /// Arc length of the parameter range `[t0, t1]` (closed curves only).
    pub fn arc_length(&self, t0: f64, t1: f64) -> f64 {
        match self {
            BoundarySpec::Interval { .. } => unreachable!("arc length of the interval boundary"),
            BoundarySpec::Disk { radius } => TAU * radius * (t1 - t0),
            _ => {
                let panels = (((t1 - t0).abs() * 256.0).ceil() as usize).max(1);
                crate::quadrature::integrate(|t| self.speed(t), t0, t1, panels, 8)
            }
        }
    }

    /// `P(Omega)`, the boundary measure. Two for the interval.
    pub fn perimeter(&self) -> f64 {
        match self {
            BoundarySpec::Interval { .. } => 2.0,
            BoundarySpec::Disk { radius } => TAU * radius,
            _ => self.arc_length(0.0, 1.0),
        }
    }

    /// `|Omega|`.
    pub fn area(&self) -> f64 {
        match self {
            BoundarySpec::Interval { length } => *length,
            BoundarySpec::Disk { radius } => PI * radius * radius,
            BoundarySpec::Ellipse { a, b } => PI * a * b,
            BoundarySpec::PolarCurve { .. } => {
                // trapezoid rule is spectrally accurate for the periodic integrand
                let n = CURVE_SAMPLES;
                let sum: f64 = (0..n)
                    .map(|i| self.polar_radius(TAU * i as f64 / n as f64).0.powi(2))
                    .sum();
                0.5 * sum * TAU / n as f64
            }
        }
    }

    /// `int_{boundary} curvature ds`; `2 pi` for every closed curve here.
    pub fn total_curvature(&self) -> f64 {
        match self {
            BoundarySpec::Interval { .. } => 0.0,
            _ => {
                let n = CURVE_SAMPLES;
                (0..n)
                    .map(|i| {
                        let t = i as f64 / n as f64;
                        self.curve_curvature(t) * self.speed(t)
                    })
                    .sum::<f64>()
                    / n as f64
            }
        }
    }

    /// Sampled minimum of the curvature.
    pub fn min_curvature(&self) -> f64 {
        match self {
            BoundarySpec::Interval { .. } => 0.0,
            BoundarySpec::Disk { radius } => 1.0 / radius,
            _ => (0..CURVE_SAMPLES)
                .map(|i| self.curve_curvature(i as f64 / CURVE_SAMPLES as f64))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest exterior offset `d0` with `1 + t curvature > 0` everywhere;
    /// infinite when the boundary has no concave arc.
    pub fn reach(&self) -> f64 {
        let kmin = self.min_curvature();
        if kmin >= 0.0 {
            f64::INFINITY
        } else {
            -1.0 / kmin
        }
    }
}

/// `sigma + t nu0(sigma)`.
pub fn offset_point(p: &BoundaryPoint, t: f64) -> [f64; 2] {
    [p.x[0] + t * p.normal[0], p.x[1] + t * p.normal[1]]
}

/// A boundary arc where the layer offset folds over itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcViolation {
    pub tau_start: f64,
    pub tau_end: f64,
    /// smallest value of `1 + eps sup(h) curvature` on the arc
    pub worst_jacobian: f64,
}

/// Outcome of [`validate_embedding`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    pub offset: f64,
    pub reach: f64,
    pub violations: Vec<ArcViolation>,
}

impl EmbeddingReport {
    pub fn is_ok(&self) -> bool {
        self.offset < self.reach
    }

    pub fn into_result(self) -> Result<(), GeometryError> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(GeometryError::Embedding {
                offset: self.offset,
                reach: self.reach,
            })
        }
    }
}

/// Accepts iff `eps * sup h < d0`; reports the arcs where `1 + eps sup(h) k <= 0`.
pub fn validate_embedding(spec: &BoundarySpec, h: &ThicknessProfile, eps: f64) -> EmbeddingReport {
    let offset = eps * h.sup();
    let reach = spec.reach();
    let mut violations = Vec::new();
    if spec.is_closed_curve() && reach.is_finite() {
        let mut current: Option<ArcViolation> = None;
        for i in 0..=CURVE_SAMPLES {
            let tau = (i % CURVE_SAMPLES) as f64 / CURVE_SAMPLES as f64;
            let jac = 1.0 + offset * spec.curve_curvature(tau);
            let bad = jac <= 0.0 && i < CURVE_SAMPLES;
            match (&mut current, bad) {
                (Some(v), true) => {
                    v.tau_end = tau;
                    v.worst_jacobian = v.worst_jacobian.min(jac);
                }
                (None, true) => {
                    current = Some(ArcViolation {
                        tau_start: tau,
                        tau_end: tau,
                        worst_jacobian: jac,
                    })
                }
                (Some(_), false) => violations.push(current.take().unwrap()),
                (None, false) => {}
            }
        }
    }
    EmbeddingReport {
        offset,
        reach,
        violations,
    }
}
