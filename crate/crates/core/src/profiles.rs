//! Layer thickness profiles `h` on the boundary and the induced Robin
//! coefficient `b_h = beta / (1 + beta h)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundarySpec;
use crate::quadrature;

/// Tolerance on the mass constraint when testing membership of `H_m`.
pub const MASS_TOLERANCE: f64 = 1e-10;

const SAMPLE_COUNT: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error("profile has zero boundary mass and cannot be rescaled")]
    ZeroMass,
    #[error("profile is not pointwise below its partner near tau = {0}")]
    NotDominated(f64),
}

/// How `h` is stored, as a function of the boundary coordinate `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "kebab-case")]
pub enum ProfileShape {
    Constant {
        value: f64,
    },
    /// `values[i]` on the arc `[i/N, (i+1)/N)`
    PiecewiseConstant {
        values: Vec<f64>,
    },
    /// `c0 + sum_k cos[k-1] cos(2 pi k tau) + sin[k-1] sin(2 pi k tau)`
    TrigPolynomial {
        c0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

/// A thickness function with its bounds and Lipschitz estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileShape", into = "ProfileShape")]
pub struct ThicknessProfile {
    shape: ProfileShape,
    h_min: f64,
    h_max: f64,
    /// Lipschitz constant in `tau`; infinite for a non-constant piecewise profile
    lip: f64,
}

impl From<ThicknessProfile> for ProfileShape {
    fn from(p: ThicknessProfile) -> Self {
        p.shape
    }
}

impl TryFrom<ProfileShape> for ThicknessProfile {
    type Error = ProfileError;

    fn try_from(shape: ProfileShape) -> Result<Self, Self::Error> {
        ThicknessProfile::new(shape)
    }
}

fn trig_eval(c0: f64, cos: &[f64], sin: &[f64], tau: f64) -> f64 {
    let th = std::f64::consts::TAU * tau;
    let mut v = c0;
    for (k, c) in cos.iter().enumerate() {
        v += c * ((k + 1) as f64 * th).cos();
    }
    for (k, s) in sin.iter().enumerate() {
        v += s * ((k + 1) as f64 * th).sin();
    }
    v
}

impl ThicknessProfile {
    pub fn new(shape: ProfileShape) -> Result<Self, ProfileError> {
        let (h_min, h_max, lip) = match &shape {
            ProfileShape::Constant { value } => (*value, *value, 0.0),
            ProfileShape::PiecewiseConstant { values } => {
                if values.is_empty() {
                    return Err(ProfileError::Invalid("piecewise profile needs at least one value".into()));
                }
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi, if lo == hi { 0.0 } else { f64::INFINITY })
            }
            ProfileShape::TrigPolynomial { c0, cos, sin } => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..SAMPLE_COUNT {
                    let v = trig_eval(*c0, cos, sin, i as f64 / SAMPLE_COUNT as f64);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let lip = cos
                    .iter()
                    .enumerate()
                    .chain(sin.iter().enumerate())
                    .map(|(i, c)| std::f64::consts::TAU * (i + 1) as f64 * c.abs())
                    .sum();
                (lo, hi, lip)
            }
        };
        if !h_min.is_finite() || !h_max.is_finite() {
            return Err(ProfileError::Invalid("non-finite thickness".into()));
        }
        if h_min < 0.0 {
            return Err(ProfileError::Invalid(format!("thickness must be non-negative, minimum is {h_min}")));
        }
        Ok(Self {
            shape,
            h_min,
            h_max,
            lip,
        })
    }

    pub fn constant(value: f64) -> Result<Self, ProfileError> {
        Self::new(ProfileShape::Constant { value })
    }

    pub fn piecewise(values: Vec<f64>) -> Result<Self, ProfileError> {
        Self::new(ProfileShape::PiecewiseConstant { values })
    }

    pub fn trig(c0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, ProfileError> {
        Self::new(ProfileShape::TrigPolynomial { c0, cos, sin })
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    /// Lower bound of `h` (exact except for trigonometric profiles, where it is sampled).
    pub fn inf(&self) -> f64 {
        self.h_min
    }

    pub fn sup(&self) -> f64 {
        self.h_max
    }

    pub fn lipschitz(&self) -> f64 {
        self.lip
    }

    pub fn is_zero(&self) -> bool {
        self.h_max == 0.0
    }

    pub fn value(&self, tau: f64) -> f64 {
        let tau = tau.rem_euclid(1.0);
        match &self.shape {
            ProfileShape::Constant { value } => *value,
            ProfileShape::PiecewiseConstant { values } => {
                let n = values.len();
                values[((tau * n as f64).floor() as usize).min(n - 1)]
            }
            ProfileShape::TrigPolynomial { c0, cos, sin } => trig_eval(*c0, cos, sin, tau),
        }
    }

    /// Arc boundaries in `tau` where the profile may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            ProfileShape::PiecewiseConstant { values } if values.len() > 1 => {
                (0..values.len()).map(|i| i as f64 / values.len() as f64).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Number of equal arcs for a piecewise profile, 1 otherwise.
    pub fn arc_count(&self) -> usize {
        match &self.shape {
            ProfileShape::PiecewiseConstant { values } => values.len(),
            _ => 1,
        }
    }

    /// `h` multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ProfileError> {
        let shape = match &self.shape {
            ProfileShape::Constant { value } => ProfileShape::Constant { value: value * factor },
            ProfileShape::PiecewiseConstant { values } => ProfileShape::PiecewiseConstant {
                values: values.iter().map(|v| v * factor).collect(),
            },
            ProfileShape::TrigPolynomial { c0, cos, sin } => ProfileShape::TrigPolynomial {
                c0: c0 * factor,
                cos: cos.iter().map(|v| v * factor).collect(),
                sin: sin.iter().map(|v| v * factor).collect(),
            },
        };
        Self::new(shape)
    }

    /// Points where pointwise comparisons are made: a uniform grid plus arc midpoints.
    pub fn check_nodes(&self) -> Vec<f64> {
        let mut nodes: Vec<f64> = (0..SAMPLE_COUNT).map(|i| (i as f64 + 0.5) / SAMPLE_COUNT as f64).collect();
        let n = self.arc_count();
        nodes.extend((0..n).map(|i| (i as f64 + 0.5) / n as f64));
        nodes
    }
}

/// `int_{boundary} h dH^{n-1}`; the sum of the endpoint values for the interval.
pub fn boundary_mass(h: &ThicknessProfile, spec: &BoundarySpec) -> f64 {
    if !spec.is_closed_curve() {
        return h.value(0.0) + h.value(0.5);
    }
    match h.shape() {
        ProfileShape::Constant { value } => value * spec.perimeter(),
        ProfileShape::PiecewiseConstant { values } => {
            let n = values.len() as f64;
            values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if *v == 0.0 {
                        0.0
                    } else {
                        v * spec.arc_length(i as f64 / n, (i + 1) as f64 / n)
                    }
                })
                .sum()
        }
        ProfileShape::TrigPolynomial { c0, .. } => match spec {
            BoundarySpec::Disk { .. } => c0 * spec.perimeter(),
            _ => quadrature::integrate(|t| h.value(t) * spec.speed(t), 0.0, 1.0, 128, 8),
        },
    }
}

/// Rescales `h` so that its boundary mass equals `m`.
pub fn saturate_mass(h: &ThicknessProfile, m: f64, spec: &BoundarySpec) -> Result<ThicknessProfile, ProfileError> {
    let mass = boundary_mass(h, spec);
    if mass <= 0.0 {
        return Err(ProfileError::ZeroMass);
    }
    if !(m.is_finite() && m >= 0.0) {
        return Err(ProfileError::Invalid(format!("mass budget must be non-negative, got {m}")));
    }
    if mass == m {
        return Ok(h.clone());
    }
    h.scaled(m / mass)
}

/// Whether `h` lies in `H_m = { h >= 0, int h <= m }`.
pub fn in_admissible_class(h: &ThicknessProfile, m: f64, spec: &BoundarySpec) -> bool {
    h.inf() >= 0.0 && boundary_mass(h, spec) <= m + MASS_TOLERANCE
}

/// Checks `lower <= upper` at the comparison nodes of both profiles.
pub fn check_dominated(lower: &ThicknessProfile, upper: &ThicknessProfile) -> Result<(), ProfileError> {
    let mut nodes = lower.check_nodes();
    nodes.extend(upper.check_nodes());
    for t in nodes {
        if lower.value(t) > upper.value(t) {
            return Err(ProfileError::NotDominated(t));
        }
    }
    Ok(())
}

/// The Robin coefficient `b_h = beta / (1 + beta h)` of the limit problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinCoefficient {
    pub beta: f64,
    pub profile: ThicknessProfile,
}

impl RobinCoefficient {
    pub fn value(&self, tau: f64) -> f64 {
        self.beta / (1.0 + self.beta * self.profile.value(tau))
    }

    /// Points where `b` may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.profile.breakpoints()
    }

    /// `int_{boundary} 1 / b = P / beta + int h`.
    pub fn reciprocal_integral(&self, spec: &BoundarySpec) -> f64 {
        spec.perimeter() / self.beta + boundary_mass(&self.profile, spec)
    }
}

/// `b_h` for `beta > 0`, `h >= 0`.
pub fn robin_coefficient(h: &ThicknessProfile, beta: f64) -> Result<RobinCoefficient, ProfileError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(ProfileError::Invalid(format!("beta must be positive, got {beta}")));
    }
    Ok(RobinCoefficient {
        beta,
        profile: h.clone(),
    })
}

/// `a, b, a, b, ...` on `2k` equal arcs.
pub fn oscillating_profile(values: (f64, f64), k: usize) -> Result<ThicknessProfile, ProfileError> {
    if k == 0 || k % 2 != 0 {
        return Err(ProfileError::Invalid(format!("arc parameter k must be even and positive, got {k}")));
    }
    let (a, b) = values;
    ThicknessProfile::piecewise((0..2 * k).map(|i| if i % 2 == 0 { a } else { b }).collect())
}

/// The constant whose Robin coefficient is the weak-* limit of `b_{h_k}`:
/// `b(h_eff) = (b(a) + b(b)) / 2`.
pub fn effective_profile(a: f64, b: f64, beta: f64) -> Result<ThicknessProfile, ProfileError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(ProfileError::Invalid(format!("beta must be positive, got {beta}")));
    }
    let mean_b = 0.5 * (beta / (1.0 + beta * a) + beta / (1.0 + beta * b));
    ThicknessProfile::constant((1.0 / mean_b - 1.0 / beta).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn disk() -> BoundarySpec {
        BoundarySpec::Disk { radius: 1.0 }
    }

    #[test]
    fn robin_coefficient_values() {
        let b = robin_coefficient(&ThicknessProfile::constant(1.0).unwrap(), 1.0).unwrap();
        assert_eq!(b.value(0.3), 0.5);
        let b = robin_coefficient(&ThicknessProfile::constant(0.0).unwrap(), 3.0).unwrap();
        assert_eq!(b.value(0.0), 3.0);
        let b = robin_coefficient(&ThicknessProfile::constant(0.25).unwrap(), 2.0).unwrap();
        assert!((b.value(0.9) - 4.0 / 3.0).abs() < 1e-15);
        assert!(robin_coefficient(&ThicknessProfile::constant(0.25).unwrap(), 0.0).is_err());
    }

    #[test]
    fn masses() {
        let h = ThicknessProfile::constant(0.5).unwrap();
        assert!((boundary_mass(&h, &disk()) - PI).abs() < 1e-14);
        let ends = ThicknessProfile::piecewise(vec![0.2, 0.3]).unwrap();
        assert!((boundary_mass(&ends, &BoundarySpec::Interval { length: 1.0 }) - 0.5).abs() < 1e-15);
        let quarters = ThicknessProfile::piecewise(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((boundary_mass(&quarters, &disk()) - 5.0 * PI).abs() < 1e-13);
        let trig = ThicknessProfile::trig(0.5, vec![0.2], vec![0.1]).unwrap();
        assert!((boundary_mass(&trig, &disk()) - PI).abs() < 1e-14);
        let ellipse = BoundarySpec::Ellipse { a: 1.0, b: 1.0 };
        assert!((boundary_mass(&trig, &ellipse) - PI).abs() < 1e-12);
    }

    #[test]
    fn saturation() {
        let h = ThicknessProfile::constant(0.5).unwrap();
        let s = saturate_mass(&h, 2.0 * PI, &disk()).unwrap();
        assert!((s.value(0.1) - 1.0).abs() < 1e-15);
        let again = saturate_mass(&s, 2.0 * PI, &disk()).unwrap();
        assert!((again.value(0.4) - s.value(0.4)).abs() < 1e-14);
        let halves = ThicknessProfile::piecewise(vec![1.0, 3.0]).unwrap();
        let s = saturate_mass(&halves, 2.0 * PI, &disk()).unwrap();
        assert!((s.value(0.2) - 0.5).abs() < 1e-14);
        assert!((s.value(0.7) - 1.5).abs() < 1e-14);
        assert_eq!(
            saturate_mass(&ThicknessProfile::constant(0.0).unwrap(), 1.0, &disk()),
            Err(ProfileError::ZeroMass)
        );
    }

    #[test]
    fn effective_profiles() {
        assert!((effective_profile(0.4, 0.4, 1.7).unwrap().value(0.0) - 0.4).abs() < 1e-15);
        assert!((effective_profile(0.0, 1.0, 1.0).unwrap().value(0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((effective_profile(0.5, 1.5, 2.0).unwrap().value(0.0) - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn oscillation_layout() {
        let h = oscillating_profile((0.0, 1.0), 4).unwrap();
        assert_eq!(h.arc_count(), 8);
        assert_eq!(h.value(0.01), 0.0);
        assert_eq!(h.value(0.13), 1.0);
        assert!(oscillating_profile((0.0, 1.0), 3).is_err());
    }

    #[test]
    fn rejects_negative_thickness() {
        assert!(ThicknessProfile::constant(-0.1).is_err());
        assert!(ThicknessProfile::piecewise(vec![]).is_err());
        assert!(ThicknessProfile::trig(0.1, vec![0.3], vec![]).is_err());
    }

    #[test]
    fn admissible_class_membership() {
        let h = ThicknessProfile::constant(0.5).unwrap();
        assert!(in_admissible_class(&h, PI, &disk()));
        assert!(!in_admissible_class(&h, PI - 1e-6, &disk()));
        let b = robin_coefficient(&h, 2.0).unwrap();
        assert!((b.reciprocal_integral(&disk()) - (2.0 * PI / 2.0 + PI)).abs() < 1e-14);
    }

    #[test]
    fn serde_roundtrip_validates() {
        let h = ThicknessProfile::piecewise(vec![0.1, 0.2]).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.contains("piecewise-constant"));
        let back: ThicknessProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        let bad = r#"{"representation":"constant","value":-1.0}"#;
        assert!(serde_json::from_str::<ThicknessProfile>(bad).is_err());
    }

    proptest! {
        #[test]
        fn coefficient_is_monotone_and_invertible(h1 in 0.0f64..10.0, dh in 0.0f64..10.0, beta in 0.01f64..100.0) {
            let lo = robin_coefficient(&ThicknessProfile::constant(h1).unwrap(), beta).unwrap();
            let hi = robin_coefficient(&ThicknessProfile::constant(h1 + dh).unwrap(), beta).unwrap();
            prop_assert!(lo.value(0.0) >= hi.value(0.0));
            prop_assert!(lo.value(0.0) <= beta && lo.value(0.0) > 0.0);
            let back = 1.0 / lo.value(0.0) - 1.0 / beta;
            prop_assert!((back - h1).abs() <= 1e-12 * (1.0 + h1 * (1.0 + beta)));
        }

        #[test]
        fn oscillating_mass_is_independent_of_k(a in 0.0f64..2.0, b in 0.0f64..2.0, half_k in 1usize..16) {
            let spec = BoundarySpec::Disk { radius: 1.3 };
            let osc = oscillating_profile((a, b), 2 * half_k).unwrap();
            let mean = ThicknessProfile::constant(0.5 * (a + b)).unwrap();
            let m = boundary_mass(&mean, &spec);
            prop_assert!((boundary_mass(&osc, &spec) - m).abs() <= 1e-12 * (1.0 + m));
        }
    }
}
