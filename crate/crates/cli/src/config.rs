//! Run configuration: TOML sections, defaults and validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thinlayer_core::asymptotics::AsymptoticsSettings;
use thinlayer_core::eigensolve::{Method, SolverOptions};
use thinlayer_core::geometry::BoundarySpec;
use thinlayer_core::optimizer::SearchSettings;
use thinlayer_core::problem::Discretization;
use thinlayer_core::profiles::{boundary_mass, saturate_mass, ProfileShape, ThicknessProfile};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LimitSolve,
    TwophaseSolve,
    Sweep,
    Asymptotics,
    Optimize,
    Continuity,
    OracleCompare,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::LimitSolve => "limit-solve",
            Experiment::TwophaseSolve => "twophase-solve",
            Experiment::Sweep => "sweep",
            Experiment::Asymptotics => "asymptotics",
            Experiment::Optimize => "optimize",
            Experiment::Continuity => "continuity",
            Experiment::OracleCompare => "oracle-compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub twophase: TwophaseSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub asymptotics: AsymptoticsSettings,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub continuity: ContinuitySection,
    #[serde(default)]
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Interval,
    Disk,
    Ellipse,
    PolarCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: GeometryKind,
    pub length: Option<f64>,
    pub radius: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub r0: Option<f64>,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "default_layers")]
    pub layers: usize,
}

fn default_resolution() -> f64 {
    0.02
}

fn default_layers() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Constant,
    PiecewiseConstant,
    TrigPolynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub representation: Representation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cos: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sin: Vec<f64>,
    pub beta: f64,
    /// rescale the profile to this boundary mass
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// constant Robin coefficient for the limit problem, bypassing `beta / (1 + beta h)`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robin: Option<f64>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            representation: Representation::Constant,
            value: None,
            values: None,
            c0: None,
            cos: Vec::new(),
            sin: Vec::new(),
            beta: 1.0,
            mass: None,
            robin: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// number of eigenpairs
    pub eigenvalues: usize,
    pub tol: f64,
    pub method: Method,
    pub max_iterations: usize,
    pub cluster_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            eigenvalues: 10,
            tol: d.tol,
            method: d.method,
            max_iterations: d.max_iterations,
            cluster_tol: d.cluster_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwophaseSection {
    pub eps: f64,
}

impl Default for TwophaseSection {
    fn default() -> Self {
        Self { eps: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// empty selects the default grid
    pub eps: Vec<f64>,
    /// indices `1..=eigenvalues` are reported
    pub eigenvalues: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            eps: Vec::new(),
            eigenvalues: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// a single eigenvalue
    Lambda,
    Composition,
}

/// Objectives on the selected eigenvalues `l[0], l[1], ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Composition {
    /// `l[0]`
    Identity,
    Sum,
    /// `l[1] / l[0]`
    Ratio,
    /// `l[1] - l[0]`
    Gap,
    /// `max(l[0] - c, 0)`
    Hinge,
}

impl Composition {
    pub fn arity(&self) -> usize {
        match self {
            Composition::Identity | Composition::Hinge => 1,
            Composition::Sum => 1,
            Composition::Ratio | Composition::Gap => 2,
        }
    }

    pub fn evaluate(&self, l: &[f64], c: f64) -> f64 {
        match self {
            Composition::Identity => l[0],
            Composition::Sum => l.iter().sum(),
            Composition::Ratio => l[1] / l[0],
            Composition::Gap => l[1] - l[0],
            Composition::Hinge => (l[0] - c).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub target: Target,
    /// 1-based index for `target = "lambda"`
    pub j: usize,
    pub composition: Composition,
    pub indices: Vec<usize>,
    /// threshold of the hinge composition
    pub c: f64,
    /// mass budget; defaults to the mass of the configured profile
    pub mass: Option<f64>,
    pub arcs: usize,
    pub budget: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub cap_factor: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let s = SearchSettings::default();
        Self {
            target: Target::Lambda,
            j: 1,
            composition: Composition::Identity,
            indices: vec![1],
            c: 0.0,
            mass: None,
            arcs: 8,
            budget: s.budget,
            initial_step: s.initial_step,
            min_step: s.min_step,
            cap_factor: s.cap_factor,
        }
    }
}

impl OptimizerSection {
    pub fn search(&self) -> SearchSettings {
        SearchSettings {
            budget: self.budget,
            initial_step: self.initial_step,
            min_step: self.min_step,
            cap_factor: self.cap_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuitySection {
    pub a: f64,
    pub b: f64,
    pub k: Vec<usize>,
    pub eigenvalues: usize,
}

impl Default for ContinuitySection {
    fn default() -> Self {
        Self {
            a: 0.0,
            b: 1.0,
            k: vec![4, 8, 16, 32],
            eigenvalues: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// two-phase layer scales to compare; the limit problem is always compared
    pub eps: Vec<f64>,
    /// relative tolerance; defaults to 1e-6 on the interval and 1e-3 on the disk
    pub tolerance: Option<f64>,
    /// order-2 extrapolation from meshes at `resolution` and `2 resolution`
    pub richardson: Option<bool>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            eps: Vec::new(),
            tolerance: None,
            richardson: None,
        }
    }
}

/// Everything a run needs, with defaults filled in and invariants checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub experiment: Experiment,
    pub spec: BoundarySpec,
    pub profile: ThicknessProfile,
    pub beta: f64,
    pub robin: Option<f64>,
    pub eigenvalues: usize,
    pub discretization: Discretization,
    pub config: RunConfig,
}

fn need(v: Option<f64>, what: &str) -> Result<f64, RunError> {
    v.ok_or_else(|| RunError::Validation(format!("missing {what}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Validation(format!("config: {e}")))
    }

    fn spec(&self) -> Result<BoundarySpec, RunError> {
        let g = &self.geometry;
        let spec = match g.kind {
            GeometryKind::Interval => BoundarySpec::Interval {
                length: need(g.length, "geometry.length")?,
            },
            GeometryKind::Disk => BoundarySpec::Disk {
                radius: need(g.radius, "geometry.radius")?,
            },
            GeometryKind::Ellipse => BoundarySpec::Ellipse {
                a: need(g.a, "geometry.a")?,
                b: need(g.b, "geometry.b")?,
            },
            GeometryKind::PolarCurve => BoundarySpec::PolarCurve {
                r0: need(g.r0, "geometry.r0")?,
                cos: g.cos.clone(),
                sin: g.sin.clone(),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn profile(&self, spec: &BoundarySpec) -> Result<ThicknessProfile, RunError> {
        let p = &self.profile;
        let shape = match p.representation {
            // no insulation unless configured
            Representation::Constant => ProfileShape::Constant {
                value: p.value.unwrap_or(0.0),
            },
            Representation::PiecewiseConstant => ProfileShape::PiecewiseConstant {
                values: p.values.clone().ok_or_else(|| RunError::Validation("missing profile.values".into()))?,
            },
            Representation::TrigPolynomial => ProfileShape::TrigPolynomial {
                c0: need(p.c0, "profile.c0")?,
                cos: p.cos.clone(),
                sin: p.sin.clone(),
            },
        };
        let h = ThicknessProfile::new(shape)?;
        match p.mass {
            Some(m) if boundary_mass(&h, spec) > 0.0 => Ok(saturate_mass(&h, m, spec)?),
            Some(_) => Err(RunError::Validation("profile.mass needs a profile with positive mass".into())),
            None => Ok(h),
        }
    }

    /// Resolves defaults and validates every section the experiment uses.
    pub fn resolve(&self) -> Result<Resolved, RunError> {
        let invalid = |msg: String| Err(RunError::Validation(msg));
        let spec = self.spec()?;
        let profile = self.profile(&spec)?;
        let beta = self.profile.beta;
        if !(beta.is_finite() && beta > 0.0) {
            return invalid(format!("profile.beta must be positive, got {beta}"));
        }
        if let Some(b) = self.profile.robin {
            if !(b.is_finite() && b >= 0.0) {
                return invalid(format!("profile.robin must be non-negative, got {b}"));
            }
        }
        let g = &self.geometry;
        if !(g.resolution.is_finite() && g.resolution > 0.0) {
            return invalid(format!("geometry.resolution must be positive, got {}", g.resolution));
        }
        if g.layers == 0 {
            return invalid("geometry.layers must be at least 1".into());
        }
        let s = &self.solver;
        if s.eigenvalues == 0 {
            return invalid("solver.eigenvalues must be at least 1".into());
        }
        if !(s.tol > 0.0 && s.cluster_tol >= 0.0) || s.max_iterations == 0 {
            return invalid("solver tolerances must be positive and max_iterations at least 1".into());
        }
        let positive = |name: &str, v: &[f64]| -> Result<(), RunError> {
            match v.iter().find(|e| !(e.is_finite() && **e > 0.0 && **e <= 1.0)) {
                Some(e) => Err(RunError::Validation(format!("{name} values must lie in (0, 1], got {e}"))),
                None => Ok(()),
            }
        };
        match self.experiment {
            Experiment::LimitSolve => {}
            Experiment::TwophaseSolve => positive("twophase.eps", &[self.twophase.eps])?,
            Experiment::Sweep => {
                positive("sweep.eps", &self.sweep.eps)?;
                if self.sweep.eigenvalues == 0 {
                    return invalid("sweep.eigenvalues must be at least 1".into());
                }
            }
            Experiment::Asymptotics => {
                positive("asymptotics.eps", &self.asymptotics.eps)?;
                if self.asymptotics.indices.is_empty() || self.asymptotics.indices.contains(&0) {
                    return invalid("asymptotics.indices must be non-empty and 1-based".into());
                }
            }
            Experiment::Optimize => {
                let o = &self.optimizer;
                if o.arcs == 0 || o.budget == 0 {
                    return invalid("optimizer.arcs and optimizer.budget must be at least 1".into());
                }
                if let Some(m) = o.mass {
                    if !(m.is_finite() && m > 0.0) {
                        return invalid(format!("optimizer.mass must be positive, got {m}"));
                    }
                } else if boundary_mass(&profile, &spec) <= 0.0 {
                    return invalid("optimizer.mass is required when the profile has zero mass".into());
                }
                match o.target {
                    Target::Lambda if o.j == 0 => return invalid("optimizer.j is 1-based".into()),
                    Target::Composition if o.indices.len() < o.composition.arity() || o.indices.contains(&0) => {
                        return invalid(format!(
                            "composition {:?} needs at least {} 1-based indices",
                            o.composition,
                            o.composition.arity()
                        ))
                    }
                    _ => {}
                }
            }
            Experiment::Continuity => {
                let c = &self.continuity;
                if !(c.a >= 0.0 && c.b >= 0.0) || c.k.is_empty() || c.eigenvalues == 0 {
                    return invalid("continuity needs a, b >= 0, a non-empty k list and eigenvalues >= 1".into());
                }
                if c.k.iter().any(|k| k % 2 != 0 || *k == 0) {
                    return invalid("continuity.k values must be even and positive".into());
                }
            }
            Experiment::OracleCompare => {
                positive("oracle.eps", &self.oracle.eps)?;
                if !matches!(spec, BoundarySpec::Interval { .. } | BoundarySpec::Disk { .. }) {
                    return invalid("oracle-compare supports the interval and the disk only".into());
                }
                let uniform = match profile.shape() {
                    ProfileShape::Constant { .. } => true,
                    ProfileShape::PiecewiseConstant { values } => matches!(spec, BoundarySpec::Interval { .. }) && values.len() == 2,
                    ProfileShape::TrigPolynomial { .. } => false,
                };
                if !uniform {
                    return invalid("oracle-compare needs a constant profile (or two endpoint values on the interval)".into());
                }
                if self.profile.robin.is_some() && !self.oracle.eps.is_empty() {
                    return invalid("profile.robin applies to the limit problem only; drop oracle.eps".into());
                }
                if let Some(t) = self.oracle.tolerance {
                    if !(t > 0.0) {
                        return invalid(format!("oracle.tolerance must be positive, got {t}"));
                    }
                }
            }
        }
        Ok(Resolved {
            experiment: self.experiment,
            spec,
            profile,
            beta,
            robin: self.profile.robin,
            eigenvalues: s.eigenvalues,
            discretization: Discretization {
                resolution: g.resolution,
                layers: g.layers,
                solver: SolverOptions {
                    tol: s.tol,
                    method: s.method,
                    max_iterations: s.max_iterations,
                    seed: self.seed,
                    cluster_tol: s.cluster_tol,
                },
            },
            config: self.clone(),
        })
    }
}
