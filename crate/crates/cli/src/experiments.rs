//! The experiments a run can execute.

use serde_json::json;
use thinlayer_core::assembly::ConstantWeight;
use thinlayer_core::asymptotics::{default_eps_grid, run_asymptotics, AsymptoticReport, AsymptoticsSettings};
use thinlayer_core::eigensolve::Spectrum;
use thinlayer_core::geometry::BoundarySpec;
use thinlayer_core::optimizer::{
    continuity_experiment, minimize_composition, minimize_lambda, profile_values, LimitEvaluator, OptimizationRun,
};
use thinlayer_core::problem::{solve_limit, solve_limit_weight, solve_twophase, Discretization, Solution};
use thinlayer_core::profiles::{boundary_mass, ProfileShape, ThicknessProfile};
use thinlayer_oracles::{interval_limit_spectrum, interval_twophase_spectrum, DiskLimit, DiskTwoPhase};

use crate::config::{Experiment, ProfileSection, Representation, Resolved, Target};
use crate::output::{float, Table};
use crate::{Outcome, RunError};

pub fn run(r: &Resolved) -> Result<Outcome, RunError> {
    match r.experiment {
        Experiment::LimitSolve => limit_solve(r),
        Experiment::TwophaseSolve => twophase_solve(r),
        Experiment::Sweep => sweep(r),
        Experiment::Asymptotics => asymptotics(r),
        Experiment::Optimize => optimize(r),
        Experiment::Continuity => continuity(r),
        Experiment::OracleCompare => oracle_compare(r),
    }
}

fn spectrum_table(s: &Spectrum) -> Table {
    let mut t = Table::new(&["j", "lambda", "cluster_id", "residual"]);
    for (i, l) in s.eigenvalues.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), float(*l), s.cluster_id(i).to_string(), float(s.residuals[i])]);
    }
    t
}

fn limit(r: &Resolved, disc: &Discretization) -> Result<Solution, RunError> {
    Ok(match r.robin {
        Some(b) => solve_limit_weight(&r.spec, &ConstantWeight(b), r.eigenvalues, disc)?,
        None => solve_limit(&r.spec, &r.profile, r.beta, r.eigenvalues, disc)?,
    })
}

fn limit_solve(r: &Resolved) -> Result<Outcome, RunError> {
    let s = limit(r, &r.discretization)?;
    let mut summary = vec![format!("limit problem, {} unknowns", s.pencil.size())];
    for (i, l) in s.spectrum.eigenvalues.iter().enumerate() {
        summary.push(format!("  lambda_{} = {}", i + 1, float(*l)));
    }
    Ok(Outcome {
        files: vec![("spectrum.csv".into(), spectrum_table(&s.spectrum).render())],
        parameters: json!({ "unknowns": s.pencil.size() }),
        results: json!({ "eigenvalues": s.spectrum.eigenvalues, "clusters": s.spectrum.clusters }),
        summary,
        not_converged: false,
    })
}

fn twophase_solve(r: &Resolved) -> Result<Outcome, RunError> {
    let eps = r.config.twophase.eps;
    let s = solve_twophase(&r.spec, &r.profile, r.beta, eps, r.eigenvalues, &r.discretization)?;
    let layer: Vec<f64> = s.spectrum.eigenvectors.iter().map(|u| s.pencil.layer_mass(u)).collect();
    let mut summary = vec![format!("two-phase problem at eps = {eps}, {} unknowns", s.pencil.size())];
    for (i, l) in s.spectrum.eigenvalues.iter().enumerate() {
        summary.push(format!("  lambda_{} = {}  layer mass {}", i + 1, float(*l), float(layer[i])));
    }
    Ok(Outcome {
        files: vec![("spectrum.csv".into(), spectrum_table(&s.spectrum).render())],
        parameters: json!({ "eps": eps, "unknowns": s.pencil.size() }),
        results: json!({ "eigenvalues": s.spectrum.eigenvalues, "clusters": s.spectrum.clusters, "layer_mass": layer }),
        summary,
        not_converged: false,
    })
}

fn sweep_table(reports: &[AsymptoticReport]) -> Table {
    let mut t = Table::new(&["epsilon", "j", "lambda_eps", "lambda_limit", "quotient", "Q_min", "Q_max"]);
    let n_eps = reports.first().map_or(0, |r| r.sweep.len());
    for k in 0..n_eps {
        for r in reports {
            let p = &r.sweep[k];
            t.push(vec![
                float(p.eps),
                r.j.to_string(),
                float(p.lambda_eps),
                float(r.lambda_limit),
                float(p.quotient),
                float(r.q_min),
                float(r.q_max),
            ]);
        }
    }
    t
}

fn sweep_outcome(r: &Resolved, settings: &AsymptoticsSettings, detailed: bool) -> Result<Outcome, RunError> {
    if r.robin.is_some() {
        return Err(RunError::Validation("profile.robin cannot be used for two-phase sweeps".into()));
    }
    let mut settings = settings.clone();
    if settings.eps.is_empty() {
        settings.eps = default_eps_grid(&r.profile);
    }
    let reports = run_asymptotics(&r.spec, &r.profile, r.beta, &settings, &r.discretization)?;
    let mut summary = vec![format!("eps grid {:?}", settings.eps)];
    for rep in &reports {
        summary.push(format!(
            "j = {}: lambda = {}, Q in [{}, {}], slope = {} (fixed-intercept {}), delta = {}",
            rep.j,
            float(rep.lambda_limit),
            float(rep.q_min),
            float(rep.q_max),
            float(rep.fit.slope),
            float(rep.fixed_fit.slope),
            float(rep.delta)
        ));
        if detailed {
            let v = &rep.verdicts;
            let flag = |b: bool| if b { "PASS" } else { "FAIL" };
            summary.push(format!("  sandwich {}", flag(v.sandwich)));
            if let Some(eq) = v.equality {
                summary.push(format!("  equality at first cluster index {}", flag(eq)));
            }
            summary.push(format!("  eigenvector convergence {}", flag(v.convergence)));
            summary.push(format!("  layer profile R^2 = {} {}", float(v.profile_r2), flag(v.profile_linear)));
            summary.push(format!(
                "  layer mass / eps stable within 20% {} (max change {})",
                flag(v.concentration.stable),
                float(v.concentration.max_change)
            ));
        }
    }
    let mut files = vec![("sweep.csv".to_string(), sweep_table(&reports).render())];
    if detailed {
        files.push((
            "asymptotics.json".into(),
            serde_json::to_string_pretty(&reports).map_err(|e| RunError::Io(e.to_string()))? + "\n",
        ));
    }
    Ok(Outcome {
        files,
        parameters: json!({ "eps": settings.eps, "indices": settings.indices, "fiber_samples": settings.fiber_samples, "max_fibers": settings.max_fibers }),
        results: json!(reports
            .iter()
            .map(|rep| json!({ "j": rep.j, "lambda_limit": rep.lambda_limit, "q_min": rep.q_min, "q_max": rep.q_max, "slope": rep.fit.slope, "fixed_intercept_slope": rep.fixed_fit.slope, "verdicts": rep.verdicts }))
            .collect::<Vec<_>>()),
        summary,
        not_converged: false,
    })
}

fn sweep(r: &Resolved) -> Result<Outcome, RunError> {
    let settings = AsymptoticsSettings {
        eps: r.config.sweep.eps.clone(),
        indices: (1..=r.config.sweep.eigenvalues).collect(),
        ..r.config.asymptotics.clone()
    };
    sweep_outcome(r, &settings, false)
}

fn asymptotics(r: &Resolved) -> Result<Outcome, RunError> {
    sweep_outcome(r, &r.config.asymptotics, true)
}

fn optimize(r: &Resolved) -> Result<Outcome, RunError> {
    let o = &r.config.optimizer;
    let m = o.mass.unwrap_or_else(|| boundary_mass(&r.profile, &r.spec));
    let evaluator = LimitEvaluator::new(&r.spec, r.beta, &r.discretization)?;
    let search = o.search();
    let run: OptimizationRun = match o.target {
        Target::Lambda => minimize_lambda(&evaluator, o.j, m, o.arcs, &search)?,
        Target::Composition => {
            let (kind, c) = (o.composition, o.c);
            let f = move |l: &[f64]| kind.evaluate(l, c);
            minimize_composition(&evaluator, &format!("{:?}", o.composition).to_lowercase(), &f, &o.indices, m, o.arcs, &search)?
        }
    };
    let arcs = run.history.first().map_or(o.arcs, |it| it.profile.len());
    let mut header = vec!["iter".to_string(), "value".into(), "mass".into()];
    header.extend((1..=arcs).map(|i| format!("h_{i}")));
    let mut t = Table::new(&header);
    for it in &run.history {
        let mut row = vec![it.iter.to_string(), float(it.value), float(it.mass)];
        row.extend(it.profile.iter().map(|v| float(*v)));
        t.push(row);
    }
    let best = profile_values(&run.best_profile);
    let section = ProfileSection {
        representation: if best.len() == 1 { Representation::Constant } else { Representation::PiecewiseConstant },
        value: (best.len() == 1).then(|| best[0]),
        values: (best.len() > 1).then(|| best.clone()),
        beta: r.beta,
        ..Default::default()
    };
    let profile_toml = toml::to_string(&json!({ "profile": section })).map_err(|e| RunError::Io(e.to_string()))?;
    let summary = vec![
        format!("target {}, mass budget {}, {} arcs", run.target, float(m), run.arcs),
        format!("baseline (saturated constant) {}", float(run.baseline_value)),
        format!("best value {}", float(run.best_value)),
        format!("saturation residual {}", float(run.saturation_residual)),
        format!("{} evaluations, final step {}, {}", run.evaluations, float(run.final_step), if run.converged { "converged" } else { "NOT_CONVERGED" }),
    ];
    Ok(Outcome {
        files: vec![("optimize.csv".into(), t.render()), ("best_profile.toml".into(), profile_toml)],
        parameters: json!({ "mass": m, "search": search, "arcs": o.arcs }),
        results: json!({
            "best_value": run.best_value,
            "baseline_value": run.baseline_value,
            "best_profile": run.best_profile,
            "saturation_residual": run.saturation_residual,
            "evaluations": run.evaluations,
            "converged": run.converged,
        }),
        summary,
        not_converged: !run.converged,
    })
}

fn continuity(r: &Resolved) -> Result<Outcome, RunError> {
    let c = &r.config.continuity;
    let evaluator = LimitEvaluator::new(&r.spec, r.beta, &r.discretization)?;
    let table = continuity_experiment(&evaluator, c.a, c.b, &c.k, c.eigenvalues)?;
    let mut t = Table::new(&["k", "j", "lambda", "lambda_effective", "abs_error"]);
    for row in &table.rows {
        for j in 0..c.eigenvalues {
            t.push(vec![
                row.k.to_string(),
                (j + 1).to_string(),
                float(row.eigenvalues[j]),
                float(table.reference[j]),
                float(row.errors[j]),
            ]);
        }
    }
    let mut summary = vec![format!("effective thickness {}", float(table.effective_thickness))];
    for (j, d) in table.decreasing.iter().enumerate() {
        summary.push(format!("j = {}: error decreasing in k {}", j + 1, if *d { "PASS" } else { "FAIL" }));
    }
    Ok(Outcome {
        files: vec![("continuity.csv".into(), t.render())],
        parameters: json!({ "a": c.a, "b": c.b, "k": c.k, "eigenvalues": c.eigenvalues }),
        results: json!(table),
        summary,
        not_converged: false,
    })
}

/// Thickness at the two interval ends, or the constant thickness.
fn end_thickness(h: &ThicknessProfile) -> (f64, f64) {
    match h.shape() {
        ProfileShape::PiecewiseConstant { values } if values.len() == 2 => (values[0], values[1]),
        _ => (h.value(0.0), h.value(0.5)),
    }
}

fn oracle_values(r: &Resolved, eps: Option<f64>, k: usize) -> Result<Vec<f64>, RunError> {
    let b = |h: f64| r.robin.unwrap_or(r.beta / (1.0 + r.beta * h));
    Ok(match (&r.spec, eps) {
        (BoundarySpec::Interval { length }, None) => {
            let (h0, hl) = end_thickness(&r.profile);
            interval_limit_spectrum(*length, b(h0), b(hl), k)?
        }
        (BoundarySpec::Interval { length }, Some(eps)) => {
            let (h0, hl) = end_thickness(&r.profile);
            interval_twophase_spectrum(*length, eps, h0, hl, r.beta, k)?
        }
        (BoundarySpec::Disk { radius }, None) => {
            DiskLimit::new(*radius, b(r.profile.sup()))?.lowest(k)?.iter().map(|e| e.value).collect()
        }
        (BoundarySpec::Disk { radius }, Some(eps)) => DiskTwoPhase::new(*radius, eps, r.profile.sup(), r.beta)?
            .lowest(k)?
            .iter()
            .map(|e| e.value)
            .collect(),
        _ => return Err(RunError::Validation("oracle-compare supports the interval and the disk only".into())),
    })
}

fn fem_values(r: &Resolved, eps: Option<f64>, disc: &Discretization) -> Result<Vec<f64>, RunError> {
    Ok(match eps {
        None => limit(r, disc)?.spectrum.eigenvalues,
        Some(eps) => solve_twophase(&r.spec, &r.profile, r.beta, eps, r.eigenvalues, disc)?.spectrum.eigenvalues,
    })
}

fn oracle_compare(r: &Resolved) -> Result<Outcome, RunError> {
    let disk = matches!(r.spec, BoundarySpec::Disk { .. });
    let tolerance = r.config.oracle.tolerance.unwrap_or(if disk { 1e-3 } else { 1e-6 });
    let richardson = r.config.oracle.richardson.unwrap_or(disk);
    let k = r.eigenvalues;
    let mut cases: Vec<Option<f64>> = vec![None];
    cases.extend(r.config.oracle.eps.iter().map(|&e| Some(e)));

    let coarse = Discretization {
        resolution: 2.0 * r.discretization.resolution,
        ..r.discretization
    };
    let mut t = Table::new(&["epsilon", "j", "fem", "oracle", "relative_error", "verdict"]);
    let mut summary = Vec::new();
    let mut all_pass = true;
    let mut rows = Vec::new();
    for eps in cases {
        let exact = oracle_values(r, eps, k)?;
        let fine = fem_values(r, eps, &r.discretization)?;
        let fem: Vec<f64> = if richardson {
            let c = fem_values(r, eps, &coarse)?;
            fine.iter().zip(&c).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
        } else {
            fine
        };
        let mut worst: f64 = 0.0;
        for j in 0..k {
            let rel = (fem[j] - exact[j]).abs() / exact[j].abs().max(1.0);
            worst = worst.max(rel);
            let pass = rel <= tolerance;
            all_pass &= pass;
            t.push(vec![
                float(eps.unwrap_or(0.0)),
                (j + 1).to_string(),
                float(fem[j]),
                float(exact[j]),
                float(rel),
                if pass { "PASS" } else { "FAIL" }.into(),
            ]);
        }
        let label = eps.map_or("limit".to_string(), |e| format!("eps = {e}"));
        summary.push(format!(
            "{label}: max relative error {} over j <= {k} {}",
            float(worst),
            if worst <= tolerance { "PASS" } else { "FAIL" }
        ));
        rows.push(json!({ "eps": eps, "max_relative_error": worst, "pass": worst <= tolerance }));
    }
    summary.push(format!("overall {}", if all_pass { "PASS" } else { "FAIL" }));
    Ok(Outcome {
        files: vec![("oracle.csv".into(), t.render())],
        parameters: json!({ "tolerance": tolerance, "richardson": richardson, "coarse_resolution": coarse.resolution, "eps": r.config.oracle.eps }),
        results: json!({ "cases": rows, "pass": all_pass }),
        summary,
        not_converged: false,
    })
}
