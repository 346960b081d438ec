//! Finite element spectra against the semi-analytic spectra of the interval and disk.

use thinlayer_core::assembly::ConstantWeight;
use thinlayer_core::eigensolve::fix_sign;
use thinlayer_core::geometry::BoundarySpec;
use thinlayer_core::mesh::fiber_sample;
use thinlayer_core::problem::{solve_limit_weight, solve_twophase, Discretization};
use thinlayer_core::profiles::ThicknessProfile;
use thinlayer_oracles::{disk_limit_spectrum, interval_limit_spectrum, interval_twophase_spectrum, IntervalTwoPhase};

fn disc(resolution: f64, layers: usize) -> Discretization {
    Discretization {
        resolution,
        layers,
        ..Default::default()
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) / y.abs().max(1.0)).abs()).fold(0.0, f64::max)
}

#[test]
fn interval_limit_matches_transcendental_roots() {
    let spec = BoundarySpec::Interval {
        length: std::f64::consts::PI,
    };
    let fem = solve_limit_weight(&spec, &ConstantWeight(1.0), 10, &disc(std::f64::consts::PI / 1e4, 1)).unwrap();
    let exact = interval_limit_spectrum(std::f64::consts::PI, 1.0, 1.0, 10).unwrap();
    let err = max_rel(&fem.spectrum.eigenvalues, &exact);
    assert!(err < 1e-6, "max relative error {err:e}");
}

#[test]
fn interval_twophase_matches_transcendental_roots() {
    let spec = BoundarySpec::Interval { length: 1.0 };
    let h = ThicknessProfile::constant(0.3).unwrap();
    // the layer wavenumber grows like eps^(-1/2); at eps = 0.1 the top mode needs more layers
    for (eps, layers) in [(0.1, 256), (0.025, 64), (0.01, 64)] {
        let fem = solve_twophase(&spec, &h, 1.0, eps, 5, &disc(1e-4, layers)).unwrap();
        let exact = interval_twophase_spectrum(1.0, eps, 0.3, 0.3, 1.0, 5).unwrap();
        let err = max_rel(&fem.spectrum.eigenvalues, &exact);
        assert!(err < 1e-6, "eps = {eps}: max relative error {err:e}");
    }
}

#[test]
fn unit_diffusivity_layer_is_a_longer_robin_interval() {
    let spec = BoundarySpec::Interval { length: 1.0 };
    let h = ThicknessProfile::constant(0.3).unwrap();
    let union = interval_limit_spectrum(1.6, 2.0, 2.0, 5).unwrap();
    let oracle = interval_twophase_spectrum(1.0, 1.0, 0.3, 0.3, 2.0, 5).unwrap();
    assert!(max_rel(&oracle, &union) < 1e-10);
    let fem = solve_twophase(&spec, &h, 2.0, 1.0, 5, &disc(1e-3, 300)).unwrap();
    let single = solve_limit_weight(&BoundarySpec::Interval { length: 1.6 }, &ConstantWeight(2.0), 5, &disc(1e-3, 1)).unwrap();
    assert!(max_rel(&fem.spectrum.eigenvalues, &single.spectrum.eigenvalues) < 1e-10);
    assert!(max_rel(&fem.spectrum.eigenvalues, &union) < 1e-5);
}

#[test]
fn interval_layer_field_matches_closed_form() {
    let spec = BoundarySpec::Interval { length: 1.0 };
    let h = ThicknessProfile::constant(0.3).unwrap();
    let eps = 0.05;
    let fem = solve_twophase(&spec, &h, 1.0, eps, 1, &disc(1e-3, 32)).unwrap();
    let problem = IntervalTwoPhase {
        length: 1.0,
        eps,
        h_left: 0.3,
        h_right: 0.3,
        beta: 1.0,
    };
    let mode = problem.modes(1).unwrap().remove(0);
    let scale = mode.norm_squared().sqrt();
    let u = fix_sign(fem.spectrum.eigenvectors[0].clone());
    // right end: tau = 0.5, outward along +x
    for (t, value) in fiber_sample(&fem.mesh, &u, 0.5, 11).unwrap() {
        let exact = mode.value(1.0 + t) / scale;
        assert!((value - exact.abs()).abs() < 1e-3, "t = {t}: {value} vs {exact}");
    }
}

#[test]
fn disk_limit_matches_bessel_roots_after_richardson() {
    let spec = BoundarySpec::Disk { radius: 1.0 };
    let exact: Vec<f64> = disk_limit_spectrum(1.0, 1.0, 8, 4).unwrap().iter().take(10).map(|e| e.value).collect();
    let coarse = solve_limit_weight(&spec, &ConstantWeight(1.0), 10, &disc(0.02, 1)).unwrap();
    let fine = solve_limit_weight(&spec, &ConstantWeight(1.0), 10, &disc(0.01, 1)).unwrap();
    let extrapolated: Vec<f64> = coarse
        .spectrum
        .eigenvalues
        .iter()
        .zip(&fine.spectrum.eigenvalues)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    let err = max_rel(&extrapolated, &exact);
    assert!(err < 1e-3, "max relative error {err:e}");
    // the raw fine mesh is already close, extrapolation must not hurt
    assert!(err <= max_rel(&fine.spectrum.eigenvalues, &exact) * 1.01);
}
