//! Returned modes satisfy the boundary and transmission conditions they were solved from.

use thinlayer_oracles::{interval_limit_modes, DiskLimit, DiskTwoPhase, IntervalTwoPhase};

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let d = 1e-5;
    (f(x + d) - f(x - d)) / (2.0 * d)
}

#[test]
fn interval_limit_modes_satisfy_robin_conditions() {
    let (length, b0, bl) = (1.3, 0.7, 2.5);
    for mode in interval_limit_modes(length, b0, bl, 6).unwrap() {
        let u = |x: f64| mode.value(x);
        let scale = mode.omega.max(1.0);
        assert!((central(u, 0.0) - b0 * u(0.0)).abs() < 1e-8 * scale);
        assert!((central(u, length) + bl * u(length)).abs() < 1e-8 * scale);
    }
}

#[test]
fn interval_twophase_modes_satisfy_transmission_conditions() {
    let p = IntervalTwoPhase {
        length: 1.0,
        eps: 0.04,
        h_left: 0.3,
        h_right: 0.6,
        beta: 1.5,
    };
    for mode in p.modes(5).unwrap() {
        let tiny = 1e-13;
        // continuity of the field across both interfaces
        assert!((mode.value(-tiny) - mode.value(0.0)).abs() < 1e-9);
        assert!((mode.value(1.0 + tiny) - mode.value(1.0)).abs() < 1e-9);
        // continuity of the flux, diffusivity eps in the layer
        let scale = mode.omega.max(1.0);
        assert!((mode.derivative(0.0) - p.eps * mode.layer_derivative_at_interface(true)).abs() < 1e-9 * scale);
        assert!((mode.derivative(1.0) - p.eps * mode.layer_derivative_at_interface(false)).abs() < 1e-9 * scale);
        // outer Robin condition eps du/dn + beta u = 0
        let left = -p.eps * p.h_left;
        let right = 1.0 + p.eps * p.h_right;
        assert!((p.eps * mode.derivative(left) - p.beta * mode.value(left)).abs() < 1e-9 * scale);
        assert!((p.eps * mode.derivative(right) + p.beta * mode.value(right)).abs() < 1e-9 * scale);
    }
}

#[test]
fn disk_limit_modes_satisfy_robin_condition() {
    let problem = DiskLimit::new(1.2, 0.8).unwrap();
    for e in problem.lowest(10).unwrap() {
        let mode = problem.mode(&e);
        let radial = |r: f64| mode.radial(r).unwrap();
        let residual = central(radial, 1.2) + 0.8 * radial(1.2);
        assert!(residual.abs() < 1e-7 * mode.omega.max(1.0), "order {}: {residual:e}", e.order);
    }
}

#[test]
fn disk_twophase_mode_is_continuous_at_the_interface() {
    let problem = DiskTwoPhase::new(1.0, 0.05, 0.5, 1.0).unwrap();
    for e in problem.lowest(6).unwrap() {
        let mode = problem.mode(&e).unwrap();
        let inner = mode.radial(1.0).unwrap();
        let outer = mode.radial(1.0 + 1e-12).unwrap();
        assert!((inner - outer).abs() < 1e-9, "order {}: {inner} vs {outer}", e.order);
    }
}

#[test]
fn unit_diffusivity_disk_layer_is_a_larger_disk() {
    // eps = 1: the layer is the annulus R < r < R + h with the interior equation
    let (h, beta) = (0.4, 1.7);
    let two_phase = DiskTwoPhase::new(1.0, 1.0, h, beta).unwrap().lowest(8).unwrap();
    let larger = DiskLimit::new(1.0 + h, beta).unwrap().lowest(8).unwrap();
    for (a, b) in two_phase.iter().zip(&larger) {
        assert_eq!(a.order, b.order);
        assert!((a.value - b.value).abs() < 1e-10 * b.value.max(1.0), "{} vs {}", a.value, b.value);
    }
}

#[test]
fn disk_twophase_approaches_the_limit_linearly() {
    let limit = DiskLimit::new(1.0, 1.0 / 1.5).unwrap().lowest(1).unwrap()[0].value;
    let gaps: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&eps| (DiskTwoPhase::new(1.0, eps, 0.5, 1.0).unwrap().lowest(1).unwrap()[0].value - limit).abs())
        .collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.05, "halving ratio {ratio}");
    }
}
