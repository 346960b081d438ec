//! Closed-form spectra of the insulated interval.
//!
//! Both problems are reduced to a monotone phase equation. For the limit
//! problem on `(0, L)` with `-u'(0) + b0 u(0) = 0` and `u'(L) + bL u(L) = 0`,
//! eigenfunctions are `sin(w x + phi)` and the n-th root solves
//! `w L = (n - 1) pi + atan(b0 / w) + atan(bL / w)`, which is the usual
//! `tan(wL) = w (b0 + bL) / (w^2 - b0 bL)` without its poles.
//!
//! For the two-phase problem each layer contributes a phase `p(theta)` where
//! `theta = w sqrt(eps) h + atan(sqrt(eps) w / beta)` is the phase accumulated
//! across the layer (wavenumber `w / sqrt(eps)`) and `p` converts it through
//! the flux jump `u'(-) = eps u'(+)`. The j-th root solves
//! `w L + p(theta_0) + p(theta_L) = j pi`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::OracleError;
use crate::roots::bisect;

fn check_positive(name: &str, v: f64) -> Result<(), OracleError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(OracleError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<(), OracleError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(OracleError::InvalidParameter(format!("{name} must be non-negative, got {v}")))
    }
}

/// `(w^2 - b0 bL) sin(wL) - w (b0 + bL) cos(wL)`; vanishes at every limit eigenvalue `w^2`.
pub fn interval_limit_residual(length: f64, b0: f64, b_l: f64, omega: f64) -> f64 {
    (omega * omega - b0 * b_l) * (omega * length).sin() - omega * (b0 + b_l) * (omega * length).cos()
}

/// A limit-problem eigenmode `u(x) = sin(w x + phase)` on `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalLimitMode {
    pub length: f64,
    pub omega: f64,
    pub phase: f64,
}

impl IntervalLimitMode {
    pub fn eigenvalue(&self) -> f64 {
        self.omega * self.omega
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.omega * x + self.phase).sin()
    }

    /// `int_0^L u^2 dx`.
    pub fn norm_squared(&self) -> f64 {
        sin_squared_integral(self.omega, self.phase, self.length)
    }
}

/// `int_0^len sin^2(w s + phase) ds`.
fn sin_squared_integral(omega: f64, phase: f64, len: f64) -> f64 {
    if omega == 0.0 {
        return len * phase.sin().powi(2);
    }
    let wl = omega * len;
    if wl.abs() < 1e-4 {
        // series in wl avoids cancellation for thin layers
        let s = phase.sin();
        let c = phase.cos();
        return len * (s * s + wl * s * c + wl * wl * (c * c - s * s) / 3.0);
    }
    0.5 * len - ((2.0 * (wl + phase)).sin() - (2.0 * phase).sin()) / (4.0 * omega)
}

/// First `k` modes of the limit (Robin) problem on `(0, L)`.
pub fn interval_limit_modes(length: f64, b0: f64, b_l: f64, k: usize) -> Result<Vec<IntervalLimitMode>, OracleError> {
    check_positive("length", length)?;
    check_nonnegative("b0", b0)?;
    check_nonnegative("bL", b_l)?;
    if k == 0 {
        return Err(OracleError::InvalidParameter("k must be at least 1".into()));
    }
    let phase_left = |w: f64| if b0 == 0.0 { FRAC_PI_2 } else { w.atan2(b0) };
    let mut modes = Vec::with_capacity(k);
    for n in 1..=k {
        let shift = (n - 1) as f64 * PI;
        let phi = |w: f64| w * length - b0.atan2(w) - b_l.atan2(w) - shift;
        let lo = shift / length;
        let hi = n as f64 * PI / length;
        let omega = if n == 1 && b0 == 0.0 && b_l == 0.0 {
            0.0
        } else {
            let (flo, fhi) = (phi(lo), phi(hi));
            if flo > 0.0 || fhi < 0.0 {
                return Err(OracleError::BracketExhausted { lo, hi });
            }
            bisect(phi, lo, hi)
        };
        modes.push(IntervalLimitMode {
            length,
            omega,
            phase: phase_left(omega),
        });
    }
    Ok(modes)
}

/// First `k` eigenvalues of `-u'' = lambda u`, `-u'(0) + b0 u(0) = 0`, `u'(L) + bL u(L) = 0`.
pub fn interval_limit_spectrum(length: f64, b0: f64, b_l: f64, k: usize) -> Result<Vec<f64>, OracleError> {
    Ok(interval_limit_modes(length, b0, b_l, k)?
        .iter()
        .map(IntervalLimitMode::eigenvalue)
        .collect())
}

/// Parameters of the insulated interval: `(0, L)` with layers of thickness
/// `eps h0` on the left and `eps hL` on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalTwoPhase {
    pub length: f64,
    pub eps: f64,
    pub h_left: f64,
    pub h_right: f64,
    pub beta: f64,
}

/// One side's layer data for a given frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LayerPhase {
    /// phase at the outer boundary
    psi: f64,
    /// phase at the interface
    theta: f64,
    /// interior phase `phi` with `cot phi = sqrt(eps) cot theta`
    phi: f64,
}

impl IntervalTwoPhase {
    pub fn validate(&self) -> Result<(), OracleError> {
        check_positive("length", self.length)?;
        check_positive("beta", self.beta)?;
        check_positive("h_left", self.h_left)?;
        check_positive("h_right", self.h_right)?;
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(OracleError::InvalidParameter(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        Ok(())
    }

    /// Robin coefficient of the limit problem at each end.
    pub fn limit_coefficients(&self) -> (f64, f64) {
        let b = |h: f64| self.beta / (1.0 + self.beta * h);
        (b(self.h_left), b(self.h_right))
    }

    fn layer_phase(&self, omega: f64, h: f64) -> LayerPhase {
        let se = self.eps.sqrt();
        let psi = (se * omega / self.beta).atan();
        let theta = omega * se * h + psi;
        let k = (theta / PI).round();
        let r = theta - k * PI;
        let phi = k * PI + (r.tan() / se).atan();
        LayerPhase { psi, theta, phi }
    }

    fn total_phase(&self, omega: f64) -> f64 {
        omega * self.length + self.layer_phase(omega, self.h_left).phi + self.layer_phase(omega, self.h_right).phi
    }

    /// First `k` eigenmodes, ascending.
    pub fn modes(&self, k: usize) -> Result<Vec<IntervalTwoPhaseMode>, OracleError> {
        self.validate()?;
        let mut modes = Vec::with_capacity(k);
        let mut lo: f64 = 0.0;
        for j in 1..=k {
            let target = j as f64 * PI;
            let mut hi = lo.max(PI / self.length);
            let mut guard = 0;
            while self.total_phase(hi) < target {
                lo = hi;
                hi *= 2.0;
                guard += 1;
                if guard > 200 {
                    return Err(OracleError::BracketExhausted { lo, hi });
                }
            }
            let omega = bisect(|w| self.total_phase(w) - target, lo, hi);
            modes.push(self.mode(omega, j));
            lo = omega;
        }
        Ok(modes)
    }

    fn mode(&self, omega: f64, index: usize) -> IntervalTwoPhaseMode {
        let left = self.layer_phase(omega, self.h_left);
        let right = self.layer_phase(omega, self.h_right);
        let se = self.eps.sqrt();
        let amplitude = |p: &LayerPhase| {
            let (s, c) = p.theta.sin_cos();
            if s.abs() >= c.abs() {
                p.phi.sin() / s
            } else {
                p.phi.cos() / (se * c)
            }
        };
        IntervalTwoPhaseMode {
            problem: *self,
            omega,
            kappa: omega / se,
            left,
            right,
            amp_left: amplitude(&left),
            amp_right: amplitude(&right),
            right_sign: if index % 2 == 1 { 1.0 } else { -1.0 },
        }
    }
}

/// An eigenmode of the insulated interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalTwoPhaseMode {
    pub problem: IntervalTwoPhase,
    pub omega: f64,
    /// wavenumber inside the layers, `omega / sqrt(eps)`
    pub kappa: f64,
    left: LayerPhase,
    right: LayerPhase,
    amp_left: f64,
    amp_right: f64,
    right_sign: f64,
}

impl IntervalTwoPhaseMode {
    pub fn eigenvalue(&self) -> f64 {
        self.omega * self.omega
    }

    /// Value at `x` in `[-eps h0, L + eps hL]`.
    pub fn value(&self, x: f64) -> f64 {
        let p = &self.problem;
        if x < 0.0 {
            let s = x + p.eps * p.h_left;
            self.amp_left * (self.kappa * s + self.left.psi).sin()
        } else if x > p.length {
            let s = p.length + p.eps * p.h_right - x;
            self.right_sign * self.amp_right * (self.kappa * s + self.right.psi).sin()
        } else {
            (self.omega * x + self.left.phi).sin()
        }
    }

    /// Derivative at `x`, taken one-sided from the region containing `x`
    /// (interior for `x` in `[0, L]`).
    pub fn derivative(&self, x: f64) -> f64 {
        let p = &self.problem;
        if x < 0.0 {
            let s = x + p.eps * p.h_left;
            self.amp_left * self.kappa * (self.kappa * s + self.left.psi).cos()
        } else if x > p.length {
            let s = p.length + p.eps * p.h_right - x;
            -self.right_sign * self.amp_right * self.kappa * (self.kappa * s + self.right.psi).cos()
        } else {
            self.omega * (self.omega * x + self.left.phi).cos()
        }
    }

    /// Outer-layer derivative at the interface `x = 0` or `x = L`.
    pub fn layer_derivative_at_interface(&self, left: bool) -> f64 {
        let p = &self.problem;
        if left {
            self.amp_left * self.kappa * (self.kappa * p.eps * p.h_left + self.left.psi).cos()
        } else {
            -self.right_sign * self.amp_right * self.kappa * (self.kappa * p.eps * p.h_right + self.right.psi).cos()
        }
    }

    /// `int_0^L u^2`.
    pub fn interior_norm_squared(&self) -> f64 {
        sin_squared_integral(self.omega, self.left.phi, self.problem.length)
    }

    /// `int` of `u^2` over both layers.
    pub fn layer_norm_squared(&self) -> f64 {
        let p = &self.problem;
        let l = self.amp_left.powi(2) * sin_squared_integral(self.kappa, self.left.psi, p.eps * p.h_left);
        let r = self.amp_right.powi(2) * sin_squared_integral(self.kappa, self.right.psi, p.eps * p.h_right);
        l + r
    }

    pub fn norm_squared(&self) -> f64 {
        self.interior_norm_squared() + self.layer_norm_squared()
    }
}

/// First `k` eigenvalues of the insulated interval, ascending.
///
/// Roots of the one-dimensional problem are always simple.
pub fn interval_twophase_spectrum(
    length: f64,
    eps: f64,
    h0: f64,
    h_l: f64,
    beta: f64,
    k: usize,
) -> Result<Vec<f64>, OracleError> {
    let problem = IntervalTwoPhase {
        length,
        eps,
        h_left: h0,
        h_right: h_l,
        beta,
    };
    Ok(problem.modes(k)?.iter().map(IntervalTwoPhaseMode::eigenvalue).collect())
}
