//! Bessel functions of the first and second kind for integer order.
//!
//! `J_n` comes from Miller's backward recurrence normalized with
//! `J_0 + 2 (J_2 + J_4 + ...) = 1`, which is accurate for every argument in
//! the supported range. `Y_0` and `Y_1` are built from Neumann series in the
//! `J_{2k}` and `Y_n` for larger orders from the (stable) forward recurrence.

use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::OracleError;

/// Largest argument the recurrences are validated for.
pub const MAX_ARGUMENT: f64 = 1.0e4;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_LIMIT: f64 = 1.0e250;

fn check_argument(x: f64, allow_zero: bool) -> Result<(), OracleError> {
    let ok = x.is_finite() && x <= MAX_ARGUMENT && if allow_zero { x >= 0.0 } else { x > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(OracleError::BesselRange { x })
    }
}

fn miller_start(order: usize, x: f64) -> usize {
    let base = order.max(x.ceil() as usize);
    let m = base + 30 + (10.0 * x.cbrt()) as usize;
    m + (m % 2)
}

/// `J_0(x), ..., J_{max_order}(x)` for `x >= 0`.
pub fn bessel_j_all(max_order: usize, x: f64) -> Result<Vec<f64>, OracleError> {
    check_argument(x, true)?;
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    let start = miller_start(max_order, x);
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1.0e-300; // J_k
    let mut norm = 0.0;
    let mut buf = vec![0.0; start + 1];
    buf[start] = cur;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        buf[k - 1] = cur;
        if cur.abs() > RESCALE_LIMIT {
            let s = 1.0 / RESCALE_LIMIT;
            for v in buf[k - 1..].iter_mut() {
                *v *= s;
            }
            next *= s;
            cur *= s;
            norm *= s;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * cur;
        }
    }
    norm += buf[0];
    for (o, b) in out.iter_mut().zip(buf.iter()) {
        *o = b / norm;
    }
    Ok(out)
}

/// `J_n(x)` for integer `n >= 0`, `x >= 0`.
pub fn bessel_j(n: usize, x: f64) -> Result<f64, OracleError> {
    Ok(bessel_j_all(n, x)?[n])
}

/// `J_n(x)` by its power series; accurate to ~1e-13 for `x` up to about 8.
pub fn bessel_j_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `Y_0(x), ..., Y_{max_order}(x)` for `x > 0`.
pub fn bessel_y_all(max_order: usize, x: f64) -> Result<Vec<f64>, OracleError> {
    check_argument(x, false)?;
    let jmax = miller_start(2, x) + 2;
    let j = bessel_j_all(jmax, x)?;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 <= jmax {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * log_term * j[0] - 2.0 * FRAC_2_PI * s0;
    let y1 = -FRAC_2_PI * (j[0] / x - log_term * j[1]) + FRAC_2_PI * s1;

    let mut out = Vec::with_capacity(max_order + 1);
    out.push(y0);
    if max_order >= 1 {
        out.push(y1);
    }
    for n in 1..max_order {
        let v = 2.0 * n as f64 / x * out[n] - out[n - 1];
        out.push(v);
    }
    Ok(out)
}

/// `Y_n(x)` for integer `n >= 0`, `x > 0`.
pub fn bessel_y(n: usize, x: f64) -> Result<f64, OracleError> {
    Ok(bessel_y_all(n, x)?[n])
}

/// Value and first derivative of a cylinder function of integer order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderValue {
    pub value: f64,
    pub derivative: f64,
}

fn with_derivative(all: &[f64], n: usize) -> CylinderValue {
    let derivative = if n == 0 {
        -all[1]
    } else {
        0.5 * (all[n - 1] - all[n + 1])
    };
    CylinderValue {
        value: all[n],
        derivative,
    }
}

/// `J_n(x)` and `J_n'(x)`.
pub fn bessel_j_with_derivative(n: usize, x: f64) -> Result<CylinderValue, OracleError> {
    Ok(with_derivative(&bessel_j_all(n + 1, x)?, n))
}

/// `Y_n(x)` and `Y_n'(x)`.
pub fn bessel_y_with_derivative(n: usize, x: f64) -> Result<CylinderValue, OracleError> {
    Ok(with_derivative(&bessel_y_all(n + 1, x)?, n))
}

/// `J_n Y_n' - J_n' Y_n`, which equals `2 / (pi x)`.
pub fn wronskian(n: usize, x: f64) -> Result<f64, OracleError> {
    let j = bessel_j_with_derivative(n, x)?;
    let y = bessel_y_with_derivative(n, x)?;
    Ok(j.value * y.derivative - j.derivative * y.value)
}

/// `2 / (pi x)`.
pub fn wronskian_exact(x: f64) -> f64 {
    2.0 / (PI * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // 30-digit reference values.
    const J_TABLE: &[(usize, f64, f64)] = &[
        (0, 2.5, -0.048383776468197996327),
        (1, 2.5, 0.49709410246427403801),
        (5, 2.5, 0.019501625134503219886),
        (2, 0.1, 0.001248958658799918984),
        (0, 50.0, 0.055812327669251815005),
        (3, 7.0, -0.16755558799533423603),
        (10, 30.0, -0.12987689399858876819),
        (0, 150.0, -0.00077409037539429124695),
    ];
    const Y_TABLE: &[(usize, f64, f64)] = &[
        (0, 2.5, 0.49807035961523188783),
        (1, 2.5, 0.14591813796678579888),
        (5, 2.5, -3.830176000740751863),
        (2, 0.1, -127.64478324269015877),
        (0, 50.0, -0.098064995470077079029),
        (3, 7.0, 0.26808060304231508345),
        (10, 30.0, 0.075056702122397113289),
        (0, 150.0, -0.065142221509037354596),
        (1, 0.01, -63.678596282060655049),
    ];

    #[test]
    fn j_matches_reference() {
        for &(n, x, want) in J_TABLE {
            let got = bessel_j(n, x).unwrap();
            assert!((got - want).abs() <= 1e-13 * want.abs().max(1.0), "J_{n}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn y_matches_reference() {
        for &(n, x, want) in Y_TABLE {
            let got = bessel_y(n, x).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "Y_{n}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn series_agrees_with_recurrence() {
        for n in 0..6 {
            for i in 0..40 {
                let x = 0.05 + 0.2 * i as f64;
                let a = bessel_j(n, x).unwrap();
                let b = bessel_j_series(n, x);
                assert!((a - b).abs() < 1e-13, "n={n} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn wronskian_identity() {
        for n in 0..8 {
            for i in 0..200 {
                let x = 0.02 + 1.5 * i as f64;
                let w = wronskian(n, x).unwrap();
                let exact = wronskian_exact(x);
                assert!((w - exact).abs() <= 1e-10 * exact.max(1.0), "n={n} x={x}: {w} vs {exact}");
            }
        }
    }

    #[test]
    fn j_at_zero() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(bessel_y(0, 0.0).is_err());
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_j(0, 2.0 * MAX_ARGUMENT).is_err());
        assert!(bessel_j(0, f64::NAN).is_err());
    }
}
