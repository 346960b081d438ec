//! Gauss-Legendre rules on `[0, 1]`.

/// Nodes and weights of the `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, points: usize) -> f64 {
    let rule = gauss_legendre_unit(points);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let x0 = a + p as f64 * h;
        for &(x, w) in &rule {
            sum += w * f(x0 + x * h);
        }
    }
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_rule() {
        let r = gauss_legendre_unit(3);
        let s = (0.6f64).sqrt();
        assert!((r[0].0 - 0.5 * (1.0 - s)).abs() < 1e-15);
        assert!((r[1].0 - 0.5).abs() < 1e-15);
        assert!((r[1].1 - 4.0 / 9.0).abs() < 1e-15);
        assert!((r[0].1 - 5.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_polynomials() {
        for n in 1..12 {
            let rule = gauss_legendre_unit(n);
            for deg in 0..(2 * n) {
                let got: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_sine() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 8, 8);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
