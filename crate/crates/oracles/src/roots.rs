//! Scalar root finding on sign-changing brackets.

/// Bisection on `[lo, hi]` with `f(lo)` and `f(hi)` of opposite sign (or zero).
///
/// Runs until the bracket is a few ulps wide, so the relative accuracy is at
/// the level of the function's own rounding error.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(flo.signum() != fhi.signum(), "bracket without sign change");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scans `[start, ...)` with a fixed step and returns the first `count` roots.
///
/// Gives up after `max_steps` steps.
pub fn scan_roots<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    step: f64,
    count: usize,
    max_steps: usize,
) -> Result<Vec<f64>, (f64, f64)> {
    let mut roots = Vec::with_capacity(count);
    let mut a = start;
    let mut fa = f(a);
    for _ in 0..max_steps {
        if roots.len() == count {
            return Ok(roots);
        }
        let b = a + step;
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fb != 0.0 && fa.signum() != fb.signum() {
            roots.push(bisect(&mut f, a, b));
        }
        a = b;
        fa = fb;
    }
    if roots.len() == count {
        Ok(roots)
    } else {
        Err((a - step, a))
    }
}

/// Scans `[start, stop]` and returns every root found.
pub fn roots_below<F: FnMut(f64) -> f64>(mut f: F, start: f64, stop: f64, step: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut a = start;
    let mut fa = f(a);
    while a < stop {
        let b = (a + step).min(stop);
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fb != 0.0 && fa.signum() != fb.signum() {
            roots.push(bisect(&mut f, a, b));
        }
        a = b;
        fa = fb;
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scan_finds_sine_zeros() {
        let roots = scan_roots(f64::sin, 0.5, 0.1, 3, 1000).unwrap();
        for (k, r) in roots.iter().enumerate() {
            assert!((r - (k + 1) as f64 * std::f64::consts::PI).abs() < 1e-14);
        }
    }

    #[test]
    fn scan_reports_exhaustion() {
        assert!(scan_roots(|x| x + 1.0, 0.0, 0.1, 1, 10).is_err());
    }
}
