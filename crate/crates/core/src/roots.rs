//! Bracketed scalar root finding.

/// Brent's method on a bracket with `f(lo) <= 0 <= f(hi)` (or the reverse).
///
/// Stops when `|f| <= ftol`, when the bracket shrinks to a few ulps, or
/// after `max_iter` iterations, returning the abscissa with the smallest
/// residual seen.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, f_lo: f64, f_hi: f64, ftol: f64, max_iter: usize) -> f64
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    debug_assert!(fa.signum() != fb.signum(), "root not bracketed");
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..max_iter {
        if fb.abs() <= ftol {
            break;
        }
        let tol = 4.0 * f64::EPSILON * b.abs().max(f64::MIN_POSITIVE);
        if (b - a).abs() <= tol {
            break;
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let bound = (3.0 * a + b) / 4.0;
        let outside = !((s > bound.min(b)) && (s < bound.max(b)));
        let slow = if bisected {
            (s - b).abs() >= 0.5 * (b - c).abs() || (b - c).abs() < tol
        } else {
            (s - b).abs() >= 0.5 * (c - d).abs() || (c - d).abs() < tol
        };
        if outside || slow || !s.is_finite() {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa.signum() == fs.signum() {
            a = s;
            fa = fs;
        } else {
            b = s;
            fb = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let f = |x: f64| x * x - 2.0;
        let r = brent(f, 0.0, 2.0, f(0.0), f(2.0), 0.0, 200);
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn handles_reversed_sign_and_steep_functions() {
        let f = |x: f64| (-x).exp() - 1e-8;
        let r = brent(f, 0.0, 40.0, f(0.0), f(40.0), 0.0, 500);
        assert!((r - 8.0 * std::f64::consts::LN_10).abs() < 1e-12);
    }
}
