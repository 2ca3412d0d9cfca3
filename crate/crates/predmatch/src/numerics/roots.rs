//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Brent's method with guaranteed bisection fallback.
///
/// Requires f(lo) * f(hi) <= 0. Terminates when either the function value is
/// within `ftol` or the bracket has shrunk below machine scale around the
/// root.
pub fn find_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::NoBracket {
            lo,
            hi,
            flo: fa,
            fhi: fb,
        });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..max_iter {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 1e-15;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1 * xm.signum();
        }
        fb = f(b);
    }
    Err(Error::RootIterations(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_root() {
        let r = find_root(|x| x - 2.0, 0.0, 5.0, 1e-14, 100).unwrap();
        assert_abs_diff_eq!(r, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn normal_upper_quantile() {
        // reference value of the 97.5% standard normal quantile
        let n = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::ContinuousCDF;
        let r = find_root(|x| n.cdf(x) - 0.975, 0.0, 10.0, 1e-14, 200).unwrap();
        assert_abs_diff_eq!(r, 1.959963984540054, epsilon = 1e-9);
    }

    #[test]
    fn cubic_through_zero() {
        let tol = 1e-12;
        let r = find_root(|x| x * x * x, -1.0, 2.0, tol, 200).unwrap();
        assert!(r.powi(3).abs() <= tol);
    }

    #[test]
    fn missing_bracket_is_an_error() {
        assert!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50).is_err());
    }
}
