//! Central finite differences in the parameter vector.

use super::NumericsConfig;

/// Step size for central differences at coordinate value `x`.
pub fn fd_step(cfg: &NumericsConfig, x: f64) -> f64 {
    cfg.fd_step_theta * (1.0 + x.abs())
}

/// Central-difference partial derivative of a scalar function.
pub fn fd_partial<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    theta: &[f64],
    dim: usize,
    cfg: &NumericsConfig,
) -> f64 {
    let h = fd_step(cfg, theta[dim]);
    let mut tp = theta.to_vec();
    let mut tm = theta.to_vec();
    tp[dim] += h;
    tm[dim] -= h;
    (f(&tp) - f(&tm)) / (2.0 * h)
}

/// Central-difference gradient of a scalar function of the parameter vector.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Vec<f64> {
    (0..theta.len())
        .map(|i| fd_partial(&mut f, theta, i, cfg))
        .collect()
}

/// Maximum antisymmetric part of the Jacobian of a vector field, estimated
/// by central differences: max over index pairs of |d_s v_r - d_r v_s|.
/// A conservative (gradient) field has zero curl.
pub fn max_curl<F: FnMut(&[f64]) -> Vec<f64>>(
    mut field: F,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> f64 {
    let p = theta.len();
    if p < 2 {
        return 0.0;
    }
    // jac[s][r] = d v_r / d theta_s
    let mut jac = vec![vec![0.0; p]; p];
    for s in 0..p {
        let h = fd_step(cfg, theta[s]);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[s] += h;
        tm[s] -= h;
        let vp = field(&tp);
        let vm = field(&tm);
        for r in 0..p {
            jac[s][r] = (vp[r] - vm[r]) / (2.0 * h);
        }
    }
    let mut worst: f64 = 0.0;
    for s in 0..p {
        for r in (s + 1)..p {
            worst = worst.max((jac[s][r] - jac[r][s]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gradient_of_quadratic_form() {
        let cfg = NumericsConfig::default();
        // f = x^2 + 3xy + 2y^2, grad = (2x + 3y, 3x + 4y)
        let f = |t: &[f64]| t[0] * t[0] + 3.0 * t[0] * t[1] + 2.0 * t[1] * t[1];
        let g = fd_gradient(f, &[1.5, -0.5], &cfg);
        assert_abs_diff_eq!(g[0], 1.5, epsilon = 1e-7);
        assert_abs_diff_eq!(g[1], 2.5, epsilon = 1e-7);
    }

    #[test]
    fn rotation_field_has_curl_two() {
        let cfg = NumericsConfig::default();
        let c = max_curl(|t: &[f64]| vec![-t[1], t[0]], &[0.3, 0.7], &cfg);
        assert_abs_diff_eq!(c, 2.0, epsilon = 1e-8);
    }
}
