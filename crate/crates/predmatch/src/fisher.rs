//! Fisher information by quadrature, the square-root-determinant prior
//! gradient, and the level-integral route to the information matrix.

use crate::error::{Error, Result};
use crate::family::ParametricFamily;
use crate::numerics::{self, quadrature, Mat, NumericsConfig};
use crate::quantile_match;

/// Information matrix at a parameter point, with its inverse and log
/// determinant. `asymmetry` records how far the raw quadrature result was
/// from exactly symmetric before averaging; values above 1e-6 indicate a
/// quadrature quality problem.
#[derive(Clone, Debug)]
pub struct InfoMatrix {
    pub theta: Vec<f64>,
    pub g: Mat,
    pub g_inv: Mat,
    pub log_det: f64,
    pub min_eigenvalue: f64,
    pub asymmetry: f64,
}

/// Information matrix as the score outer product integrated against the
/// density over the truncation window.
pub fn fisher_info(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<InfoMatrix> {
    fam.check_domain(theta)?;
    let p = fam.param_dim;
    let mut g = Mat::zeros(p);

    match fam.obs_dim {
        1 => {
            let w = fam.window_1d(theta, cfg);
            let edges = quadrature::graded_edges(w.center, w.scale, w.lo, w.hi);
            for s in 0..p {
                for t in s..p {
                    let v = quadrature::integrate_panels(
                        &mut |x| {
                            let sc = fam.score(&[x], theta);
                            sc[s] * sc[t] * fam.density(&[x], theta)
                        },
                        &edges,
                        cfg.x_quad_nodes,
                    )?;
                    g.set(s, t, v);
                    g.set(t, s, v);
                }
            }
        }
        2 => {
            let ws = fam.windows(theta, cfg);
            let e0 = quadrature::graded_edges(ws[0].center, ws[0].scale, ws[0].lo, ws[0].hi);
            let e1 = quadrature::graded_edges(ws[1].center, ws[1].scale, ws[1].lo, ws[1].hi);
            // accumulate all entries in a single pass over the tensor grid
            let mut acc = vec![0.0; p * p];
            let rule = quadrature::GaussLegendre::cached(cfg.x_quad_nodes);
            for pair0 in e0.windows(2) {
                let half0 = 0.5 * (pair0[1] - pair0[0]);
                let mid0 = 0.5 * (pair0[1] + pair0[0]);
                for (i0, &n0) in rule.nodes.iter().enumerate() {
                    let x0 = mid0 + half0 * n0;
                    let w0 = half0 * rule.weights[i0];
                    for pair1 in e1.windows(2) {
                        let half1 = 0.5 * (pair1[1] - pair1[0]);
                        let mid1 = 0.5 * (pair1[1] + pair1[0]);
                        for (i1, &n1) in rule.nodes.iter().enumerate() {
                            let x1 = mid1 + half1 * n1;
                            let w = w0 * half1 * rule.weights[i1];
                            let x = [x0, x1];
                            let f = fam.density(&x, theta);
                            if f == 0.0 {
                                continue;
                            }
                            let sc = fam.score(&x, theta);
                            for s in 0..p {
                                for t in s..p {
                                    acc[s * p + t] += w * sc[s] * sc[t] * f;
                                }
                            }
                        }
                    }
                }
            }
            for s in 0..p {
                for t in s..p {
                    g.set(s, t, acc[s * p + t]);
                    g.set(t, s, acc[s * p + t]);
                }
            }
        }
        d => {
            return Err(Error::Unsupported(format!("observation dimension {d}")));
        }
    }

    finish_info(theta, g)
}

/// Information matrix from the level-integral identity: the score evaluated
/// along the quantile curve, squared and integrated over levels in (0, 1),
/// recovers the information matrix. Univariate observations only.
pub fn fisher_via_alpha(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<InfoMatrix> {
    fam.check_domain(theta)?;
    if fam.obs_dim != 1 {
        return Err(Error::Unsupported(
            "level-integral information requires univariate observations".into(),
        ));
    }
    let p = fam.param_dim;
    let grid = cfg.alpha_grid()?;
    let mut g = Mat::zeros(p);
    for (&alpha, &w) in grid.nodes.iter().zip(&grid.weights) {
        let q = quantile_match::freq_quantile(fam, theta, alpha, cfg)?;
        let sc = fam.score(&[q], theta);
        for s in 0..p {
            for t in s..p {
                g.set(s, t, g.get(s, t) + w * sc[s] * sc[t]);
            }
        }
    }
    for s in 0..p {
        for t in s..p {
            g.set(t, s, g.get(s, t));
        }
    }
    finish_info(theta, g)
}

fn finish_info(theta: &[f64], mut g: Mat) -> Result<InfoMatrix> {
    let asymmetry = g.symmetrize();
    let eig = g.eigenvalues_sym();
    let min_eigenvalue = eig[0];
    if min_eigenvalue <= 0.0 {
        return Err(Error::NonRegularModel {
            theta: theta.to_vec(),
            min_eig: min_eigenvalue,
        });
    }
    let g_inv = g.inverse().map_err(|_| Error::NonRegularModel {
        theta: theta.to_vec(),
        min_eig: min_eigenvalue,
    })?;
    let log_det = eig.iter().map(|e| e.ln()).sum();
    Ok(InfoMatrix {
        theta: theta.to_vec(),
        g,
        g_inv,
        log_det,
        min_eigenvalue,
        asymmetry,
    })
}

/// Gradient of the log square-root-determinant prior, assembled as
/// (1/2) tr(g^{-1} d_r g) with the information derivative taken by central
/// differences of the quadrature information matrix.
pub fn jeffreys_gradient(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<f64>> {
    let p = fam.param_dim;
    let center = fisher_info(fam, theta, cfg)?;
    let mut grad = vec![0.0; p];
    for r in 0..p {
        let h = numerics::fd_step(cfg, theta[r]);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[r] += h;
        tm[r] -= h;
        let gp = fisher_info(fam, &tp, cfg)?;
        let gm = fisher_info(fam, &tm, cfg)?;
        let mut acc = 0.0;
        for s in 0..p {
            for t in 0..p {
                let dg = (gp.g.get(s, t) - gm.g.get(s, t)) / (2.0 * h);
                acc += center.g_inv.get(s, t) * dg;
            }
        }
        grad[r] = 0.5 * acc;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::builtin_family;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bvn_information_matches_oracle() {
        let fam = builtin_family("bvn-cholesky").unwrap();
        let cfg = NumericsConfig::default();
        let theta = [1.0, 2.0, 0.5];
        let info = fisher_info(&fam, &theta, &cfg).unwrap();
        let oracle = (fam.oracles.fisher.as_ref().unwrap())(&theta);
        for s in 0..3 {
            for t in 0..3 {
                let o = oracle.get(s, t);
                let tol = if o == 0.0 { 1e-6 } else { 1e-4 * o.abs() };
                assert_abs_diff_eq!(info.g.get(s, t), o, epsilon = tol);
            }
        }
    }

    #[test]
    fn normal_location_unit_information() {
        let fam = builtin_family("normal-location").unwrap();
        let cfg = NumericsConfig::default();
        let info = fisher_info(&fam, &[0.0], &cfg).unwrap();
        assert_abs_diff_eq!(info.g.get(0, 0), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn location_scale_normal_information_diag() {
        let fam = builtin_family("location-scale-normal").unwrap();
        let cfg = NumericsConfig::default();
        let info = fisher_info(&fam, &[0.0, 1.0], &cfg).unwrap();
        assert_abs_diff_eq!(info.g.get(0, 0), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(info.g.get(1, 1), 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(info.g.get(0, 1), 0.0, epsilon = 1e-9);
        // product with the inverse is the identity
        let prod = info.g.mul(&info.g_inv);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod.get(i, j), expect, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn level_route_matches_direct_information() {
        let cfg = NumericsConfig::default();
        for (name, theta) in [
            ("normal-location", vec![0.0]),
            ("location-scale-normal", vec![0.0, 1.0]),
            ("normal-mean-eq-var", vec![1.0]),
        ] {
            let fam = builtin_family(name).unwrap();
            let a = fisher_info(&fam, &theta, &cfg).unwrap();
            let b = fisher_via_alpha(&fam, &theta, &cfg).unwrap();
            for s in 0..fam.param_dim {
                for t in 0..fam.param_dim {
                    let denom = a.g.get(s, s).max(a.g.get(t, t));
                    assert!(
                        (a.g.get(s, t) - b.g.get(s, t)).abs() / denom < 1e-3,
                        "{name} entry ({s},{t}): {} vs {}",
                        a.g.get(s, t),
                        b.g.get(s, t)
                    );
                }
            }
        }
    }

    #[test]
    fn jeffreys_gradient_closed_forms() {
        let cfg = NumericsConfig::default();

        let fam = builtin_family("normal-location").unwrap();
        let g = jeffreys_gradient(&fam, &[0.7], &cfg).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-7);

        // scale family: the determinant scales like the inverse fourth power
        // of the scale, so the gradient is (0, -2/t2)
        let fam = builtin_family("location-scale-normal").unwrap();
        let g = jeffreys_gradient(&fam, &[0.0, 2.0], &cfg).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(g[1], -1.0, epsilon = 1e-6);

        let fam = builtin_family("bvn-cholesky").unwrap();
        let g = jeffreys_gradient(&fam, &[1.0, 1.0, 0.0], &cfg).unwrap();
        assert_abs_diff_eq!(g[0], -2.0, epsilon = 1e-5);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-5);
        assert_abs_diff_eq!(g[2], 0.0, epsilon = 1e-5);
    }

    #[test]
    fn jeffreys_gradient_agrees_with_log_det_fd() {
        let cfg = NumericsConfig::default();
        let fam = builtin_family("normal-mean-eq-var").unwrap();
        let theta = [1.3];
        let g = jeffreys_gradient(&fam, &theta, &cfg).unwrap();
        let fd = crate::numerics::fd_gradient(
            |t| 0.5 * fisher_info(&fam, t, &cfg).unwrap().log_det,
            &theta,
            &cfg,
        );
        assert_abs_diff_eq!(g[0], fd[0], epsilon = 1e-6);
        // closed form: d/dt log sqrt(g) = 1/(2t+1) - 1/t
        assert_abs_diff_eq!(g[0], 1.0 / (2.0 * 1.3 + 1.0) - 1.0 / 1.3, epsilon = 1e-6);
    }

    #[test]
    fn scale_equivariance_of_information() {
        // g(t1, t2) = t2^-2 g(0, 1) for location-scale models
        let cfg = NumericsConfig::default();
        let fam = builtin_family("location-scale-logistic").unwrap();
        let base = fisher_info(&fam, &[0.0, 1.0], &cfg).unwrap();
        let scaled = fisher_info(&fam, &[3.0, 2.5], &cfg).unwrap();
        for s in 0..2 {
            for t in 0..2 {
                assert_abs_diff_eq!(
                    scaled.g.get(s, t),
                    base.g.get(s, t) / (2.5 * 2.5),
                    epsilon = 1e-8
                );
            }
        }
    }
}
