//! Upper-quantile predictive matching: the frozen-quantile tail gradient,
//! the first-order matching residual for a prior, the gradient correction
//! that turns the Jeffreys gradient into the uniformly matching gradient,
//! and field diagnostics (curl test, line reconstruction).
//!
//! The matching residual at parameter `theta` and level `alpha` is
//!
//! ```text
//! eps = sum_s { u^s d_s(log prior) + d_s u^s },   u^s = sum_t ginv[s][t] mu_t
//! ```
//!
//! where `mu` is the gradient of the upper-tail probability at the frozen
//! frequentist quantile. A prior is level-`alpha` matching at `theta` exactly
//! when the residual vanishes; it is *uniformly* matching when the residual
//! vanishes at every level. The divergence term is computed by central
//! differences of the assembled product `u`, never term by term, so a single
//! stencil covers it.

use crate::error::{Error, Result};
use crate::family::{ParametricFamily, PriorField};
use crate::fisher::{self, InfoMatrix};
use crate::numerics::{self, quadrature, NumericsConfig};

/// Frequentist upper quantile: the root of 1 - F(q; theta) = alpha.
pub fn freq_quantile(
    fam: &ParametricFamily,
    theta: &[f64],
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<f64> {
    fam.check_domain(theta)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("level {alpha} outside (0, 1)")));
    }
    let cdf = fam
        .cdf
        .as_ref()
        .ok_or_else(|| Error::Unsupported("quantiles need an observation CDF".into()))?;
    let w = fam.window_1d(theta, cfg);
    let target = 1.0 - alpha;
    let flo = cdf(w.lo, theta) - target;
    let fhi = cdf(w.hi, theta) - target;
    if flo * fhi > 0.0 {
        return Err(Error::Config(format!(
            "window [{}, {}] does not bracket the level-{alpha} quantile",
            w.lo, w.hi
        )));
    }
    numerics::find_root(|q| cdf(q, theta) - target, w.lo, w.hi, cfg.root_tol, 200)
}

/// Quantile together with the tail gradient at the frozen quantile.
#[derive(Clone, Debug)]
pub struct QuantileSlice {
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub q: f64,
    /// Gradient (in theta) of the upper-tail probability beyond `q`.
    pub mu: Vec<f64>,
    pub mu_err: f64,
}

/// Tail gradient by quadrature of the density gradient over [q, window hi].
pub fn tail_gradient(
    fam: &ParametricFamily,
    theta: &[f64],
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<QuantileSlice> {
    let q = freq_quantile(fam, theta, alpha, cfg)?;
    let w = fam.window_1d(theta, cfg);
    let p = fam.param_dim;
    let edges = quadrature::graded_edges_from(q, w.scale, w.hi);
    let rule = quadrature::GaussLegendre::cached(cfg.x_quad_nodes);
    let coarse_rule = quadrature::GaussLegendre::cached((cfg.x_quad_nodes / 2).max(2));

    let mut mu = vec![0.0; p];
    let mut mu_coarse = vec![0.0; p];
    for (r, acc) in [(rule, &mut mu), (coarse_rule, &mut mu_coarse)] {
        for pair in edges.windows(2) {
            let half = 0.5 * (pair[1] - pair[0]);
            let mid = 0.5 * (pair[1] + pair[0]);
            for (i, &x) in r.nodes.iter().enumerate() {
                let u = mid + half * x;
                let wgt = half * r.weights[i];
                let f = fam.density(&[u], theta);
                if f == 0.0 {
                    continue;
                }
                let sc = fam.score(&[u], theta);
                for t in 0..p {
                    acc[t] += wgt * sc[t] * f;
                }
            }
        }
    }
    let mu_err = mu
        .iter()
        .zip(&mu_coarse)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    Ok(QuantileSlice {
        theta: theta.to_vec(),
        alpha,
        q,
        mu,
        mu_err,
    })
}

/// A matching residual value with a rough numerical-error estimate.
#[derive(Clone, Copy, Debug)]
pub struct Residual {
    pub epsilon: f64,
    pub err_est: f64,
}

/// Prior-independent ingredients of the residual at one (theta, alpha) cell:
/// the transported tail gradient `u` and its divergence.
#[derive(Clone, Debug)]
pub struct ResidualCell {
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub u: Vec<f64>,
    pub div_u: f64,
    pub err_est: f64,
}

impl ResidualCell {
    /// Evaluate the residual for a prior via its log gradient.
    pub fn evaluate(&self, prior: &PriorField) -> Residual {
        let grad = prior.gradient(&self.theta);
        let epsilon: f64 = self.u.iter().zip(&grad).map(|(u, g)| u * g).sum::<f64>() + self.div_u;
        Residual {
            epsilon,
            err_est: self.err_est,
        }
    }
}

/// Information matrices at the center and the 2p points of the central
/// difference stencil; shared across levels and priors in sweeps.
pub struct InfoStencil {
    pub center: InfoMatrix,
    pub plus: Vec<InfoMatrix>,
    pub minus: Vec<InfoMatrix>,
    pub steps: Vec<f64>,
    pub theta_plus: Vec<Vec<f64>>,
    pub theta_minus: Vec<Vec<f64>>,
}

pub fn info_stencil(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<InfoStencil> {
    fam.check_domain(theta)?;
    let p = fam.param_dim;
    let center = fisher::fisher_info(fam, theta, cfg)?;
    let mut plus = Vec::with_capacity(p);
    let mut minus = Vec::with_capacity(p);
    let mut steps = Vec::with_capacity(p);
    let mut theta_plus = Vec::with_capacity(p);
    let mut theta_minus = Vec::with_capacity(p);
    for s in 0..p {
        let h = numerics::fd_step(cfg, theta[s]);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[s] += h;
        tm[s] -= h;
        if !fam.param_domain.contains(&tp) || !fam.param_domain.contains(&tm) {
            return Err(Error::DomainViolation {
                theta: theta.to_vec(),
                reason: "finite-difference stencil leaves the parameter domain".into(),
            });
        }
        plus.push(fisher::fisher_info(fam, &tp, cfg)?);
        minus.push(fisher::fisher_info(fam, &tm, cfg)?);
        steps.push(h);
        theta_plus.push(tp);
        theta_minus.push(tm);
    }
    Ok(InfoStencil {
        center,
        plus,
        minus,
        steps,
        theta_plus,
        theta_minus,
    })
}

/// Build the residual cell at one level, reusing a precomputed stencil.
pub fn quantile_cell(
    fam: &ParametricFamily,
    stencil: &InfoStencil,
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<ResidualCell> {
    let theta = &stencil.center.theta;
    let p = fam.param_dim;

    let slice = tail_gradient(fam, theta, alpha, cfg)?;
    let u = stencil.center.g_inv.mul_vec(&slice.mu);

    let mut div_u = 0.0;
    let mut fd_noise = 0.0;
    for s in 0..p {
        let sp = tail_gradient(fam, &stencil.theta_plus[s], alpha, cfg)?;
        let sm = tail_gradient(fam, &stencil.theta_minus[s], alpha, cfg)?;
        let up = stencil.plus[s].g_inv.mul_vec(&sp.mu);
        let um = stencil.minus[s].g_inv.mul_vec(&sm.mu);
        div_u += (up[s] - um[s]) / (2.0 * stencil.steps[s]);
        fd_noise +=
            (sp.mu_err + sm.mu_err) / (2.0 * stencil.steps[s]) * stencil.center.g_inv.max_abs();
    }
    // crude but honest: quadrature error through the stencil divided by the
    // step, plus the direct error on u itself
    let err_est = (fd_noise * 1e-2).max(slice.mu_err * stencil.center.g_inv.max_abs());
    Ok(ResidualCell {
        theta: theta.clone(),
        alpha,
        u,
        div_u,
        err_est,
    })
}

/// Level-`alpha` matching residual of a prior at `theta`.
pub fn quantile_residual(
    fam: &ParametricFamily,
    prior: &PriorField,
    theta: &[f64],
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<Residual> {
    let stencil = info_stencil(fam, theta, cfg)?;
    Ok(quantile_cell(fam, &stencil, alpha, cfg)?.evaluate(prior))
}

/// Gradient correction relating the Jeffreys gradient to the uniformly
/// matching gradient. Assembled from CDF parameter gradients, scores, and
/// the observation derivative of the score; the antisymmetric combination
/// makes the correction vanish identically for one-parameter models.
pub fn jeffreys_correction(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<f64>> {
    fam.check_domain(theta)?;
    if fam.obs_dim != 1 {
        return Err(Error::Unsupported(
            "the matching correction requires univariate observations".into(),
        ));
    }
    let p = fam.param_dim;
    let cdf_grad = fam.cdf_theta_gradient.as_ref().ok_or_else(|| {
        Error::Unsupported("the matching correction needs CDF parameter gradients".into())
    })?;
    let info = fisher::fisher_info(fam, theta, cfg)?;
    let w = fam.window_1d(theta, cfg);
    let edges = quadrature::graded_edges(w.center, w.scale, w.lo, w.hi);
    let rule = quadrature::GaussLegendre::cached(cfg.x_quad_nodes);

    let mut h = vec![0.0; p];
    for pair in edges.windows(2) {
        let half = 0.5 * (pair[1] - pair[0]);
        let mid = 0.5 * (pair[1] + pair[0]);
        for (i, &xn) in rule.nodes.iter().enumerate() {
            let x = mid + half * xn;
            let wgt = half * rule.weights[i];
            let fg = cdf_grad(x, theta);
            let sc = fam.score(&[x], theta);
            let dsc = fam.score_x_derivative(x, theta);
            for r in 0..p {
                let mut acc = 0.0;
                for s in 0..p {
                    let anti = fg[s] * sc[r] - fg[r] * sc[s];
                    if anti == 0.0 {
                        continue;
                    }
                    for t in 0..p {
                        acc += info.g_inv.get(s, t) * anti * dsc[t];
                    }
                }
                h[r] += wgt * acc;
            }
        }
    }
    Ok(h)
}

/// Candidate gradient of the uniformly matching log prior: the Jeffreys
/// gradient plus the correction field. When a uniformly matching prior
/// exists it is unique with exactly this gradient; existence still has to be
/// confirmed by a residual sweep.
pub fn upmp_gradient(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<f64>> {
    let j = fisher::jeffreys_gradient(fam, theta, cfg)?;
    let h = jeffreys_correction(fam, theta, cfg)?;
    Ok(j.iter().zip(&h).map(|(a, b)| a + b).collect())
}

/// Data-dependent local prior gradient: Jeffreys gradient at `theta` plus
/// the correction frozen at the anchor `theta0`. Always a gradient field in
/// `theta` because the corrective part is constant.
pub fn local_prior_gradient(
    fam: &ParametricFamily,
    theta: &[f64],
    theta0: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<f64>> {
    let j = fisher::jeffreys_gradient(fam, theta, cfg)?;
    let h = jeffreys_correction(fam, theta0, cfg)?;
    Ok(j.iter().zip(&h).map(|(a, b)| a + b).collect())
}

/// Curl-test verdict for a vector field over a grid of parameter points.
#[derive(Clone, Debug)]
pub struct FieldCheck {
    pub is_gradient: bool,
    pub max_curl: f64,
}

/// Check that a field is (numerically) the gradient of a scalar: central
/// differences of the field must have a symmetric Jacobian at every grid
/// point.
pub fn gradient_field_check<F>(
    mut field: F,
    theta_grid: &[Vec<f64>],
    cfg: &NumericsConfig,
) -> Result<FieldCheck>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut worst = 0.0_f64;
    for theta in theta_grid {
        let p = theta.len();
        if p < 2 {
            continue;
        }
        let mut jac = vec![vec![0.0; p]; p];
        for s in 0..p {
            let h = numerics::fd_step(cfg, theta[s]);
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[s] += h;
            tm[s] -= h;
            let vp = field(&tp)?;
            let vm = field(&tm)?;
            for r in 0..p {
                jac[s][r] = (vp[r] - vm[r]) / (2.0 * h);
            }
        }
        for s in 0..p {
            for r in (s + 1)..p {
                worst = worst.max((jac[s][r] - jac[r][s]).abs());
            }
        }
    }
    Ok(FieldCheck {
        is_gradient: worst <= cfg.curl_tol,
        max_curl: worst,
    })
}

/// Log-prior difference lambda(theta) - lambda(theta_ref) by line quadrature
/// of a gradient field along axis-parallel segments. The two opposite axis
/// orders must agree; disagreement beyond the path tolerance means the field
/// is not a gradient.
pub fn reconstruct_log_prior<F>(
    field: F,
    theta_ref: &[f64],
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    Ok(reconstruct_log_prior_with_gap(field, theta_ref, theta, cfg)?.0)
}

/// As [`reconstruct_log_prior`], also returning the measured disagreement
/// between the two axis orders.
pub fn reconstruct_log_prior_with_gap<F>(
    mut field: F,
    theta_ref: &[f64],
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<(f64, f64)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let p = theta.len();
    let order_a: Vec<usize> = (0..p).collect();
    let order_b: Vec<usize> = (0..p).rev().collect();
    let va = line_integral(&mut field, theta_ref, theta, &order_a, cfg)?;
    if p < 2 {
        return Ok((va, 0.0));
    }
    let vb = line_integral(&mut field, theta_ref, theta, &order_b, cfg)?;
    let diff = (va - vb).abs();
    if diff > cfg.path_tol() {
        return Err(Error::NotAGradientField(diff));
    }
    Ok((0.5 * (va + vb), diff))
}

fn line_integral<F>(
    field: &mut F,
    from: &[f64],
    to: &[f64],
    order: &[usize],
    cfg: &NumericsConfig,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let rule = quadrature::GaussLegendre::cached(cfg.x_quad_nodes);
    let panels = 8usize;
    let mut pos = from.to_vec();
    let mut total = 0.0;
    for &d in order {
        let (a, b) = (pos[d], to[d]);
        if a == b {
            continue;
        }
        for k in 0..panels {
            let lo = a + (b - a) * k as f64 / panels as f64;
            let hi = a + (b - a) * (k + 1) as f64 / panels as f64;
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (i, &xn) in rule.nodes.iter().enumerate() {
                let mut point = pos.clone();
                point[d] = mid + half * xn;
                let v = field(&point)?;
                total += half * rule.weights[i] * v[d];
            }
        }
        pos[d] = b;
    }
    Ok(total)
}

/// Weighted average of the residual against the curvature of the tail
/// gradient in the level: zero for a uniformly matching prior. The second
/// level-derivative uses the identity that the first derivative is the score
/// at the frozen quantile, so only one central difference in the level is
/// taken.
pub fn avg_prediction_error(
    fam: &ParametricFamily,
    prior: &PriorField,
    theta: &[f64],
    component: usize,
    cfg: &NumericsConfig,
) -> Result<f64> {
    fam.check_domain(theta)?;
    if component >= fam.param_dim {
        return Err(Error::Config(format!(
            "component {component} out of range for p = {}",
            fam.param_dim
        )));
    }
    let stencil = info_stencil(fam, theta, cfg)?;
    let grid = cfg.alpha_grid()?;
    let mut acc = 0.0;
    for (&alpha, &w) in grid.nodes.iter().zip(&grid.weights) {
        let h = cfg.alpha_fd_step.min(0.45 * alpha.min(1.0 - alpha));
        let qp = freq_quantile(fam, theta, alpha + h, cfg)?;
        let qm = freq_quantile(fam, theta, alpha - h, cfg)?;
        let lp = fam.score(&[qp], theta)[component];
        let lm = fam.score(&[qm], theta)[component];
        let mu_dd = (lp - lm) / (2.0 * h);
        let eps = quantile_cell(fam, &stencil, alpha, cfg)?.evaluate(prior);
        acc += w * mu_dd * eps.epsilon;
    }
    Ok(acc)
}
