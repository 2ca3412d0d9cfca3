//! Highest-predictive-density matching: region thresholds, region-mass
//! gradients, the matching residual, the sensitivity-profile Gram matrix,
//! the region-matching UPMP gradient, and structure diagnostics.
//!
//! ## Inactive sensitivity components
//!
//! For translation-type parameters the region boundary is a level set of the
//! density, so the region-mass gradient component vanishes identically in
//! the level: the matching equation never constrains the prior along that
//! coordinate. Such components are reported as *inactive*. Independence
//! verdicts and the UPMP gradient are taken on the active block, and the
//! returned gradient sets the unconstrained natural-gradient components to
//! zero (the maximally invariant choice). When no active coupling remains,
//! or the active block itself is singular, there is either no uniformly
//! matching prior or an infinite family, and the gradient operation reports
//! linearly dependent sensitivities instead of inventing a unique answer.

pub mod region;

pub use region::{Interval, LevelEngine1d, StarRegion2d};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ParametricFamily, PriorField};
use crate::numerics::{AlphaGrid, AlphaGridSpec, Mat, NumericsConfig};
use crate::quantile_match::{InfoStencil, Residual, ResidualCell};

/// Region threshold and region-mass gradient at one (theta, alpha) point.
#[derive(Clone, Debug)]
pub struct HpdSlice {
    pub theta: Vec<f64>,
    pub alpha: f64,
    /// Density threshold of the level-alpha highest-density region.
    pub m: f64,
    /// Gradient in theta of the region mass with the region frozen.
    pub xi: Vec<f64>,
    pub region_mass_err: f64,
}

/// Threshold and region-mass gradient in one pass.
pub fn hpd_slice(
    fam: &ParametricFamily,
    theta: &[f64],
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<HpdSlice> {
    hpd_slice_hinted(fam, theta, alpha, cfg, None)
}

fn hpd_slice_hinted(
    fam: &ParametricFamily,
    theta: &[f64],
    alpha: f64,
    cfg: &NumericsConfig,
    hint: Option<f64>,
) -> Result<HpdSlice> {
    fam.check_domain(theta)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("level {alpha} outside (0, 1)")));
    }
    let p = fam.param_dim;
    match fam.obs_dim {
        1 => {
            let w = fam.window_1d(theta, cfg);
            let density = |x: f64| fam.density(&[x], theta);
            let cdf_closure;
            let cdf_ref: Option<&(dyn Fn(f64) -> f64 + Sync)> = match &fam.cdf {
                Some(c) => {
                    let c = c.clone();
                    let th = theta.to_vec();
                    cdf_closure = move |x: f64| c(x, &th);
                    Some(&cdf_closure)
                }
                None => None,
            };
            let eng = LevelEngine1d {
                density: &density,
                cdf: cdf_ref,
                window: w,
                mode: fam.mode(theta)[0],
                quad_nodes: cfg.x_quad_nodes,
            };
            let m = eng.threshold(alpha, cfg.hpd_bisect_tol, hint)?;
            let iv = eng.interval(m)?;
            let mut xi = vec![0.0; p];
            for t in 0..p {
                xi[t] =
                    eng.integrate(iv, |x| fam.score(&[x], theta)[t] * fam.density(&[x], theta))?;
            }
            Ok(HpdSlice {
                theta: theta.to_vec(),
                alpha,
                m,
                xi,
                region_mass_err: cfg.hpd_bisect_tol + 2.0 * cfg.tail_mass,
            })
        }
        2 => {
            let ws = fam.windows(theta, cfg);
            let density = |x: f64, y: f64| fam.density(&[x, y], theta);
            let mode = fam.mode(theta);
            let eng = StarRegion2d {
                density: &density,
                windows: [ws[0], ws[1]],
                mode: [mode[0], mode[1]],
                rays: cfg.region_rays,
                radial_nodes: cfg.region_radial_nodes,
            };
            let m = eng.threshold(alpha, cfg.hpd_bisect_tol, hint)?;
            let score_weighted: Vec<Box<dyn Fn(f64, f64) -> f64 + Sync>> = (0..p)
                .map(|t| {
                    let fam = fam.clone();
                    let th = theta.to_vec();
                    Box::new(move |x: f64, y: f64| {
                        fam.score(&[x, y], &th)[t] * fam.density(&[x, y], &th)
                    }) as Box<dyn Fn(f64, f64) -> f64 + Sync>
                })
                .collect();
            let refs: Vec<&(dyn Fn(f64, f64) -> f64 + Sync)> =
                score_weighted.iter().map(|b| b.as_ref()).collect();
            let xi = eng.integrate_region(m, &refs, false)?;
            let err = eng.mass_err_estimate(m)? + 2.0 * cfg.tail_mass + cfg.hpd_bisect_tol;
            Ok(HpdSlice {
                theta: theta.to_vec(),
                alpha,
                m,
                xi,
                region_mass_err: err,
            })
        }
        d => Err(Error::Unsupported(format!("observation dimension {d}"))),
    }
}

/// Density threshold of the level-alpha highest-density region.
pub fn hpd_threshold(
    fam: &ParametricFamily,
    theta: &[f64],
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<f64> {
    Ok(hpd_slice(fam, theta, alpha, cfg)?.m)
}

/// Gradient of region mass at the frozen level-alpha region.
pub fn region_gradient(
    fam: &ParametricFamily,
    theta: &[f64],
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<Vec<f64>> {
    Ok(hpd_slice(fam, theta, alpha, cfg)?.xi)
}

/// Prior-independent residual cell for region matching, plus the threshold
/// for reporting.
pub fn hpd_cell(
    fam: &ParametricFamily,
    stencil: &InfoStencil,
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<(ResidualCell, f64)> {
    let theta = &stencil.center.theta;
    let p = fam.param_dim;
    let center = hpd_slice(fam, theta, alpha, cfg)?;
    let u = stencil.center.g_inv.mul_vec(&center.xi);
    let mut div_u = 0.0;
    for s in 0..p {
        let sp = hpd_slice_hinted(fam, &stencil.theta_plus[s], alpha, cfg, Some(center.m))?;
        let sm = hpd_slice_hinted(fam, &stencil.theta_minus[s], alpha, cfg, Some(center.m))?;
        let up = stencil.plus[s].g_inv.mul_vec(&sp.xi);
        let um = stencil.minus[s].g_inv.mul_vec(&sm.xi);
        div_u += (up[s] - um[s]) / (2.0 * stencil.steps[s]);
    }
    let err_est = center.region_mass_err * stencil.center.g_inv.max_abs();
    Ok((
        ResidualCell {
            theta: theta.clone(),
            alpha,
            u,
            div_u,
            err_est,
        },
        center.m,
    ))
}

/// Level-alpha region-matching residual of a prior at theta.
pub fn hpd_residual(
    fam: &ParametricFamily,
    prior: &PriorField,
    theta: &[f64],
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<Residual> {
    let stencil = crate::quantile_match::info_stencil(fam, theta, cfg)?;
    Ok(hpd_cell(fam, &stencil, alpha, cfg)?.0.evaluate(prior))
}

/// Coarser level grid for Gram-matrix assembly; the Gram integrands are
/// smooth apart from logarithmic endpoint behavior, and the downstream
/// gradient is a ratio in which the level-quadrature error largely cancels.
fn gram_grid() -> Result<AlphaGrid> {
    AlphaGrid::graded(&AlphaGridSpec {
        levels: 8,
        nodes_per_panel: 6,
    })
}

struct XiProfiles {
    /// dxi[k][t]: level derivative of component t at grid node k.
    dxi: Vec<Vec<f64>>,
    /// sup over the grid of |xi_t|.
    sup_xi: Vec<f64>,
}

/// Level derivatives of the region-mass gradient at every grid node, by
/// central differences in the level with warm-started threshold solves.
fn xi_alpha_derivatives(
    fam: &ParametricFamily,
    theta: &[f64],
    grid: &AlphaGrid,
    cfg: &NumericsConfig,
) -> Result<XiProfiles> {
    let p = fam.param_dim;
    let mut dxi = vec![vec![0.0; p]; grid.len()];
    let mut sup_xi = vec![0.0_f64; p];
    let mut hint = None;
    for (k, &alpha) in grid.nodes.iter().enumerate() {
        let h = cfg.alpha_fd_step.min(0.45 * alpha.min(1.0 - alpha));
        let center = hpd_slice_hinted(fam, theta, alpha, cfg, hint)?;
        hint = Some(center.m);
        let plus = hpd_slice_hinted(fam, theta, alpha + h, cfg, hint)?;
        let minus = hpd_slice_hinted(fam, theta, alpha - h, cfg, hint)?;
        for t in 0..p {
            dxi[k][t] = (plus.xi[t] - minus.xi[t]) / (2.0 * h);
            sup_xi[t] = sup_xi[t].max(center.xi[t].abs());
        }
    }
    Ok(XiProfiles { dxi, sup_xi })
}

fn active_mask(sup_xi: &[f64], cfg: &NumericsConfig) -> (Vec<bool>, f64) {
    let scale = sup_xi.iter().fold(0.0_f64, |m, &v| m.max(v));
    if scale < 1e-10 {
        return (vec![false; sup_xi.len()], scale);
    }
    (
        sup_xi
            .iter()
            .map(|&v| v >= cfg.active_component_tol * scale)
            .collect(),
        scale,
    )
}

/// Gram matrix of the level derivatives of the region-mass gradient, with
/// the independence verdict taken on the active block.
#[derive(Clone, Debug)]
pub struct ProfileGram {
    pub theta: Vec<f64>,
    pub matrix: Mat,
    /// Smallest eigenvalue of the full matrix.
    pub min_eigenvalue: f64,
    /// Components with non-vanishing region-mass gradient.
    pub active: Vec<bool>,
    /// min eigenvalue / trace of the active block; 1 for a single active
    /// component, 0 when nothing is active.
    pub independence_ratio: f64,
    /// sup over the level grid of |xi|, per component.
    pub sup_xi: Vec<f64>,
}

impl ProfileGram {
    pub fn is_dependent(&self, cfg: &NumericsConfig) -> bool {
        self.independence_ratio < cfg.independence_ratio
    }
}

pub fn profile_gram(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<ProfileGram> {
    fam.check_domain(theta)?;
    let p = fam.param_dim;
    let grid = gram_grid()?;
    let profiles = xi_alpha_derivatives(fam, theta, &grid, cfg)?;
    let mut b = Mat::zeros(p);
    for (k, &w) in grid.weights.iter().enumerate() {
        for i in 0..p {
            for j in i..p {
                let v = b.get(i, j) + w * profiles.dxi[k][i] * profiles.dxi[k][j];
                b.set(i, j, v);
            }
        }
    }
    for i in 0..p {
        for j in i..p {
            b.set(j, i, b.get(i, j));
        }
    }
    let eig = b.eigenvalues_sym();
    let (active, _scale) = active_mask(&profiles.sup_xi, cfg);
    let idx: Vec<usize> = (0..p).filter(|&t| active[t]).collect();
    let independence_ratio = match idx.len() {
        0 => 0.0,
        1 => 1.0,
        _ => {
            let sub = Mat::from_fn(idx.len(), |i, j| b.get(idx[i], idx[j]));
            let sub_eig = sub.eigenvalues_sym();
            let trace: f64 = (0..idx.len()).map(|i| sub.get(i, i)).sum();
            if trace <= 0.0 {
                0.0
            } else {
                (sub_eig[0] / trace).max(0.0)
            }
        }
    };
    Ok(ProfileGram {
        theta: theta.to_vec(),
        matrix: b,
        min_eigenvalue: eig[0],
        active,
        independence_ratio,
        sup_xi: profiles.sup_xi,
    })
}

/// Gradient of the unique region-matching prior on the active block.
///
/// Solves the level-integrated matching equation: the Gram matrix applied to
/// the natural gradient of the log prior equals minus the level integral of
/// the sensitivity profile against a divergence term. Inactive natural
/// gradient components are set to zero; a singular active block is reported
/// as linearly dependent sensitivities.
pub fn hpd_upmp_gradient(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<f64>> {
    fam.check_domain(theta)?;
    let p = fam.param_dim;
    let grid = gram_grid()?;
    let stencil = crate::quantile_match::info_stencil(fam, theta, cfg)?;

    let center = xi_alpha_derivatives(fam, theta, &grid, cfg)?;
    let (active, _) = active_mask(&center.sup_xi, cfg);
    let idx: Vec<usize> = (0..p).filter(|&t| active[t]).collect();
    if idx.is_empty() {
        return Err(Error::LinearlyDependentXi {
            theta: theta.to_vec(),
            ratio: 0.0,
        });
    }

    // stencil profiles for the divergence term
    let mut plus = Vec::with_capacity(p);
    let mut minus = Vec::with_capacity(p);
    for s in 0..p {
        plus.push(xi_alpha_derivatives(
            fam,
            &stencil.theta_plus[s],
            &grid,
            cfg,
        )?);
        minus.push(xi_alpha_derivatives(
            fam,
            &stencil.theta_minus[s],
            &grid,
            cfg,
        )?);
    }

    // active-block Gram matrix and the profile-against-divergence integral
    let na = idx.len();
    let mut b = Mat::zeros(na);
    let mut rhs = vec![0.0; na];
    for (k, &w) in grid.weights.iter().enumerate() {
        let mut div = 0.0;
        for s in 0..p {
            let vp = stencil.plus[s].g_inv.mul_vec(&plus[s].dxi[k]);
            let vm = stencil.minus[s].g_inv.mul_vec(&minus[s].dxi[k]);
            div += (vp[s] - vm[s]) / (2.0 * stencil.steps[s]);
        }
        for (i, &ti) in idx.iter().enumerate() {
            rhs[i] += w * center.dxi[k][ti] * div;
            for (j, &tj) in idx.iter().enumerate().skip(i) {
                let v = b.get(i, j) + w * center.dxi[k][ti] * center.dxi[k][tj];
                b.set(i, j, v);
                b.set(j, i, v);
            }
        }
    }

    let eig = b.eigenvalues_sym();
    let trace: f64 = (0..na).map(|i| b.get(i, i)).sum();
    let ratio = if na == 1 {
        1.0
    } else if trace <= 0.0 {
        0.0
    } else {
        (eig[0] / trace).max(0.0)
    };
    if ratio < cfg.independence_ratio {
        return Err(Error::LinearlyDependentXi {
            theta: theta.to_vec(),
            ratio,
        });
    }

    let b_inv = b.inverse().map_err(|_| Error::LinearlyDependentXi {
        theta: theta.to_vec(),
        ratio,
    })?;
    let mut w_active = vec![0.0; na];
    for i in 0..na {
        for j in 0..na {
            w_active[i] -= b_inv.get(i, j) * rhs[j];
        }
    }
    let mut w_full = vec![0.0; p];
    for (i, &ti) in idx.iter().enumerate() {
        w_full[ti] = w_active[i];
    }
    Ok(stencil.center.g.mul_vec(&w_full))
}

/// Structural form of the region-mass gradient as a function of parameter
/// and level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparabilityForm {
    /// One shared level profile with parameter-only weights (at least two
    /// active components coupled, or all components vanishing).
    SharedProfile,
    /// A shared level profile at each parameter point, varying across
    /// parameter points.
    PointwiseSharedProfile,
    /// Each active component factorizes with its own level profile.
    SeparableComponents,
    None,
}

impl std::fmt::Display for SeparabilityForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SeparabilityForm::SharedProfile => "shared-profile",
            SeparabilityForm::PointwiseSharedProfile => "pointwise-shared-profile",
            SeparabilityForm::SeparableComponents => "separable-components",
            SeparabilityForm::None => "none",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct SeparabilityReport {
    pub form: SeparabilityForm,
    /// Worst second-to-first singular value ratio backing the verdict.
    pub evidence: f64,
    pub active: Vec<bool>,
    /// Per-parameter-point rank-one defect of the active block.
    pub per_theta_ratio: Vec<f64>,
    /// Per-component rank-one defect across parameter points.
    pub per_component_ratio: Vec<f64>,
}

/// Numeric rank tests for the separable structures of the region-mass
/// gradient over a parameter grid.
pub fn separability_diagnosis(
    fam: &ParametricFamily,
    theta_grid: &[Vec<f64>],
    cfg: &NumericsConfig,
) -> Result<SeparabilityReport> {
    let p = fam.param_dim;
    let grid = gram_grid()?;
    let k = grid.len();

    // xi[i][t][k]
    let mut xi = vec![vec![vec![0.0; k]; p]; theta_grid.len()];
    let mut sup = vec![0.0_f64; p];
    for (i, theta) in theta_grid.iter().enumerate() {
        let mut hint = None;
        for (kk, &alpha) in grid.nodes.iter().enumerate() {
            let s = hpd_slice_hinted(fam, theta, alpha, cfg, hint)?;
            hint = Some(s.m);
            for t in 0..p {
                xi[i][t][kk] = s.xi[t];
                sup[t] = sup[t].max(s.xi[t].abs());
            }
        }
    }

    let (active, scale) = active_mask(&sup, cfg);
    let idx: Vec<usize> = (0..p).filter(|&t| active[t]).collect();
    if scale < 1e-10 {
        // region mass is insensitive to every parameter: trivially one
        // (zero) shared profile
        return Ok(SeparabilityReport {
            form: SeparabilityForm::SharedProfile,
            evidence: 0.0,
            active,
            per_theta_ratio: vec![0.0; theta_grid.len()],
            per_component_ratio: vec![0.0; p],
        });
    }

    let rank_tol = cfg.independence_ratio.sqrt();

    // rank-one defect of the active component-by-level matrix at each theta
    let mut per_theta_ratio = Vec::with_capacity(theta_grid.len());
    for block in &xi {
        if idx.len() < 2 {
            per_theta_ratio.push(0.0);
            continue;
        }
        let rows: Vec<&[f64]> = idx.iter().map(|&t| block[t].as_slice()).collect();
        per_theta_ratio.push(rank_one_defect(&rows));
    }
    let coupled = idx.len() >= 2;
    let e_pointwise = per_theta_ratio.iter().fold(0.0_f64, |m, &v| m.max(v));
    let pointwise_holds = coupled && e_pointwise <= rank_tol;

    // shared profile across theta: collinearity of dominant profiles
    let mut e_shared = 0.0_f64;
    if pointwise_holds {
        let profiles: Vec<Vec<f64>> = xi
            .iter()
            .map(|block| {
                let mut best: Option<&Vec<f64>> = None;
                let mut best_norm = 0.0;
                for &t in &idx {
                    let n = norm(&block[t]);
                    if n > best_norm {
                        best_norm = n;
                        best = Some(&block[t]);
                    }
                }
                normalize(best.expect("an active component exists"))
            })
            .collect();
        for i in 0..profiles.len() {
            for j in (i + 1)..profiles.len() {
                let c: f64 = profiles[i]
                    .iter()
                    .zip(&profiles[j])
                    .map(|(a, b)| a * b)
                    .sum();
                e_shared = e_shared.max((1.0 - c * c).max(0.0).sqrt());
            }
        }
    }
    let shared_holds = pointwise_holds && e_shared <= rank_tol;

    // per-component separability across theta
    let mut per_component_ratio = vec![0.0; p];
    for &t in &idx {
        let rows: Vec<&[f64]> = xi.iter().map(|block| block[t].as_slice()).collect();
        per_component_ratio[t] = rank_one_defect(&rows);
    }
    let e_sep = idx
        .iter()
        .map(|&t| per_component_ratio[t])
        .fold(0.0_f64, f64::max);
    let sep_holds = !idx.is_empty() && e_sep <= rank_tol;

    let (form, evidence) = if shared_holds {
        (SeparabilityForm::SharedProfile, e_pointwise.max(e_shared))
    } else if pointwise_holds {
        (SeparabilityForm::PointwiseSharedProfile, e_pointwise)
    } else if sep_holds {
        (SeparabilityForm::SeparableComponents, e_sep)
    } else {
        (SeparabilityForm::None, e_pointwise.max(e_sep))
    };

    Ok(SeparabilityReport {
        form,
        evidence,
        active,
        per_theta_ratio,
        per_component_ratio,
    })
}

/// Ratio of the second to the first singular value of a rows x cols matrix,
/// via the eigenvalues of the small Gram matrix.
fn rank_one_defect(rows: &[&[f64]]) -> f64 {
    let n = rows.len();
    if n < 2 {
        return 0.0;
    }
    let gram = Mat::from_fn(n, |i, j| {
        rows[i].iter().zip(rows[j]).map(|(a, b)| a * b).sum()
    });
    let eig = gram.eigenvalues_sym();
    let top = eig[n - 1].max(0.0);
    let second = eig[n - 2].max(0.0);
    if top <= 0.0 {
        return 0.0;
    }
    (second / top).sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|x| x / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{builtin_family, bvn_upmp_member};
    use approx::assert_abs_diff_eq;

    fn cfg() -> NumericsConfig {
        NumericsConfig::default()
    }

    #[test]
    fn bvn_threshold_and_region_gradient_match_oracles() {
        let cfg = cfg();
        let fam = builtin_family("bvn-cholesky").unwrap();
        let theta = [1.0, 1.0, 0.0];
        let alpha = 0.5;
        let s = hpd_slice(&fam, &theta, alpha, &cfg).unwrap();
        let m_oracle = 0.5 / (2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(s.m, m_oracle, epsilon = 1e-6 * m_oracle);
        let r = -(1.0 - alpha) * (1.0_f64 - alpha).ln();
        assert_abs_diff_eq!(s.xi[0], r, epsilon = 1e-6);
        assert_abs_diff_eq!(s.xi[1], r, epsilon = 1e-6);
        assert!(s.xi[2].abs() < 1e-8);
    }

    #[test]
    fn univariate_threshold_example() {
        let cfg = cfg();
        let fam = builtin_family("normal-location").unwrap();
        let m = hpd_threshold(&fam, &[0.0], 0.95, &cfg).unwrap();
        let z = 1.959963984540054_f64;
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(m, phi, epsilon = 1e-8);
    }

    #[test]
    fn high_level_threshold_goes_to_zero() {
        let cfg = cfg();
        let fam = builtin_family("normal-location").unwrap();
        let m = hpd_threshold(&fam, &[0.0], 0.999, &cfg).unwrap();
        assert!(m > 0.0 && m < 2e-3, "threshold {m}");
    }

    #[test]
    fn region_gradient_vanishes_for_high_level_and_location_models() {
        let cfg = cfg();
        // location-type components have an identically vanishing region-mass
        // gradient: the boundary is a level set of the density
        let fam = builtin_family("location-scale-normal").unwrap();
        let s = hpd_slice(&fam, &[0.3, 1.2], 0.6, &cfg).unwrap();
        assert!(s.xi[0].abs() < 1e-10, "location component {}", s.xi[0]);
        let oracle = (fam.oracles.region_gradient.as_ref().unwrap())(&[0.3, 1.2], 0.6);
        assert_abs_diff_eq!(s.xi[1], oracle[1], epsilon = 1e-8);

        let mv = builtin_family("mvlocation-spherical-2d").unwrap();
        let s = hpd_slice(&mv, &[0.5, -0.25], 0.5, &cfg).unwrap();
        assert!(s.xi[0].abs() < 1e-9 && s.xi[1].abs() < 1e-9);
        assert_abs_diff_eq!(s.xi[0], s.xi[1], epsilon = 1e-9);

        // near level one the region exhausts the support and the full
        // integral of the density gradient vanishes
        let nm = builtin_family("normal-mean-eq-var").unwrap();
        let s = hpd_slice(&nm, &[1.0], 1.0 - 1e-8, &cfg).unwrap();
        assert!(s.xi[0].abs() < 1e-5, "xi {}", s.xi[0]);
    }

    #[test]
    fn mean_eq_var_region_gradient_matches_oracle() {
        let cfg = cfg();
        let fam = builtin_family("normal-mean-eq-var").unwrap();
        let theta = [1.4];
        for alpha in [0.3, 0.7] {
            let s = hpd_slice(&fam, &theta, alpha, &cfg).unwrap();
            let oracle = (fam.oracles.region_gradient.as_ref().unwrap())(&theta, alpha);
            assert_abs_diff_eq!(s.xi[0], oracle[0], epsilon = 1e-8);
        }
    }

    #[test]
    fn jeffreys_and_upmp_family_members_match_on_bvn() {
        let cfg = cfg();
        let fam = builtin_family("bvn-cholesky").unwrap();
        let theta = [1.0, 2.0, 0.3];
        let jeffreys = fam.named_prior("jeffreys").unwrap();
        let member = bvn_upmp_member(1.0, 0.0);
        for prior in [&jeffreys, &member] {
            let r = hpd_residual(&fam, prior, &theta, 0.5, &cfg).unwrap();
            assert!(
                r.epsilon.abs() < 1e-4,
                "{}: residual {}",
                prior.name,
                r.epsilon
            );
        }
        // negative control: an extra reciprocal power of the leading
        // invariant is not matching
        let bad = crate::family::PriorField::new(
            "inverse-cube",
            |t: &[f64]| -3.0 * t[0].ln(),
            |t: &[f64]| vec![-3.0 / t[0], 0.0, 0.0],
        );
        let r = hpd_residual(&fam, &bad, &theta, 0.5, &cfg).unwrap();
        assert!(r.epsilon.abs() > 1e-2, "negative control {}", r.epsilon);
    }

    #[test]
    fn gram_verdicts_across_builtins() {
        let cfg = cfg();
        // coupled dependent sensitivities: ratio collapses
        let bvn = builtin_family("bvn-cholesky").unwrap();
        let g = profile_gram(&bvn, &[1.0, 1.0, 0.0], &cfg).unwrap();
        assert!(
            g.independence_ratio <= 1e-6,
            "bvn ratio {}",
            g.independence_ratio
        );
        assert_eq!(g.active, vec![true, true, false]);
        assert!(g.is_dependent(&cfg));

        // all components inactive
        let mv = builtin_family("mvlocation-spherical-2d").unwrap();
        let g = profile_gram(&mv, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(g.independence_ratio, 0.0);
        assert!(g.active.iter().all(|a| !a));

        // a single active component is trivially independent
        let ls = builtin_family("location-scale-normal").unwrap();
        let g = profile_gram(&ls, &[0.0, 1.0], &cfg).unwrap();
        assert_eq!(g.active, vec![false, true]);
        assert!(g.independence_ratio >= 1e-3);
        assert!(g.matrix.get(1, 1) > 0.0);
        assert!(!g.is_dependent(&cfg));
    }

    #[test]
    fn upmp_gradient_region_matching() {
        let cfg = cfg();
        // location-scale: right Haar on the active (scale) block
        let ls = builtin_family("location-scale-normal").unwrap();
        for theta in [[0.0, 1.0], [1.0, 0.5]] {
            let g = hpd_upmp_gradient(&ls, &theta, &cfg).unwrap();
            assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-6);
            assert_abs_diff_eq!(g[1], -1.0 / theta[1], epsilon = 1e-3 / theta[1]);
        }
        // coupled dependent sensitivities refuse a unique answer
        let bvn = builtin_family("bvn-cholesky").unwrap();
        let err = hpd_upmp_gradient(&bvn, &[1.0, 1.0, 0.0], &cfg);
        assert!(matches!(err, Err(Error::LinearlyDependentXi { .. })));
        // fully inactive sensitivities as well
        let mv = builtin_family("mvlocation-spherical-2d").unwrap();
        let err = hpd_upmp_gradient(&mv, &[0.0, 0.0], &cfg);
        assert!(matches!(err, Err(Error::LinearlyDependentXi { .. })));
    }

    #[test]
    fn mean_eq_var_region_matching_prior_differs_from_jeffreys() {
        let cfg = cfg();
        let fam = builtin_family("normal-mean-eq-var").unwrap();
        let theta = [1.0];
        let g = hpd_upmp_gradient(&fam, &theta, &cfg).unwrap();
        // closed form: the sensitivity separates as Q(t) R(alpha) with
        // Q = 1/t, so the matching gradient is g'/g + 1/t = -1/3 at t = 1
        assert_abs_diff_eq!(g[0], -1.0 / 3.0, epsilon = 1e-3);
        let j = fam.named_prior("jeffreys").unwrap();
        let jg = j.gradient(&theta);
        assert!(
            (g[0] - jg[0]).abs() > 0.2,
            "matching {} vs jeffreys {}",
            g[0],
            jg[0]
        );
    }

    #[test]
    fn location_scale_has_infinitely_many_region_matching_priors() {
        // the location sensitivity vanishes identically, so any prior
        // C(t1)/t2 is region matching; an exponential tilt of right Haar
        // demonstrates the non-uniqueness that the active-block convention
        // deliberately leaves unresolved
        let cfg = cfg();
        let fam = builtin_family("location-scale-normal").unwrap();
        let tilted = crate::family::PriorField::new(
            "tilted-right-haar",
            |t: &[f64]| t[0] - t[1].ln(),
            |t: &[f64]| vec![1.0, -1.0 / t[1]],
        );
        for alpha in [0.2, 0.5, 0.8] {
            let r = hpd_residual(&fam, &tilted, &[0.4, 1.3], alpha, &cfg).unwrap();
            assert!(r.epsilon.abs() < 1e-6, "alpha {alpha}: {}", r.epsilon);
        }
    }

    #[test]
    fn separability_forms_of_builtins() {
        let cfg = cfg();
        let bvn = builtin_family("bvn-cholesky").unwrap();
        let grid = vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 2.0, 0.3],
            vec![0.5, 1.5, -0.4],
        ];
        let rep = separability_diagnosis(&bvn, &grid, &cfg).unwrap();
        assert_eq!(rep.form, SeparabilityForm::SharedProfile);
        assert!(rep.evidence < 1e-6, "evidence {}", rep.evidence);

        let mv = builtin_family("mvlocation-spherical-2d").unwrap();
        let grid = vec![vec![0.0, 0.0], vec![1.0, -2.0]];
        let rep = separability_diagnosis(&mv, &grid, &cfg).unwrap();
        assert_eq!(rep.form, SeparabilityForm::SharedProfile);
        assert_eq!(rep.evidence, 0.0);

        let ls = builtin_family("location-scale-normal").unwrap();
        let grid = vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![-0.5, 2.0]];
        let rep = separability_diagnosis(&ls, &grid, &cfg).unwrap();
        assert_eq!(rep.form, SeparabilityForm::SeparableComponents);
        assert!(rep.evidence < 1e-3);
    }
}
