//! Independent Monte Carlo verification of the coverage expansion.
//!
//! The inner loop is fully deterministic: posteriors are computed by grid
//! quadrature (no inner Monte Carlo error), and each replicate draws from
//! its own counter-derived random stream, so results do not depend on worker
//! scheduling and identical seeds give identical reports.
//!
//! Coverage is estimated two ways per replicate: the Rao-Blackwellized
//! exact tail (or region) probability at the known data-generating
//! parameter, and the plain binary indicator on one extra draw. The
//! Rao-Blackwellized estimator is the primary one; the binary estimator is
//! retained as a cross-check.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::family::{ObsWindow, ParametricFamily, PriorField};
use crate::hpd_match::{Interval, LevelEngine1d, StarRegion2d};
use crate::numerics::{self, NumericsConfig};

/// Placement of the deterministic posterior quadrature grid.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub nodes_per_dim: usize,
    /// Halfwidth in units of the per-dimension asymptotic posterior sd.
    pub halfwidth_sds: f64,
    /// Explicit center override (defaults to the crude estimate).
    pub center: Option<Vec<f64>>,
    /// Explicit per-dimension halfwidth override, in parameter units
    /// (log units for positive dimensions).
    pub halfwidth: Option<Vec<f64>>,
}

impl GridSpec {
    /// Node counts chosen so the tensor grid stays tractable as the
    /// parameter dimension grows; the midpoint rule is spectrally accurate
    /// for smooth concentrated posteriors, so modest counts suffice.
    pub fn default_for(param_dim: usize) -> Self {
        let nodes_per_dim = match param_dim {
            1 => 64,
            2 => 40,
            _ => 16,
        };
        GridSpec {
            nodes_per_dim,
            halfwidth_sds: 9.0,
            center: None,
            halfwidth: None,
        }
    }

    fn widened(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.halfwidth_sds *= factor;
        if let Some(hw) = &mut s.halfwidth {
            for v in hw.iter_mut() {
                *v *= factor;
            }
        }
        s
    }
}

/// Posterior over a deterministic tensor grid: kept nodes with normalized
/// weights, plus placement diagnostics.
#[derive(Clone, Debug)]
pub struct PosteriorGrid {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Posterior mass sitting on the outermost node layer.
    pub edge_mass: f64,
    pub data_digest: String,
    pub n_obs: usize,
}

fn digest_data(data: &[Vec<f64>]) -> String {
    let mut hasher = Sha256::new();
    for x in data {
        for v in x {
            hasher.update(v.to_le_bytes());
        }
    }
    let out = hasher.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Build the posterior grid for a dataset under a prior.
///
/// The grid is centered at the crude estimate, scaled by the per-dimension
/// asymptotic posterior standard deviation, and laid out with the midpoint
/// rule (uniform in log scale for positive parameters). Weights combine
/// likelihood, prior, and the log-scale Jacobian; they are pruned below
/// 1e-15 of the maximum and renormalized.
pub fn posterior_grid(
    fam: &ParametricFamily,
    data: &[Vec<f64>],
    prior: &PriorField,
    spec: &GridSpec,
    cfg: &NumericsConfig,
) -> Result<PosteriorGrid> {
    if data.is_empty() {
        return Err(Error::Config("posterior grid needs data".into()));
    }
    let p = fam.param_dim;
    let center = match &spec.center {
        Some(c) => c.clone(),
        None => {
            let est = fam
                .crude_estimate
                .as_ref()
                .ok_or_else(|| Error::Unsupported("family lacks a crude estimator".into()))?;
            est(data)
        }
    };
    if !fam.param_domain.contains(&center) {
        return Err(Error::GridMisplaced(format!(
            "crude estimate {center:?} outside the parameter domain"
        )));
    }
    let n = data.len() as f64;

    // asymptotic posterior sds from the information matrix at the center
    let info = match &fam.oracles.fisher {
        Some(f) => f(&center),
        None => crate::fisher::fisher_info(fam, &center, cfg)?.g,
    };
    let info_inv = info
        .inverse()
        .map_err(|_| Error::GridMisplaced("singular information at the grid center".into()))?;

    // per-dimension axes; positive parameters are laid out in log scale
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut jacobians: Vec<Vec<f64>> = Vec::with_capacity(p);
    // pad the halfwidth for the sampling noise of the crude estimate
    // (shrinking like 1/sqrt(n)) and, on linear dimensions, for the
    // polynomial tails of small-n marginal posteriors (shrinking like 1/n)
    let estimator_pad = 8.0 / n.sqrt();
    let tail_pad = 24.0 / n;
    for dim in 0..p {
        let sd = (info_inv.get(dim, dim) / n).sqrt();
        let nodes = spec.nodes_per_dim;
        let positive = fam.positive_params.get(dim).copied().unwrap_or(false);
        let mut axis = Vec::with_capacity(nodes);
        let mut jac = Vec::with_capacity(nodes);
        if positive {
            // the log-scale posterior of a positive parameter keeps an
            // exp(-(n-1) dv)-type right tail at small n; pad the sd-based
            // halfwidth accordingly so edge mass stays negligible
            let halfwidth = spec
                .halfwidth
                .as_ref()
                .map(|h| h[dim])
                .unwrap_or((spec.halfwidth_sds + estimator_pad) * sd / center[dim] + 16.0 / n);
            let lo = center[dim].ln() - halfwidth;
            let hi = center[dim].ln() + halfwidth;
            for i in 0..nodes {
                let v = lo + (hi - lo) * (i as f64 + 0.5) / nodes as f64;
                axis.push(v.exp());
                jac.push(v);
            }
        } else {
            let halfwidth = spec
                .halfwidth
                .as_ref()
                .map(|h| h[dim])
                .unwrap_or((spec.halfwidth_sds + estimator_pad + tail_pad) * sd);
            let lo = (center[dim] - halfwidth).max(fam.param_domain.lower[dim]);
            let hi = (center[dim] + halfwidth).min(fam.param_domain.upper[dim]);
            for i in 0..nodes {
                axis.push(lo + (hi - lo) * (i as f64 + 0.5) / nodes as f64);
                jac.push(0.0);
            }
        }
        axes.push(axis);
        jacobians.push(jac);
    }

    // tensor walk over the grid
    let nodes_per_dim = spec.nodes_per_dim;
    let total = nodes_per_dim.pow(p as u32);
    let mut log_w = Vec::with_capacity(total);
    let mut thetas = Vec::with_capacity(total);
    let mut is_edge = Vec::with_capacity(total);
    let mut idx = vec![0usize; p];
    for _ in 0..total {
        let theta: Vec<f64> = (0..p).map(|d| axes[d][idx[d]]).collect();
        let mut lw = prior.log_prior(&theta);
        for d in 0..p {
            lw += jacobians[d][idx[d]];
        }
        if fam.param_domain.contains(&theta) {
            for x in data {
                lw += fam.log_density(x, &theta);
            }
        } else {
            lw = f64::NEG_INFINITY;
        }
        let edge = (0..p).any(|d| idx[d] == 0 || idx[d] == nodes_per_dim - 1);
        log_w.push(lw);
        thetas.push(theta);
        is_edge.push(edge);
        for d in 0..p {
            idx[d] += 1;
            if idx[d] < nodes_per_dim {
                break;
            }
            idx[d] = 0;
        }
    }

    let max_lw = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max_lw.is_finite() {
        return Err(Error::GridMisplaced(
            "all posterior weights underflowed".into(),
        ));
    }
    let weights: Vec<f64> = log_w.iter().map(|lw| (lw - max_lw).exp()).collect();
    let total_w: f64 = weights.iter().sum();
    let edge_mass: f64 = weights
        .iter()
        .zip(&is_edge)
        .filter(|(_, &e)| e)
        .map(|(w, _)| w)
        .sum::<f64>()
        / total_w;
    if edge_mass > 3e-4 {
        return Err(Error::GridMisplaced(format!(
            "posterior edge mass {edge_mass:.3e}"
        )));
    }

    // prune and renormalize
    let cut = 1e-15 * weights.iter().cloned().fold(0.0_f64, f64::max);
    let mut kept_nodes = Vec::new();
    let mut kept_weights = Vec::new();
    for (w, theta) in weights.into_iter().zip(thetas) {
        if w > cut {
            kept_nodes.push(theta);
            kept_weights.push(w);
        }
    }
    let norm: f64 = kept_weights.iter().sum();
    for w in kept_weights.iter_mut() {
        *w /= norm;
    }
    Ok(PosteriorGrid {
        nodes: kept_nodes,
        weights: kept_weights,
        edge_mass,
        data_digest: digest_data(data),
        n_obs: data.len(),
    })
}

/// Upper quantile of the posterior predictive mixture.
pub fn predictive_quantile(
    pg: &PosteriorGrid,
    fam: &ParametricFamily,
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<f64> {
    if fam.obs_dim != 1 {
        return Err(Error::Unsupported(
            "predictive quantiles need univariate observations".into(),
        ));
    }
    let cdf = fam
        .cdf
        .as_ref()
        .ok_or_else(|| Error::Unsupported("predictive quantiles need an observation CDF".into()))?;
    let (lo, hi) = predictive_window_1d(pg, fam, cfg);
    let tail = |q: f64| -> f64 {
        pg.nodes
            .iter()
            .zip(&pg.weights)
            .map(|(theta, w)| w * (1.0 - cdf(q, theta)))
            .sum::<f64>()
            - alpha
    };
    numerics::find_root(tail, lo, hi, cfg.root_tol, 200)
}

fn predictive_window_1d(
    pg: &PosteriorGrid,
    fam: &ParametricFamily,
    cfg: &NumericsConfig,
) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for theta in &pg.nodes {
        let w = fam.window_1d(theta, cfg);
        lo = lo.min(w.lo);
        hi = hi.max(w.hi);
    }
    (lo, hi)
}

fn predictive_window_2d(
    pg: &PosteriorGrid,
    fam: &ParametricFamily,
    cfg: &NumericsConfig,
    coord: usize,
) -> ObsWindow {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut scale = 0.0_f64;
    for theta in &pg.nodes {
        let w = fam.windows(theta, cfg)[coord];
        lo = lo.min(w.lo);
        hi = hi.max(w.hi);
        scale = scale.max(w.scale);
    }
    ObsWindow {
        lo,
        hi,
        center: 0.5 * (lo + hi),
        scale,
    }
}

/// Mixture density of the posterior predictive, together with the solved
/// region machinery for one replicate.
enum PredictiveRegion {
    OneD {
        density: Box<dyn Fn(f64) -> f64 + Sync>,
        interval: Interval,
    },
    TwoD {
        density: Box<dyn Fn(f64, f64) -> f64 + Sync>,
        windows: [ObsWindow; 2],
        mode: [f64; 2],
    },
}

/// Density threshold of the level-alpha highest-density region of the
/// posterior predictive mixture.
pub fn predictive_hpd_threshold(
    pg: &PosteriorGrid,
    fam: &ParametricFamily,
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<f64> {
    Ok(predictive_hpd(pg, fam, alpha, cfg)?.0)
}

fn mc_rays(cfg: &NumericsConfig) -> (usize, usize) {
    // the replicated loop tolerates looser region quadrature than the
    // deterministic reports; Monte Carlo noise dominates well before this
    (
        (cfg.region_rays / 2).max(24),
        (cfg.region_radial_nodes * 3 / 4).max(12),
    )
}

fn predictive_hpd(
    pg: &PosteriorGrid,
    fam: &ParametricFamily,
    alpha: f64,
    cfg: &NumericsConfig,
) -> Result<(f64, PredictiveRegion)> {
    match fam.obs_dim {
        1 => {
            let cdf_fn = fam.cdf.as_ref().ok_or_else(|| {
                Error::Unsupported("predictive regions need an observation CDF".into())
            })?;
            let (lo, hi) = predictive_window_1d(pg, fam, cfg);
            let fam2 = fam.clone();
            let nodes = pg.nodes.clone();
            let weights = pg.weights.clone();
            let density = Box::new(move |x: f64| -> f64 {
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(theta, w)| w * fam2.density(&[x], theta))
                    .sum()
            });
            let cdf2 = cdf_fn.clone();
            let nodes = pg.nodes.clone();
            let weights = pg.weights.clone();
            let mix_cdf = Box::new(move |x: f64| -> f64 {
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(theta, w)| w * cdf2(x, theta))
                    .sum()
            });
            let window = ObsWindow {
                lo,
                hi,
                center: 0.5 * (lo + hi),
                scale: (hi - lo) / 16.0,
            };
            let mut eng = LevelEngine1d {
                density: density.as_ref(),
                cdf: Some(mix_cdf.as_ref()),
                window,
                mode: window.center,
                quad_nodes: cfg.x_quad_nodes,
            };
            eng.refine_mode();
            let hint = (density)(eng.mode) * (1.0 - alpha);
            let m = eng.threshold(alpha, cfg.hpd_bisect_tol.max(1e-8), Some(hint))?;
            let interval = eng.interval(m)?;
            Ok((m, PredictiveRegion::OneD { density, interval }))
        }
        2 => {
            let ws = [
                predictive_window_2d(pg, fam, cfg, 0),
                predictive_window_2d(pg, fam, cfg, 1),
            ];
            let fam2 = fam.clone();
            let nodes = pg.nodes.clone();
            let weights = pg.weights.clone();
            let density = Box::new(move |x: f64, y: f64| -> f64 {
                let pt = [x, y];
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(theta, w)| w * fam2.density(&pt, theta))
                    .sum()
            });
            // posterior-averaged family mode seeds the search
            let mut mode = [0.0_f64; 2];
            for (theta, w) in pg.nodes.iter().zip(&pg.weights) {
                let m = fam.mode(theta);
                mode[0] += w * m[0];
                mode[1] += w * m[1];
            }
            let (rays, radial) = mc_rays(cfg);
            let mut eng = StarRegion2d {
                density: density.as_ref(),
                windows: ws,
                mode,
                rays,
                radial_nodes: radial,
            };
            eng.refine_mode();
            let mode = eng.mode;
            let hint = (density)(mode[0], mode[1]) * (1.0 - alpha);
            let m = eng.threshold(alpha, cfg.hpd_bisect_tol.max(1e-7), Some(hint))?;
            Ok((
                m,
                PredictiveRegion::TwoD {
                    density,
                    windows: ws,
                    mode,
                },
            ))
        }
        d => Err(Error::Unsupported(format!("observation dimension {d}"))),
    }
}

/// Monte Carlo coverage estimate with its expansion check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverageReport {
    pub kind: String,
    pub family: String,
    pub prior: String,
    pub theta0: Vec<f64>,
    pub n: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Rao-Blackwellized coverage estimate and standard error.
    pub coverage_hat: f64,
    pub se: f64,
    /// Binary-indicator cross-check.
    pub coverage_hat_binary: f64,
    pub se_binary: f64,
    /// n (alpha - coverage_hat) and its standard error.
    pub defect_hat: f64,
    pub se_defect: f64,
    /// First-order defect predicted by the matching residual.
    pub predicted_defect: f64,
    /// (defect_hat - predicted_defect) / se_defect.
    pub z_score: f64,
    pub grid_retries: usize,
    pub config_hash: String,
    pub version: String,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64 + 1);
    rng
}

fn simulate_data(
    fam: &ParametricFamily,
    theta0: &[f64],
    n: usize,
    rng: &mut dyn RngCore,
) -> Vec<Vec<f64>> {
    (0..n).map(|_| fam.sample(theta0, rng)).collect()
}

fn grid_with_retries(
    fam: &ParametricFamily,
    data: &[Vec<f64>],
    prior: &PriorField,
    spec: &GridSpec,
    cfg: &NumericsConfig,
) -> Result<(PosteriorGrid, usize)> {
    let mut widen = 1.0;
    for attempt in 0..4 {
        match posterior_grid(fam, data, prior, &spec.widened(widen), cfg) {
            Ok(pg) => return Ok((pg, attempt)),
            Err(Error::GridMisplaced(_)) => widen *= 1.6,
            Err(e) => return Err(e),
        }
    }
    posterior_grid(fam, data, prior, &spec.widened(widen), cfg).map(|pg| (pg, 4))
}

fn check_mc_preconditions(
    fam: &ParametricFamily,
    theta0: &[f64],
    alpha: f64,
    replicates: usize,
) -> Result<()> {
    fam.check_domain(theta0)?;
    if replicates < 100 {
        return Err(Error::Config(format!(
            "coverage runs need at least 100 replicates, got {replicates}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("level {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// Replicated coverage of the upper predictive quantile.
#[allow(clippy::too_many_arguments)]
pub fn coverage_mc(
    fam: &ParametricFamily,
    prior: &PriorField,
    theta0: &[f64],
    n: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
    cfg: &NumericsConfig,
) -> Result<CoverageReport> {
    coverage_mc_with_grid(
        fam,
        prior,
        theta0,
        n,
        alpha,
        replicates,
        seed,
        cfg,
        &GridSpec::default_for(fam.param_dim),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn coverage_mc_with_grid(
    fam: &ParametricFamily,
    prior: &PriorField,
    theta0: &[f64],
    n: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
    cfg: &NumericsConfig,
    grid: &GridSpec,
) -> Result<CoverageReport> {
    check_mc_preconditions(fam, theta0, alpha, replicates)?;
    let cdf = fam
        .cdf
        .as_ref()
        .ok_or_else(|| Error::Unsupported("quantile coverage needs an observation CDF".into()))?;

    let results: Result<Vec<(f64, f64, usize)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let data = simulate_data(fam, theta0, n, &mut rng);
            let (pg, retries) = grid_with_retries(fam, &data, prior, grid, cfg)?;
            let q = predictive_quantile(&pg, fam, alpha, cfg)?;
            let rb = 1.0 - cdf(q, theta0);
            let x_next = fam.sample(theta0, &mut rng)[0];
            let binary = if x_next > q { 1.0 } else { 0.0 };
            Ok((rb, binary, retries))
        })
        .collect();
    let predicted =
        crate::quantile_match::quantile_residual(fam, prior, theta0, alpha, cfg)?.epsilon;
    finish_report(
        "quantile", fam, prior, theta0, n, alpha, replicates, seed, cfg, &results?, predicted,
    )
}

/// Replicated coverage of the predictive highest-density region.
#[allow(clippy::too_many_arguments)]
pub fn coverage_mc_hpd(
    fam: &ParametricFamily,
    prior: &PriorField,
    theta0: &[f64],
    n: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
    cfg: &NumericsConfig,
) -> Result<CoverageReport> {
    coverage_mc_hpd_with_grid(
        fam,
        prior,
        theta0,
        n,
        alpha,
        replicates,
        seed,
        cfg,
        &GridSpec::default_for(fam.param_dim),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn coverage_mc_hpd_with_grid(
    fam: &ParametricFamily,
    prior: &PriorField,
    theta0: &[f64],
    n: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
    cfg: &NumericsConfig,
    grid: &GridSpec,
) -> Result<CoverageReport> {
    check_mc_preconditions(fam, theta0, alpha, replicates)?;

    let results: Result<Vec<(f64, f64, usize)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let data = simulate_data(fam, theta0, n, &mut rng);
            let (pg, retries) = grid_with_retries(fam, &data, prior, grid, cfg)?;
            let (m, region) = predictive_hpd(&pg, fam, alpha, cfg)?;
            let (rb, fx_next) = match &region {
                PredictiveRegion::OneD {
                    density, interval, ..
                } => {
                    let cdf = fam.cdf.as_ref().expect("univariate families carry a CDF");
                    let rb = cdf(interval.b, theta0) - cdf(interval.a, theta0);
                    let x_next = fam.sample(theta0, &mut rng)[0];
                    (rb, density(x_next))
                }
                PredictiveRegion::TwoD {
                    density,
                    windows,
                    mode,
                } => {
                    let fam2 = fam.clone();
                    let th0 = theta0.to_vec();
                    let truth = move |x: f64, y: f64| fam2.density(&[x, y], &th0);
                    let (rays, radial) = mc_rays(cfg);
                    let eng = StarRegion2d {
                        density: density.as_ref(),
                        windows: *windows,
                        mode: *mode,
                        rays,
                        radial_nodes: radial,
                    };
                    let rb = eng.integrate_region(m, &[&truth], false)?[0];
                    let x_next = fam.sample(theta0, &mut rng);
                    (rb, density(x_next[0], x_next[1]))
                }
            };
            let binary = if fx_next >= m { 1.0 } else { 0.0 };
            Ok((rb, binary, retries))
        })
        .collect();
    let predicted = crate::hpd_match::hpd_residual(fam, prior, theta0, alpha, cfg)?.epsilon;
    finish_report(
        "hpd", fam, prior, theta0, n, alpha, replicates, seed, cfg, &results?, predicted,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    kind: &str,
    fam: &ParametricFamily,
    prior: &PriorField,
    theta0: &[f64],
    n: usize,
    alpha: f64,
    replicates: usize,
    seed: u64,
    cfg: &NumericsConfig,
    results: &[(f64, f64, usize)],
    predicted_defect: f64,
) -> Result<CoverageReport> {
    let retries: usize = results.iter().map(|r| r.2).sum();
    if retries * 100 > replicates {
        return Err(Error::TooManyGridRetries {
            retries,
            replicates,
        });
    }
    let rb: Vec<f64> = results.iter().map(|r| r.0).collect();
    let binary: Vec<f64> = results.iter().map(|r| r.1).collect();
    let (coverage_hat, se) = mean_and_se(&rb);
    let (coverage_hat_binary, se_binary) = mean_and_se(&binary);
    let defect_hat = n as f64 * (alpha - coverage_hat);
    let se_defect = n as f64 * se;
    let z_score = if se_defect > 0.0 {
        (defect_hat - predicted_defect) / se_defect
    } else {
        0.0
    };
    Ok(CoverageReport {
        kind: kind.into(),
        family: fam.name.clone(),
        prior: prior.name.clone(),
        theta0: theta0.to_vec(),
        n,
        alpha,
        replicates,
        seed,
        coverage_hat,
        se,
        coverage_hat_binary,
        se_binary,
        defect_hat,
        se_defect,
        predicted_defect,
        z_score,
        grid_retries: retries,
        config_hash: crate::report::config_hash(cfg),
        version: crate::VERSION.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::builtin_family;
    use approx::assert_abs_diff_eq;

    fn cfg() -> NumericsConfig {
        NumericsConfig::default()
    }

    #[test]
    fn conjugate_posterior_mean_matches_sample_mean() {
        let cfg = cfg();
        let fam = builtin_family("normal-location").unwrap();
        let uniform = fam.named_prior("uniform").unwrap();
        let data: Vec<Vec<f64>> = [0.4, -0.3, 1.1, 0.7, 0.2]
            .iter()
            .map(|&x| vec![x])
            .collect();
        let pg = posterior_grid(&fam, &data, &uniform, &GridSpec::default_for(1), &cfg).unwrap();
        let mean: f64 = pg
            .nodes
            .iter()
            .zip(&pg.weights)
            .map(|(t, w)| w * t[0])
            .sum();
        let xbar = 0.42;
        assert_abs_diff_eq!(mean, xbar, epsilon = 1e-6);
        // posterior under the flat prior is N(xbar, 1/n)
        let var: f64 = pg
            .nodes
            .iter()
            .zip(&pg.weights)
            .map(|(t, w)| w * (t[0] - mean) * (t[0] - mean))
            .sum();
        assert_abs_diff_eq!(var, 0.2, epsilon = 1e-4);
        // weights normalized
        assert_abs_diff_eq!(pg.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_grid_gives_plugin_predictive() {
        let cfg = cfg();
        let fam = builtin_family("normal-location").unwrap();
        let theta0 = [0.6];
        let pg = PosteriorGrid {
            nodes: vec![theta0.to_vec()],
            weights: vec![1.0],
            edge_mass: 0.0,
            data_digest: "fixed".into(),
            n_obs: 1,
        };
        for alpha in [0.1, 0.5] {
            let q = predictive_quantile(&pg, &fam, alpha, &cfg).unwrap();
            let direct = crate::quantile_match::freq_quantile(&fam, &theta0, alpha, &cfg).unwrap();
            assert_abs_diff_eq!(q, direct, epsilon = 1e-8);
            let m = predictive_hpd_threshold(&pg, &fam, alpha, &cfg).unwrap();
            let direct = crate::hpd_match::hpd_threshold(&fam, &theta0, alpha, &cfg).unwrap();
            assert_abs_diff_eq!(m, direct, epsilon = 1e-6);
        }
    }

    #[test]
    fn symmetric_two_node_mixture_has_zero_median() {
        let cfg = cfg();
        let fam = builtin_family("normal-location").unwrap();
        let pg = PosteriorGrid {
            nodes: vec![vec![-1.3], vec![1.3]],
            weights: vec![0.5, 0.5],
            edge_mass: 0.0,
            data_digest: "fixed".into(),
            n_obs: 2,
        };
        let q = predictive_quantile(&pg, &fam, 0.5, &cfg).unwrap();
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn right_haar_predictive_quantile_matches_student_t() {
        use statrs::distribution::ContinuousCDF;
        let cfg = cfg();
        let fam = builtin_family("location-scale-normal").unwrap();
        let rh = fam.named_prior("right-haar").unwrap();
        let data_raw = [1.2, 0.3, -0.6, 2.1, 0.9];
        let data: Vec<Vec<f64>> = data_raw.iter().map(|&x| vec![x]).collect();
        let n = data_raw.len() as f64;
        let xbar = data_raw.iter().sum::<f64>() / n;
        let s2 = data_raw.iter().map(|x| (x - xbar).powi(2)).sum::<f64>() / (n - 1.0);
        let spec = GridSpec {
            nodes_per_dim: 128,
            halfwidth_sds: 13.0,
            center: None,
            halfwidth: None,
        };
        let pg = posterior_grid(&fam, &data, &rh, &spec, &cfg).unwrap();
        for alpha in [0.1, 0.25] {
            let q = predictive_quantile(&pg, &fam, alpha, &cfg).unwrap();
            let t = statrs::distribution::StudentsT::new(0.0, 1.0, n - 1.0)
                .unwrap()
                .inverse_cdf(1.0 - alpha);
            let expect = xbar + s2.sqrt() * t * (1.0 + 1.0 / n).sqrt();
            assert_abs_diff_eq!(q, expect, epsilon = 3e-3 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn coverage_mc_rejects_tiny_replicate_counts() {
        let cfg = cfg();
        let fam = builtin_family("normal-location").unwrap();
        let u = fam.named_prior("uniform").unwrap();
        let r = coverage_mc(&fam, &u, &[0.0], 3, 0.1, 10, 7, &cfg);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn exact_matching_location_model_small_run() {
        let cfg = cfg();
        let fam = builtin_family("normal-location").unwrap();
        let u = fam.named_prior("uniform").unwrap();
        let rep = coverage_mc(&fam, &u, &[0.0], 3, 0.1, 400, 11, &cfg).unwrap();
        // the flat prior in a pure location model matches exactly
        assert!(
            (rep.coverage_hat - 0.1).abs() <= 3.0 * rep.se,
            "coverage {} +- {}",
            rep.coverage_hat,
            rep.se
        );
        // the two estimators agree
        let comb = (rep.se * rep.se + rep.se_binary * rep.se_binary).sqrt();
        assert!((rep.coverage_hat - rep.coverage_hat_binary).abs() <= 3.0 * comb);
    }

    #[test]
    fn determinism_same_seed_same_report() {
        let cfg = cfg();
        let fam = builtin_family("normal-location").unwrap();
        let u = fam.named_prior("uniform").unwrap();
        let a = coverage_mc(&fam, &u, &[0.0], 3, 0.2, 120, 99, &cfg).unwrap();
        let b = coverage_mc(&fam, &u, &[0.0], 3, 0.2, 120, 99, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = coverage_mc(&fam, &u, &[0.0], 3, 0.2, 120, 100, &cfg).unwrap();
        assert_ne!(a.coverage_hat, c.coverage_hat);
    }
}
