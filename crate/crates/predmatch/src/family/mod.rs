//! Parametric families and log-prior fields.
//!
//! A [`ParametricFamily`] bundles everything the matching machinery needs
//! from a model: log density, score, observation CDF and its parameter
//! gradient (univariate case), a sampler, truncation windows, named priors,
//! and optional closed-form oracles used as ground truth in tests.

mod base;
mod builtins;
pub mod validate;

pub use base::BaseKind;
pub use builtins::{
    builtin_family, builtin_family_names, bvn_upmp_member, linear_tilt_prior, location_family,
    location_scale_family,
};
pub use validate::{validate_family, CheckResult, DiagnosticReport};

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::numerics::{self, Mat, NumericsConfig};

pub type ObsFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type ObsVecFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type CdfFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type CdfGradFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type SamplerFn = Arc<dyn Fn(&[f64], &mut dyn RngCore) -> Vec<f64> + Send + Sync>;
pub type WindowFn = Arc<dyn Fn(&[f64], f64) -> Vec<ObsWindow> + Send + Sync>;
pub type ThetaFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ThetaVecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Truncation window for one observation coordinate: the integration range
/// plus the bulk center/scale used to grade quadrature panels.
#[derive(Clone, Copy, Debug)]
pub struct ObsWindow {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub scale: f64,
}

/// Open-box parameter domain with an optional extra predicate.
#[derive(Clone)]
pub struct ParamDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub predicate: Option<Arc<dyn Fn(&[f64]) -> bool + Send + Sync>>,
    pub description: String,
}

impl ParamDomain {
    pub fn unbounded(p: usize) -> Self {
        ParamDomain {
            lower: vec![f64::NEG_INFINITY; p],
            upper: vec![f64::INFINITY; p],
            predicate: None,
            description: "unconstrained".into(),
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.lower.len() {
            return false;
        }
        let in_box = theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&t, (&lo, &hi))| t > lo && t < hi && t.is_finite());
        in_box && self.predicate.as_ref().is_none_or(|p| p(theta))
    }
}

/// A named log-prior with its gradient, defined up to an additive constant.
#[derive(Clone)]
pub struct PriorField {
    pub name: String,
    log_prior: ThetaFn,
    gradient: ThetaVecFn,
}

impl PriorField {
    pub fn new(
        name: impl Into<String>,
        log_prior: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        PriorField {
            name: name.into(),
            log_prior: Arc::new(log_prior),
            gradient: Arc::new(gradient),
        }
    }

    /// Build from the log density alone; the gradient is a central finite
    /// difference with the configured step.
    pub fn from_log_density(
        name: impl Into<String>,
        log_prior: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        cfg: &NumericsConfig,
    ) -> Self {
        let f = Arc::new(log_prior);
        let g = f.clone();
        let cfg = cfg.clone();
        PriorField {
            name: name.into(),
            log_prior: f,
            gradient: Arc::new(move |theta| numerics::fd_gradient(|t| g(t), theta, &cfg)),
        }
    }

    pub fn uniform(p: usize) -> Self {
        PriorField::new("uniform", |_| 0.0, move |_| vec![0.0; p])
    }

    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        (self.log_prior)(theta)
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        (self.gradient)(theta)
    }
}

impl std::fmt::Debug for PriorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PriorField")
            .field("name", &self.name)
            .finish()
    }
}

/// Closed-form reference quantities carried by built-in families.
#[derive(Clone, Default)]
pub struct Oracles {
    /// Fisher information matrix.
    pub fisher: Option<Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>>,
    /// Upper-tail quantile q with P(X > q) = alpha.
    pub quantile: Option<Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>>,
    /// Density threshold of the level-alpha highest-density region.
    pub hpd_threshold: Option<Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>>,
    /// Gradient of region mass at the frozen level-alpha region.
    pub region_gradient: Option<Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>>,
}

/// A parametric model with the uniform evaluation interface used by every
/// downstream operation.
#[derive(Clone)]
pub struct ParametricFamily {
    pub name: String,
    pub param_dim: usize,
    pub obs_dim: usize,
    pub log_density: ObsFn,
    pub score: ObsVecFn,
    /// d(score)/dx for univariate observations; omitted entries fall back to
    /// a central finite difference in x.
    pub score_x_derivative: Option<ObsVecFn>,
    pub cdf: Option<CdfFn>,
    pub cdf_theta_gradient: Option<CdfGradFn>,
    pub sampler: SamplerFn,
    /// Mathematical support per observation coordinate.
    pub support: Vec<(f64, f64)>,
    pub param_domain: ParamDomain,
    pub named_priors: BTreeMap<String, PriorField>,
    pub oracles: Oracles,
    /// Truncation windows: tail mass outside each window is below the given
    /// target per side.
    pub window: WindowFn,
    /// Location of the density mode, used to seed level-set searches.
    pub mode_hint: Option<ThetaVecFn>,
    /// Crude moment-style estimator used to center posterior grids.
    pub crude_estimate: Option<Arc<dyn Fn(&[Vec<f64>]) -> Vec<f64> + Send + Sync>>,
    /// Per-dimension positivity mask for posterior grid placement.
    pub positive_params: Vec<bool>,
}

impl std::fmt::Debug for ParametricFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParametricFamily")
            .field("name", &self.name)
            .field("param_dim", &self.param_dim)
            .field("obs_dim", &self.obs_dim)
            .finish()
    }
}

impl ParametricFamily {
    pub fn check_domain(&self, theta: &[f64]) -> Result<()> {
        if self.param_domain.contains(theta) {
            Ok(())
        } else {
            Err(Error::DomainViolation {
                theta: theta.to_vec(),
                reason: self.param_domain.description.clone(),
            })
        }
    }

    pub fn log_density(&self, x: &[f64], theta: &[f64]) -> f64 {
        (self.log_density)(x, theta)
    }

    pub fn density(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.log_density(x, theta).exp()
    }

    pub fn score(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        (self.score)(x, theta)
    }

    /// d(score)/dx, closed form when provided, otherwise a central finite
    /// difference in x with step scaling like cbrt(eps) * (1 + |x|).
    pub fn score_x_derivative(&self, x: f64, theta: &[f64]) -> Vec<f64> {
        if let Some(d) = &self.score_x_derivative {
            return d(&[x], theta);
        }
        let h = f64::EPSILON.powf(1.0 / 3.0) * (1.0 + x.abs());
        let sp = self.score(&[x + h], theta);
        let sm = self.score(&[x - h], theta);
        sp.iter()
            .zip(&sm)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect()
    }

    pub fn cdf(&self, x: f64, theta: &[f64]) -> Result<f64> {
        match &self.cdf {
            Some(f) => Ok(f(x, theta)),
            None => Err(Error::Unsupported(format!(
                "family `{}` has no closed-form observation CDF",
                self.name
            ))),
        }
    }

    pub fn sample(&self, theta: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        (self.sampler)(theta, rng)
    }

    pub fn windows(&self, theta: &[f64], cfg: &NumericsConfig) -> Vec<ObsWindow> {
        (self.window)(theta, cfg.tail_mass)
    }

    pub fn window_1d(&self, theta: &[f64], cfg: &NumericsConfig) -> ObsWindow {
        self.windows(theta, cfg)[0]
    }

    pub fn named_prior(&self, name: &str) -> Result<PriorField> {
        self.named_priors
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownPrior(name.into(), self.name.clone()))
    }

    pub fn mode(&self, theta: &[f64]) -> Vec<f64> {
        match &self.mode_hint {
            Some(m) => m(theta),
            None => self
                .windows(theta, &NumericsConfig::default())
                .iter()
                .map(|w| w.center)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_from_log_density_has_fd_gradient() {
        let cfg = NumericsConfig::default();
        let p = PriorField::from_log_density("test", |t| -2.0 * t[1].ln(), &cfg);
        let g = p.gradient(&[0.0, 2.0]);
        assert!((g[0]).abs() < 1e-9);
        assert!((g[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn domain_box_and_predicate() {
        let d = ParamDomain {
            lower: vec![f64::NEG_INFINITY, 0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
            predicate: None,
            description: "scale positive".into(),
        };
        assert!(d.contains(&[0.0, 1.0]));
        assert!(!d.contains(&[0.0, 0.0]));
        assert!(!d.contains(&[0.0, -1.0]));
    }
}
