//! Numeric validation of a family definition: density mass, score and CDF
//! gradient consistency against finite differences, and a sampler check
//! against the CDF.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ParametricFamily;
use crate::error::Result;
use crate::numerics::{self, quadrature, NumericsConfig};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct DiagnosticReport {
    pub family: String,
    pub theta: Vec<f64>,
    pub checks: Vec<CheckResult>,
}

impl DiagnosticReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: &str, measured: f64, threshold: f64) {
        self.checks.push(CheckResult {
            name: name.into(),
            measured,
            threshold,
            pass: measured.is_finite() && measured <= threshold,
        });
    }
}

/// Run every family invariant numerically at `theta` and report each check.
pub fn validate_family(
    fam: &ParametricFamily,
    theta: &[f64],
    cfg: &NumericsConfig,
) -> Result<DiagnosticReport> {
    fam.check_domain(theta)?;
    let mut report = DiagnosticReport {
        family: fam.name.clone(),
        theta: theta.to_vec(),
        checks: Vec::new(),
    };

    // Density mass over the truncation window.
    let mass = density_mass(fam, theta, cfg)?;
    report.push("density-mass", (mass - 1.0).abs(), 1e-8);

    // Score vs finite difference of the log density in theta.
    let probe_points = probe_points(fam, theta, cfg);
    let mut worst_score = 0.0_f64;
    for x in &probe_points {
        let s = fam.score(x, theta);
        let fd = numerics::fd_gradient(|t| fam.log_density(x, t), theta, cfg);
        for (a, b) in s.iter().zip(&fd) {
            let denom = 1.0_f64.max(b.abs());
            worst_score = worst_score.max((a - b).abs() / denom);
        }
    }
    report.push("score-vs-fd", worst_score, 1e-5);

    // CDF gradient vs finite difference of the CDF in theta.
    if let (Some(cdf), Some(grad)) = (&fam.cdf, &fam.cdf_theta_gradient) {
        let mut worst = 0.0_f64;
        for x in &probe_points {
            let g = grad(x[0], theta);
            let fd = numerics::fd_gradient(|t| cdf(x[0], t), theta, cfg);
            for (a, b) in g.iter().zip(&fd) {
                worst = worst.max((a - b).abs() / 1.0_f64.max(b.abs()));
            }
        }
        report.push("cdf-gradient-vs-fd", worst, 1e-6);

        // CDF endpoints over the window.
        let w = fam.window_1d(theta, cfg);
        report.push("cdf-lower-endpoint", cdf(w.lo, theta).abs(), 1e-9);
        report.push("cdf-upper-endpoint", (cdf(w.hi, theta) - 1.0).abs(), 1e-9);

        // Sampler empirical CDF vs the family CDF (Kolmogorov-Smirnov).
        let n = 10_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.validation_seed);
        let mut xs: Vec<f64> = (0..n).map(|_| fam.sample(theta, &mut rng)[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d = 0.0_f64;
        for (i, &x) in xs.iter().enumerate() {
            let fx = cdf(x, theta);
            d = d.max((fx - i as f64 / n as f64).abs());
            d = d.max(((i as f64 + 1.0) / n as f64 - fx).abs());
        }
        // critical value at the 0.1% level
        let crit = (-0.5 * (0.001_f64 / 2.0).ln()).sqrt() / (n as f64).sqrt();
        report.push("sampler-ks", d, crit);
    }

    // Named prior gradients vs finite differences of their log densities.
    let mut worst_prior = 0.0_f64;
    for prior in fam.named_priors.values() {
        let g = prior.gradient(theta);
        let fd = numerics::fd_gradient(|t| prior.log_prior(t), theta, cfg);
        for (a, b) in g.iter().zip(&fd) {
            worst_prior = worst_prior.max((a - b).abs() / 1.0_f64.max(b.abs()));
        }
    }
    report.push("prior-gradient-vs-fd", worst_prior, 1e-6);

    Ok(report)
}

/// Density mass over the truncation window (tensor quadrature when the
/// observation is bivariate).
pub fn density_mass(fam: &ParametricFamily, theta: &[f64], cfg: &NumericsConfig) -> Result<f64> {
    let windows = fam.windows(theta, cfg);
    match fam.obs_dim {
        1 => {
            let w = windows[0];
            let edges = quadrature::graded_edges(w.center, w.scale, w.lo, w.hi);
            quadrature::integrate_panels(
                &mut |x| fam.density(&[x], theta),
                &edges,
                cfg.x_quad_nodes,
            )
        }
        2 => {
            let (w0, w1) = (windows[0], windows[1]);
            let e0 = quadrature::graded_edges(w0.center, w0.scale, w0.lo, w0.hi);
            let e1 = quadrature::graded_edges(w1.center, w1.scale, w1.lo, w1.hi);
            quadrature::integrate_panels(
                &mut |x0| {
                    quadrature::integrate_panels(
                        &mut |x1| fam.density(&[x0, x1], theta),
                        &e1,
                        cfg.x_quad_nodes,
                    )
                    .unwrap_or(f64::NAN)
                },
                &e0,
                cfg.x_quad_nodes,
            )
        }
        d => Err(crate::error::Error::Unsupported(format!(
            "observation dimension {d}"
        ))),
    }
}

fn probe_points(fam: &ParametricFamily, theta: &[f64], cfg: &NumericsConfig) -> Vec<Vec<f64>> {
    let windows = fam.windows(theta, cfg);
    let offsets = [-2.0, -0.7, 0.1, 1.1, 2.3];
    match fam.obs_dim {
        1 => offsets
            .iter()
            .map(|o| vec![windows[0].center + o * windows[0].scale])
            .collect(),
        _ => offsets
            .iter()
            .map(|o| {
                windows
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w.center + o * w.scale * if i % 2 == 0 { 1.0 } else { -0.8 })
                    .collect()
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::builtin_family;

    #[test]
    fn normal_location_validates() {
        let fam = builtin_family("normal-location").unwrap();
        let cfg = NumericsConfig::default();
        let r = validate_family(&fam, &[0.0], &cfg).unwrap();
        assert!(r.all_pass(), "{:#?}", r.checks);
        let mass = r.checks.iter().find(|c| c.name == "density-mass").unwrap();
        assert!(mass.measured < 1e-8);
    }

    #[test]
    fn bvn_scores_match_finite_differences() {
        let fam = builtin_family("bvn-cholesky").unwrap();
        let cfg = NumericsConfig::default();
        let r = validate_family(&fam, &[1.0, 1.0, 0.0], &cfg).unwrap();
        let score = r.checks.iter().find(|c| c.name == "score-vs-fd").unwrap();
        assert!(score.pass, "score error {}", score.measured);
    }

    #[test]
    fn cauchy_sampler_passes_ks() {
        let fam = builtin_family("location-scale-t(1)").unwrap();
        let cfg = NumericsConfig::default();
        let r = validate_family(&fam, &[0.0, 1.0], &cfg).unwrap();
        let ks = r.checks.iter().find(|c| c.name == "sampler-ks").unwrap();
        assert!(ks.pass, "KS statistic {} vs {}", ks.measured, ks.threshold);
    }

    #[test]
    fn domain_violation_is_rejected() {
        let fam = builtin_family("location-scale-normal").unwrap();
        let cfg = NumericsConfig::default();
        assert!(validate_family(&fam, &[0.0, -1.0], &cfg).is_err());
    }
}
