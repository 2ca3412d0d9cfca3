//! Report assembly and serialization.
//!
//! Residual sweeps are collected into a [`ResidualReport`] that serializes
//! to CSV (fixed column order, 17-significant-digit lowercase e-notation)
//! and JSON. Every output embeds the hash of the numerics configuration
//! that produced it and the toolkit version, so reports can be diffed
//! bit-for-bit across runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage::CoverageReport;
use crate::error::Result;
use crate::family::{ParametricFamily, PriorField};
use crate::hpd_match::{self, SeparabilityForm};
use crate::numerics::NumericsConfig;
use crate::quantile_match::{self, ResidualCell};

/// 17 significant digits, lowercase e-notation; fixed for bit-exact diffs.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Short hash of the numerics configuration (canonical JSON form).
pub fn config_hash(cfg: &NumericsConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let out = hasher.finalize();
    out.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingKind {
    Quantile,
    Hpd,
}

impl std::fmt::Display for MatchingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatchingKind::Quantile => f.write_str("quantile"),
            MatchingKind::Hpd => f.write_str("hpd"),
        }
    }
}

/// One (theta, alpha) cell of a residual sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualRow {
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub epsilon: f64,
    pub err_est: f64,
    /// Region threshold (region-matching sweeps only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Active-block independence ratio at this theta (region sweeps only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub independence_ratio: Option<f64>,
    /// Structure verdict for the sweep grid (region sweeps only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<SeparabilityForm>,
}

/// Residual values of one prior over a (theta, alpha) grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    pub kind: MatchingKind,
    pub family: String,
    pub prior: String,
    pub sup_norm: f64,
    pub rows: Vec<ResidualRow>,
    pub config_hash: String,
    pub version: String,
}

impl ResidualReport {
    pub fn to_csv(&self) -> String {
        let p = self.rows.first().map_or(0, |r| r.theta.len());
        let mut out = String::new();
        out.push_str(&format!("# family: {}\n", self.family));
        out.push_str(&format!("# prior: {}\n", self.prior));
        out.push_str(&format!("# kind: {}\n", self.kind));
        out.push_str(&format!("# config_hash: {}\n", self.config_hash));
        out.push_str(&format!("# version: {}\n", self.version));
        out.push_str(&format!("# sup_norm: {}\n", fmt_float(self.sup_norm)));
        let mut header: Vec<String> = (1..=p).map(|i| format!("theta{i}")).collect();
        header.extend(["alpha".into(), "epsilon".into(), "err_est".into()]);
        let hpd = self.kind == MatchingKind::Hpd;
        if hpd {
            header.extend(["m".into(), "min_eig_ratio".into(), "form".into()]);
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut cells: Vec<String> = row.theta.iter().map(|&v| fmt_float(v)).collect();
            cells.push(fmt_float(row.alpha));
            cells.push(fmt_float(row.epsilon));
            cells.push(fmt_float(row.err_est));
            if hpd {
                cells.push(row.m.map(fmt_float).unwrap_or_default());
                cells.push(row.independence_ratio.map(fmt_float).unwrap_or_default());
                cells.push(row.form.map(|f| f.to_string()).unwrap_or_default());
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Quantile-matching residual sweep for several priors over a grid.
///
/// The prior-independent cell data (information stencils and tail
/// gradients) is computed once per grid point and shared across priors.
pub fn quantile_residual_sweep(
    fam: &ParametricFamily,
    priors: &[PriorField],
    theta_grid: &[Vec<f64>],
    alphas: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<ResidualReport>> {
    let cells: Result<Vec<Vec<ResidualCell>>> = theta_grid
        .par_iter()
        .map(|theta| {
            let stencil = quantile_match::info_stencil(fam, theta, cfg)?;
            alphas
                .iter()
                .map(|&alpha| quantile_match::quantile_cell(fam, &stencil, alpha, cfg))
                .collect()
        })
        .collect();
    let cells = cells?;
    Ok(priors
        .iter()
        .map(|prior| {
            let mut rows = Vec::new();
            let mut sup: f64 = 0.0;
            for per_theta in &cells {
                for cell in per_theta {
                    let r = cell.evaluate(prior);
                    sup = sup.max(r.epsilon.abs());
                    rows.push(ResidualRow {
                        theta: cell.theta.clone(),
                        alpha: cell.alpha,
                        epsilon: r.epsilon,
                        err_est: r.err_est,
                        m: None,
                        independence_ratio: None,
                        form: None,
                    });
                }
            }
            ResidualReport {
                kind: MatchingKind::Quantile,
                family: fam.name.clone(),
                prior: prior.name.clone(),
                sup_norm: sup,
                rows,
                config_hash: config_hash(cfg),
                version: crate::VERSION.into(),
            }
        })
        .collect())
}

/// Region-matching residual sweep, with the threshold, independence ratio,
/// and structure verdict attached to every row.
pub fn hpd_residual_sweep(
    fam: &ParametricFamily,
    priors: &[PriorField],
    theta_grid: &[Vec<f64>],
    alphas: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<ResidualReport>> {
    let diag = hpd_match::separability_diagnosis(fam, theta_grid, cfg)?;
    let per_theta: Result<Vec<(Vec<(ResidualCell, f64)>, f64)>> = theta_grid
        .par_iter()
        .map(|theta| {
            let stencil = quantile_match::info_stencil(fam, theta, cfg)?;
            let gram = hpd_match::profile_gram(fam, theta, cfg)?;
            let cells: Result<Vec<(ResidualCell, f64)>> = alphas
                .iter()
                .map(|&alpha| hpd_match::hpd_cell(fam, &stencil, alpha, cfg))
                .collect();
            Ok((cells?, gram.independence_ratio))
        })
        .collect();
    let per_theta = per_theta?;
    Ok(priors
        .iter()
        .map(|prior| {
            let mut rows = Vec::new();
            let mut sup: f64 = 0.0;
            for (cells, ratio) in &per_theta {
                for (cell, m) in cells {
                    let r = cell.evaluate(prior);
                    sup = sup.max(r.epsilon.abs());
                    rows.push(ResidualRow {
                        theta: cell.theta.clone(),
                        alpha: cell.alpha,
                        epsilon: r.epsilon,
                        err_est: r.err_est,
                        m: Some(*m),
                        independence_ratio: Some(*ratio),
                        form: Some(diag.form),
                    });
                }
            }
            ResidualReport {
                kind: MatchingKind::Hpd,
                family: fam.name.clone(),
                prior: prior.name.clone(),
                sup_norm: sup,
                rows,
                config_hash: config_hash(cfg),
                version: crate::VERSION.into(),
            }
        })
        .collect())
}

/// CSV row for a coverage report (one line per run plus a header).
pub fn coverage_csv(reports: &[CoverageReport]) -> String {
    let mut out = String::new();
    out.push_str("# coverage reports\n");
    if let Some(first) = reports.first() {
        out.push_str(&format!("# config_hash: {}\n", first.config_hash));
        out.push_str(&format!("# version: {}\n", first.version));
    }
    out.push_str(
        "kind,family,prior,theta0,n,alpha,replicates,seed,coverage_hat,se,\
         coverage_hat_binary,se_binary,defect_hat,se_defect,predicted_defect,z_score,grid_retries\n",
    );
    for r in reports {
        let theta0 = r
            .theta0
            .iter()
            .map(|&v| fmt_float(v))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.kind,
            r.family,
            r.prior,
            theta0,
            r.n,
            fmt_float(r.alpha),
            r.replicates,
            r.seed,
            fmt_float(r.coverage_hat),
            fmt_float(r.se),
            fmt_float(r.coverage_hat_binary),
            fmt_float(r.se_binary),
            fmt_float(r.defect_hat),
            fmt_float(r.se_defect),
            fmt_float(r.predicted_defect),
            fmt_float(r.z_score),
            r.grid_retries,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::builtin_family;

    #[test]
    fn float_format_is_17_significant_digits_lowercase() {
        assert_eq!(fmt_float(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt_float(-1.0), "-1.0000000000000000e0");
    }

    #[test]
    fn config_hash_distinguishes_configs() {
        let a = NumericsConfig::default();
        let mut b = NumericsConfig::default();
        b.root_tol = 1e-10;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a), config_hash(&NumericsConfig::default()));
    }

    #[test]
    fn sweep_reports_share_cells_across_priors() {
        let cfg = NumericsConfig::default();
        let fam = builtin_family("location-scale-normal").unwrap();
        let priors = vec![
            fam.named_prior("right-haar").unwrap(),
            fam.named_prior("jeffreys").unwrap(),
        ];
        let grid = vec![vec![0.0, 1.0], vec![1.0, 2.0]];
        let alphas = [0.1, 0.5, 0.9];
        let reports = quantile_residual_sweep(&fam, &priors, &grid, &alphas, &cfg).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(
            reports[0].sup_norm < 1e-5,
            "right haar {}",
            reports[0].sup_norm
        );
        assert!(
            reports[1].sup_norm > 1e-2,
            "jeffreys {}",
            reports[1].sup_norm
        );
        // CSV round shape
        let csv = reports[0].to_csv();
        assert!(csv.contains("theta1,theta2,alpha,epsilon,err_est"));
        assert_eq!(csv.lines().count(), 7 + grid.len() * alphas.len());
        // JSON embeds hash and version
        let j = reports[0].to_json();
        assert!(j.contains("config_hash"));
        assert!(j.contains(crate::VERSION));
    }
}
