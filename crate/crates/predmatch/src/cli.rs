//! Batch driver: dispatches experiment configs to the computation modules
//! and runs the one-shot verification suite behind `predmatch verify`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Task};
use crate::coverage;
use crate::error::{Error, Result};
use crate::family::{
    builtin_family, builtin_family_names, bvn_upmp_member, linear_tilt_prior, validate_family,
    PriorField,
};
use crate::fisher;
use crate::hpd_match;
use crate::numerics::NumericsConfig;
use crate::quantile_match;
use crate::report::{self, ResidualReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Outcome of `run`: written files, a printable summary, and whether every
/// requested assertion passed.
#[derive(Debug)]
pub struct RunOutput {
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub ok: bool,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_report(
    report: &ResidualReport,
    out_dir: &Path,
    format: OutputFormat,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let stem = format!(
        "{}_{}_{}",
        report.kind,
        sanitize(&report.family),
        sanitize(&report.prior)
    );
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = out_dir.join(format!("{stem}.csv"));
        fs::write(&path, report.to_csv())?;
        files.push(path);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = out_dir.join(format!("{stem}.json"));
        fs::write(&path, report.to_json())?;
        files.push(path);
    }
    Ok(())
}

/// Execute a config file and write reports under `out_dir`.
pub fn run(
    config_path: &Path,
    out_dir: &Path,
    format: OutputFormat,
    seed_override: Option<u64>,
) -> Result<RunOutput> {
    let text = fs::read_to_string(config_path)?;
    let config = ExperimentConfig::from_toml(&text)?;
    run_config(&config, out_dir, format, seed_override)
}

pub fn run_config(
    config: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
    seed_override: Option<u64>,
) -> Result<RunOutput> {
    let cfg = config.numerics()?;
    let fam = config.resolve_family()?;
    let mut summary = String::new();
    let mut files = Vec::new();
    let mut ok = true;

    let alphas = if config.alphas.is_empty() {
        NumericsConfig::default_alpha_sweep()
    } else {
        config.alphas.clone()
    };

    match config.task {
        Task::Residual | Task::HpdResidual => {
            let priors = config.resolve_priors(&fam, &cfg)?;
            let grid = config.theta_points(fam.param_dim)?;
            let reports = if config.task == Task::Residual {
                report::quantile_residual_sweep(&fam, &priors, &grid, &alphas, &cfg)?
            } else {
                report::hpd_residual_sweep(&fam, &priors, &grid, &alphas, &cfg)?
            };
            writeln!(
                summary,
                "{:<40} {:>14} {:>14}",
                "prior", "sup|eps|", "max err_est"
            )
            .ok();
            for r in &reports {
                let max_err = r.rows.iter().map(|c| c.err_est).fold(0.0, f64::max);
                writeln!(
                    summary,
                    "{:<40} {:>14.6e} {:>14.6e}",
                    r.prior, r.sup_norm, max_err
                )
                .ok();
                write_report(r, out_dir, format, &mut files)?;
            }
        }
        Task::Upmp | Task::HpdUpmp => {
            let grid = config.theta_points(fam.param_dim)?;
            writeln!(summary, "{:<24} gradient", "theta").ok();
            let mut rows = Vec::new();
            for theta in &grid {
                let res = if config.task == Task::Upmp {
                    quantile_match::upmp_gradient(&fam, theta, &cfg)
                } else {
                    hpd_match::hpd_upmp_gradient(&fam, theta, &cfg)
                };
                match res {
                    Ok(g) => {
                        writeln!(summary, "{theta:<24?} {g:?}").ok();
                        rows.push((theta.clone(), Some(g), None::<String>));
                    }
                    Err(e @ Error::LinearlyDependentXi { .. }) => {
                        writeln!(summary, "{theta:<24?} {e}").ok();
                        rows.push((theta.clone(), None, Some(e.to_string())));
                    }
                    Err(e) => return Err(e),
                }
            }
            if config.task == Task::Upmp {
                let check = quantile_match::gradient_field_check(
                    |t| quantile_match::upmp_gradient(&fam, t, &cfg),
                    &grid,
                    &cfg,
                )?;
                writeln!(
                    summary,
                    "gradient field: {} (max curl {:.3e})",
                    check.is_gradient, check.max_curl
                )
                .ok();
            }
            fs::create_dir_all(out_dir)?;
            let path = out_dir.join(format!(
                "{}_{}.json",
                if config.task == Task::Upmp {
                    "upmp"
                } else {
                    "hpd_upmp"
                },
                sanitize(&fam.name)
            ));
            #[derive(Serialize)]
            struct GradRow {
                theta: Vec<f64>,
                gradient: Option<Vec<f64>>,
                error: Option<String>,
            }
            #[derive(Serialize)]
            struct GradReport {
                family: String,
                rows: Vec<GradRow>,
                config_hash: String,
                version: String,
            }
            let payload = GradReport {
                family: fam.name.clone(),
                rows: rows
                    .into_iter()
                    .map(|(theta, gradient, error)| GradRow {
                        theta,
                        gradient,
                        error,
                    })
                    .collect(),
                config_hash: report::config_hash(&cfg),
                version: crate::VERSION.into(),
            };
            fs::write(&path, serde_json::to_string_pretty(&payload).unwrap())?;
            files.push(path);
        }
        Task::Fields => {
            let grid = config.theta_points(fam.param_dim)?;
            writeln!(summary, "{:<24} correction", "theta").ok();
            for theta in &grid {
                let h = quantile_match::jeffreys_correction(&fam, theta, &cfg)?;
                writeln!(summary, "{theta:<24?} {h:?}").ok();
            }
            let check = quantile_match::gradient_field_check(
                |t| quantile_match::jeffreys_correction(&fam, t, &cfg),
                &grid,
                &cfg,
            )?;
            writeln!(
                summary,
                "correction is a gradient field: {} (max curl {:.3e})",
                check.is_gradient, check.max_curl
            )
            .ok();
        }
        Task::Diagnose => {
            let grid = config.theta_points(fam.param_dim)?;
            let diag = hpd_match::separability_diagnosis(&fam, &grid, &cfg)?;
            writeln!(
                summary,
                "form: {} (evidence {:.3e})",
                diag.form, diag.evidence
            )
            .ok();
            writeln!(summary, "active components: {:?}", diag.active).ok();
            for theta in &grid {
                let gram = hpd_match::profile_gram(&fam, theta, &cfg)?;
                writeln!(
                    summary,
                    "theta {theta:?}: independence ratio {:.3e} ({})",
                    gram.independence_ratio,
                    if gram.is_dependent(&cfg) {
                        "dependent"
                    } else {
                        "independent"
                    }
                )
                .ok();
            }
        }
        Task::Coverage => {
            let cov = config.coverage.as_ref().expect("validated");
            let priors = config.resolve_priors(&fam, &cfg)?;
            let seed = seed_override.or(config.seed).unwrap_or(0);
            let mut reports = Vec::new();
            writeln!(
                summary,
                "{:<32} {:>6} {:>12} {:>10} {:>12} {:>8}",
                "prior", "alpha", "coverage", "se", "defect", "z"
            )
            .ok();
            for prior in &priors {
                for &alpha in &alphas {
                    let rep = if cov.kind == "hpd" {
                        coverage::coverage_mc_hpd(
                            &fam,
                            prior,
                            &cov.theta0,
                            cov.n,
                            alpha,
                            cov.replicates,
                            seed,
                            &cfg,
                        )?
                    } else {
                        coverage::coverage_mc(
                            &fam,
                            prior,
                            &cov.theta0,
                            cov.n,
                            alpha,
                            cov.replicates,
                            seed,
                            &cfg,
                        )?
                    };
                    writeln!(
                        summary,
                        "{:<32} {:>6.3} {:>12.6} {:>10.2e} {:>12.5} {:>8.2}",
                        rep.prior, rep.alpha, rep.coverage_hat, rep.se, rep.defect_hat, rep.z_score
                    )
                    .ok();
                    if rep.z_score.abs() > 3.0 {
                        ok = false;
                    }
                    reports.push(rep);
                }
            }
            fs::create_dir_all(out_dir)?;
            if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
                let path = out_dir.join(format!("coverage_{}.csv", sanitize(&fam.name)));
                fs::write(&path, report::coverage_csv(&reports))?;
                files.push(path);
            }
            if matches!(format, OutputFormat::Json | OutputFormat::Both) {
                let path = out_dir.join(format!("coverage_{}.json", sanitize(&fam.name)));
                fs::write(&path, serde_json::to_string_pretty(&reports).unwrap())?;
                files.push(path);
            }
        }
        Task::Verify => {
            let grid = config.theta_points(fam.param_dim)?;
            for theta in &grid {
                let rep = validate_family(&fam, theta, &cfg)?;
                writeln!(summary, "theta {theta:?}:").ok();
                for c in &rep.checks {
                    writeln!(
                        summary,
                        "  {:<24} {:>12.3e} <= {:>9.1e}  {}",
                        c.name,
                        c.measured,
                        c.threshold,
                        if c.pass { "pass" } else { "FAIL" }
                    )
                    .ok();
                    if !c.pass {
                        ok = false;
                    }
                }
            }
        }
    }

    Ok(RunOutput { summary, files, ok })
}

pub fn list_families() -> String {
    let mut out = String::new();
    for name in builtin_family_names() {
        let fam = builtin_family(name).expect("catalog names resolve");
        writeln!(
            out,
            "{:<28} p = {}, obs dim = {}",
            name, fam.param_dim, fam.obs_dim
        )
        .ok();
    }
    out
}

pub fn describe(name: &str) -> Result<String> {
    let fam = builtin_family(name)?;
    let mut out = String::new();
    writeln!(out, "{}", fam.name).ok();
    writeln!(out, "  parameter dimension: {}", fam.param_dim).ok();
    writeln!(out, "  observation dimension: {}", fam.obs_dim).ok();
    writeln!(out, "  parameter domain: {}", fam.param_domain.description).ok();
    writeln!(
        out,
        "  named priors: {}",
        fam.named_priors
            .keys()
            .cloned()
            .collect::<Vec<_>>()
            .join(", ")
    )
    .ok();
    let mut oracle_list = Vec::new();
    if fam.oracles.fisher.is_some() {
        oracle_list.push("information");
    }
    if fam.oracles.quantile.is_some() {
        oracle_list.push("quantile");
    }
    if fam.oracles.hpd_threshold.is_some() {
        oracle_list.push("hpd-threshold");
    }
    if fam.oracles.region_gradient.is_some() {
        oracle_list.push("region-gradient");
    }
    writeln!(out, "  closed-form oracles: {}", oracle_list.join(", ")).ok();
    Ok(out)
}

// ---------------------------------------------------------------------------
// verification suite
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub description: String,
    pub detail: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyManifest {
    pub seed: u64,
    pub mc_scale: f64,
    pub tolerance_scale: f64,
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
    pub config_hash: String,
    pub version: String,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Scales the replicate counts of the Monte Carlo criteria.
    pub mc_scale: f64,
    /// Scales every tolerance; values below one tighten the suite (used as
    /// a negative control in the tests).
    pub tolerance_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 20_260_809,
            mc_scale: 1.0,
            tolerance_scale: 1.0,
        }
    }
}

struct Verifier {
    cfg: NumericsConfig,
    opts: VerifyOptions,
    criteria: Vec<CriterionResult>,
}

impl Verifier {
    fn record(&mut self, id: usize, description: &str, outcome: Result<(bool, String)>) {
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        self.criteria.push(CriterionResult {
            id,
            description: description.into(),
            detail,
            pass,
        });
    }

    fn tol(&self, t: f64) -> f64 {
        t * self.opts.tolerance_scale
    }

    fn replicates(&self, r: usize) -> usize {
        ((r as f64 * self.opts.mc_scale).round() as usize).max(100)
    }
}

fn bvn_theta_set() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 1.0, 0.0],
        vec![1.0, 2.0, 0.3],
        vec![0.5, 1.5, -0.4],
    ]
}

fn nine_levels() -> Vec<f64> {
    (1..=9).map(|i| i as f64 * 0.1).collect()
}

/// Run the full verification suite and return the manifest.
pub fn verify_all(opts: &VerifyOptions) -> VerifyManifest {
    let cfg = NumericsConfig::default();
    let mut v = Verifier {
        cfg: cfg.clone(),
        opts: opts.clone(),
        criteria: Vec::new(),
    };

    criterion_1(&mut v);
    criterion_2(&mut v);
    criterion_3(&mut v);
    criterion_4(&mut v);
    criterion_5(&mut v);
    criterion_6(&mut v);
    criterion_7(&mut v);
    criterion_8(&mut v);
    criterion_9(&mut v);
    criterion_10(&mut v);
    criterion_11(&mut v);

    let all_pass = v.criteria.iter().all(|c| c.pass);
    VerifyManifest {
        seed: opts.seed,
        mc_scale: opts.mc_scale,
        tolerance_scale: opts.tolerance_scale,
        criteria: v.criteria,
        all_pass,
        config_hash: report::config_hash(&cfg),
        version: crate::VERSION.into(),
    }
}

/// Print one line per criterion and the final verdict.
pub fn render_manifest(manifest: &VerifyManifest) -> String {
    let mut out = String::new();
    for c in &manifest.criteria {
        writeln!(
            out,
            "criterion {:>2}: {}  [{}]  {}",
            c.id,
            if c.pass { "PASS" } else { "FAIL" },
            c.description,
            c.detail
        )
        .ok();
    }
    writeln!(
        out,
        "verification {}",
        if manifest.all_pass {
            "PASSED"
        } else {
            "FAILED"
        }
    )
    .ok();
    out
}

fn criterion_1(v: &mut Verifier) {
    let outcome = (|| {
        let fam = builtin_family("bvn-cholesky")?;
        let cfg = &v.cfg;
        let mut worst_g: f64 = 0.0;
        let mut worst_m: f64 = 0.0;
        let mut worst_xi3: f64 = 0.0;
        let mut worst_ratio: f64 = 0.0;
        for theta in bvn_theta_set() {
            let info = fisher::fisher_info(&fam, &theta, cfg)?;
            let oracle = (fam.oracles.fisher.as_ref().unwrap())(&theta);
            for s in 0..3 {
                for t in 0..3 {
                    let o = oracle.get(s, t);
                    let d = (info.g.get(s, t) - o).abs();
                    let rel = if o.abs() > 0.0 {
                        d / o.abs()
                    } else {
                        d / oracle.get(s, s).max(oracle.get(t, t))
                    };
                    worst_g = worst_g.max(rel);
                }
            }
            for &alpha in &nine_levels() {
                let slice = hpd_match::hpd_slice(&fam, &theta, alpha, cfg)?;
                let m_oracle = theta[0] * theta[1] * (1.0 - alpha) / (2.0 * std::f64::consts::PI);
                worst_m = worst_m.max((slice.m - m_oracle).abs() / m_oracle);
                let r = -(1.0 - alpha) * (1.0_f64 - alpha).ln();
                worst_xi3 = worst_xi3.max(slice.xi[2].abs());
                worst_ratio = worst_ratio.max((slice.xi[0] * theta[0] / r - 1.0).abs());
                worst_ratio = worst_ratio.max((slice.xi[1] * theta[1] / r - 1.0).abs());
            }
        }
        let pass = worst_g <= v.tol(1e-4)
            && worst_m <= v.tol(1e-4)
            && worst_xi3 <= v.tol(1e-6)
            && worst_ratio <= v.tol(1e-4);
        Ok((
            pass,
            format!(
                "info rel {worst_g:.2e}, threshold rel {worst_m:.2e}, |xi3| {worst_xi3:.2e}, \
                 sensitivity ratio defect {worst_ratio:.2e}"
            ),
        ))
    })();
    v.record(
        1,
        "Cholesky bivariate normal closed-form oracle reproduction",
        outcome,
    );
}

fn criterion_2(v: &mut Verifier) {
    let outcome = (|| {
        let fam = builtin_family("bvn-cholesky")?;
        let cfg = &v.cfg;
        let members = [
            bvn_upmp_member(0.0, 0.0),
            bvn_upmp_member(1.0, 0.0),
            bvn_upmp_member(0.0, 0.5),
            bvn_upmp_member(1.0, 0.5),
        ];
        let negative = PriorField::new(
            "inverse-cube",
            |t: &[f64]| -3.0 * t[0].ln(),
            |t: &[f64]| vec![-3.0 / t[0], 0.0, 0.0],
        );
        let mut priors: Vec<PriorField> = members.to_vec();
        priors.push(negative);
        let reports =
            report::hpd_residual_sweep(&fam, &priors, &bvn_theta_set(), &nine_levels(), cfg)?;
        let member_sup = reports[..4]
            .iter()
            .map(|r| r.sup_norm)
            .fold(0.0_f64, f64::max);
        let negative_sup = reports[4].sup_norm;
        let pass =
            member_sup <= v.tol(1e-4) && negative_sup >= 1e-2 / v.opts.tolerance_scale.max(1.0);
        Ok((
            pass,
            format!("family sup {member_sup:.2e}, negative control sup {negative_sup:.2e}"),
        ))
    })();
    v.record(
        2,
        "uniformly matching family holds and negative control fails (region matching)",
        outcome,
    );
}

fn ls_theta_grid() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 1.0],
        vec![1.0, 0.5],
        vec![-0.5, 2.0],
        vec![2.0, 3.0],
    ]
}

fn criterion_3(v: &mut Verifier) {
    let outcome = (|| {
        let cfg = &v.cfg;
        let alphas = NumericsConfig::default_alpha_sweep();
        let mut detail = String::new();
        let mut pass = true;
        for name in [
            "location-scale-normal",
            "location-scale-t(5)",
            "location-scale-logistic",
        ] {
            let fam = builtin_family(name)?;
            let priors = vec![fam.named_prior("right-haar")?, fam.named_prior("jeffreys")?];
            let reports =
                report::quantile_residual_sweep(&fam, &priors, &ls_theta_grid(), &alphas, cfg)?;
            let rh = reports[0].sup_norm;
            let j = reports[1].sup_norm;
            pass &= rh <= v.tol(1e-5) && j >= 1e-2 / v.opts.tolerance_scale.max(1.0);
            write!(detail, "{name}: haar {rh:.2e} jeffreys {j:.2e}; ").ok();
        }
        Ok((pass, detail))
    })();
    v.record(
        3,
        "right Haar is uniformly quantile matching on location-scale models, Jeffreys is not",
        outcome,
    );
}

fn criterion_4(v: &mut Verifier) {
    let outcome = (|| {
        let cfg = &v.cfg;
        let fam = builtin_family("location-scale-normal")?;
        let grid = ls_theta_grid();
        let mut worst_grad: f64 = 0.0;
        for theta in &grid {
            let g = quantile_match::upmp_gradient(&fam, theta, cfg)?;
            worst_grad = worst_grad
                .max(g[0].abs())
                .max((g[1] + 1.0 / theta[1]).abs());
        }
        let check = quantile_match::gradient_field_check(
            |t| quantile_match::upmp_gradient(&fam, t, cfg),
            &grid,
            cfg,
        )?;
        let (value_ab, gap) = quantile_match::reconstruct_log_prior_with_gap(
            |t| quantile_match::upmp_gradient(&fam, t, cfg),
            &[0.0, 1.0],
            &[1.0, 2.0],
            cfg,
        )?;

        // residual of the reconstructed prior along the sweep
        let theta_ref = vec![0.0, 1.0];
        let fam2 = fam.clone();
        let cfg2 = cfg.clone();
        let reconstructed = PriorField::new(
            "reconstructed-upmp",
            {
                let fam = fam2.clone();
                let cfg = cfg2.clone();
                let theta_ref = theta_ref.clone();
                move |t: &[f64]| {
                    quantile_match::reconstruct_log_prior(
                        |x| quantile_match::upmp_gradient(&fam, x, &cfg),
                        &theta_ref,
                        t,
                        &cfg,
                    )
                    .unwrap_or(f64::NAN)
                }
            },
            {
                let fam = fam2;
                let cfg = cfg2;
                move |t: &[f64]| quantile_match::upmp_gradient(&fam, t, &cfg).unwrap_or_default()
            },
        );
        let reports = report::quantile_residual_sweep(
            &fam,
            std::slice::from_ref(&reconstructed),
            &grid,
            &NumericsConfig::default_alpha_sweep(),
            cfg,
        )?;
        let resid = reports[0].sup_norm;
        let pass = worst_grad <= v.tol(1e-4)
            && check.is_gradient
            && gap <= v.tol(1e-6)
            && resid <= v.tol(1e-4);
        Ok((
            pass,
            format!(
                "gradient defect {worst_grad:.2e}, curl {:.2e}, path gap {gap:.2e} \
                 (value {value_ab:.6}), reconstructed residual {resid:.2e}",
                check.max_curl
            ),
        ))
    })();
    v.record(
        4,
        "matching-gradient pipeline: gradient, field check, reconstruction, residual",
        outcome,
    );
}

fn criterion_5(v: &mut Verifier) {
    let outcome = (|| {
        let cfg = &v.cfg;
        let mut worst_h: f64 = 0.0;
        let mut worst_diff: f64 = 0.0;
        for (name, thetas) in [
            ("normal-location", vec![vec![-1.0], vec![0.0], vec![2.0]]),
            ("normal-mean-eq-var", vec![vec![0.5], vec![1.0], vec![2.0]]),
        ] {
            let fam = builtin_family(name)?;
            for theta in thetas {
                let h = quantile_match::jeffreys_correction(&fam, &theta, cfg)?;
                worst_h = worst_h.max(h[0].abs());
                let up = quantile_match::upmp_gradient(&fam, &theta, cfg)?;
                let j = fisher::jeffreys_gradient(&fam, &theta, cfg)?;
                worst_diff = worst_diff.max((up[0] - j[0]).abs());
            }
        }
        let pass = worst_h <= v.tol(1e-8) && worst_diff <= v.tol(1e-6);
        Ok((
            pass,
            format!("correction norm {worst_h:.2e}, gradient difference {worst_diff:.2e}"),
        ))
    })();
    v.record(
        5,
        "one-parameter degeneracy: zero correction, matching gradient equals Jeffreys",
        outcome,
    );
}

fn criterion_6(v: &mut Verifier) {
    let outcome = (|| {
        let cfg = &v.cfg;
        let grids: Vec<(&str, Vec<Vec<f64>>)> = vec![
            (
                "normal-location",
                vec![-2.0, -0.5, 0.0, 1.0, 3.0]
                    .into_iter()
                    .map(|t| vec![t])
                    .collect(),
            ),
            (
                "normal-mean-eq-var",
                vec![0.3, 0.7, 1.0, 1.8, 3.0]
                    .into_iter()
                    .map(|t| vec![t])
                    .collect(),
            ),
            ("location-scale-normal", ls_five_grid()),
            ("location-scale-t(1)", ls_five_grid()),
            ("location-scale-t(2)", ls_five_grid()),
            ("location-scale-t(5)", ls_five_grid()),
            ("location-scale-logistic", ls_five_grid()),
        ];
        let mut worst: f64 = 0.0;
        let mut worst_name = String::new();
        for (name, grid) in grids {
            let fam = builtin_family(name)?;
            for theta in grid {
                let a = fisher::fisher_info(&fam, &theta, cfg)?;
                let b = fisher::fisher_via_alpha(&fam, &theta, cfg)?;
                for s in 0..fam.param_dim {
                    for t in 0..fam.param_dim {
                        let denom = a.g.get(s, s).max(a.g.get(t, t));
                        let rel = (a.g.get(s, t) - b.g.get(s, t)).abs() / denom;
                        if rel > worst {
                            worst = rel;
                            worst_name = format!("{name} at {theta:?} ({s},{t})");
                        }
                    }
                }
            }
        }
        let pass = worst <= v.tol(1e-3);
        Ok((pass, format!("worst rel {worst:.2e} at {worst_name}")))
    })();
    v.record(
        6,
        "information identity: direct quadrature vs level-integral route",
        outcome,
    );
}

fn ls_five_grid() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.5],
        vec![1.0, 0.8],
        vec![-1.0, 1.0],
        vec![0.5, 1.5],
        vec![2.0, 2.5],
    ]
}

fn criterion_7(v: &mut Verifier) {
    let outcome = (|| {
        let cfg = &v.cfg;
        let bvn = builtin_family("bvn-cholesky")?;
        let mut worst_dep: f64 = 0.0;
        for theta in bvn_theta_set() {
            worst_dep =
                worst_dep.max(hpd_match::profile_gram(&bvn, &theta, cfg)?.independence_ratio);
        }
        let mv = builtin_family("mvlocation-spherical-2d")?;
        for theta in [vec![0.0, 0.0], vec![1.0, -2.0], vec![0.5, 0.3]] {
            worst_dep =
                worst_dep.max(hpd_match::profile_gram(&mv, &theta, cfg)?.independence_ratio);
        }
        let ls = builtin_family("location-scale-normal")?;
        let mut worst_indep: f64 = f64::INFINITY;
        let mut worst_grad: f64 = 0.0;
        for theta in [vec![0.0, 1.0], vec![1.0, 0.5], vec![-0.5, 2.0]] {
            worst_indep =
                worst_indep.min(hpd_match::profile_gram(&ls, &theta, cfg)?.independence_ratio);
            let g = hpd_match::hpd_upmp_gradient(&ls, &theta, cfg)?;
            worst_grad = worst_grad
                .max(g[0].abs())
                .max((g[1] + 1.0 / theta[1]).abs() * theta[1]);
        }
        let bvn_err = hpd_match::hpd_upmp_gradient(&bvn, &[1.0, 1.0, 0.0], cfg);
        let errors_on_dependent = matches!(bvn_err, Err(Error::LinearlyDependentXi { .. }));
        let pass = worst_dep <= v.tol(1e-6)
            && worst_indep >= 1e-3 / v.opts.tolerance_scale.max(1.0)
            && worst_grad <= v.tol(1e-3)
            && errors_on_dependent;
        Ok((
            pass,
            format!(
                "dependent ratios <= {worst_dep:.2e}, independent ratio >= {worst_indep:.2e}, \
                 gradient defect {worst_grad:.2e}, dependent error raised: {errors_on_dependent}"
            ),
        ))
    })();
    v.record(
        7,
        "sensitivity-Gram dichotomy and region-matching gradient",
        outcome,
    );
}

fn criterion_8(v: &mut Verifier) {
    let outcome = (|| {
        let cfg = &v.cfg;
        let fam = builtin_family("mvlocation-spherical-2d")?;
        let priors = vec![
            linear_tilt_prior(&[0.0, 0.0]),
            linear_tilt_prior(&[1.0, -1.0]),
            linear_tilt_prior(&[-2.0, 2.0]),
        ];
        let grid = vec![vec![0.0, 0.0], vec![1.0, -1.0], vec![2.0, 0.5]];
        let reports = report::hpd_residual_sweep(&fam, &priors, &grid, &nine_levels(), cfg)?;
        let sup = reports.iter().map(|r| r.sup_norm).fold(0.0_f64, f64::max);
        let pass = sup <= v.tol(1e-4);
        Ok((pass, format!("sup residual {sup:.2e} across tilts")))
    })();
    v.record(
        8,
        "zero-sum exponential tilts are region matching on the spherical location model",
        outcome,
    );
}

fn criterion_9(v: &mut Verifier) {
    let outcome = (|| {
        let cfg = &v.cfg;
        let fam = builtin_family("location-scale-normal")?;
        let theta0 = [0.0, 1.0];
        let n = 10;
        let replicates = v.replicates(2000);
        let jeffreys = fam.named_prior("jeffreys")?;
        let rh = fam.named_prior("right-haar")?;
        let mut detail = String::new();
        let mut pass = true;
        for &alpha in &[0.1, 0.5, 0.9] {
            let rep = coverage::coverage_mc(
                &fam,
                &jeffreys,
                &theta0,
                n,
                alpha,
                replicates,
                v.opts.seed,
                cfg,
            )?;
            let gap = (rep.defect_hat - rep.predicted_defect).abs();
            let band = 3.0 * rep.se_defect / v.opts.tolerance_scale;
            pass &= gap <= band;
            write!(
                detail,
                "jeffreys a={alpha}: defect {:.4} vs {:.4} (3se {:.4}); ",
                rep.defect_hat, rep.predicted_defect, band
            )
            .ok();
        }
        for &alpha in &[0.1, 0.5, 0.9] {
            let rep =
                coverage::coverage_mc(&fam, &rh, &theta0, n, alpha, replicates, v.opts.seed, cfg)?;
            let gap = (rep.coverage_hat - alpha).abs();
            let band = 3.0 * rep.se / v.opts.tolerance_scale;
            pass &= gap <= band;
            write!(
                detail,
                "haar a={alpha}: coverage {:.5} (3se {:.5}); ",
                rep.coverage_hat, band
            )
            .ok();
        }
        Ok((pass, detail))
    })();
    v.record(
        9,
        "Monte Carlo expansion check for quantile coverage",
        outcome,
    );
}

fn criterion_10(v: &mut Verifier) {
    let outcome = (|| {
        let cfg = &v.cfg;
        let fam = builtin_family("bvn-cholesky")?;
        let jeffreys = fam.named_prior("jeffreys")?;
        let alpha = 0.5;
        let rep = coverage::coverage_mc_hpd(
            &fam,
            &jeffreys,
            &[1.0, 1.0, 0.0],
            20,
            alpha,
            v.replicates(1000),
            v.opts.seed,
            cfg,
        )?;
        let gap = (rep.coverage_hat - alpha).abs();
        let band = 3.0 * rep.se / v.opts.tolerance_scale;
        let pass = gap <= band;
        Ok((
            pass,
            format!(
                "coverage {:.5} vs {alpha} (3se {band:.5}, retries {})",
                rep.coverage_hat, rep.grid_retries
            ),
        ))
    })();
    v.record(
        10,
        "Monte Carlo region coverage under the matching prior",
        outcome,
    );
}

fn criterion_11(v: &mut Verifier) {
    let outcome = (|| {
        let a = determinism_probe(v.opts.seed, &v.cfg)?;
        let b = determinism_probe(v.opts.seed, &v.cfg)?;
        let pass = a == b;
        Ok((
            pass,
            format!("probe bytes {} == {}: {pass}", a.len(), b.len()),
        ))
    })();
    v.record(11, "identical seeds give byte-identical manifests", outcome);
}

/// End-to-end determinism probe: a seeded replicated coverage run plus a
/// residual report, serialized to bytes.
fn determinism_probe(seed: u64, cfg: &NumericsConfig) -> Result<String> {
    let fam = builtin_family("location-scale-normal")?;
    let jeffreys = fam.named_prior("jeffreys")?;
    let cov = coverage::coverage_mc(&fam, &jeffreys, &[0.0, 1.0], 10, 0.1, 200, seed, cfg)?;
    let sweep =
        report::quantile_residual_sweep(&fam, &[jeffreys], &[vec![0.0, 1.0]], &[0.1, 0.5], cfg)?;
    let mut out = serde_json::to_string(&cov).expect("serializes");
    out.push_str(&sweep[0].to_csv());
    Ok(out)
}

/// Convenience wrapper used by the binary: run, write the manifest, print.
pub fn verify_to_dir(opts: &VerifyOptions, out_dir: &Path) -> Result<(VerifyManifest, PathBuf)> {
    let manifest = verify_all(opts);
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("verify_manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap())?;
    Ok((manifest, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_and_describe() {
        let listing = list_families();
        assert!(listing.contains("bvn-cholesky"));
        assert!(listing.contains("location-scale-t(5)"));
        let d = describe("location-scale-normal").unwrap();
        assert!(d.contains("right-haar"));
        assert!(describe("nope").is_err());
    }

    #[test]
    fn run_residual_config_end_to_end() {
        let dir = std::env::temp_dir().join("predmatch_cli_test");
        let _ = fs::remove_dir_all(&dir);
        let toml = r#"
task = "residual"
family = "location-scale-normal"
priors = ["right-haar", "jeffreys"]
alphas = [0.1, 0.5, 0.9]

[[theta_grid]]
min = 0.0
max = 0.0
count = 1

[[theta_grid]]
min = 1.0
max = 1.0
count = 1
"#;
        let config = ExperimentConfig::from_toml(toml).unwrap();
        let out = run_config(&config, &dir, OutputFormat::Both, None).unwrap();
        assert!(out.ok);
        assert_eq!(out.files.len(), 4);
        assert!(out.summary.contains("right-haar"));
        let csv = fs::read_to_string(&out.files[0]).unwrap();
        assert!(csv.contains("config_hash"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn float_format_helper() {
        assert_eq!(report::fmt_float(1.0), "1.0000000000000000e0");
    }
}
