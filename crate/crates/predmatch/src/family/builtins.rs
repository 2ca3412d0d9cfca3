//! The built-in model catalog.
//!
//! Location and location-scale families are generated from a shared base
//! density; the mean-equals-variance normal, the zero-mean bivariate normal
//! in Cholesky parameterization, and the spherical bivariate location model
//! are bespoke. Every built-in carries closed-form oracles (information
//! matrix, quantiles, density thresholds, region-mass gradients) used as
//! ground truth by the test suites.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::Distribution;
use statrs::function::erf::erfc;

use super::base::{BaseKind, RngWrap};
use super::{ObsWindow, Oracles, ParamDomain, ParametricFamily, PriorField};
use crate::error::{Error, Result};
use crate::numerics::Mat;

pub(crate) fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn norm_quantile(p: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::new(0.0, 1.0)
        .unwrap()
        .inverse_cdf(p)
}

/// Names accepted by [`builtin_family`].
pub fn builtin_family_names() -> Vec<&'static str> {
    vec![
        "normal-location",
        "location-scale-normal",
        "location-scale-t(1)",
        "location-scale-t(2)",
        "location-scale-t(5)",
        "location-scale-logistic",
        "normal-mean-eq-var",
        "bvn-cholesky",
        "mvlocation-spherical-2d",
    ]
}

/// Look up a built-in family by name.
pub fn builtin_family(name: &str) -> Result<ParametricFamily> {
    match name {
        "normal-location" => Ok(location_family(BaseKind::Normal)),
        "location-scale-normal" => Ok(location_scale_family(BaseKind::Normal)),
        "location-scale-t(1)" => Ok(location_scale_family(BaseKind::StudentT(1))),
        "location-scale-t(2)" => Ok(location_scale_family(BaseKind::StudentT(2))),
        "location-scale-t(5)" => Ok(location_scale_family(BaseKind::StudentT(5))),
        "location-scale-logistic" => Ok(location_scale_family(BaseKind::Logistic)),
        "normal-mean-eq-var" => Ok(normal_mean_eq_var()),
        "bvn-cholesky" => Ok(bvn_cholesky()),
        "mvlocation-spherical-2d" => Ok(mvlocation_spherical_2d()),
        other => Err(Error::UnknownFamily(other.into())),
    }
}

/// Prior with log density a * theta (an exponential tilt); used for the
/// translation-invariant families where such tilts stay uniformly matching.
pub fn linear_tilt_prior(coeffs: &[f64]) -> PriorField {
    let a = coeffs.to_vec();
    let g = a.clone();
    let name = format!(
        "exp-tilt({})",
        a.iter()
            .map(|c| format!("{c}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    PriorField::new(
        name,
        move |t: &[f64]| t.iter().zip(&a).map(|(x, c)| x * c).sum(),
        move |_t: &[f64]| g.clone(),
    )
}

/// Pure location model x = theta + z with the given standardized base.
pub fn location_family(base: BaseKind) -> ParametricFamily {
    let name = match base {
        BaseKind::Normal => "normal-location".to_string(),
        _ => format!("location-{}", base.name()),
    };
    let loc_info = base.ls_information().unwrap().0;

    let mut named_priors = BTreeMap::new();
    named_priors.insert("uniform".into(), PriorField::uniform(1));
    // constant information: the square-root-determinant prior is flat
    named_priors.insert(
        "jeffreys".into(),
        PriorField::new("jeffreys", |_| 0.0, |_| vec![0.0]),
    );

    let scale = base.iqr() / BaseKind::Normal.iqr();

    ParametricFamily {
        name,
        param_dim: 1,
        obs_dim: 1,
        log_density: Arc::new(move |x: &[f64], t: &[f64]| base.log_density(x[0] - t[0])),
        score: Arc::new(move |x: &[f64], t: &[f64]| vec![base.psi(x[0] - t[0])]),
        score_x_derivative: Some(Arc::new(move |x: &[f64], t: &[f64]| {
            vec![base.psi_prime(x[0] - t[0])]
        })),
        cdf: Some(Arc::new(move |x: f64, t: &[f64]| base.cdf(x - t[0]))),
        cdf_theta_gradient: Some(Arc::new(move |x: f64, t: &[f64]| {
            vec![-base.log_density(x - t[0]).exp()]
        })),
        sampler: Arc::new(move |t: &[f64], rng: &mut dyn RngCore| vec![t[0] + base.sample(rng)]),
        support: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        param_domain: ParamDomain::unbounded(1),
        named_priors,
        oracles: Oracles {
            fisher: Some(Arc::new(move |_t: &[f64]| Mat::diag(&[loc_info]))),
            quantile: Some(Arc::new(move |t: &[f64], alpha: f64| {
                t[0] + base.quantile(1.0 - alpha)
            })),
            hpd_threshold: Some(Arc::new(move |_t: &[f64], alpha: f64| {
                base.log_density(base.quantile(0.5 * (1.0 + alpha))).exp()
            })),
            region_gradient: Some(Arc::new(move |_t: &[f64], _alpha: f64| vec![0.0])),
        },
        window: Arc::new(move |t: &[f64], tail: f64| {
            vec![ObsWindow {
                lo: t[0] + base.quantile(tail),
                hi: t[0] + base.quantile(1.0 - tail),
                center: t[0],
                scale,
            }]
        }),
        mode_hint: Some(Arc::new(|t: &[f64]| vec![t[0]])),
        crude_estimate: Some(Arc::new(|data: &[Vec<f64>]| {
            let n = data.len().max(1) as f64;
            vec![data.iter().map(|x| x[0]).sum::<f64>() / n]
        })),
        positive_params: vec![false],
    }
}

/// Location-scale model f(x; t) = t2^-1 f*((x - t1)/t2).
pub fn location_scale_family(base: BaseKind) -> ParametricFamily {
    let name = format!("location-scale-{}", base.name());
    let (i_loc, i_scale, i_cross) = base.ls_information().unwrap();
    let pseudo_sd = base.iqr() / BaseKind::Normal.iqr();
    let base_trimmed_sd = base.trimmed_sd();

    let mut named_priors = BTreeMap::new();
    named_priors.insert(
        "right-haar".into(),
        PriorField::new(
            "right-haar",
            |t: &[f64]| -t[1].ln(),
            |t: &[f64]| vec![0.0, -1.0 / t[1]],
        ),
    );
    named_priors.insert(
        "jeffreys".into(),
        PriorField::new(
            "jeffreys",
            |t: &[f64]| -2.0 * t[1].ln(),
            |t: &[f64]| vec![0.0, -2.0 / t[1]],
        ),
    );
    named_priors.insert("uniform".into(), PriorField::uniform(2));

    let domain = ParamDomain {
        lower: vec![f64::NEG_INFINITY, 0.0],
        upper: vec![f64::INFINITY, f64::INFINITY],
        predicate: None,
        description: "scale component must be positive".into(),
    };

    ParametricFamily {
        name,
        param_dim: 2,
        obs_dim: 1,
        log_density: Arc::new(move |x: &[f64], t: &[f64]| {
            base.log_density((x[0] - t[0]) / t[1]) - t[1].ln()
        }),
        score: Arc::new(move |x: &[f64], t: &[f64]| {
            let z = (x[0] - t[0]) / t[1];
            let psi = base.psi(z);
            vec![psi / t[1], (z * psi - 1.0) / t[1]]
        }),
        score_x_derivative: Some(Arc::new(move |x: &[f64], t: &[f64]| {
            let z = (x[0] - t[0]) / t[1];
            let dp = base.psi_prime(z);
            let s2 = t[1] * t[1];
            vec![dp / s2, (base.psi(z) + z * dp) / s2]
        })),
        cdf: Some(Arc::new(move |x: f64, t: &[f64]| {
            base.cdf((x - t[0]) / t[1])
        })),
        cdf_theta_gradient: Some(Arc::new(move |x: f64, t: &[f64]| {
            let z = (x - t[0]) / t[1];
            let fz = base.log_density(z).exp();
            vec![-fz / t[1], -z * fz / t[1]]
        })),
        sampler: Arc::new(move |t: &[f64], rng: &mut dyn RngCore| {
            vec![t[0] + t[1] * base.sample(rng)]
        }),
        support: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        param_domain: domain,
        named_priors,
        oracles: Oracles {
            fisher: Some(Arc::new(move |t: &[f64]| {
                let s2 = t[1] * t[1];
                Mat::from_fn(2, |i, j| {
                    let v = match (i, j) {
                        (0, 0) => i_loc,
                        (1, 1) => i_scale,
                        _ => i_cross,
                    };
                    v / s2
                })
            })),
            quantile: Some(Arc::new(move |t: &[f64], alpha: f64| {
                t[0] + t[1] * base.quantile(1.0 - alpha)
            })),
            hpd_threshold: Some(Arc::new(move |t: &[f64], alpha: f64| {
                base.log_density(base.quantile(0.5 * (1.0 + alpha))).exp() / t[1]
            })),
            region_gradient: Some(Arc::new(move |t: &[f64], alpha: f64| {
                let z = base.quantile(0.5 * (1.0 + alpha));
                vec![0.0, -2.0 * z * base.log_density(z).exp() / t[1]]
            })),
        },
        window: Arc::new(move |t: &[f64], tail: f64| {
            vec![ObsWindow {
                lo: t[0] + t[1] * base.quantile(tail),
                hi: t[0] + t[1] * base.quantile(1.0 - tail),
                center: t[0],
                scale: t[1] * pseudo_sd,
            }]
        }),
        mode_hint: Some(Arc::new(|t: &[f64]| vec![t[0]])),
        crude_estimate: Some(Arc::new(move |data: &[Vec<f64>]| {
            // trimmed moments: drop the outer deciles so heavy-tailed draws
            // cannot blow up the estimate, then rescale by the base family's
            // trimmed standard deviation
            let mut xs: Vec<f64> = data.iter().map(|x| x[0]).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = xs.len();
            let lo = (0.1 * n as f64).round() as usize;
            let hi = ((0.9 * n as f64).round() as usize).max(lo + 1).min(n);
            let kept = &xs[lo..hi];
            let mean = kept.iter().sum::<f64>() / kept.len() as f64;
            let var = kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / kept.len() as f64;
            vec![mean, (var.sqrt() / base_trimmed_sd).max(1e-8)]
        })),
        positive_params: vec![false, true],
    }
}

/// Normal model with mean equal to variance, N(theta, theta), theta > 0.
fn normal_mean_eq_var() -> ParametricFamily {
    let mut named_priors = BTreeMap::new();
    named_priors.insert(
        "jeffreys".into(),
        PriorField::new(
            "jeffreys",
            |t: &[f64]| 0.5 * ((2.0 * t[0] + 1.0).ln() - 2.0 * t[0].ln()),
            |t: &[f64]| vec![1.0 / (2.0 * t[0] + 1.0) - 1.0 / t[0]],
        ),
    );
    named_priors.insert("uniform".into(), PriorField::uniform(1));

    let domain = ParamDomain {
        lower: vec![0.0],
        upper: vec![f64::INFINITY],
        predicate: None,
        description: "mean-variance parameter must be positive".into(),
    };

    ParametricFamily {
        name: "normal-mean-eq-var".into(),
        param_dim: 1,
        obs_dim: 1,
        log_density: Arc::new(|x: &[f64], t: &[f64]| {
            let th = t[0];
            -0.5 * (2.0 * std::f64::consts::PI * th).ln() - (x[0] - th).powi(2) / (2.0 * th)
        }),
        score: Arc::new(|x: &[f64], t: &[f64]| {
            let th = t[0];
            let d = x[0] - th;
            vec![-0.5 / th + d / th + d * d / (2.0 * th * th)]
        }),
        score_x_derivative: Some(Arc::new(|x: &[f64], t: &[f64]| {
            let th = t[0];
            vec![1.0 / th + (x[0] - th) / (th * th)]
        })),
        cdf: Some(Arc::new(|x: f64, t: &[f64]| {
            norm_cdf((x - t[0]) / t[0].sqrt())
        })),
        cdf_theta_gradient: Some(Arc::new(|x: f64, t: &[f64]| {
            let th = t[0];
            let z = (x - th) / th.sqrt();
            vec![norm_pdf(z) * (-1.0 / th.sqrt() - z / (2.0 * th))]
        })),
        sampler: Arc::new(|t: &[f64], rng: &mut dyn RngCore| {
            let z: f64 = rand_distr::StandardNormal.sample(&mut RngWrap(rng));
            vec![t[0] + t[0].sqrt() * z]
        }),
        support: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        param_domain: domain,
        named_priors,
        oracles: Oracles {
            fisher: Some(Arc::new(|t: &[f64]| {
                let th = t[0];
                Mat::diag(&[(2.0 * th + 1.0) / (2.0 * th * th)])
            })),
            quantile: Some(Arc::new(|t: &[f64], alpha: f64| {
                t[0] + t[0].sqrt() * norm_quantile(1.0 - alpha)
            })),
            hpd_threshold: Some(Arc::new(|t: &[f64], alpha: f64| {
                norm_pdf(norm_quantile(0.5 * (1.0 + alpha))) / t[0].sqrt()
            })),
            region_gradient: Some(Arc::new(|t: &[f64], alpha: f64| {
                let z = norm_quantile(0.5 * (1.0 + alpha));
                vec![-norm_pdf(z) * z / t[0]]
            })),
        },
        window: Arc::new(|t: &[f64], tail: f64| {
            let sd = t[0].sqrt();
            let c = -norm_quantile(tail);
            vec![ObsWindow {
                lo: t[0] - c * sd,
                hi: t[0] + c * sd,
                center: t[0],
                scale: sd,
            }]
        }),
        mode_hint: Some(Arc::new(|t: &[f64]| vec![t[0]])),
        crude_estimate: Some(Arc::new(|data: &[Vec<f64>]| {
            let n = data.len().max(1) as f64;
            let mean = data.iter().map(|x| x[0]).sum::<f64>() / n;
            vec![mean.max(0.05)]
        })),
        positive_params: vec![true],
    }
}

/// Log prior of the uniformly matching family of the Cholesky bivariate
/// normal, indexed by the exponents (a, b) of the two invariants built from
/// the implied standard deviations and correlation. (a, b) = (0, 0) is the
/// square-root-determinant prior; (1, 1/2) is the right Haar prior of the
/// triangular group.
pub fn bvn_upmp_member(a: f64, b: f64) -> PriorField {
    let name = format!("bvn-upmp(a={a},b={b})");
    PriorField::new(
        name,
        move |t: &[f64]| {
            let d = t[1] * t[1] * t[2] * t[2] + t[0] * t[0];
            (2.0 * b - 2.0) * t[0].ln() - a * t[1].ln() + (0.5 * a - b) * d.ln()
        },
        move |t: &[f64]| {
            let d = t[1] * t[1] * t[2] * t[2] + t[0] * t[0];
            let c = 0.5 * a - b;
            vec![
                (2.0 * b - 2.0) / t[0] + c * 2.0 * t[0] / d,
                -a / t[1] + c * 2.0 * t[1] * t[2] * t[2] / d,
                c * 2.0 * t[1] * t[1] * t[2] / d,
            ]
        },
    )
}

/// Zero-mean bivariate normal parameterized by the inverse left Cholesky
/// factor [[t1, 0], [t2 t3, t2]] of the covariance.
fn bvn_cholesky() -> ParametricFamily {
    let mut named_priors = BTreeMap::new();
    named_priors.insert(
        "jeffreys".into(),
        PriorField::new(
            "jeffreys",
            |t: &[f64]| -2.0 * t[0].ln(),
            |t: &[f64]| vec![-2.0 / t[0], 0.0, 0.0],
        ),
    );
    let mut rh = bvn_upmp_member(1.0, 0.5);
    rh.name = "right-haar".into();
    named_priors.insert("right-haar".into(), rh);
    named_priors.insert("uniform".into(), PriorField::uniform(3));

    let domain = ParamDomain {
        lower: vec![0.0, 0.0, f64::NEG_INFINITY],
        upper: vec![f64::INFINITY; 3],
        predicate: None,
        description: "diagonal Cholesky components must be positive".into(),
    };

    ParametricFamily {
        name: "bvn-cholesky".into(),
        param_dim: 3,
        obs_dim: 2,
        log_density: Arc::new(|x: &[f64], t: &[f64]| {
            let z1 = t[0] * x[0];
            let z2 = t[1] * (t[2] * x[0] + x[1]);
            t[0].ln() + t[1].ln() - (2.0 * std::f64::consts::PI).ln() - 0.5 * (z1 * z1 + z2 * z2)
        }),
        score: Arc::new(|x: &[f64], t: &[f64]| {
            let z1 = t[0] * x[0];
            let z2 = t[1] * (t[2] * x[0] + x[1]);
            vec![
                (1.0 - z1 * z1) / t[0],
                (1.0 - z2 * z2) / t[1],
                -z2 * t[1] * x[0],
            ]
        }),
        score_x_derivative: None,
        cdf: None,
        cdf_theta_gradient: None,
        sampler: Arc::new(|t: &[f64], rng: &mut dyn RngCore| {
            let mut w = RngWrap(rng);
            let z1: f64 = rand_distr::StandardNormal.sample(&mut w);
            let z2: f64 = rand_distr::StandardNormal.sample(&mut w);
            vec![z1 / t[0], -t[2] * z1 / t[0] + z2 / t[1]]
        }),
        support: vec![
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
        ],
        param_domain: domain,
        named_priors,
        oracles: Oracles {
            fisher: Some(Arc::new(|t: &[f64]| {
                Mat::diag(&[
                    2.0 / (t[0] * t[0]),
                    2.0 / (t[1] * t[1]),
                    t[1] * t[1] / (t[0] * t[0]),
                ])
            })),
            quantile: None,
            hpd_threshold: Some(Arc::new(|t: &[f64], alpha: f64| {
                t[0] * t[1] * (1.0 - alpha) / (2.0 * std::f64::consts::PI)
            })),
            region_gradient: Some(Arc::new(|t: &[f64], alpha: f64| {
                let r = -(1.0 - alpha) * (1.0 - alpha).ln();
                vec![r / t[0], r / t[1], 0.0]
            })),
        },
        window: Arc::new(|t: &[f64], tail: f64| {
            let c = -norm_quantile(tail);
            let sd1 = 1.0 / t[0];
            let sd2 = (t[2] * t[2] / (t[0] * t[0]) + 1.0 / (t[1] * t[1])).sqrt();
            vec![
                ObsWindow {
                    lo: -c * sd1,
                    hi: c * sd1,
                    center: 0.0,
                    scale: sd1,
                },
                ObsWindow {
                    lo: -c * sd2,
                    hi: c * sd2,
                    center: 0.0,
                    scale: sd2,
                },
            ]
        }),
        mode_hint: Some(Arc::new(|_t: &[f64]| vec![0.0, 0.0])),
        crude_estimate: Some(Arc::new(|data: &[Vec<f64>]| {
            let n = data.len().max(1) as f64;
            let mut s11 = 0.0;
            let mut s12 = 0.0;
            let mut s22 = 0.0;
            for x in data {
                s11 += x[0] * x[0];
                s12 += x[0] * x[1];
                s22 += x[1] * x[1];
            }
            s11 /= n;
            s12 /= n;
            s22 /= n;
            // regularize toward the identity when nearly degenerate
            let ridge = 1e-6 * (s11 + s22).max(1e-6);
            s11 += ridge;
            s22 += ridge;
            // lower Cholesky of the sample covariance, then invert
            let l11 = s11.sqrt();
            let l21 = s12 / l11;
            let l22 = (s22 - l21 * l21).max(1e-10).sqrt();
            vec![1.0 / l11, 1.0 / l22, -l21 / l11]
        })),
        positive_params: vec![true, true, false],
    }
}

/// Bivariate location model with a spherically symmetric standard normal
/// base: f(x; t) = phi(x1 - t1) phi(x2 - t2).
fn mvlocation_spherical_2d() -> ParametricFamily {
    let mut named_priors = BTreeMap::new();
    named_priors.insert("uniform".into(), PriorField::uniform(2));
    named_priors.insert(
        "jeffreys".into(),
        PriorField::new("jeffreys", |_| 0.0, |_| vec![0.0, 0.0]),
    );

    ParametricFamily {
        name: "mvlocation-spherical-2d".into(),
        param_dim: 2,
        obs_dim: 2,
        log_density: Arc::new(|x: &[f64], t: &[f64]| {
            let d1 = x[0] - t[0];
            let d2 = x[1] - t[1];
            -(2.0 * std::f64::consts::PI).ln() - 0.5 * (d1 * d1 + d2 * d2)
        }),
        score: Arc::new(|x: &[f64], t: &[f64]| vec![x[0] - t[0], x[1] - t[1]]),
        score_x_derivative: None,
        cdf: None,
        cdf_theta_gradient: None,
        sampler: Arc::new(|t: &[f64], rng: &mut dyn RngCore| {
            let mut w = RngWrap(rng);
            let z1: f64 = rand_distr::StandardNormal.sample(&mut w);
            let z2: f64 = rand_distr::StandardNormal.sample(&mut w);
            vec![t[0] + z1, t[1] + z2]
        }),
        support: vec![
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
        ],
        param_domain: ParamDomain::unbounded(2),
        named_priors,
        oracles: Oracles {
            fisher: Some(Arc::new(|_t: &[f64]| Mat::identity(2))),
            quantile: None,
            hpd_threshold: Some(Arc::new(|_t: &[f64], alpha: f64| {
                (1.0 - alpha) / (2.0 * std::f64::consts::PI)
            })),
            region_gradient: Some(Arc::new(|_t: &[f64], _alpha: f64| vec![0.0, 0.0])),
        },
        window: Arc::new(|t: &[f64], tail: f64| {
            let c = -norm_quantile(tail);
            t.iter()
                .map(|&ti| ObsWindow {
                    lo: ti - c,
                    hi: ti + c,
                    center: ti,
                    scale: 1.0,
                })
                .collect()
        }),
        mode_hint: Some(Arc::new(|t: &[f64]| t.to_vec())),
        crude_estimate: Some(Arc::new(|data: &[Vec<f64>]| {
            let n = data.len().max(1) as f64;
            let mut m = vec![0.0, 0.0];
            for x in data {
                m[0] += x[0];
                m[1] += x[1];
            }
            vec![m[0] / n, m[1] / n]
        })),
        positive_params: vec![false, false],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unknown_name_is_an_error() {
        assert!(builtin_family("no-such-model").is_err());
    }

    #[test]
    fn bvn_oracle_information_matrix() {
        let fam = builtin_family("bvn-cholesky").unwrap();
        let g = (fam.oracles.fisher.as_ref().unwrap())(&[1.0, 1.0, 0.0]);
        assert_abs_diff_eq!(g.get(0, 0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1, 1), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(2, 2), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn location_scale_right_haar_gradient() {
        let fam = builtin_family("location-scale-normal").unwrap();
        let rh = fam.named_prior("right-haar").unwrap();
        let g = rh.gradient(&[0.0, 1.0]);
        assert_abs_diff_eq!(g[0], 0.0);
        assert_abs_diff_eq!(g[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn normal_location_jeffreys_is_flat() {
        let fam = builtin_family("normal-location").unwrap();
        let j = fam.named_prior("jeffreys").unwrap();
        assert_eq!(j.gradient(&[3.7]), vec![0.0]);
    }

    #[test]
    fn bvn_member_gradient_matches_fd() {
        let cfg = crate::numerics::NumericsConfig::default();
        for (a, b) in [(0.0, 0.0), (1.0, 0.0), (0.0, 0.5), (1.0, 0.5)] {
            let p = bvn_upmp_member(a, b);
            for t in [[1.0, 1.0, 0.0], [1.0, 2.0, 0.3], [0.5, 1.5, -0.4]] {
                let g = p.gradient(&t);
                let fd = crate::numerics::fd_gradient(|th| p.log_prior(th), &t, &cfg);
                for i in 0..3 {
                    assert_abs_diff_eq!(g[i], fd[i], epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn bvn_sampler_covariance_is_consistent() {
        use rand::SeedableRng;
        let fam = builtin_family("bvn-cholesky").unwrap();
        let t = [1.0, 2.0, 0.3];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 40_000;
        let mut s = [0.0; 3];
        for _ in 0..n {
            let x = fam.sample(&t, &mut rng);
            s[0] += x[0] * x[0];
            s[1] += x[0] * x[1];
            s[2] += x[1] * x[1];
        }
        let s: Vec<f64> = s.iter().map(|v| v / n as f64).collect();
        // covariance implied by the inverse Cholesky parameterization
        let c11 = 1.0 / (t[0] * t[0]);
        let c12 = -t[2] / (t[0] * t[0]);
        let c22 = t[2] * t[2] / (t[0] * t[0]) + 1.0 / (t[1] * t[1]);
        assert_abs_diff_eq!(s[0], c11, epsilon = 0.03);
        assert_abs_diff_eq!(s[1], c12, epsilon = 0.03);
        assert_abs_diff_eq!(s[2], c22, epsilon = 0.03);
    }

    #[test]
    fn crude_estimate_recovers_bvn_parameters() {
        use rand::SeedableRng;
        let fam = builtin_family("bvn-cholesky").unwrap();
        let t = [1.0, 2.0, 0.3];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let data: Vec<Vec<f64>> = (0..20_000).map(|_| fam.sample(&t, &mut rng)).collect();
        let est = (fam.crude_estimate.as_ref().unwrap())(&data);
        assert_abs_diff_eq!(est[0], 1.0, epsilon = 0.05);
        assert_abs_diff_eq!(est[1], 2.0, epsilon = 0.1);
        assert_abs_diff_eq!(est[2], 0.3, epsilon = 0.05);
    }
}
