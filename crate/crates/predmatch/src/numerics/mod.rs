//! Shared deterministic numeric kernels: quadrature, root finding, finite
//! differences, small dense linear algebra, and the level-interval grid.

pub mod alpha;
pub mod diff;
pub mod linalg;
pub mod quadrature;
pub mod roots;

pub use alpha::{AlphaGrid, AlphaGridSpec};
pub use diff::{fd_gradient, fd_partial, fd_step, max_curl};
pub use linalg::Mat;
pub use quadrature::{
    graded_edges, graded_edges_from, integrate_1d, integrate_panels, integrate_panels_est,
    GaussLegendre, QuadResult,
};
pub use roots::find_root;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tunable tolerances and rule sizes shared by every operation.
///
/// Defaults are chosen so that the built-in families reproduce their
/// closed-form oracles well inside the documented report tolerances; all
/// node placement derived from a fixed config is deterministic.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct NumericsConfig {
    /// Gauss-Legendre nodes per panel for observation-space quadrature.
    pub x_quad_nodes: usize,
    /// Absolute tolerance target for generic 1-D quadrature refinement.
    pub x_quad_tol: f64,
    /// Grid on the level interval (0,1) used by level integrals.
    pub alpha_grid: AlphaGridSpec,
    /// Relative step for parameter finite differences.
    pub fd_step_theta: f64,
    /// Quantile root tolerance, measured in probability.
    pub root_tol: f64,
    /// Tolerance on region mass for density-threshold bisection.
    pub hpd_bisect_tol: f64,
    /// Levels are clipped to [clip, 1 - clip] in sweeps.
    pub endpoint_clip: f64,
    /// Curl threshold for declaring a field a gradient field.
    pub curl_tol: f64,
    /// Truncation target: window tail mass per side.
    pub tail_mass: f64,
    /// Step used for central differences in the level variable.
    pub alpha_fd_step: f64,
    /// Rays for star-shaped region quadrature in two dimensions.
    pub region_rays: usize,
    /// Radial Gauss nodes per ray.
    pub region_radial_nodes: usize,
    /// Ratio min-eigenvalue / trace below which sensitivity profiles are
    /// declared linearly dependent.
    pub independence_ratio: f64,
    /// Relative size below which a sensitivity component counts as
    /// identically zero (inactive).
    pub active_component_tol: f64,
    /// Seed for the deterministic sampler check in family validation.
    pub validation_seed: u64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            x_quad_nodes: 16,
            x_quad_tol: 1e-10,
            alpha_grid: AlphaGridSpec::default(),
            fd_step_theta: f64::EPSILON.powf(1.0 / 3.0),
            root_tol: 1e-12,
            hpd_bisect_tol: 1e-9,
            endpoint_clip: 1e-3,
            curl_tol: 1e-5,
            tail_mass: 1e-12,
            alpha_fd_step: 1e-4,
            region_rays: 96,
            region_radial_nodes: 20,
            independence_ratio: 1e-6,
            active_component_tol: 1e-7,
            validation_seed: 0xC0FFEE,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("x_quad_tol", self.x_quad_tol),
            ("fd_step_theta", self.fd_step_theta),
            ("root_tol", self.root_tol),
            ("hpd_bisect_tol", self.hpd_bisect_tol),
            ("endpoint_clip", self.endpoint_clip),
            ("curl_tol", self.curl_tol),
            ("tail_mass", self.tail_mass),
            ("alpha_fd_step", self.alpha_fd_step),
            ("independence_ratio", self.independence_ratio),
            ("active_component_tol", self.active_component_tol),
        ];
        for (name, v) in positives {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be strictly positive")));
            }
        }
        if self.x_quad_nodes < 2 || self.region_rays < 8 || self.region_radial_nodes < 4 {
            return Err(Error::Config("quadrature rule sizes too small".into()));
        }
        if self.alpha_grid.levels * self.alpha_grid.nodes_per_panel < 8 {
            return Err(Error::Config(
                "alpha grid must carry at least 8 nodes".into(),
            ));
        }
        if self.endpoint_clip >= 0.5 {
            return Err(Error::Config("endpoint_clip must be below 0.5".into()));
        }
        Ok(())
    }

    pub fn alpha_grid(&self) -> Result<AlphaGrid> {
        AlphaGrid::graded(&self.alpha_grid)
    }

    /// Level sweep {0.05, 0.10, ..., 0.95} used by residual reports.
    pub fn default_alpha_sweep() -> Vec<f64> {
        (1..=19).map(|i| i as f64 * 0.05).collect()
    }

    /// Clip a level into [clip, 1-clip].
    pub fn clip_alpha(&self, alpha: f64) -> f64 {
        alpha.clamp(self.endpoint_clip, 1.0 - self.endpoint_clip)
    }

    /// Tolerance on the two-path agreement in log-prior reconstruction.
    pub fn path_tol(&self) -> f64 {
        1e-6
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        NumericsConfig::default().validate().unwrap();
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        let cfg = NumericsConfig {
            root_tol: 0.0,
            ..NumericsConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
