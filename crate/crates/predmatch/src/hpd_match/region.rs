//! Level-region engines: given a density, find the threshold whose
//! super-level set carries a prescribed probability mass, and integrate
//! functions over that region.
//!
//! The univariate engine works with the interval [a(t), b(t)] around the
//! mode. The bivariate engine parameterizes the super-level set radially
//! from the mode (star-shaped level sets, which holds for every built-in and
//! for centered posterior mixtures): mass and region integrals become a
//! periodic angular average of smooth radial integrals, so accuracy is
//! limited only by the angular rule and the root tolerance on the boundary
//! radius, not by cell-masking resolution.

use crate::error::{Error, Result};
use crate::family::ObsWindow;
use crate::numerics::{find_root, quadrature, GaussLegendre};

/// Super-level interval of a unimodal univariate density.
#[derive(Clone, Copy, Debug)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

pub struct LevelEngine1d<'a> {
    pub density: &'a (dyn Fn(f64) -> f64 + Sync),
    /// CDF for fast mass evaluation; quadrature fallback otherwise.
    pub cdf: Option<&'a (dyn Fn(f64) -> f64 + Sync)>,
    pub window: ObsWindow,
    pub mode: f64,
    pub quad_nodes: usize,
}

impl LevelEngine1d<'_> {
    /// Locate the mode by scanning then ternary refinement; call when no
    /// exact mode is known (posterior mixtures).
    pub fn refine_mode(&mut self) {
        let (lo, hi) = (self.window.lo, self.window.hi);
        let n = 64;
        let mut best = (self.mode, (self.density)(self.mode));
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = (self.density)(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        let span = (hi - lo) / n as f64;
        let (mut a, mut b) = (best.0 - span, best.0 + span);
        for _ in 0..80 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if (self.density)(m1) < (self.density)(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        self.mode = 0.5 * (a + b);
    }

    /// Super-level interval at threshold `t`; clipped to the window when the
    /// density at a window edge is still above `t`.
    pub fn interval(&self, t: f64) -> Result<Interval> {
        let f = self.density;
        let fm = f(self.mode);
        if t >= fm {
            return Ok(Interval {
                a: self.mode,
                b: self.mode,
            });
        }
        let a = if f(self.window.lo) >= t {
            self.window.lo
        } else {
            find_root(
                |x| f(x) - t,
                self.window.lo,
                self.mode,
                t * 1e-10 + 1e-300,
                200,
            )?
        };
        let b = if f(self.window.hi) >= t {
            self.window.hi
        } else {
            find_root(
                |x| f(x) - t,
                self.mode,
                self.window.hi,
                t * 1e-10 + 1e-300,
                200,
            )?
        };
        Ok(Interval { a, b })
    }

    pub fn mass(&self, iv: Interval) -> Result<f64> {
        if iv.b <= iv.a {
            return Ok(0.0);
        }
        match self.cdf {
            Some(cdf) => Ok(cdf(iv.b) - cdf(iv.a)),
            None => {
                let edges = quadrature::graded_edges(
                    self.mode.clamp(iv.a, iv.b),
                    self.window.scale,
                    iv.a,
                    iv.b,
                );
                quadrature::integrate_panels(&mut |x| (self.density)(x), &edges, self.quad_nodes)
            }
        }
    }

    /// Density threshold whose super-level interval has mass `alpha`.
    pub fn threshold(&self, alpha: f64, mass_tol: f64, hint: Option<f64>) -> Result<f64> {
        let fm = (self.density)(self.mode);
        if !(fm > 0.0) {
            return Err(Error::Quadrature("density vanishes at the mode".into()));
        }
        let objective = |t: f64| -> f64 {
            let iv = self.interval(t).unwrap_or(Interval {
                a: self.mode,
                b: self.mode,
            });
            self.mass(iv).unwrap_or(f64::NAN) - alpha
        };
        let (mut lo, mut hi) = (fm * 1e-18, fm * (1.0 - 1e-12));
        if let Some(m0) = hint {
            let (mut a, mut b) = (m0 / 1.3, (m0 * 1.3).min(hi));
            for _ in 0..8 {
                // mass decreases in t: need objective(a) >= 0 >= objective(b)
                if objective(a) < 0.0 {
                    a /= 4.0;
                    continue;
                }
                if objective(b) > 0.0 {
                    b = ((b * 4.0).min(hi)).max(b);
                    if b >= hi {
                        break;
                    }
                    continue;
                }
                lo = a;
                hi = b;
                break;
            }
        }
        find_root(objective, lo, hi, mass_tol, 200)
    }

    /// Integrate `h` over the super-level interval.
    pub fn integrate<G: Fn(f64) -> f64>(&self, iv: Interval, h: G) -> Result<f64> {
        if iv.b <= iv.a {
            return Ok(0.0);
        }
        let edges =
            quadrature::graded_edges(self.mode.clamp(iv.a, iv.b), self.window.scale, iv.a, iv.b);
        quadrature::integrate_panels(&mut |x| h(x), &edges, self.quad_nodes)
    }
}

/// Radial engine for bivariate densities with star-shaped super-level sets.
pub struct StarRegion2d<'a> {
    pub density: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub windows: [ObsWindow; 2],
    pub mode: [f64; 2],
    pub rays: usize,
    pub radial_nodes: usize,
}

impl StarRegion2d<'_> {
    /// Refine the mode by cyclic per-axis ternary search inside the window.
    pub fn refine_mode(&mut self) {
        for _round in 0..4 {
            for axis in 0..2 {
                let w = &self.windows[axis];
                let span = 0.25 * (w.hi - w.lo);
                let (mut a, mut b) = (
                    (self.mode[axis] - span).max(w.lo),
                    (self.mode[axis] + span).min(w.hi),
                );
                let eval = |v: f64, m: &[f64; 2]| {
                    let mut x = *m;
                    x[axis] = v;
                    (self.density)(x[0], x[1])
                };
                for _ in 0..60 {
                    let m1 = a + (b - a) / 3.0;
                    let m2 = b - (b - a) / 3.0;
                    if eval(m1, &self.mode) < eval(m2, &self.mode) {
                        a = m1;
                    } else {
                        b = m2;
                    }
                }
                self.mode[axis] = 0.5 * (a + b);
            }
        }
    }

    fn ray_span(&self, dir: [f64; 2]) -> f64 {
        let mut span = f64::INFINITY;
        for axis in 0..2 {
            let d = dir[axis];
            if d.abs() < 1e-300 {
                continue;
            }
            let bound = if d > 0.0 {
                self.windows[axis].hi - self.mode[axis]
            } else {
                self.windows[axis].lo - self.mode[axis]
            };
            span = span.min(bound / d);
        }
        span.max(0.0)
    }

    /// First radius along `dir` where the density crosses below `t`;
    /// the window-boundary distance when it never does.
    fn rho(&self, dir: [f64; 2], t: f64) -> Result<f64> {
        let span = self.ray_span(dir);
        if span <= 0.0 {
            return Ok(0.0);
        }
        let f = |r: f64| (self.density)(self.mode[0] + r * dir[0], self.mode[1] + r * dir[1]);
        if f(0.0) < t {
            return Ok(0.0);
        }
        let scan = 24usize;
        let mut prev = 0.0;
        for i in 1..=scan {
            let r = span * i as f64 / scan as f64;
            if f(r) < t {
                return find_root(|r| f(r) - t, prev, r, t * 1e-10 + 1e-300, 200);
            }
            prev = r;
        }
        Ok(span)
    }

    /// Integrate each integrand over the super-level region at threshold
    /// `t`. The first returned value corresponds to the first integrand.
    /// `reduced_rays` uses every other ray (error estimation).
    pub fn integrate_region(
        &self,
        t: f64,
        integrands: &[&(dyn Fn(f64, f64) -> f64 + Sync)],
        reduced_rays: bool,
    ) -> Result<Vec<f64>> {
        let n = if reduced_rays {
            self.rays / 2
        } else {
            self.rays
        };
        let rule = GaussLegendre::cached(self.radial_nodes);
        let mut acc = vec![0.0; integrands.len()];
        let dphi = 2.0 * std::f64::consts::PI / n as f64;
        for k in 0..n {
            let phi = dphi * k as f64;
            let dir = [phi.cos(), phi.sin()];
            let rho = self.rho(dir, t)?;
            if rho <= 0.0 {
                continue;
            }
            // two radial panels resolve the quadratic falloff near the mode
            for (lo, hi) in [(0.0, 0.5 * rho), (0.5 * rho, rho)] {
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (i, &xn) in rule.nodes.iter().enumerate() {
                    let r = mid + half * xn;
                    let w = dphi * half * rule.weights[i] * r;
                    let x = self.mode[0] + r * dir[0];
                    let y = self.mode[1] + r * dir[1];
                    for (j, g) in integrands.iter().enumerate() {
                        acc[j] += w * g(x, y);
                    }
                }
            }
        }
        Ok(acc)
    }

    pub fn mass(&self, t: f64) -> Result<f64> {
        Ok(self.integrate_region(t, &[self.density], false)?[0])
    }

    /// Density threshold whose super-level region carries mass `alpha`.
    pub fn threshold(&self, alpha: f64, mass_tol: f64, hint: Option<f64>) -> Result<f64> {
        let fm = (self.density)(self.mode[0], self.mode[1]);
        if !(fm > 0.0) {
            return Err(Error::Quadrature("density vanishes at the mode".into()));
        }
        let objective = |t: f64| self.mass(t).unwrap_or(f64::NAN) - alpha;
        let (mut lo, mut hi) = (fm * 1e-18, fm * (1.0 - 1e-9));
        if let Some(m0) = hint {
            let (mut a, mut b) = ((m0 / 1.3).max(lo), (m0 * 1.3).min(hi));
            for _ in 0..8 {
                if objective(a) < 0.0 {
                    a = (a / 4.0).max(lo * 0.5);
                    continue;
                }
                if objective(b) > 0.0 {
                    b = (b * 4.0).min(hi);
                    if b >= hi {
                        break;
                    }
                    continue;
                }
                lo = a;
                hi = b;
                break;
            }
        }
        find_root(objective, lo, hi, mass_tol, 200)
    }

    /// Angular-resolution error estimate at threshold `t`: full vs half rays.
    pub fn mass_err_estimate(&self, t: f64) -> Result<f64> {
        let full = self.mass(t)?;
        let half = self.integrate_region(t, &[self.density], true)?[0];
        Ok((full - half).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn std_normal_1d() -> (impl Fn(f64) -> f64 + Sync, impl Fn(f64) -> f64 + Sync) {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cdf = |x: f64| 0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2);
        (pdf, cdf)
    }

    #[test]
    fn univariate_threshold_matches_symmetric_interval() {
        let (pdf, cdf) = std_normal_1d();
        let eng = LevelEngine1d {
            density: &pdf,
            cdf: Some(&cdf),
            window: ObsWindow {
                lo: -9.0,
                hi: 9.0,
                center: 0.0,
                scale: 1.0,
            },
            mode: 0.0,
            quad_nodes: 16,
        };
        // mass 0.95 region is [-z, z] with z the 97.5% quantile; threshold
        // equals the density there
        let m = eng.threshold(0.95, 1e-10, None).unwrap();
        let z = 1.959963984540054_f64;
        assert_abs_diff_eq!(m, pdf(z), epsilon = 1e-9);
        let iv = eng.interval(m).unwrap();
        assert_abs_diff_eq!(iv.a, -z, epsilon = 1e-7);
        assert_abs_diff_eq!(iv.b, z, epsilon = 1e-7);
    }

    #[test]
    fn bivariate_mass_and_threshold_match_radial_closed_form() {
        // standard bivariate normal: threshold (1 - alpha)/(2 pi)
        let pdf = |x: f64, y: f64| (-0.5 * (x * x + y * y)).exp() / (2.0 * std::f64::consts::PI);
        let w = ObsWindow {
            lo: -8.6,
            hi: 8.6,
            center: 0.0,
            scale: 1.0,
        };
        let eng = StarRegion2d {
            density: &pdf,
            windows: [w, w],
            mode: [0.0, 0.0],
            rays: 64,
            radial_nodes: 20,
        };
        for alpha in [0.1, 0.5, 0.9] {
            let m = eng.threshold(alpha, 1e-10, None).unwrap();
            let expect = (1.0 - alpha) / (2.0 * std::f64::consts::PI);
            assert_abs_diff_eq!(m, expect, epsilon = 1e-8 * expect.max(1e-3));
            assert_abs_diff_eq!(eng.mass(m).unwrap(), alpha, epsilon = 1e-9);
        }
    }

    #[test]
    fn bivariate_engine_handles_correlated_gaussian() {
        // covariance [[1, .6], [.6, 1]]; mass of {f >= t} still closed form
        // via the elliptical radius: mass = 1 - exp(-c/2)
        let det = 1.0 - 0.36_f64;
        let pdf = move |x: f64, y: f64| {
            let q = (x * x - 2.0 * 0.6 * x * y + y * y) / det;
            (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
        };
        let w = ObsWindow {
            lo: -9.0,
            hi: 9.0,
            center: 0.0,
            scale: 1.0,
        };
        let eng = StarRegion2d {
            density: &pdf,
            windows: [w, w],
            mode: [0.0, 0.0],
            rays: 64,
            radial_nodes: 20,
        };
        let alpha = 0.7;
        let m = eng.threshold(alpha, 1e-10, None).unwrap();
        // the level set is the ellipse q = c with mass 1 - exp(-c/2), so the
        // boundary density is (1 - alpha) / (2 pi sqrt(det))
        let expect = (1.0 - alpha) / (2.0 * std::f64::consts::PI * det.sqrt());
        assert_abs_diff_eq!(m, expect, epsilon = 1e-8);
    }

    #[test]
    fn mode_refinement_finds_offset_peak() {
        let pdf = |x: f64, y: f64| {
            (-0.5 * ((x - 1.2) * (x - 1.2) + (y + 0.4) * (y + 0.4))).exp()
                / (2.0 * std::f64::consts::PI)
        };
        let w = ObsWindow {
            lo: -8.0,
            hi: 8.0,
            center: 0.0,
            scale: 1.0,
        };
        let mut eng = StarRegion2d {
            density: &pdf,
            windows: [w, w],
            mode: [0.0, 0.0],
            rays: 32,
            radial_nodes: 16,
        };
        eng.refine_mode();
        assert_abs_diff_eq!(eng.mode[0], 1.2, epsilon = 1e-6);
        assert_abs_diff_eq!(eng.mode[1], -0.4, epsilon = 1e-6);
    }
}
