//! One-dimensional estimation with truncated distance weights
//!
//! Known-variance location and known-location scale estimators for a
//! Gaussian restricted to a union of intervals, together with their
//! asymptotic variances computed by quadrature. The weight is
//! w(x) = phi_C(x)^alpha where phi_C is the distance to the boundary
//! of the component containing x, truncated at C. C is given directly
//! or resolved from a coverage level pi with P(phi_inf(X) <= C) = pi
//! under the truncated Gaussian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::interval::{Interval, IntervalUnion};
use crate::util::xpow;
use crate::{gauss, quad, Error, Result};

const BISECT_TOL: f64 = 1e-10;
const QUAD_REL_TOL: f64 = 1e-8;

/// Univariate problem description.
///
/// At most one of `c` and `pi` may be set; with neither, the weight is
/// untruncated.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniSpec {
    pub domain: IntervalUnion,
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
}

impl UniSpec {
    pub fn validate(&self) -> Result<()> {
        if self.domain.is_empty() {
            return Err(Error::InvalidParameter("domain is empty".into()));
        }
        if !self.mu0.is_finite() {
            return Err(Error::InvalidParameter("mu0 must be finite".into()));
        }
        if !(self.sigma0_sq.is_finite() && self.sigma0_sq > 0.0) {
            return Err(Error::InvalidParameter("sigma0_sq must be positive".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter("alpha must be nonnegative".into()));
        }
        if self.c.is_some() && self.pi.is_some() {
            return Err(Error::InvalidParameter("set at most one of c and pi".into()));
        }
        if let Some(c) = self.c {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidParameter("c must be positive".into()));
            }
        }
        if let Some(pi) = self.pi {
            if !(pi > 0.0 && pi <= 1.0) {
                return Err(Error::InvalidParameter("pi must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }

    fn sigma0(&self) -> f64 {
        self.sigma0_sq.sqrt()
    }

    /// Truncation level in effect: `c` as given, the `pi` quantile, or
    /// infinity when neither is set.
    pub fn resolve_c(&self) -> Result<f64> {
        self.validate()?;
        match (self.c, self.pi) {
            (Some(c), _) => Ok(c),
            (None, Some(pi)) => self.quantile_c(pi),
            (None, None) => Ok(f64::INFINITY),
        }
    }

    /// Weight and its derivative at `x`.
    pub fn weight(&self, x: f64) -> Result<(f64, f64)> {
        let c = self.resolve_c()?;
        self.weight_at(c, x)
    }

    fn weight_at(&self, c: f64, x: f64) -> Result<(f64, f64)> {
        let (phi, sign) =
            self.domain.truncated_distance(c, x).ok_or(Error::OutOfDomain { row: None })?;
        let a = self.alpha;
        if a == 0.0 {
            return Ok((1.0, 0.0));
        }
        if phi == 0.0 && a < 1.0 {
            return Err(Error::BoundarySingularity { coord: 0, alpha: a });
        }
        let w = xpow(phi, a);
        let wd = if sign == 0 { 0.0 } else { a * xpow(phi, a - 1.0) * f64::from(sign) };
        Ok((w, wd))
    }

    /// Location estimate with known variance `sigma0_sq`.
    pub fn estimate_mu(&self, data: &[f64]) -> Result<f64> {
        let c = self.resolve_c()?;
        if data.is_empty() {
            return Err(Error::EmptyData("univariate sample"));
        }
        let mut sw = 0.0;
        let mut swx = 0.0;
        let mut swd = 0.0;
        for (i, &x) in data.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite("univariate sample"));
            }
            let (w, wd) = self.weight_at(c, x).map_err(|e| at_row(e, i))?;
            sw += w;
            swx += w * x;
            swd += wd;
        }
        if sw == 0.0 {
            return Err(Error::ZeroWeightSum);
        }
        let v = (swx - self.sigma0_sq * swd) / sw;
        if !v.is_finite() {
            return Err(Error::NonFinite("location estimate"));
        }
        Ok(v)
    }

    /// Scale estimate with known location `mu0`.
    pub fn estimate_sigma_sq(&self, data: &[f64]) -> Result<f64> {
        let c = self.resolve_c()?;
        if data.is_empty() {
            return Err(Error::EmptyData("univariate sample"));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &x) in data.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite("univariate sample"));
            }
            let (w, wd) = self.weight_at(c, x).map_err(|e| at_row(e, i))?;
            let d = x - self.mu0;
            num += w * d * d;
            den += w + wd * d;
        }
        if den == 0.0 {
            return Err(Error::NonPositiveDenominator {
                context: "scale estimator denominator",
                value: 0.0,
            });
        }
        let v = num / den;
        if !v.is_finite() {
            return Err(Error::NonFinite("scale estimate"));
        }
        Ok(v)
    }

    /// Smallest C with P(phi_inf(X) <= C) >= pi under the truncated
    /// Gaussian, by bisection. pi = 1 returns the largest component
    /// half-length on fully bounded domains and infinity otherwise.
    pub fn quantile_c(&self, pi: f64) -> Result<f64> {
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(Error::InvalidParameter("pi must lie in (0, 1]".into()));
        }
        let parts = self.domain.parts();
        if parts.is_empty() {
            return Err(Error::InvalidParameter("domain is empty".into()));
        }
        let z: f64 = parts.iter().map(|p| self.part_mass(p.lower, p.upper)).sum();
        if !(z > 0.0) {
            return Err(Error::InvalidParameter("domain carries no Gaussian mass".into()));
        }
        if pi == 1.0 {
            if parts.iter().all(|p| p.lower.is_finite() && p.upper.is_finite()) {
                let c0 = parts
                    .iter()
                    .map(|p| 0.5 * (p.upper - p.lower))
                    .fold(0.0f64, f64::max);
                return Ok(c0);
            }
            return Ok(f64::INFINITY);
        }
        let prob = |cc: f64| {
            let mut near = 0.0;
            for p in parts {
                match (p.lower.is_finite(), p.upper.is_finite()) {
                    (false, false) => {}
                    (false, true) => near += self.part_mass(p.upper - cc, p.upper),
                    (true, false) => near += self.part_mass(p.lower, p.lower + cc),
                    (true, true) => {
                        if cc >= 0.5 * (p.upper - p.lower) {
                            near += self.part_mass(p.lower, p.upper);
                        } else {
                            near += self.part_mass(p.lower, p.lower + cc)
                                + self.part_mass(p.upper - cc, p.upper);
                        }
                    }
                }
            }
            near / z
        };
        let mut hi = 1.0;
        let mut grow = 0usize;
        while prob(hi) < pi {
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::InvalidParameter(
                    "requested pi is unattainable on this domain".into(),
                ));
            }
        }
        let mut lo = 0.0;
        while hi - lo > BISECT_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if prob(mid) >= pi {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Gaussian mass of [a, b] under N(mu0, sigma0_sq).
    fn part_mass(&self, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        let s = self.sigma0();
        let za = if a == f64::NEG_INFINITY { 0.0 } else { gauss::cdf((a - self.mu0) / s) };
        let zb = if b == f64::INFINITY { 1.0 } else { gauss::cdf((b - self.mu0) / s) };
        (zb - za).max(0.0)
    }

    /// Unnormalized integral of `f(x, w, w') * gaussian_kernel(x)` over
    /// the domain, with quadrature splits at the weight kinks.
    fn weighted_integral(&self, c: f64, f: &dyn Fn(f64, f64, f64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        for part in self.domain.parts() {
            let (l, u) = (part.lower, part.upper);
            let mut splits = Vec::with_capacity(4);
            if l.is_finite() && c.is_finite() {
                splits.push(l + c);
            }
            if u.is_finite() && c.is_finite() {
                splits.push(u - c);
            }
            if l.is_finite() && u.is_finite() {
                splits.push(0.5 * (l + u));
            }
            splits.push(self.mu0);
            let alpha = self.alpha;
            let integrand = move |x: f64| {
                let (phi, sign) = match self.domain.truncated_distance(c, x) {
                    Some(v) => v,
                    None => return 0.0,
                };
                let (w, wd) = if alpha == 0.0 {
                    (1.0, 0.0)
                } else {
                    let w = xpow(phi, alpha);
                    let wd = if sign == 0 {
                        0.0
                    } else {
                        alpha * xpow(phi, alpha - 1.0) * f64::from(sign)
                    };
                    (w, wd)
                };
                let d = (x - self.mu0) / self.sigma0();
                f(x, w, wd) * (-0.5 * d * d).exp()
            };
            total += quad::integrate(&integrand, l, u, QUAD_REL_TOL, &splits)?;
        }
        if !total.is_finite() {
            return Err(Error::Quadrature("weighted integral is not finite".into()));
        }
        Ok(total)
    }

    /// Limit of n * var(mu_hat) under the truncated Gaussian.
    pub fn asymptotic_var_mu(&self) -> Result<f64> {
        let c = self.resolve_c()?;
        let s2 = self.sigma0_sq;
        let z = self.weighted_integral(c, &|_, _, _| 1.0)?;
        let iw = self.weighted_integral(c, &|_, w, _| w)?;
        let inum = self.weighted_integral(c, &|_, w, wd| s2 * w * w + s2 * s2 * wd * wd)?;
        if !(iw > 0.0) {
            return Err(Error::ZeroWeightSum);
        }
        Ok(inum * z / (iw * iw))
    }

    /// Limit of n * var(sigma_sq_hat) under the truncated Gaussian.
    pub fn asymptotic_var_sigma_sq(&self) -> Result<f64> {
        let c = self.resolve_c()?;
        let s2 = self.sigma0_sq;
        let mu0 = self.mu0;
        let z = self.weighted_integral(c, &|_, _, _| 1.0)?;
        let iden = self.weighted_integral(c, &|x, w, _| w * (x - mu0) * (x - mu0))?;
        let inum = self.weighted_integral(c, &|x, w, wd| {
            let d2 = (x - mu0) * (x - mu0);
            2.0 * s2 * s2 * s2 * w * w * d2 + s2 * s2 * s2 * s2 * wd * wd * d2
        })?;
        if !(iden > 0.0) {
            return Err(Error::ZeroWeightSum);
        }
        Ok(inum * z / (iden * iden))
    }
}

fn at_row(e: Error, i: usize) -> Error {
    match e {
        Error::OutOfDomain { .. } => Error::OutOfDomain { row: Some(i) },
        other => other,
    }
}

/// One cell of the asymptotic variance surface.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveRow {
    pub alpha: f64,
    pub pi: f64,
    pub c: f64,
    pub log_var_mu: f64,
    pub log_var_sigma_sq: f64,
}

/// Asymptotic variance grid over weight exponents and coverage levels.
/// `base` supplies the domain and the true parameters; its own alpha
/// and truncation settings are ignored.
pub fn variance_curve(base: &UniSpec, alphas: &[f64], pis: &[f64]) -> Result<Vec<CurveRow>> {
    base.validate()?;
    if alphas.is_empty() || pis.is_empty() {
        return Err(Error::EmptyData("variance curve grid"));
    }
    let probe = UniSpec { alpha: 0.0, c: None, pi: None, ..base.clone() };
    let cs: Vec<f64> = pis.iter().map(|&pi| probe.quantile_c(pi)).collect::<Result<_>>()?;
    let cells: Vec<(f64, f64, f64)> = alphas
        .iter()
        .flat_map(|&a| pis.iter().zip(cs.iter()).map(move |(&pi, &c)| (a, pi, c)))
        .collect();
    cells
        .par_iter()
        .map(|&(alpha, pi, c)| {
            let spec = UniSpec {
                alpha,
                c: if c.is_finite() { Some(c) } else { None },
                pi: None,
                ..base.clone()
            };
            Ok(CurveRow {
                alpha,
                pi,
                c,
                log_var_mu: spec.asymptotic_var_mu()?.ln(),
                log_var_sigma_sq: spec.asymptotic_var_sigma_sq()?.ln(),
            })
        })
        .collect()
}

/// Two rays with two interior islands.
pub fn domain_d1() -> IntervalUnion {
    IntervalUnion::from_parts(vec![
        Interval::new(f64::NEG_INFINITY, -1.5, false, true).unwrap(),
        Interval::closed(-1.0, -0.75).unwrap(),
        Interval::closed(0.75, 1.0).unwrap(),
        Interval::new(1.5, f64::INFINITY, true, false).unwrap(),
    ])
}

/// Two symmetric rays.
pub fn domain_d2() -> IntervalUnion {
    IntervalUnion::from_parts(vec![
        Interval::new(f64::NEG_INFINITY, -1.5, false, true).unwrap(),
        Interval::new(1.5, f64::INFINITY, true, false).unwrap(),
    ])
}

/// Two bounded islands.
pub fn domain_d3() -> IntervalUnion {
    IntervalUnion::from_parts(vec![
        Interval::closed(-1.0, -0.75).unwrap(),
        Interval::closed(0.75, 1.0).unwrap(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray_spec(alpha: f64) -> UniSpec {
        UniSpec {
            domain: IntervalUnion::of(Interval::new(1.5, f64::INFINITY, true, false).unwrap()),
            mu0: 0.0,
            sigma0_sq: 1.0,
            alpha,
            c: None,
            pi: None,
        }
    }

    #[test]
    fn flat_weight_recovers_the_sample_mean() {
        let spec = UniSpec {
            domain: IntervalUnion::all(),
            mu0: 0.0,
            sigma0_sq: 1.0,
            alpha: 0.0,
            c: None,
            pi: None,
        };
        let mu = spec.estimate_mu(&[1.0, 2.0, 3.0]).unwrap();
        assert!((mu - 2.0).abs() < 1e-14);
        let s2 = spec.estimate_sigma_sq(&[1.0, 3.0]).unwrap();
        assert!((s2 - 5.0).abs() < 1e-14);
    }

    #[test]
    fn linear_weight_on_a_ray() {
        let spec = ray_spec(1.0);
        let mu = spec.estimate_mu(&[2.0, 3.0]).unwrap();
        assert!((mu - 1.75).abs() < 1e-14, "got {mu}");
        let s2 = spec.estimate_sigma_sq(&[2.0]).unwrap();
        assert!((s2 - 0.8).abs() < 1e-14, "got {s2}");
    }

    #[test]
    fn truncation_caps_the_weight() {
        let spec = UniSpec { c: Some(0.25), ..ray_spec(1.0) };
        let (w, wd) = spec.weight(3.0).unwrap();
        assert_eq!(w, 0.25);
        assert_eq!(wd, 0.0);
        let (w, wd) = spec.weight(1.6).unwrap();
        assert!((w - 0.1).abs() < 1e-15);
        assert_eq!(wd, 1.0);
    }

    #[test]
    fn fractional_alpha_is_singular_on_the_boundary() {
        let spec = ray_spec(0.5);
        let err = spec.estimate_mu(&[1.5, 2.0]).unwrap_err();
        assert!(matches!(err, Error::BoundarySingularity { coord: 0, .. }));
    }

    #[test]
    fn out_of_domain_reports_the_row() {
        let spec = ray_spec(1.0);
        let err = spec.estimate_mu(&[2.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { row: Some(1) }));
    }

    #[test]
    fn flat_weight_variance_is_the_gaussian_variance() {
        for s2 in [1.0, 2.5] {
            let spec = UniSpec {
                domain: IntervalUnion::all(),
                mu0: 0.3,
                sigma0_sq: s2,
                alpha: 0.0,
                c: None,
                pi: None,
            };
            let v = spec.asymptotic_var_mu().unwrap();
            assert!((v - s2).abs() < 1e-6 * s2, "got {v} want {s2}");
        }
    }

    #[test]
    fn flat_weight_variance_on_a_disconnected_domain() {
        // alpha = 0 makes both estimator variances weight-free ratios,
        // so every quadrature normalizer must agree across parts
        let spec = UniSpec {
            domain: domain_d1(),
            mu0: 0.0,
            sigma0_sq: 1.0,
            alpha: 0.0,
            c: None,
            pi: None,
        };
        let v = spec.asymptotic_var_mu().unwrap();
        assert!(v.is_finite() && v > 0.0);
        // var(mu_hat) at alpha 0 equals sigma0^2 / P where P is the
        // truncated second-moment-free mass ratio; E[w]=1 so v = s2
        assert!((v - 1.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn scale_variance_closed_form_on_the_full_line() {
        // w = 1, w' = 0: numerator 2 s^6 E[(X-mu0)^2], denominator
        // E^2[(X-mu0)^2], so v = 2 s^6 / s^2 = 2 s^4
        let spec = UniSpec {
            domain: IntervalUnion::all(),
            mu0: -0.7,
            sigma0_sq: 2.0,
            alpha: 0.0,
            c: None,
            pi: None,
        };
        let v = spec.asymptotic_var_sigma_sq().unwrap();
        assert!((v - 8.0).abs() < 1e-5, "got {v}");
    }

    #[test]
    fn quantile_pi_one_on_bounded_islands() {
        let spec = UniSpec {
            domain: domain_d3(),
            mu0: 0.0,
            sigma0_sq: 1.0,
            alpha: 1.0,
            c: None,
            pi: None,
        };
        let c = spec.quantile_c(1.0).unwrap();
        assert!((c - 0.125).abs() < 1e-15);
    }

    #[test]
    fn quantile_pi_one_with_a_ray_is_unbounded() {
        let spec = ray_spec(1.0);
        assert_eq!(spec.quantile_c(1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn quantile_inverts_the_coverage_probability() {
        let spec = UniSpec {
            domain: domain_d2(),
            mu0: 0.0,
            sigma0_sq: 1.0,
            alpha: 1.0,
            c: None,
            pi: None,
        };
        for pi in [0.2, 0.5, 0.9] {
            let c = spec.quantile_c(pi).unwrap();
            // coverage at the returned C, recomputed directly
            let z = 2.0 * gauss::sf(1.5);
            let cover = 2.0 * (gauss::cdf(1.5 + c) - gauss::cdf(1.5)) / z;
            assert!((cover - pi).abs() < 1e-8, "pi {pi} c {c} cover {cover}");
        }
    }

    #[test]
    fn quantile_is_unattainable_on_the_full_line() {
        let spec = UniSpec {
            domain: IntervalUnion::all(),
            mu0: 0.0,
            sigma0_sq: 1.0,
            alpha: 1.0,
            c: None,
            pi: None,
        };
        assert!(spec.quantile_c(0.5).is_err());
    }

    #[test]
    fn curve_rows_cover_the_grid_in_order() {
        let base = UniSpec {
            domain: domain_d2(),
            mu0: 0.0,
            sigma0_sq: 1.0,
            alpha: 0.0,
            c: None,
            pi: None,
        };
        let rows = variance_curve(&base, &[0.0, 1.0], &[0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[0].alpha, rows[0].pi), (0.0, 0.5));
        assert_eq!((rows[3].alpha, rows[3].pi), (1.0, 1.0));
        for r in &rows {
            assert!(r.log_var_mu.is_finite());
            assert!(r.log_var_sigma_sq.is_finite());
        }
        // alpha 0 rows are truncation-free, so both pi cells agree
        assert!((rows[0].log_var_mu - rows[1].log_var_mu).abs() < 1e-6);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = UniSpec {
            domain: domain_d1(),
            mu0: 0.25,
            sigma0_sq: 1.5,
            alpha: 2.0,
            c: None,
            pi: Some(0.6),
        };
        let s = serde_json::to_string(&spec).unwrap();
        let back: UniSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.domain, spec.domain);
        assert_eq!(back.pi, Some(0.6));
        assert_eq!(back.c, None);
    }

    #[test]
    fn conflicting_truncation_settings_are_rejected() {
        let spec = UniSpec { c: Some(1.0), pi: Some(0.5), ..ray_spec(1.0) };
        assert!(spec.validate().is_err());
    }
}
