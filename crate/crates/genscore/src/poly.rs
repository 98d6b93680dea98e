//! Multivariate polynomial constraints and their one-dimensional
//! sections via real-root isolation.
//!
//! A constraint is `f(x) <op> threshold` for a polynomial `f` given as a
//! sparse list of terms. Sections restrict `f` to a single coordinate,
//! find the real roots of the resulting univariate polynomial with a
//! companion-matrix eigensolve, and classify the sign of `f - threshold`
//! on each root gap by a midpoint evaluation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::interval::{Interval, IntervalUnion};
use crate::{Error, Result};

/// One monomial `coeff * prod_k x_k^{exponents[k]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// Comparison operator of a polynomial constraint. Non-strict operators
/// produce closed section endpoints, strict ones open endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Le,
    Ge,
    Lt,
    Gt,
}

impl Comparison {
    fn is_strict(self) -> bool {
        matches!(self, Comparison::Lt | Comparison::Gt)
    }

    fn accepts(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Le => value <= threshold,
            Comparison::Ge => value >= threshold,
            Comparison::Lt => value < threshold,
            Comparison::Gt => value > threshold,
        }
    }
}

/// `f(x) <op> threshold` with `f` a sparse polynomial in `dim` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyConstraint {
    pub terms: Vec<PolyTerm>,
    pub comparison: Comparison,
    pub threshold: f64,
}

impl PolyConstraint {
    pub fn validate(&self, dim: usize) -> Result<()> {
        for t in &self.terms {
            if t.exponents.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: t.exponents.len() });
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidParameter("polynomial coefficient is not finite".into()));
            }
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidParameter("polynomial threshold is not finite".into()));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.exponents
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| xi.powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.comparison.accepts(self.evaluate(x), self.threshold)
    }

    /// Coefficients (ascending degree) of `y -> f(y; x_{-j})`.
    fn restrict(&self, x: &[f64], j: usize) -> Vec<f64> {
        let max_deg = self
            .terms
            .iter()
            .map(|t| t.exponents[j] as usize)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![0.0; max_deg + 1];
        for t in &self.terms {
            let mut c = t.coeff;
            for (k, (&e, &xk)) in t.exponents.iter().zip(x).enumerate() {
                if k != j {
                    c *= xk.powi(e as i32);
                }
            }
            coeffs[t.exponents[j] as usize] += c;
        }
        coeffs
    }

    /// The section `{ y : f(y; x_{-j}) <op> threshold }` as an interval
    /// union. Double roots that do not change sign yield point
    /// components (for non-strict comparisons) rather than spurious
    /// endpoints.
    pub fn section(&self, x: &[f64], j: usize) -> Result<IntervalUnion> {
        let mut coeffs = self.restrict(x, j);
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::RootIsolation(
                "restricted polynomial has non-finite coefficients".into(),
            ));
        }
        coeffs[0] -= self.threshold;
        // Trim leading coefficients that are zero relative to the rest;
        // they reflect exact cancellation after substituting x_{-j}.
        let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
        while coeffs.len() > 1 {
            let lead = coeffs[coeffs.len() - 1].abs();
            if lead == 0.0 || lead <= 1e-14 * scale {
                coeffs.pop();
            } else {
                break;
            }
        }
        let eval = |y: f64| -> f64 {
            let mut acc = 0.0;
            for &c in coeffs.iter().rev() {
                acc = acc * y + c;
            }
            acc
        };
        if coeffs.len() == 1 {
            // Constant polynomial: the section is everything or nothing.
            return Ok(if self.comparison.accepts(self.threshold + coeffs[0], self.threshold) {
                IntervalUnion::all()
            } else {
                IntervalUnion::empty()
            });
        }

        let mut roots = real_roots(&coeffs)?;
        // Polish with a couple of Newton steps; keep a step only while
        // it reduces the residual.
        for r in roots.iter_mut() {
            for _ in 0..3 {
                let f = eval(*r);
                let df = {
                    let mut acc = 0.0;
                    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
                        acc = acc * *r + c * k as f64;
                    }
                    acc
                };
                if df == 0.0 {
                    break;
                }
                let next = *r - f / df;
                if next.is_finite() && eval(next).abs() <= f.abs() {
                    *r = next;
                } else {
                    break;
                }
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs())));

        let closed = !self.comparison.is_strict();
        let mut parts: Vec<Interval> = Vec::new();
        // Classify each gap between consecutive roots by a midpoint test.
        let n = roots.len();
        for gap in 0..=n {
            let (lo, hi) = match (gap.checked_sub(1).map(|i| roots[i]), roots.get(gap).copied()) {
                (None, Some(r)) => (f64::NEG_INFINITY, r),
                (Some(l), Some(r)) => (l, r),
                (Some(l), None) => (l, f64::INFINITY),
                (None, None) => (f64::NEG_INFINITY, f64::INFINITY),
            };
            let probe = if lo.is_infinite() && hi.is_infinite() {
                0.0
            } else if lo.is_infinite() {
                hi - 1.0 - hi.abs()
            } else if hi.is_infinite() {
                lo + 1.0 + lo.abs()
            } else {
                0.5 * (lo + hi)
            };
            if self.comparison.accepts(self.threshold + eval(probe), self.threshold) {
                parts.push(Interval::new(lo, hi, closed && lo.is_finite(), closed && hi.is_finite())?);
            }
        }
        if closed {
            // Isolated roots between rejected gaps are still solutions
            // of the non-strict inequality.
            for &r in &roots {
                parts.push(Interval::closed(r, r)?);
            }
        }
        Ok(IntervalUnion::from_parts(parts))
    }
}

/// Real roots of a polynomial with ascending coefficients (length >= 2,
/// non-zero leading coefficient) via companion-matrix eigenvalues.
fn real_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    let d = coeffs.len() - 1;
    let lead = coeffs[d];
    if lead == 0.0 {
        return Err(Error::RootIsolation("zero leading coefficient".into()));
    }
    if d == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -coeffs[i] / lead;
    }
    let eig = companion.complex_eigenvalues();
    let scale: f64 = eig.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let mut roots = Vec::new();
    for c in eig.iter() {
        if c.im.abs() <= 1e-9 * scale {
            roots.push(c.re);
        }
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_ball(dim: usize, r2: f64, cmp: Comparison) -> PolyConstraint {
        // sum x_k^2 <op> r2
        let terms = (0..dim)
            .map(|k| {
                let mut e = vec![0u32; dim];
                e[k] = 2;
                PolyTerm { coeff: 1.0, exponents: e }
            })
            .collect();
        PolyConstraint { terms, comparison: cmp, threshold: r2 }
    }

    #[test]
    fn disk_section_matches_closed_form() {
        let c = quad_ball(2, 1.0, Comparison::Le);
        let s = c.section(&[0.0, 0.6], 0).unwrap();
        assert_eq!(s.parts().len(), 1);
        let p = s.parts()[0];
        assert!((p.lower + 0.8).abs() < 1e-9 && (p.upper - 0.8).abs() < 1e-9);
        assert!(p.lower_closed && p.upper_closed);
    }

    #[test]
    fn complement_section_outside_radius_is_everything() {
        let c = quad_ball(2, 1.0, Comparison::Ge);
        let s = c.section(&[0.0, 2.0], 0).unwrap();
        assert_eq!(s, IntervalUnion::all());
        let s = c.section(&[0.0, 0.6], 0).unwrap();
        assert_eq!(s.parts().len(), 2);
        assert!((s.parts()[0].upper + 0.8).abs() < 1e-9);
        assert!((s.parts()[1].lower - 0.8).abs() < 1e-9);
    }

    #[test]
    fn double_root_yields_point_component() {
        // (y - 1)^2 <= 0 has the single solution y = 1
        let c = PolyConstraint {
            terms: vec![
                PolyTerm { coeff: 1.0, exponents: vec![2] },
                PolyTerm { coeff: -2.0, exponents: vec![1] },
                PolyTerm { coeff: 1.0, exponents: vec![0] },
            ],
            comparison: Comparison::Le,
            threshold: 0.0,
        };
        let s = c.section(&[0.0], 0).unwrap();
        assert_eq!(s.parts().len(), 1);
        assert!((s.parts()[0].lower - 1.0).abs() < 1e-8);
        assert_eq!(s.parts()[0].lower, s.parts()[0].upper);

        // strict version is empty
        let strict = PolyConstraint { comparison: Comparison::Lt, ..c };
        assert!(strict.section(&[0.0], 0).unwrap().is_empty());
    }

    #[test]
    fn degree_collapse_to_constant() {
        // x1 * y^2 <= 1 at x1 = 0 collapses to 0 <= 1: everything
        let c = PolyConstraint {
            terms: vec![PolyTerm { coeff: 1.0, exponents: vec![2, 1] }],
            comparison: Comparison::Le,
            threshold: 1.0,
        };
        let s = c.section(&[0.0, 0.0], 0).unwrap();
        assert_eq!(s, IntervalUnion::all());
    }

    #[test]
    fn cubic_with_three_roots() {
        // y^3 - y >= 0 on [-1, 0] u [1, inf)
        let c = PolyConstraint {
            terms: vec![
                PolyTerm { coeff: 1.0, exponents: vec![3] },
                PolyTerm { coeff: -1.0, exponents: vec![1] },
            ],
            comparison: Comparison::Ge,
            threshold: 0.0,
        };
        let s = c.section(&[0.0], 0).unwrap();
        assert_eq!(s.parts().len(), 2);
        assert!((s.parts()[0].lower + 1.0).abs() < 1e-8);
        assert!(s.parts()[0].upper.abs() < 1e-8);
        assert!((s.parts()[1].lower - 1.0).abs() < 1e-8);
        assert_eq!(s.parts()[1].upper, f64::INFINITY);
    }

    #[test]
    fn section_agrees_with_membership_on_grid() {
        let c = quad_ball(3, 2.0, Comparison::Le);
        let x = [0.4, -0.7, 0.9];
        for j in 0..3 {
            let s = c.section(&x, j).unwrap();
            let mut y = -3.0;
            while y <= 3.0 {
                let mut probe = x;
                probe[j] = y;
                assert_eq!(s.contains(y), c.contains(&probe), "j={j} y={y}");
                y += 0.037;
            }
        }
    }
}
