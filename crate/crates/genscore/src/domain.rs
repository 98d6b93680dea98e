//! Domain descriptions and their section geometry.
//!
//! A domain is a subset of R^m described by a [`Shape`]. The central
//! operations are:
//!
//! * [`DomainSpec::contains`]: exact membership (endpoint flags honored),
//! * [`DomainSpec::section`]: the one-dimensional slice along coordinate
//!   `j` through a point, always a finite union of disjoint intervals,
//! * [`DomainSpec::phi`]: the truncated component-wise distance of each
//!   coordinate to the finite endpoints of its own section component,
//! * [`DomainSpec::g0_distance`]: the truncated euclidean distance to
//!   the component-wise boundary, available in closed form for a family
//!   of shapes (orthants, products, l2 balls and their complements).

use serde::{Deserialize, Serialize};

use crate::interval::{Interval, IntervalUnion};
use crate::poly::PolyConstraint;
use crate::{Error, Result};

/// Geometric shape of a domain in R^m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// All of R^m.
    Full,
    /// The non-negative orthant.
    Nonneg,
    /// A per-coordinate product of interval unions.
    Product { coords: Vec<IntervalUnion> },
    /// `{ x : ||x||_q <= r }`, optionally intersected with the orthant.
    LqBall {
        q: f64,
        r: f64,
        #[serde(default)]
        nonneg: bool,
    },
    /// `{ x : ||x||_q >= r }`, optionally intersected with the orthant.
    LqBallComplement {
        q: f64,
        r: f64,
        #[serde(default)]
        nonneg: bool,
    },
    /// A single polynomial inequality.
    Poly(PolyConstraint),
    /// Intersection of child domains.
    Intersection { children: Vec<DomainSpec> },
    /// Union of child domains.
    Union { children: Vec<DomainSpec> },
}

/// A domain: dimension plus shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub dim: usize,
    pub shape: Shape,
}

impl DomainSpec {
    pub fn new(dim: usize, shape: Shape) -> Result<Self> {
        let d = DomainSpec { dim, shape };
        d.validate()?;
        Ok(d)
    }

    pub fn full(dim: usize) -> Self {
        DomainSpec { dim, shape: Shape::Full }
    }

    pub fn nonneg(dim: usize) -> Self {
        DomainSpec { dim, shape: Shape::Nonneg }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("domain dimension must be positive".into()));
        }
        match &self.shape {
            Shape::Full | Shape::Nonneg => Ok(()),
            Shape::Product { coords } => {
                if coords.len() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: coords.len() });
                }
                Ok(())
            }
            Shape::LqBall { q, r, .. } | Shape::LqBallComplement { q, r, .. } => {
                if !(*q >= 1.0 && q.is_finite()) {
                    return Err(Error::InvalidParameter(format!("lq norm order must be finite and >= 1, got {q}")));
                }
                if !(*r > 0.0 && r.is_finite()) {
                    return Err(Error::InvalidParameter(format!("lq radius must be positive and finite, got {r}")));
                }
                Ok(())
            }
            Shape::Poly(p) => p.validate(self.dim),
            Shape::Intersection { children } | Shape::Union { children } => {
                if children.is_empty() {
                    return Err(Error::InvalidParameter("intersection/union needs at least one child".into()));
                }
                for c in children {
                    if c.dim != self.dim {
                        return Err(Error::DimensionMismatch { expected: self.dim, got: c.dim });
                    }
                    c.validate()?;
                }
                Ok(())
            }
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Exact membership; endpoint open/closed flags are honored.
    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        match &self.shape {
            Shape::Full => true,
            Shape::Nonneg => x.iter().all(|&v| v >= 0.0),
            Shape::Product { coords } => coords.iter().zip(x).all(|(u, &v)| u.contains(v)),
            Shape::LqBall { q, r, nonneg } => {
                (!nonneg || x.iter().all(|&v| v >= 0.0)) && lq_power_sum(x, *q) <= r.powf(*q)
            }
            Shape::LqBallComplement { q, r, nonneg } => {
                (!nonneg || x.iter().all(|&v| v >= 0.0)) && lq_power_sum(x, *q) >= r.powf(*q)
            }
            Shape::Poly(p) => p.contains(x),
            Shape::Intersection { children } => children.iter().all(|c| c.contains(x)),
            Shape::Union { children } => children.iter().any(|c| c.contains(x)),
        }
    }

    /// The section `{ y : (y; x_{-j}) in D }`. Depends on `x_{-j}` only;
    /// empty exactly when `x_{-j}` admits no feasible `y`.
    pub fn section(&self, x: &[f64], j: usize) -> Result<IntervalUnion> {
        self.check_point(x)?;
        if j >= self.dim {
            return Err(Error::InvalidParameter(format!("coordinate index {j} out of range for dim {}", self.dim)));
        }
        self.section_unchecked(x, j)
    }

    fn section_unchecked(&self, x: &[f64], j: usize) -> Result<IntervalUnion> {
        match &self.shape {
            Shape::Full => Ok(IntervalUnion::all()),
            Shape::Nonneg => {
                if others_nonneg(x, j) {
                    Ok(IntervalUnion::of(half_line_up(0.0)))
                } else {
                    Ok(IntervalUnion::empty())
                }
            }
            Shape::Product { coords } => {
                let feasible = coords
                    .iter()
                    .zip(x)
                    .enumerate()
                    .all(|(k, (u, &v))| k == j || u.contains(v));
                if feasible {
                    Ok(coords[j].clone())
                } else {
                    Ok(IntervalUnion::empty())
                }
            }
            Shape::LqBall { q, r, nonneg } => {
                if *nonneg && !others_nonneg(x, j) {
                    return Ok(IntervalUnion::empty());
                }
                let rem = r.powf(*q) - lq_power_sum_excluding(x, *q, j);
                if rem < 0.0 {
                    return Ok(IntervalUnion::empty());
                }
                let s = rem.powf(1.0 / *q);
                let lo = if *nonneg { 0.0 } else { -s };
                Ok(IntervalUnion::of(Interval::closed(lo, s)?))
            }
            Shape::LqBallComplement { q, r, nonneg } => {
                if *nonneg && !others_nonneg(x, j) {
                    return Ok(IntervalUnion::empty());
                }
                let rem = r.powf(*q) - lq_power_sum_excluding(x, *q, j);
                if rem <= 0.0 {
                    return Ok(if *nonneg {
                        IntervalUnion::of(half_line_up(0.0))
                    } else {
                        IntervalUnion::all()
                    });
                }
                let s = rem.powf(1.0 / *q);
                if *nonneg {
                    Ok(IntervalUnion::of(half_line_up(s)))
                } else {
                    Ok(IntervalUnion::from_parts(vec![half_line_down(-s), half_line_up(s)]))
                }
            }
            Shape::Poly(p) => p.section(x, j),
            Shape::Intersection { children } => {
                let mut acc = IntervalUnion::all();
                for c in children {
                    acc = acc.intersect(&c.section_unchecked(x, j)?);
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc)
            }
            Shape::Union { children } => {
                let mut acc = IntervalUnion::empty();
                for c in children {
                    acc = acc.union(&c.section_unchecked(x, j)?);
                }
                Ok(acc)
            }
        }
    }

    /// Conservative superset of the domain's projection onto
    /// coordinate `j`, independent of the other coordinates. Used to
    /// seed feasible-point searches when exact sections are empty.
    pub(crate) fn coordinate_hull(&self, j: usize) -> IntervalUnion {
        match &self.shape {
            Shape::Full => IntervalUnion::all(),
            Shape::Nonneg => IntervalUnion::of(half_line_up(0.0)),
            Shape::Product { coords } => coords[j].clone(),
            Shape::LqBall { r, nonneg, .. } => {
                let lo = if *nonneg { 0.0 } else { -*r };
                match Interval::closed(lo, *r) {
                    Ok(iv) => IntervalUnion::of(iv),
                    Err(_) => IntervalUnion::empty(),
                }
            }
            Shape::LqBallComplement { nonneg, .. } => {
                if *nonneg {
                    IntervalUnion::of(half_line_up(0.0))
                } else {
                    IntervalUnion::all()
                }
            }
            Shape::Poly(_) => IntervalUnion::all(),
            Shape::Intersection { children } => children
                .iter()
                .fold(IntervalUnion::all(), |acc, c| acc.intersect(&c.coordinate_hull(j))),
            Shape::Union { children } => children
                .iter()
                .fold(IntervalUnion::empty(), |acc, c| acc.union(&c.coordinate_hull(j))),
        }
    }

    /// Truncated component-wise distances `phi_j(x)` for all
    /// coordinates. `c` holds the per-coordinate truncation constants
    /// (entries may be `+inf` for no truncation). Requires `x` in the
    /// domain; a coordinate exactly on a finite section endpoint yields
    /// a zero distance.
    pub fn phi(&self, c: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        if c.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: c.len() });
        }
        if !self.contains(x) {
            return Err(Error::OutOfDomain { row: None });
        }
        let mut out = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let section = self.section_unchecked(x, j)?;
            let (d, _) = section
                .truncated_distance(c[j], x[j])
                .ok_or(Error::OutOfDomain { row: None })?;
            out.push(d);
        }
        Ok(out)
    }

    /// Branch marker of `phi_j` at `x`: `0` when the truncation constant
    /// is active (or the component is unbounded on both sides), `+1` on
    /// the ascending branch (lower endpoint active), `-1` on the
    /// descending branch. Ties resolve to truncation first, then
    /// ascending.
    pub fn phi_deriv_sign(&self, c: &[f64], x: &[f64], j: usize) -> Result<i8> {
        self.check_point(x)?;
        if !self.contains(x) {
            return Err(Error::OutOfDomain { row: None });
        }
        let section = self.section_unchecked(x, j)?;
        let (_, s) = section
            .truncated_distance(c[j], x[j])
            .ok_or(Error::OutOfDomain { row: None })?;
        Ok(s)
    }

    /// Conservative boundedness check (used to pick default diagonal
    /// multipliers): `true` guarantees the domain is bounded.
    pub fn is_bounded(&self) -> bool {
        match &self.shape {
            Shape::Full | Shape::Nonneg => false,
            Shape::Product { coords } => coords.iter().all(|u| u.is_bounded()),
            Shape::LqBall { .. } => true,
            Shape::LqBallComplement { .. } => false,
            Shape::Poly(_) => false,
            Shape::Intersection { children } => children.iter().any(|c| c.is_bounded()),
            Shape::Union { children } => children.iter().all(|c| c.is_bounded()),
        }
    }

    /// Truncated euclidean distance to the component-wise boundary:
    /// `min(c, inf_{x' in boundary} ||x - x'||_2)`, where the boundary
    /// collects all points with some coordinate on a finite endpoint of
    /// its section. Available for shapes with a closed-form boundary
    /// distance; other shapes return [`Error::UnsupportedDomain`].
    pub fn g0_distance(&self, c: f64, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if !self.contains(x) {
            return Err(Error::OutOfDomain { row: None });
        }
        let (d, _) = self.g0_closed_form(x)?;
        Ok(d.min(c))
    }

    /// Gradient of [`DomainSpec::g0_distance`] at `x`; the zero vector
    /// where the truncation constant is active. Defined almost
    /// everywhere; on the measure-zero tie sets the branch chosen by the
    /// distance computation wins.
    pub fn g0_grad(&self, c: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        if !self.contains(x) {
            return Err(Error::OutOfDomain { row: None });
        }
        let (d, grad) = self.g0_closed_form(x)?;
        if d >= c {
            return Ok(vec![0.0; self.dim]);
        }
        Ok(grad)
    }

    /// Untruncated boundary distance and its gradient for the supported
    /// closed-form shapes.
    fn g0_closed_form(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let m = self.dim;
        match &self.shape {
            Shape::Full => Ok((f64::INFINITY, vec![0.0; m])),
            Shape::Nonneg => {
                let mut best = f64::INFINITY;
                let mut arg = 0;
                for (j, &v) in x.iter().enumerate() {
                    if v < best {
                        best = v;
                        arg = j;
                    }
                }
                let mut grad = vec![0.0; m];
                grad[arg] = 1.0;
                Ok((best, grad))
            }
            Shape::Product { coords } => {
                let mut best = f64::INFINITY;
                let mut grad = vec![0.0; m];
                let mut arg = None;
                for (j, (u, &v)) in coords.iter().zip(x).enumerate() {
                    for e in u.finite_endpoints() {
                        let d = (v - e).abs();
                        if d < best {
                            best = d;
                            arg = Some((j, (v - e).signum()));
                        }
                    }
                }
                if let Some((j, s)) = arg {
                    grad[j] = s;
                }
                Ok((best, grad))
            }
            Shape::LqBall { q, r, nonneg } => {
                require_l2(*q)?;
                let norm = l2_norm(x);
                let sphere = r - norm;
                let sphere_grad = radial_grad(x, norm, -1.0, m);
                if !nonneg {
                    return Ok((sphere, sphere_grad));
                }
                // walls { x_j = 0 } are reachable without leaving the ball
                let (wall, wall_j) = min_coord(x);
                if wall <= sphere {
                    let mut grad = vec![0.0; m];
                    grad[wall_j] = 1.0;
                    Ok((wall, grad))
                } else {
                    Ok((sphere, sphere_grad))
                }
            }
            Shape::LqBallComplement { q, r, nonneg } => {
                require_l2(*q)?;
                let norm = l2_norm(x);
                let sphere = norm - r;
                let sphere_grad = radial_grad(x, norm, 1.0, m);
                if !nonneg {
                    return Ok((sphere, sphere_grad));
                }
                if m == 1 {
                    // the only boundary point is {r}
                    return Ok((sphere, sphere_grad));
                }
                // wall j: { y_j = 0, y_{-j} >= 0, ||y_{-j}|| >= r };
                // reaching it may require pushing x_{-j} out to radius r
                let mut best = sphere;
                let mut best_grad = sphere_grad;
                for j in 0..m {
                    let rest_sq = x.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v * v).sum::<f64>();
                    let rest = rest_sq.sqrt();
                    if rest >= *r {
                        if x[j] < best {
                            best = x[j];
                            let mut g = vec![0.0; m];
                            g[j] = 1.0;
                            best_grad = g;
                        }
                    } else {
                        let gap = r - rest;
                        let d = (x[j] * x[j] + gap * gap).sqrt();
                        if d < best {
                            best = d;
                            let mut g = vec![0.0; m];
                            g[j] = x[j] / d;
                            if rest > 0.0 {
                                for k in 0..m {
                                    if k != j {
                                        g[k] = gap * x[k] / (rest * d);
                                    }
                                }
                            }
                            best_grad = g;
                        }
                    }
                }
                Ok((best, best_grad))
            }
            Shape::Intersection { children } => {
                // normalize "orthant intersect ball" to the nonneg flag form
                if let Some(normalized) = self.normalize_orthant_intersection(children) {
                    return normalized.g0_closed_form(x);
                }
                Err(Error::UnsupportedDomain(
                    "boundary distance supports intersections only of the orthant with one l2 ball or complement".into(),
                ))
            }
            Shape::Poly(_) | Shape::Union { .. } => Err(Error::UnsupportedDomain(
                "boundary distance is available for full space, orthant, products, and l2 balls/complements".into(),
            )),
        }
    }

    /// Rewrite `Nonneg ∩ LqBall(q=2)` (or complement) as the equivalent
    /// shape with the `nonneg` flag set.
    fn normalize_orthant_intersection(&self, children: &[DomainSpec]) -> Option<DomainSpec> {
        let mut ball: Option<Shape> = None;
        let mut saw_orthant = false;
        for c in children {
            match &c.shape {
                Shape::Nonneg => saw_orthant = true,
                Shape::LqBall { q, r, .. } if ball.is_none() => {
                    ball = Some(Shape::LqBall { q: *q, r: *r, nonneg: true })
                }
                Shape::LqBallComplement { q, r, .. } if ball.is_none() => {
                    ball = Some(Shape::LqBallComplement { q: *q, r: *r, nonneg: true })
                }
                _ => return None,
            }
        }
        match (saw_orthant, ball) {
            (true, Some(shape)) => Some(DomainSpec { dim: self.dim, shape }),
            (true, None) => Some(DomainSpec { dim: self.dim, shape: Shape::Nonneg }),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: DomainSpec = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }
}

fn others_nonneg(x: &[f64], j: usize) -> bool {
    x.iter().enumerate().all(|(k, &v)| k == j || v >= 0.0)
}

fn half_line_up(lo: f64) -> Interval {
    Interval::new(lo, f64::INFINITY, true, false).expect("valid half line")
}

fn half_line_down(hi: f64) -> Interval {
    Interval::new(f64::NEG_INFINITY, hi, false, true).expect("valid half line")
}

fn lq_power_sum(x: &[f64], q: f64) -> f64 {
    x.iter().map(|&v| v.abs().powf(q)).sum()
}

fn lq_power_sum_excluding(x: &[f64], q: f64, j: usize) -> f64 {
    x.iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, &v)| v.abs().powf(q))
        .sum()
}

fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|&v| v * v).sum::<f64>().sqrt()
}

fn radial_grad(x: &[f64], norm: f64, sign: f64, m: usize) -> Vec<f64> {
    if norm == 0.0 {
        return vec![0.0; m];
    }
    x.iter().map(|&v| sign * v / norm).collect()
}

fn min_coord(x: &[f64]) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (j, &v) in x.iter().enumerate() {
        if v < best {
            best = v;
            arg = j;
        }
    }
    (best, arg)
}

fn require_l2(q: f64) -> Result<()> {
    if q == 2.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedDomain(format!(
            "boundary distance for lq balls requires q = 2, got q = {q}"
        )))
    }
}
