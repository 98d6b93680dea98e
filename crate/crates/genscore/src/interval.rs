//! One-dimensional intervals and finite unions of disjoint intervals.
//!
//! These are the values returned by section computations: every
//! coordinate slice of a supported domain is a union of disjoint
//! intervals, each possibly unbounded on either side. Endpoint
//! closedness is tracked exactly; it affects membership tests only,
//! distances and weights are insensitive to it.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Serialize f64 allowing the JSON strings "inf" / "-inf" for the two
/// infinities (JSON has no literal for them).
pub(crate) mod ext_real {
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(D::Error::custom(format!("expected number, \"inf\" or \"-inf\", got \"{other}\""))),
            },
        }
    }
}

/// A single non-empty interval. Infinite bounds are always open.
/// A degenerate point interval has `lower == upper` with both ends closed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "ext_real")]
    pub lower: f64,
    #[serde(with = "ext_real")]
    pub upper: f64,
    #[serde(default)]
    pub lower_closed: bool,
    #[serde(default)]
    pub upper_closed: bool,
}

impl Interval {
    /// Build a validated interval. Infinite ends are forced open.
    pub fn new(lower: f64, upper: f64, lower_closed: bool, upper_closed: bool) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::InvalidParameter("interval bound is NaN".into()));
        }
        if lower > upper {
            return Err(Error::InvalidParameter(format!(
                "interval lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        let lower_closed = lower_closed && lower.is_finite();
        let upper_closed = upper_closed && upper.is_finite();
        if lower == upper && !(lower_closed && upper_closed) {
            return Err(Error::InvalidParameter(
                "degenerate interval must be closed on both ends".into(),
            ));
        }
        Ok(Interval { lower, upper, lower_closed, upper_closed })
    }

    /// Closed interval `[lower, upper]`.
    pub fn closed(lower: f64, upper: f64) -> Result<Self> {
        Interval::new(lower, upper, true, true)
    }

    /// The whole real line.
    pub fn all() -> Self {
        Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY, lower_closed: false, upper_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lower_closed { x >= self.lower } else { x > self.lower };
        let below = if self.upper_closed { x <= self.upper } else { x < self.upper };
        above && below
    }

    /// Intersection, or `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lower, lower_closed) = if self.lower > other.lower {
            (self.lower, self.lower_closed)
        } else if other.lower > self.lower {
            (other.lower, other.lower_closed)
        } else {
            (self.lower, self.lower_closed && other.lower_closed)
        };
        let (upper, upper_closed) = if self.upper < other.upper {
            (self.upper, self.upper_closed)
        } else if other.upper < self.upper {
            (other.upper, other.upper_closed)
        } else {
            (self.upper, self.upper_closed && other.upper_closed)
        };
        if lower < upper || (lower == upper && lower_closed && upper_closed) {
            Some(Interval { lower, upper, lower_closed, upper_closed })
        } else {
            None
        }
    }

    /// Whether `self` and `other` overlap or abut without a gap, i.e.
    /// their union is a single interval.
    fn touches(&self, other: &Interval) -> bool {
        if self.lower > other.lower {
            return other.touches(self);
        }
        // self.lower <= other.lower
        if other.lower < self.upper {
            return true;
        }
        other.lower == self.upper && (self.upper_closed || other.lower_closed)
    }
}

/// A finite union of disjoint, non-touching intervals kept sorted by
/// lower bound. The empty union represents the empty set.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion { parts: Vec::new() }
    }

    pub fn all() -> Self {
        IntervalUnion { parts: vec![Interval::all()] }
    }

    /// Normalize an arbitrary list of intervals: sort, merge whatever
    /// overlaps or abuts.
    pub fn from_parts(mut parts: Vec<Interval>) -> Self {
        parts.sort_by(|a, b| {
            a.lower
                .partial_cmp(&b.lower)
                .unwrap()
                .then_with(|| b.lower_closed.cmp(&a.lower_closed))
        });
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if last.touches(&p) => {
                    if p.upper > last.upper {
                        last.upper = p.upper;
                        last.upper_closed = p.upper_closed;
                    } else if p.upper == last.upper {
                        last.upper_closed = last.upper_closed || p.upper_closed;
                    }
                }
                _ => merged.push(p),
            }
        }
        IntervalUnion { parts: merged }
    }

    pub fn of(interval: Interval) -> Self {
        IntervalUnion { parts: vec![interval] }
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.contains(x))
    }

    /// The connected component whose closure contains `x`, if any.
    /// A point exactly on an open endpoint is attributed to the
    /// adjacent component, matching the closure convention used by the
    /// distance functions.
    pub fn component_containing(&self, x: f64) -> Option<&Interval> {
        self.parts
            .iter()
            .find(|p| p.contains(x) || p.lower == x || p.upper == x)
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                if let Some(c) = a.intersect(b) {
                    out.push(c);
                }
            }
        }
        IntervalUnion::from_parts(out)
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        IntervalUnion::from_parts(parts)
    }

    /// Every finite endpoint of every component, in ascending order.
    pub fn finite_endpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.parts {
            if p.lower.is_finite() {
                out.push(p.lower);
            }
            if p.upper.is_finite() && p.upper != p.lower {
                out.push(p.upper);
            }
        }
        out
    }

    /// Whether every component is bounded.
    pub fn is_bounded(&self) -> bool {
        self.parts
            .iter()
            .all(|p| p.lower.is_finite() && p.upper.is_finite())
    }

    /// Distance from `x` to the nearest finite endpoint, `+inf` when
    /// there is none.
    pub fn distance_to_endpoints(&self, x: f64) -> f64 {
        self.finite_endpoints()
            .iter()
            .map(|e| (x - e).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Truncated distance from `x` to the endpoints of its own
    /// component, together with the branch marker:
    /// `0` truncated (or interior of an unbounded-on-both-sides
    /// component), `+1` ascending branch (distance to the lower
    /// endpoint is active), `-1` descending branch. Ties resolve to
    /// truncation first, then ascending.
    ///
    /// Returns `None` when `x` lies in no component.
    pub fn truncated_distance(&self, c: f64, x: f64) -> Option<(f64, i8)> {
        let part = self.component_containing(x)?;
        let lo_fin = part.lower.is_finite();
        let hi_fin = part.upper.is_finite();
        let (dist, sign) = match (lo_fin, hi_fin) {
            (false, false) => (c, 0),
            (false, true) => {
                let d = part.upper - x;
                if c <= d {
                    (c, 0)
                } else {
                    (d, -1)
                }
            }
            (true, false) => {
                let d = x - part.lower;
                if c <= d {
                    (c, 0)
                } else {
                    (d, 1)
                }
            }
            (true, true) => {
                let asc = x - part.lower;
                let desc = part.upper - x;
                let d = asc.min(desc);
                if c <= d {
                    (c, 0)
                } else if asc <= desc {
                    (asc, 1)
                } else {
                    (desc, -1)
                }
            }
        };
        Some((dist, sign))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(l: f64, u: f64) -> Interval {
        Interval::closed(l, u).unwrap()
    }

    #[test]
    fn normalization_merges_overlaps_and_abutments() {
        let u = IntervalUnion::from_parts(vec![iv(0.0, 1.0), iv(0.5, 2.0)]);
        assert_eq!(u.parts().len(), 1);
        assert_eq!(u.parts()[0], iv(0.0, 2.0));

        // closed endpoint meeting an open one still connects
        let a = Interval::new(0.0, 1.0, true, false).unwrap();
        let b = Interval::new(1.0, 2.0, true, true).unwrap();
        let u = IntervalUnion::from_parts(vec![a, b]);
        assert_eq!(u.parts().len(), 1);

        // two open endpoints leave a puncture
        let a = Interval::new(0.0, 1.0, true, false).unwrap();
        let b = Interval::new(1.0, 2.0, false, true).unwrap();
        let u = IntervalUnion::from_parts(vec![a, b]);
        assert_eq!(u.parts().len(), 2);
        assert!(!u.contains(1.0));
    }

    #[test]
    fn intersect_respects_endpoint_flags() {
        let a = IntervalUnion::of(Interval::new(0.0, 1.0, true, false).unwrap());
        let b = IntervalUnion::of(Interval::new(1.0, 2.0, true, true).unwrap());
        assert!(a.intersect(&b).is_empty());

        let c = IntervalUnion::of(Interval::new(0.0, 1.0, true, true).unwrap());
        let i = c.intersect(&b);
        assert_eq!(i.parts().len(), 1);
        assert_eq!(i.parts()[0], iv(1.0, 1.0));
    }

    #[test]
    fn truncated_distance_four_cases() {
        // unbounded both sides
        let u = IntervalUnion::all();
        assert_eq!(u.truncated_distance(2.5, 0.3), Some((2.5, 0)));

        // [a, inf)
        let u = IntervalUnion::of(Interval::new(1.5, f64::INFINITY, true, false).unwrap());
        assert_eq!(u.truncated_distance(10.0, 2.0), Some((0.5, 1)));
        assert_eq!(u.truncated_distance(0.25, 2.0), Some((0.25, 0)));

        // (-inf, b]
        let u = IntervalUnion::of(Interval::new(f64::NEG_INFINITY, 1.0, false, true).unwrap());
        assert_eq!(u.truncated_distance(10.0, 0.4), Some((0.6, -1)));

        // bounded: min of both distances, tie goes to ascending
        let u = IntervalUnion::of(iv(-1.0, 1.0));
        assert_eq!(u.truncated_distance(10.0, 0.6), Some((0.4, -1)));
        assert_eq!(u.truncated_distance(10.0, -0.6), Some((0.4, 1)));
        assert_eq!(u.truncated_distance(10.0, 0.0), Some((1.0, 1)));
        // truncation wins at a tie with the distance
        assert_eq!(u.truncated_distance(0.4, 0.6), Some((0.4, 0)));
    }

    #[test]
    fn component_lookup_skips_other_parts() {
        let u = IntervalUnion::from_parts(vec![iv(-2.0, -1.5), iv(0.75, 1.0)]);
        assert_eq!(u.component_containing(0.8).unwrap(), &iv(0.75, 1.0));
        assert!(u.component_containing(0.0).is_none());
        let (d, sign) = u.truncated_distance(10.0, 0.8).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
        assert_eq!(sign, 1);
    }

    #[test]
    fn endpoint_membership_exact() {
        let half_open = Interval::new(0.0, 1.0, false, true).unwrap();
        assert!(!half_open.contains(0.0));
        assert!(half_open.contains(1.0));
        let point = iv(3.0, 3.0);
        assert!(point.contains(3.0));
    }

    #[test]
    fn json_round_trip_with_infinities() {
        let u = IntervalUnion::from_parts(vec![
            Interval::new(f64::NEG_INFINITY, -1.5, false, true).unwrap(),
            Interval::new(1.5, f64::INFINITY, true, false).unwrap(),
        ]);
        let s = serde_json::to_string(&u).unwrap();
        assert!(s.contains("\"-inf\""));
        let back: IntervalUnion = serde_json::from_str(&s).unwrap();
        assert_eq!(u, back);
    }
}
