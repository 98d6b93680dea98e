//! Weight functions for the weighted score matching loss.
//!
//! A [`WeightSpec`] chooses per-coordinate power weights applied to the
//! truncated section distances (`componentwise` mode, weight
//! `phi_j(x)^alpha_j`) or a single shared weight equal to the truncated
//! euclidean boundary distance (`g0` mode). Truncation constants come
//! from an explicit vector, from per-coordinate sample quantiles of the
//! untruncated distances, or are absent.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::interval::ext_real;
use crate::util::xpow;
use crate::{Error, Result};

/// Per-coordinate truncation constants; entries are positive, possibly
/// `+inf` (no truncation for that coordinate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TruncationVector(pub Vec<f64>);

impl TruncationVector {
    pub fn untruncated(m: usize) -> Self {
        TruncationVector(vec![f64::INFINITY; m])
    }

    pub fn constant(c: f64, m: usize) -> Self {
        TruncationVector(vec![c; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        for (j, &c) in self.0.iter().enumerate() {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "truncation constant for coordinate {j} must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Weight exponents: one shared value or one per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Scalar(f64),
    PerCoordinate(Vec<f64>),
}

impl AlphaSpec {
    pub fn resolve(&self, m: usize) -> Result<Vec<f64>> {
        let v = match self {
            AlphaSpec::Scalar(a) => vec![*a; m],
            AlphaSpec::PerCoordinate(v) => {
                if v.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, got: v.len() });
                }
                v.clone()
            }
        };
        for (j, &a) in v.iter().enumerate() {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "weight exponent for coordinate {j} must be finite and >= 0, got {a}"
                )));
            }
        }
        Ok(v)
    }
}

/// How truncation constants are determined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TruncationPolicy {
    /// No truncation (all constants `+inf`).
    None,
    /// Nearest-rank sample quantile of the untruncated distances at
    /// level `pi` in (0, 1].
    Quantile { pi: f64 },
    /// Explicit constants; a single entry broadcasts to all coordinates.
    Explicit {
        #[serde(deserialize_with = "de_c_list", serialize_with = "ser_c_list")]
        c: Vec<f64>,
    },
}

fn ser_c_list<S: serde::Serializer>(v: &Vec<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        struct E(f64);
        impl Serialize for E {
            fn serialize<S2: serde::Serializer>(&self, s2: S2) -> std::result::Result<S2::Ok, S2::Error> {
                ext_real::serialize(&self.0, s2)
            }
        }
        seq.serialize_element(&E(*x))?;
    }
    seq.end()
}

fn de_c_list<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    struct E(#[serde(with = "ext_real")] f64);
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(E),
        Many(Vec<E>),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::One(e) => vec![e.0],
        Raw::Many(v) => v.into_iter().map(|e| e.0).collect(),
    })
}

/// Which distance feeds the weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Componentwise,
    G0,
}

/// Full weight specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub alpha: AlphaSpec,
    pub truncation: TruncationPolicy,
    pub mode: WeightMode,
}

impl WeightSpec {
    /// Componentwise power weights with a shared exponent and quantile
    /// truncation; the workhorse configuration.
    pub fn power(alpha: f64, pi: f64) -> Self {
        WeightSpec {
            alpha: AlphaSpec::Scalar(alpha),
            truncation: TruncationPolicy::Quantile { pi },
            mode: WeightMode::Componentwise,
        }
    }

    /// Untruncated componentwise power weights.
    pub fn power_untruncated(alpha: f64) -> Self {
        WeightSpec {
            alpha: AlphaSpec::Scalar(alpha),
            truncation: TruncationPolicy::None,
            mode: WeightMode::Componentwise,
        }
    }

    /// g0 (euclidean boundary distance) weights with quantile truncation.
    pub fn g0(pi: f64) -> Self {
        WeightSpec {
            alpha: AlphaSpec::Scalar(1.0),
            truncation: TruncationPolicy::Quantile { pi },
            mode: WeightMode::G0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Nearest-rank quantile: the `ceil(pi * k)`-th smallest of the finite
/// values; `1.0` when every value is infinite.
fn nearest_rank_quantile(values: &mut Vec<f64>, pi: f64) -> f64 {
    values.retain(|v| v.is_finite());
    if values.is_empty() {
        return 1.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = ((pi * values.len() as f64).ceil() as usize).clamp(1, values.len());
    values[k - 1]
}

/// Resolve the truncation constants for `spec` on the given data
/// (rows = observations). Quantile truncation uses the untruncated
/// componentwise distances in `componentwise` mode and the untruncated
/// euclidean boundary distances (shared constant) in `g0` mode.
pub fn resolve_truncation(
    spec: &WeightSpec,
    domain: &DomainSpec,
    data: &DMatrix<f64>,
) -> Result<TruncationVector> {
    let m = domain.dim;
    let tv = match &spec.truncation {
        TruncationPolicy::None => TruncationVector::untruncated(m),
        TruncationPolicy::Explicit { c } => {
            let v = if c.len() == 1 {
                TruncationVector::constant(c[0], m)
            } else if c.len() == m {
                TruncationVector(c.clone())
            } else {
                return Err(Error::DimensionMismatch { expected: m, got: c.len() });
            };
            if spec.mode == WeightMode::G0 && v.0.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::InvalidParameter(
                    "g0 mode uses a single shared truncation constant".into(),
                ));
            }
            v
        }
        TruncationPolicy::Quantile { pi } => {
            if !(*pi > 0.0 && *pi <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "quantile level must be in (0, 1], got {pi}"
                )));
            }
            if data.nrows() == 0 {
                return Err(Error::EmptyData("quantile truncation needs at least one observation"));
            }
            let inf = TruncationVector::untruncated(m);
            match spec.mode {
                WeightMode::Componentwise => {
                    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(data.nrows()); m];
                    for i in 0..data.nrows() {
                        let row: Vec<f64> = data.row(i).iter().cloned().collect();
                        let phis = domain.phi(inf.as_slice(), &row).map_err(|e| match e {
                            Error::OutOfDomain { .. } => Error::OutOfDomain { row: Some(i) },
                            other => other,
                        })?;
                        for (j, p) in phis.into_iter().enumerate() {
                            cols[j].push(p);
                        }
                    }
                    TruncationVector(
                        cols.iter_mut()
                            .map(|v| nearest_rank_quantile(v, *pi))
                            .collect(),
                    )
                }
                WeightMode::G0 => {
                    let mut dists = Vec::with_capacity(data.nrows());
                    for i in 0..data.nrows() {
                        let row: Vec<f64> = data.row(i).iter().cloned().collect();
                        let d = domain.g0_distance(f64::INFINITY, &row).map_err(|e| match e {
                            Error::OutOfDomain { .. } => Error::OutOfDomain { row: Some(i) },
                            other => other,
                        })?;
                        dists.push(d);
                    }
                    TruncationVector::constant(nearest_rank_quantile(&mut dists, *pi), m)
                }
            }
        }
    };
    tv.validate()?;
    Ok(tv)
}

/// The weight vector `(h_j o phi_j)(x)` (componentwise) or `g0(x) * 1`
/// (g0 mode). `0^0 = 1`, so exponent zero gives the unweighted loss.
pub fn h_of_phi(
    spec: &WeightSpec,
    c: &TruncationVector,
    domain: &DomainSpec,
    x: &[f64],
) -> Result<Vec<f64>> {
    match spec.mode {
        WeightMode::Componentwise => {
            let alpha = spec.alpha.resolve(domain.dim)?;
            let phis = domain.phi(c.as_slice(), x)?;
            phis.iter()
                .zip(&alpha)
                .enumerate()
                .map(|(j, (&p, &a))| {
                    if p == 0.0 && a > 0.0 && a < 1.0 {
                        Err(Error::BoundarySingularity { coord: j, alpha: a })
                    } else {
                        Ok(xpow(p, a))
                    }
                })
                .collect()
        }
        WeightMode::G0 => {
            let d = domain.g0_distance(c.0[0], x)?;
            Ok(vec![d; domain.dim])
        }
    }
}

/// Partial derivative of the `j`-th weight in its own coordinate:
/// `alpha_j * phi_j^{alpha_j - 1} * sign` on the componentwise branch
/// (zero when truncated or when `alpha_j = 0`), or the `j`-th component
/// of the g0 gradient in g0 mode.
pub fn h_of_phi_deriv(
    spec: &WeightSpec,
    c: &TruncationVector,
    domain: &DomainSpec,
    x: &[f64],
    j: usize,
) -> Result<f64> {
    match spec.mode {
        WeightMode::Componentwise => {
            let alpha = spec.alpha.resolve(domain.dim)?;
            let a = alpha[j];
            if a == 0.0 {
                return Ok(0.0);
            }
            let sign = domain.phi_deriv_sign(c.as_slice(), x, j)?;
            if sign == 0 {
                return Ok(0.0);
            }
            let p = domain.phi(c.as_slice(), x)?[j];
            if p == 0.0 && a < 1.0 {
                return Err(Error::BoundarySingularity { coord: j, alpha: a });
            }
            Ok(a * xpow(p, a - 1.0) * sign as f64)
        }
        WeightMode::G0 => Ok(domain.g0_grad(c.0[0], x)?[j]),
    }
}
