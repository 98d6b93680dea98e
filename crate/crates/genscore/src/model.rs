//! The pairwise interaction power model
//!
//! `p(x) ∝ exp( -(x^a)' K (x^a) / (2a) + eta' x^b / b )`
//!
//! with the conventions `x^0 / 0 = log x` (so `a = 0` uses logarithmic
//! sufficient statistics and `b = 0` a logarithmic linear term) and the
//! centered variant dropping the linear term entirely.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::util::xpow;
use crate::weights::{AlphaSpec, WeightMode, WeightSpec};
use crate::{Error, Result};

/// The `(a, b, centered)` signature of a model, enough to drive the
/// estimating-equation assembly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    pub a: f64,
    pub b: f64,
    pub centered: bool,
}

impl ModelShape {
    pub fn new(a: f64, b: f64, centered: bool) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) || !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "model exponents must be finite and >= 0, got a={a}, b={b}"
            )));
        }
        Ok(ModelShape { a, b, centered })
    }

    /// The coordinate-wise sufficient statistic: `x^a`, or `log x` when
    /// `a = 0`.
    pub fn stat(&self, x: f64) -> f64 {
        if self.a == 0.0 {
            x.ln()
        } else {
            xpow(x, self.a)
        }
    }
}

/// A fully parameterized model.
#[derive(Clone, Debug, PartialEq)]
pub struct ABModel {
    pub a: f64,
    pub b: f64,
    pub k: DMatrix<f64>,
    pub eta: DVector<f64>,
    pub centered: bool,
}

/// JSON form: `K` row-major, `eta` optional for centered models.
#[derive(Serialize, Deserialize)]
struct ABModelJson {
    a: f64,
    b: f64,
    m: usize,
    k: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<Vec<f64>>,
    #[serde(default)]
    centered: bool,
}

impl ABModel {
    pub fn new(a: f64, b: f64, k: DMatrix<f64>, eta: DVector<f64>, centered: bool) -> Result<Self> {
        ModelShape::new(a, b, centered)?;
        let m = k.nrows();
        if k.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: k.ncols() });
        }
        let scale = k.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        for i in 0..m {
            for j in 0..i {
                if (k[(i, j)] - k[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "interaction matrix must be symmetric: K[{i},{j}] != K[{j},{i}]"
                    )));
                }
            }
        }
        let eta = if centered { DVector::zeros(m) } else { eta };
        if eta.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: eta.len() });
        }
        Ok(ABModel { a, b, k, eta, centered })
    }

    pub fn centered(a: f64, k: DMatrix<f64>) -> Result<Self> {
        let m = k.nrows();
        ABModel::new(a, 0.0, k, DVector::zeros(m), true)
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape { a: self.a, b: self.b, centered: self.centered }
    }

    fn stats(&self, x: &[f64]) -> DVector<f64> {
        let shape = self.shape();
        DVector::from_iterator(x.len(), x.iter().map(|&v| shape.stat(v)))
    }

    /// Unnormalized log density. For `a = 0` (resp. `b = 0`) the
    /// corresponding term is `-(log x)'K(log x)/2` (resp.
    /// `eta' log x`).
    pub fn log_density_unnorm(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        let t = self.stats(x);
        let quad_scale = if self.a == 0.0 { 0.5 } else { 1.0 / (2.0 * self.a) };
        let mut v = -quad_scale * t.dot(&(&self.k * &t));
        if !self.centered {
            if self.b == 0.0 {
                for (j, &xj) in x.iter().enumerate() {
                    v += self.eta[j] * xj.ln();
                }
            } else {
                for (j, &xj) in x.iter().enumerate() {
                    v += self.eta[j] * xpow(xj, self.b) / self.b;
                }
            }
        }
        Ok(v)
    }

    /// `d/dx_j log p` for every `j`.
    pub fn log_density_grad(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_x(x)?;
        let t = self.stats(x);
        let kt = &self.k * &t;
        let m = x.len();
        let mut g = DVector::zeros(m);
        for j in 0..m {
            let xa1 = if self.a == 0.0 { 1.0 / x[j] } else { xpow(x[j], self.a - 1.0) };
            g[j] = -xa1 * kt[j];
            if !self.centered {
                let xb1 = if self.b == 0.0 { 1.0 / x[j] } else { xpow(x[j], self.b - 1.0) };
                g[j] += self.eta[j] * xb1;
            }
        }
        Ok(g)
    }

    /// Diagonal second derivatives `d^2/dx_j^2 log p`.
    pub fn log_density_hess_diag(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_x(x)?;
        let t = self.stats(x);
        let kt = &self.k * &t;
        let m = x.len();
        let mut h = DVector::zeros(m);
        for j in 0..m {
            // for a = 0 the coefficient pair (a-1, a) becomes (-1, 1)
            let (ca, cb, xa2, x2a2) = if self.a == 0.0 {
                (-1.0, 1.0, xpow(x[j], -2.0), xpow(x[j], -2.0))
            } else {
                (self.a - 1.0, self.a, xpow(x[j], self.a - 2.0), xpow(x[j], 2.0 * self.a - 2.0))
            };
            h[j] = -ca * xa2 * kt[j] - cb * self.k[(j, j)] * x2a2;
            if !self.centered {
                let (cbb, xb2) = if self.b == 0.0 {
                    (-1.0, xpow(x[j], -2.0))
                } else {
                    (self.b - 1.0, xpow(x[j], self.b - 2.0))
                };
                h[j] += self.eta[j] * cbb * xb2;
            }
        }
        Ok(h)
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let j = ABModelJson {
            a: self.a,
            b: self.b,
            m: self.dim(),
            k: self.k.transpose().as_slice().to_vec(),
            eta: if self.centered { None } else { Some(self.eta.iter().cloned().collect()) },
            centered: self.centered,
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: ABModelJson = serde_json::from_str(s)?;
        if j.k.len() != j.m * j.m {
            return Err(Error::DimensionMismatch { expected: j.m * j.m, got: j.k.len() });
        }
        let k = DMatrix::from_row_slice(j.m, j.m, &j.k);
        let eta = match j.eta {
            Some(v) => DVector::from_vec(v),
            None => DVector::zeros(j.m),
        };
        ABModel::new(j.a, j.b, k, eta, j.centered)
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn min_eigenvalue(k: &DMatrix<f64>) -> f64 {
    k.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Check the normalizability conditions for the model on `domain`.
/// Positive definiteness of `K` is always required; uncentered models
/// additionally need one of the growth conditions relating `a`, `b`,
/// and `eta`. Unknown domain shapes are treated as unbounded
/// (conservative).
pub fn check_normalizable(model: &ABModel, domain: &DomainSpec) -> Result<()> {
    if domain.dim != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: domain.dim });
    }
    let lam = min_eigenvalue(&model.k);
    let scale = model.k.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if lam <= 1e-12 * scale {
        return Err(Error::NotNormalizable {
            condition: format!("positive definiteness of K (min eigenvalue {lam:.3e})"),
        });
    }
    if model.centered {
        return Ok(());
    }
    let (a, b) = (model.a, model.b);
    // growth condition: any one of the three admissible (a, b, eta) regimes
    if (2.0 * a > b && b > 0.0) || (a == 0.0 && b == 0.0) {
        return Ok(());
    }
    if a > 0.0 && b == 0.0 {
        return if model.eta.iter().all(|&e| e > -1.0) {
            Ok(())
        } else {
            Err(Error::NotNormalizable {
                condition: "a > 0, b = 0 requires every eta_j > -1".into(),
            })
        };
    }
    if a == 0.0 && b > 0.0 {
        // the sign restriction on eta applies to unbounded coordinates
        if domain.is_bounded() || model.eta.iter().all(|&e| e <= 0.0) {
            return Ok(());
        }
        return Err(Error::NotNormalizable {
            condition: "a = 0, b > 0 requires eta_j <= 0 for unbounded coordinates".into(),
        });
    }
    Err(Error::NotNormalizable {
        condition: format!("exponent pair (a={a}, b={b}) admits no integrable regime"),
    })
}

/// Check that the weight exponents are steep enough for the model:
/// the integration-by-parts argument behind the loss needs
/// `alpha_j > max(0, 1-a, 1-b)` for positive exponent pairs,
/// `alpha_j > 1 - eta_j` when `b = 0`, and merely `alpha_j >= 0` for
/// logarithmic models. g0 weights validate like `alpha = 1`.
pub fn check_h_valid(model: &ABModel, weight: &WeightSpec, domain: &DomainSpec) -> Result<()> {
    if domain.dim != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: domain.dim });
    }
    let m = model.dim();
    let alpha = match weight.mode {
        WeightMode::G0 => AlphaSpec::Scalar(1.0).resolve(m)?,
        WeightMode::Componentwise => weight.alpha.resolve(m)?,
    };
    let (a, b) = (model.a, model.b);
    for (j, &al) in alpha.iter().enumerate() {
        let bound = if a == 0.0 {
            // alpha >= 0 suffices; enforced by AlphaSpec::resolve
            continue;
        } else if model.centered {
            (1.0 - a).max(0.0)
        } else if b == 0.0 {
            (1.0 - model.eta[j]).max(0.0).max(1.0 - a)
        } else {
            (1.0 - a).max(1.0 - b).max(0.0)
        };
        if !(al > bound) {
            return Err(Error::InvalidWeight(format!(
                "exponent alpha_{j} = {al} must exceed {bound} for a={a}, b={b}"
            )));
        }
    }
    Ok(())
}
