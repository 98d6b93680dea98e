//! Quadratic-form assembly and regularized fitting
//!
//! The weighted score matching loss of an a-b model is, per column j,
//! a quadratic `theta_j' Gamma_j theta_j / 2 - g_j' theta_j` in the
//! stacked parameter `theta_j = (K_1j, .., K_mj, eta_j)` (the linear
//! part is dropped in centered mode). This module assembles the blocks
//! from data, applies the diagonal multiplier, and minimizes the
//! lasso-penalized loss column by column with warm starts along a
//! penalty path.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::domain::DomainSpec;
use crate::model::{ABModel, ModelShape};
use crate::solver::{kkt_residual, solve_penalized_qp};
use crate::util::xpow;
use crate::weights::{h_of_phi, h_of_phi_deriv, resolve_truncation, TruncationVector, WeightSpec};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_PATH_POINTS: usize = 50;
pub const DEFAULT_MIN_RATIO: f64 = 1e-3;
pub const DEFAULT_TAU: f64 = 3.0;

/// Rows per deterministic reduction chunk. Partial sums are merged in
/// chunk order, so results are bit-identical across thread counts.
const CHUNK_ROWS: usize = 256;

/// Assembled per-column quadratic forms.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaG {
    pub m: usize,
    pub n: usize,
    pub centered: bool,
    /// Per column j: a p x p symmetric PSD block, p = m (centered) or m+1.
    pub gamma: Vec<DMatrix<f64>>,
    /// Per column j: the p-vector of linear coefficients.
    pub g: Vec<DVector<f64>>,
    /// Truncation constants the weights were resolved to. Empty when
    /// the value was read back from a binary dump, which does not
    /// retain them.
    pub resolved_c: TruncationVector,
}

impl GammaG {
    /// Stacked parameter length per column.
    pub fn p(&self) -> usize {
        if self.centered {
            self.m
        } else {
            self.m + 1
        }
    }

    /// Column block with the K-diagonal entry scaled by `delta`.
    fn column_delta(&self, j: usize, delta: f64) -> DMatrix<f64> {
        let mut gm = self.gamma[j].clone();
        for k in 0..self.m {
            gm[(k, k)] *= delta;
        }
        gm
    }
}

/// Fitted parameters for one penalty level.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub lambda_k: f64,
    pub lambda_eta: f64,
    pub k_hat: DMatrix<f64>,
    /// Zero vector in centered mode.
    pub eta_hat: DVector<f64>,
    /// Largest sweep count over columns.
    pub iterations: usize,
    /// Largest optimality violation over columns.
    pub kkt_residual: f64,
    pub converged: bool,
    /// `max(|k_ij|, |k_ji|)` with zero diagonal.
    pub edge_scores: DMatrix<f64>,
}

impl FitResult {
    fn from_columns(
        lambda_k: f64,
        lambda_eta: f64,
        centered: bool,
        m: usize,
        cols: Vec<ColumnFit>,
    ) -> Self {
        let mut k_hat = DMatrix::zeros(m, m);
        let mut eta_hat = DVector::zeros(m);
        let mut iterations = 0;
        let mut kkt = 0.0f64;
        let mut converged = true;
        for (j, col) in cols.into_iter().enumerate() {
            for k in 0..m {
                k_hat[(k, j)] = col.theta[k];
            }
            if !centered {
                eta_hat[j] = col.theta[m];
            }
            iterations = iterations.max(col.iterations);
            kkt = kkt.max(col.kkt);
            converged &= col.converged;
        }
        let edge_scores = edge_scores_of(&k_hat);
        FitResult {
            lambda_k,
            lambda_eta,
            k_hat,
            eta_hat,
            iterations,
            kkt_residual: kkt,
            converged,
            edge_scores,
        }
    }

    /// Count of nonzero off-diagonal entries of the symmetrized support.
    pub fn edge_count(&self) -> usize {
        let m = self.k_hat.nrows();
        let mut c = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                if self.edge_scores[(i, j)] != 0.0 {
                    c += 1;
                }
            }
        }
        c
    }
}

fn edge_scores_of(k_hat: &DMatrix<f64>) -> DMatrix<f64> {
    let m = k_hat.nrows();
    let mut s = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                s[(i, j)] = k_hat[(i, j)].abs().max(k_hat[(j, i)].abs());
            }
        }
    }
    s
}

struct ColumnFit {
    theta: DVector<f64>,
    iterations: usize,
    kkt: f64,
    converged: bool,
}

/// Annihilating product: a zero coefficient kills the term even when
/// the power factor is infinite (datum on the boundary).
#[inline]
fn prod(c: f64, p: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * p
    }
}

/// Per-column partial sums over a chunk of rows.
#[derive(Clone)]
struct ColPartial {
    kk: DMatrix<f64>,
    keta: DVector<f64>,
    etaeta: f64,
    gk: DVector<f64>,
    geta: f64,
}

impl ColPartial {
    fn zero(m: usize) -> Self {
        ColPartial {
            kk: DMatrix::zeros(m, m),
            keta: DVector::zeros(m),
            etaeta: 0.0,
            gk: DVector::zeros(m),
            geta: 0.0,
        }
    }

    fn merge(&mut self, other: &ColPartial) {
        self.kk += &other.kk;
        self.keta += &other.keta;
        self.etaeta += other.etaeta;
        self.gk += &other.gk;
        self.geta += other.geta;
    }
}

/// Assemble the per-column quadratic forms from data rows.
///
/// Logarithmic conventions: when `a = 0` the sufficient statistic is
/// `log x` and power factors use the exponents obtained by plugging in
/// `a = 0`, except that the coefficient `a` on the canonical-basis term
/// of `g` becomes `1`; when `b = 0` the linear-part powers plug in
/// `b = 0` and the coefficient `(b-1)` becomes `-1`.
pub fn assemble(
    shape: ModelShape,
    domain: &DomainSpec,
    weight: &WeightSpec,
    data: &DMatrix<f64>,
) -> Result<GammaG> {
    let m = domain.dim;
    let n = data.nrows();
    if data.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: data.ncols() });
    }
    if n == 0 {
        return Err(Error::EmptyData("assembly needs at least one observation"));
    }
    domain.validate()?;
    let c = resolve_truncation(weight, domain, data)?;
    let (a, b) = (shape.a, shape.b);
    let centered = shape.centered;
    // coefficient adjustments for the logarithmic cases
    let ca1 = if a == 0.0 { -1.0 } else { a - 1.0 };
    let cej = if a == 0.0 { 1.0 } else { a };
    let cb1 = if b == 0.0 { -1.0 } else { b - 1.0 };

    let ranges: Vec<(usize, usize)> = (0..n)
        .step_by(CHUNK_ROWS)
        .map(|s| (s, (s + CHUNK_ROWS).min(n)))
        .collect();

    let partials: Vec<Result<Vec<ColPartial>>> = ranges
        .par_iter()
        .map(|&(start, end)| {
            let mut acc = vec![ColPartial::zero(m); m];
            let mut x = vec![0.0f64; m];
            for i in start..end {
                for k in 0..m {
                    x[k] = data[(i, k)];
                }
                if !domain.contains(&x) {
                    return Err(Error::OutOfDomain { row: Some(i) });
                }
                let w = h_of_phi(weight, &c, domain, &x)?;
                let mut wd = vec![0.0f64; m];
                for (j, slot) in wd.iter_mut().enumerate() {
                    *slot = h_of_phi_deriv(weight, &c, domain, &x, j)?;
                }
                if w.iter().all(|&v| v == 0.0) && wd.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let t = DVector::from_iterator(m, x.iter().map(|&v| shape.stat(v)));
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(
                        "sufficient statistic at a positively weighted observation",
                    ));
                }
                for j in 0..m {
                    let (wj, dwj, xj) = (w[j], wd[j], x[j]);
                    let p2a2 = xpow(xj, 2.0 * a - 2.0);
                    let ck = prod(wj, p2a2);
                    if ck != 0.0 {
                        acc[j].kk.ger(ck, &t, &t, 1.0);
                    }
                    let cg = prod(dwj, xpow(xj, a - 1.0)) + prod(ca1 * wj, xpow(xj, a - 2.0));
                    if cg != 0.0 {
                        acc[j].gk.axpy(cg, &t, 1.0);
                    }
                    acc[j].gk[j] += prod(cej * wj, p2a2);
                    if !centered {
                        let cx = -prod(wj, xpow(xj, a + b - 2.0));
                        if cx != 0.0 {
                            acc[j].keta.axpy(cx, &t, 1.0);
                        }
                        acc[j].etaeta += prod(wj, xpow(xj, 2.0 * b - 2.0));
                        acc[j].geta +=
                            -prod(dwj, xpow(xj, b - 1.0)) - prod(cb1 * wj, xpow(xj, b - 2.0));
                    }
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = vec![ColPartial::zero(m); m];
    for chunk in partials {
        let chunk = chunk?;
        for (t, c) in total.iter_mut().zip(&chunk) {
            t.merge(c);
        }
    }

    let p = if centered { m } else { m + 1 };
    let inv_n = 1.0 / n as f64;
    let mut gamma = Vec::with_capacity(m);
    let mut g = Vec::with_capacity(m);
    for part in &total {
        let mut gm = DMatrix::zeros(p, p);
        let mut gv = DVector::zeros(p);
        for r in 0..m {
            for cidx in 0..m {
                gm[(r, cidx)] = part.kk[(r, cidx)] * inv_n;
            }
            gv[r] = part.gk[r] * inv_n;
        }
        if !centered {
            for r in 0..m {
                gm[(r, m)] = part.keta[r] * inv_n;
                gm[(m, r)] = part.keta[r] * inv_n;
            }
            gm[(m, m)] = part.etaeta * inv_n;
            gv[m] = part.geta * inv_n;
        }
        if gm.iter().any(|v| !v.is_finite()) || gv.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("assembled quadratic form"));
        }
        gamma.push(gm);
        g.push(gv);
    }

    Ok(GammaG { m, n, centered, gamma, g, resolved_c: c })
}

/// Scale the K-block diagonal of every column by `delta`, leaving the
/// linear-part variance entry untouched.
pub fn apply_diag_multiplier(gg: &GammaG, delta: f64) -> Result<GammaG> {
    if !(delta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "diagonal multiplier must be >= 1, got {delta}"
        )));
    }
    let mut out = gg.clone();
    for j in 0..gg.m {
        out.gamma[j] = gg.column_delta(j, delta);
    }
    Ok(out)
}

/// Default diagonal multiplier. Models with linear sufficient
/// statistics on unbounded domains (`a = 1` and either `b = 1` or
/// centered) use the Gaussian-type bound `2 - (1 + 80 sqrt(log m / n))^{-1}`;
/// all others use `1 + sqrt((tau log m + log 4) / (2n))`.
pub fn default_delta(shape: ModelShape, domain: &DomainSpec, n: usize, tau: f64) -> f64 {
    let m = domain.dim as f64;
    let n = n.max(1) as f64;
    let gaussian_type =
        shape.a == 1.0 && (shape.b == 1.0 || shape.centered) && !domain.is_bounded();
    if gaussian_type {
        2.0 - 1.0 / (1.0 + 80.0 * (m.ln() / n).sqrt())
    } else {
        1.0 + ((tau * m.ln() + 4.0f64.ln()) / (2.0 * n)).sqrt()
    }
}

/// How the linear part is penalized relative to `lambda_K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaPenalty {
    /// `lambda_eta = ratio * lambda_K`; a ratio of zero leaves the
    /// linear part unpenalized.
    Ratio(f64),
    /// Profile the linear part out exactly (equivalent to ratio zero).
    Profile,
}

impl EtaPenalty {
    fn ratio(&self) -> f64 {
        match self {
            EtaPenalty::Ratio(r) => *r,
            EtaPenalty::Profile => 0.0,
        }
    }
}

/// Per-column penalty vector for the stacked parameter.
fn lambda_vector(gg: &GammaG, j: usize, lambda_k: f64, lambda_eta: f64) -> DVector<f64> {
    let p = gg.p();
    let mut lam = DVector::from_element(p, lambda_k);
    lam[j] = 0.0;
    if !gg.centered {
        lam[gg.m] = lambda_eta;
    }
    lam
}

/// Smallest penalty at which every penalized coordinate is zero,
/// computed from the stationarity conditions with the unpenalized
/// coordinates at their restricted optimum.
fn lambda_max(gg: &GammaG, delta: f64, ratio: f64) -> Result<f64> {
    let m = gg.m;
    let mut worst = 0.0f64;
    for j in 0..m {
        let gm = gg.column_delta(j, delta);
        let gv = &gg.g[j];
        let mut unpen = vec![j];
        let eta_idx = m;
        let eta_unpenalized = !gg.centered && ratio == 0.0;
        if eta_unpenalized {
            unpen.push(eta_idx);
        }
        let k = unpen.len();
        let mut guu = DMatrix::zeros(k, k);
        let mut gu = DVector::zeros(k);
        for (r, &ur) in unpen.iter().enumerate() {
            gu[r] = gv[ur];
            for (s, &us) in unpen.iter().enumerate() {
                guu[(r, s)] = gm[(ur, us)];
            }
        }
        let ustar = guu
            .lu()
            .solve(&gu)
            .ok_or(Error::Singular { cond: f64::INFINITY })?;
        let p = gg.p();
        for kidx in 0..p {
            if unpen.contains(&kidx) {
                continue;
            }
            let mut grad = -gv[kidx];
            for (r, &ur) in unpen.iter().enumerate() {
                grad += gm[(kidx, ur)] * ustar[r];
            }
            let need = if kidx == eta_idx && !gg.centered {
                if ratio > 0.0 {
                    grad.abs() / ratio
                } else {
                    0.0
                }
            } else {
                grad.abs()
            };
            worst = worst.max(need);
        }
    }
    if !worst.is_finite() {
        return Err(Error::NonFinite("penalty path endpoint"));
    }
    Ok(worst)
}

/// Descending log-spaced penalty grid from the data-driven maximum.
/// Returns `(lambda_K, lambda_eta)` pairs.
pub fn lambda_path(
    gg: &GammaG,
    delta: f64,
    eta: EtaPenalty,
    num_points: usize,
    min_ratio: f64,
) -> Result<Vec<(f64, f64)>> {
    if num_points < 1 {
        return Err(Error::InvalidParameter("penalty path needs at least one point".into()));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "path min_ratio must lie in (0, 1), got {min_ratio}"
        )));
    }
    if !(delta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "diagonal multiplier must be >= 1, got {delta}"
        )));
    }
    let ratio = eta.ratio();
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("penalty ratio must be finite and >= 0, got {ratio}")));
    }
    let lm = lambda_max(gg, delta, ratio)?;
    if lm <= 0.0 {
        // already-sparse optimum; a token penalty scaled to the data
        let scale = gg
            .gamma
            .iter()
            .flat_map(|g| g.diagonal().iter().cloned().collect::<Vec<_>>())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let lam = 1e-12 * scale;
        return Ok(vec![(lam, lam * ratio)]);
    }
    if num_points == 1 {
        return Ok(vec![(lm, lm * ratio)]);
    }
    let mut out = Vec::with_capacity(num_points);
    for t in 0..num_points {
        let frac = t as f64 / (num_points - 1) as f64;
        let lam = lm * min_ratio.powf(frac);
        out.push((lam, lam * ratio));
    }
    Ok(out)
}

/// Minimize the penalized loss at one `(lambda_K, lambda_eta)` pair.
/// Columns are independent; non-convergence is reported in the result
/// rather than as an error.
pub fn fit(
    gg: &GammaG,
    delta: f64,
    lambda_k: f64,
    lambda_eta: f64,
    warm: Option<&FitResult>,
    tol: f64,
    max_iter: usize,
) -> Result<FitResult> {
    if !(delta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "diagonal multiplier must be >= 1, got {delta}"
        )));
    }
    if !(lambda_k >= 0.0) || !(lambda_eta >= 0.0) {
        return Err(Error::InvalidParameter("penalties must be >= 0".into()));
    }
    let m = gg.m;
    let cols: Vec<Result<ColumnFit>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let gm = gg.column_delta(j, delta);
            let lam = lambda_vector(gg, j, lambda_k, lambda_eta);
            let w0 = warm.map(|f| {
                let mut v = DVector::zeros(gg.p());
                for k in 0..m {
                    v[k] = f.k_hat[(k, j)];
                }
                if !gg.centered {
                    v[m] = f.eta_hat[j];
                }
                v
            });
            let sol = solve_penalized_qp(&gm, &gg.g[j], &lam, w0.as_ref(), tol, max_iter)?;
            let kkt = kkt_residual(&gm, &gg.g[j], &lam, &sol.theta);
            Ok(ColumnFit {
                theta: sol.theta,
                iterations: sol.iterations,
                kkt,
                converged: sol.converged,
            })
        })
        .collect();
    let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FitResult::from_columns(lambda_k, lambda_eta, gg.centered, m, cols))
}

/// Fit every point of a descending penalty path, warm-starting each
/// solve from the previous solution.
pub fn fit_path(
    gg: &GammaG,
    delta: f64,
    path: &[(f64, f64)],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<FitResult>> {
    let mut out: Vec<FitResult> = Vec::with_capacity(path.len());
    for &(lk, le) in path {
        let warm = out.last();
        let f = fit(gg, delta, lk, le, warm, tol, max_iter)?;
        out.push(f);
    }
    Ok(out)
}

/// Profile the linear part out with the Schur complement, solve the
/// K-only lasso, and back-substitute the linear coefficients.
pub fn fit_profiled(
    gg: &GammaG,
    delta: f64,
    lambda_k: f64,
    warm: Option<&FitResult>,
    tol: f64,
    max_iter: usize,
) -> Result<FitResult> {
    if gg.centered {
        return Err(Error::InvalidParameter(
            "centered model has no linear part to profile".into(),
        ));
    }
    if !(delta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "diagonal multiplier must be >= 1, got {delta}"
        )));
    }
    let m = gg.m;
    let cols: Vec<Result<ColumnFit>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let gm = gg.column_delta(j, delta);
            let geta = gm[(m, m)];
            if !(geta > 0.0) {
                return Err(Error::NonPositiveDenominator {
                    context: "linear-part variance entry",
                    value: geta,
                });
            }
            let keta = DVector::from_fn(m, |r, _| gm[(r, m)]);
            let mut prof = gm.view((0, 0), (m, m)).into_owned();
            prof.ger(-1.0 / geta, &keta, &keta, 1.0);
            let geta_g = gg.g[j][m];
            let mut gprof = gg.g[j].rows(0, m).into_owned();
            gprof.axpy(-geta_g / geta, &keta, 1.0);
            let mut lam = DVector::from_element(m, lambda_k);
            lam[j] = 0.0;
            let w0 = warm.map(|f| {
                let mut v = DVector::zeros(m);
                for k in 0..m {
                    v[k] = f.k_hat[(k, j)];
                }
                v
            });
            let sol = solve_penalized_qp(&prof, &gprof, &lam, w0.as_ref(), tol, max_iter)?;
            let kkt = kkt_residual(&prof, &gprof, &lam, &sol.theta);
            let eta_j = (geta_g - keta.dot(&sol.theta)) / geta;
            let mut theta = DVector::zeros(m + 1);
            theta.rows_mut(0, m).copy_from(&sol.theta);
            theta[m] = eta_j;
            Ok(ColumnFit { theta, iterations: sol.iterations, kkt, converged: sol.converged })
        })
        .collect();
    let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FitResult::from_columns(lambda_k, 0.0, false, m, cols))
}

/// Closed-form unpenalized estimate `theta_j = Gamma_j^{-1} g_j`
/// (no diagonal multiplier). Errors when any block's condition number
/// exceeds `10^12`.
pub fn fit_unpenalized(gg: &GammaG) -> Result<FitResult> {
    let m = gg.m;
    let cols: Vec<Result<ColumnFit>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let gm = &gg.gamma[j];
            let svd = gm.clone().svd(false, false);
            let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
            let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
            let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            if !(cond < 1e12) {
                return Err(Error::Singular { cond });
            }
            let theta = gm
                .clone()
                .lu()
                .solve(&gg.g[j])
                .ok_or(Error::Singular { cond })?;
            let lam = DVector::zeros(gg.p());
            let kkt = kkt_residual(gm, &gg.g[j], &lam, &theta);
            Ok(ColumnFit { theta, iterations: 1, kkt, converged: true })
        })
        .collect();
    let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FitResult::from_columns(0.0, 0.0, gg.centered, m, cols))
}

/// Evaluate the empirical weighted score matching loss of a concrete
/// model directly from its score and curvature. Cross-checks the
/// quadratic form: differences between two parameter values agree with
/// the assembled `Gamma`/`g` difference.
pub fn empirical_loss(
    model: &ABModel,
    domain: &DomainSpec,
    weight: &WeightSpec,
    data: &DMatrix<f64>,
) -> Result<f64> {
    let m = domain.dim;
    if model.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: model.dim() });
    }
    if data.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: data.ncols() });
    }
    let n = data.nrows();
    if n == 0 {
        return Err(Error::EmptyData("loss needs at least one observation"));
    }
    let c = resolve_truncation(weight, domain, data)?;
    let mut total = 0.0;
    let mut x = vec![0.0f64; m];
    for i in 0..n {
        for k in 0..m {
            x[k] = data[(i, k)];
        }
        if !domain.contains(&x) {
            return Err(Error::OutOfDomain { row: Some(i) });
        }
        let w = h_of_phi(weight, &c, domain, &x)?;
        if w.iter().all(|&v| v == 0.0) {
            let mut all_zero_deriv = true;
            for j in 0..m {
                if h_of_phi_deriv(weight, &c, domain, &x, j)? != 0.0 {
                    all_zero_deriv = false;
                    break;
                }
            }
            if all_zero_deriv {
                continue;
            }
        }
        let grad = model.log_density_grad(&x)?;
        let hess = model.log_density_hess_diag(&x)?;
        for j in 0..m {
            let wd = h_of_phi_deriv(weight, &c, domain, &x, j)?;
            total += 0.5 * prod(w[j], grad[j] * grad[j]) + prod(wd, grad[j]) + prod(w[j], hess[j]);
        }
    }
    let loss = total / n as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("empirical loss"));
    }
    Ok(loss)
}

/// Quadratic-form value `sum_j theta_j' Gamma_j theta_j / 2 - g_j' theta_j`
/// at the given parameters (no diagonal multiplier). Matches
/// `empirical_loss` up to a parameter-independent constant.
pub fn quadratic_loss(gg: &GammaG, k: &DMatrix<f64>, eta: Option<&DVector<f64>>) -> Result<f64> {
    let m = gg.m;
    if k.nrows() != m || k.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: k.nrows().max(k.ncols()) });
    }
    let p = gg.p();
    let mut total = 0.0;
    for j in 0..m {
        let mut theta = DVector::zeros(p);
        for r in 0..m {
            theta[r] = k[(r, j)];
        }
        if !gg.centered {
            theta[m] = match eta {
                Some(e) => e[j],
                None => 0.0,
            };
        }
        total += 0.5 * theta.dot(&(&gg.gamma[j] * &theta)) - gg.g[j].dot(&theta);
    }
    Ok(total)
}

const GGV1_MAGIC: &[u8; 4] = b"GGV1";

/// Binary dump: 16-byte header (magic, m, n, centered as little-endian
/// u32) followed per column by the block row-major and the linear
/// vector as f64 little-endian. Truncation constants are not retained.
pub fn write_ggv1<W: std::io::Write>(gg: &GammaG, w: &mut W) -> Result<()> {
    w.write_all(GGV1_MAGIC)?;
    w.write_all(&(gg.m as u32).to_le_bytes())?;
    w.write_all(&(gg.n as u32).to_le_bytes())?;
    w.write_all(&(gg.centered as u32).to_le_bytes())?;
    let p = gg.p();
    for j in 0..gg.m {
        for r in 0..p {
            for cidx in 0..p {
                w.write_all(&gg.gamma[j][(r, cidx)].to_le_bytes())?;
            }
        }
        for r in 0..p {
            w.write_all(&gg.g[j][r].to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a binary dump written by [`write_ggv1`]. The result carries an
/// empty `resolved_c`.
pub fn read_ggv1<R: std::io::Read>(r: &mut R) -> Result<GammaG> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[0..4] != GGV1_MAGIC {
        return Err(Error::InvalidParameter("not a GGV1 dump (bad magic)".into()));
    }
    let m = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let centered = u32::from_le_bytes(head[12..16].try_into().unwrap()) != 0;
    if m == 0 {
        return Err(Error::InvalidParameter("GGV1 dump with zero dimension".into()));
    }
    let p = if centered { m } else { m + 1 };
    let mut gamma = Vec::with_capacity(m);
    let mut g = Vec::with_capacity(m);
    let mut buf = [0u8; 8];
    for _ in 0..m {
        let mut gm = DMatrix::zeros(p, p);
        for r_ in 0..p {
            for cidx in 0..p {
                r.read_exact(&mut buf)?;
                gm[(r_, cidx)] = f64::from_le_bytes(buf);
            }
        }
        let mut gv = DVector::zeros(p);
        for r_ in 0..p {
            r.read_exact(&mut buf)?;
            gv[r_] = f64::from_le_bytes(buf);
        }
        gamma.push(gm);
        g.push(gv);
    }
    Ok(GammaG { m, n, centered, gamma, g, resolved_c: TruncationVector(Vec::new()) })
}
