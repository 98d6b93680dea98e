//! Support recovery experiments
//!
//! Random block-structured interaction matrices, Gibbs-sampled data on
//! calibrated domains, regularization paths per weight setting, and ROC
//! summaries of edge recovery. Every trial reseeds deterministically
//! from the sweep seed and its cell coordinates, so sweeps can be
//! resumed or re-run cell by cell with identical results.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::estimator::{
    assemble, default_delta, fit_path, lambda_path, EtaPenalty, DEFAULT_MAX_ITER,
    DEFAULT_MIN_RATIO, DEFAULT_PATH_POINTS, DEFAULT_TAU, DEFAULT_TOL,
};
use crate::model::{min_eigenvalue, ABModel};
use crate::sampler::{calibrate_c1, gibbs_sample, DomainFamily, SamplerConfig};
use crate::util::derive_seed;
use crate::weights::WeightSpec;
use crate::{Error, Result};

const K0_BLOCKS: usize = 10;
const EDGE_TOL: f64 = 1e-12;

/// Undirected edge set on `m` nodes, stored as ordered pairs `i < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(m: usize) -> Self {
        EdgeSet { m, edges: BTreeSet::new() }
    }

    /// Edges where the larger of the two symmetric entries exceeds
    /// `tol` in magnitude. The diagonal is ignored.
    pub fn from_matrix(k: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(Error::DimensionMismatch { expected: k.nrows(), got: k.ncols() });
        }
        let m = k.nrows();
        let mut edges = BTreeSet::new();
        for j in 1..m {
            for i in 0..j {
                if k[(i, j)].abs().max(k[(j, i)].abs()) > tol {
                    edges.insert((i, j));
                }
            }
        }
        Ok(EdgeSet { m, edges })
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j || i >= self.m || j >= self.m {
            return Err(Error::InvalidParameter(format!(
                "edge ({i}, {j}) is not valid on {} nodes",
                self.m
            )));
        }
        self.edges.insert((i.min(j), i.max(j)));
        Ok(())
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().cloned()
    }

    /// Number of distinct node pairs.
    pub fn max_pairs(&self) -> usize {
        self.m * (self.m - 1) / 2
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.m];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }
}

/// False and true positive rates of `est` against `truth`.
pub fn confusion_rates(est: &EdgeSet, truth: &EdgeSet) -> Result<(f64, f64)> {
    if est.m != truth.m {
        return Err(Error::DimensionMismatch { expected: truth.m, got: est.m });
    }
    let s0 = truth.len();
    let total = truth.max_pairs();
    if s0 == 0 {
        return Err(Error::DegenerateTruth("truth graph has no edges"));
    }
    if s0 == total {
        return Err(Error::DegenerateTruth("truth graph is complete"));
    }
    let tp = est.edges.intersection(&truth.edges).count();
    let fp = est.len() - tp;
    Ok((fp as f64 / (total - s0) as f64, tp as f64 / s0 as f64))
}

/// Area under the ROC curve traced by a regularization path's edge
/// sets, with the corners (0,0) and (1,1) appended and points sorted
/// by false positive rate.
pub fn roc_auc(path: &[EdgeSet], truth: &EdgeSet) -> Result<f64> {
    let mut pts = Vec::with_capacity(path.len() + 2);
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    for est in path {
        pts.push(confusion_rates(est, truth)?);
    }
    pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut auc = 0.0;
    for w in pts.windows(2) {
        auc += (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1);
    }
    Ok(auc)
}

/// Structural comparison of two edge sets on the same nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphComparison {
    pub hamming: usize,
    pub degrees_left: Vec<usize>,
    pub degrees_right: Vec<usize>,
}

pub fn graph_compare(left: &EdgeSet, right: &EdgeSet) -> Result<GraphComparison> {
    if left.m != right.m {
        return Err(Error::DimensionMismatch { expected: left.m, got: right.m });
    }
    let hamming = left.edges.symmetric_difference(&right.edges).count();
    Ok(GraphComparison { hamming, degrees_left: left.degrees(), degrees_right: right.degrees() })
}

/// Random block-diagonal interaction matrix on `m` nodes (a positive
/// multiple of ten). Within each of the ten blocks, each pair carries
/// an edge with probability `rho` and weight uniform on [0.5, 1); the
/// common diagonal shifts the smallest eigenvalue to 0.1.
pub fn generate_k0<R: Rng + ?Sized>(m: usize, rho: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if m == 0 || !m.is_multiple_of(K0_BLOCKS) {
        return Err(Error::InvalidParameter(format!(
            "node count must be a positive multiple of {K0_BLOCKS}, got {m}"
        )));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("edge probability must lie in (0, 1), got {rho}")));
    }
    let bs = m / K0_BLOCKS;
    let mut k = DMatrix::zeros(m, m);
    for blk in 0..K0_BLOCKS {
        for i in 1..bs {
            for j in 0..i {
                if rng.random::<f64>() < rho {
                    let v = rng.random_range(0.5..1.0);
                    let (gi, gj) = (blk * bs + i, blk * bs + j);
                    k[(gi, gj)] = v;
                    k[(gj, gi)] = v;
                }
            }
        }
    }
    let shift = 0.1 - min_eigenvalue(&k);
    for i in 0..m {
        k[(i, i)] = shift;
    }
    Ok(k)
}

fn default_b() -> f64 {
    1.0
}
fn default_n_k0() -> usize {
    5
}
fn default_trials() -> usize {
    10
}
fn default_alpha_grid() -> Vec<f64> {
    (0..=8).map(|i| i as f64 / 4.0).collect()
}
fn default_pi_grid() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8, 1.0]
}

/// Sweep description: model exponents, domain family, truth ensemble,
/// and the weight grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    pub domain_family: DomainFamily,
    pub rho: f64,
    #[serde(default = "default_n_k0")]
    pub n_k0: usize,
    #[serde(default = "default_trials")]
    pub trials_per_k0: usize,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_pi_grid")]
    pub pi_grid: Vec<f64>,
    #[serde(default)]
    pub include_g0: bool,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !self.m.is_multiple_of(K0_BLOCKS) {
            return Err(Error::InvalidParameter(format!(
                "node count must be a positive multiple of {K0_BLOCKS}, got {}",
                self.m
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        if !(self.a.is_finite() && self.a >= 0.0) || !(self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::InvalidParameter("model exponents must be nonnegative".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "edge probability must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if self.n_k0 == 0 || self.trials_per_k0 == 0 {
            return Err(Error::InvalidParameter("need at least one truth and one trial".into()));
        }
        if self.alpha_grid.is_empty() || self.pi_grid.is_empty() {
            return Err(Error::EmptyData("weight grid"));
        }
        if self.alpha_grid.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidParameter("alpha grid entries must be nonnegative".into()));
        }
        if self.pi_grid.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::InvalidParameter("pi grid entries must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// One (truth, trial, weight setting) result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRow {
    pub family: String,
    pub a: f64,
    pub alpha: f64,
    pub pi: Option<f64>,
    pub mode: String,
    pub k0_index: usize,
    pub trial: usize,
    pub auc: f64,
}

/// Mean AUC of one weight setting across completed trials, with the
/// ratio against the flat-weight baseline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregateRow {
    pub family: String,
    pub a: f64,
    pub alpha: f64,
    pub pi: Option<f64>,
    pub mode: String,
    pub mean_auc: f64,
    pub auc_ratio: Option<f64>,
    pub trials: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellFailure {
    pub k0_index: usize,
    pub trial: usize,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRow>,
    pub aggregates: Vec<AggregateRow>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    /// Cells with at least one recorded row, in scan order.
    pub fn completed_cells(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> =
            self.trials.iter().map(|r| (r.k0_index, r.trial)).collect();
        set.into_iter().collect()
    }
}

#[derive(Clone)]
struct Setting {
    mode: &'static str,
    alpha: f64,
    pi: Option<f64>,
    weight: WeightSpec,
}

/// Flat baseline first, then the power grid, then optional boundary
/// distance weights.
fn weight_settings(cfg: &ExperimentConfig) -> Vec<Setting> {
    let mut v = vec![Setting {
        mode: "power",
        alpha: 0.0,
        pi: None,
        weight: WeightSpec::power_untruncated(0.0),
    }];
    for &alpha in &cfg.alpha_grid {
        if alpha == 0.0 {
            continue;
        }
        for &pi in &cfg.pi_grid {
            v.push(Setting { mode: "power", alpha, pi: Some(pi), weight: WeightSpec::power(alpha, pi) });
        }
    }
    if cfg.include_g0 {
        for &pi in &cfg.pi_grid {
            v.push(Setting { mode: "g0", alpha: 1.0, pi: Some(pi), weight: WeightSpec::g0(pi) });
        }
    }
    v
}

fn run_trial(
    cfg: &ExperimentConfig,
    settings: &[Setting],
    k0: &DMatrix<f64>,
    truth: &EdgeSet,
    k: usize,
    t: usize,
) -> Result<Vec<TrialRow>> {
    let m = cfg.m;
    let model = ABModel::new(cfg.a, cfg.b, k0.clone(), DVector::zeros(m), true)?;
    let calib_seed = derive_seed(cfg.seed, &[k as u64, t as u64, 0]);
    let est_seed = derive_seed(cfg.seed, &[k as u64, t as u64, 1]);
    let c1 = calibrate_c1(&model, cfg.domain_family, cfg.n, &SamplerConfig::default_for(m, calib_seed))?;
    let domain = cfg.domain_family.domain(m, c1)?;
    let data = gibbs_sample(&model, &domain, cfg.n, &SamplerConfig::default_for(m, est_seed))?;
    let shape = model.shape();
    let mut rows = Vec::with_capacity(settings.len());
    for s in settings {
        let gg = assemble(shape, &domain, &s.weight, &data)?;
        let delta = default_delta(shape, &domain, cfg.n, DEFAULT_TAU);
        let path = lambda_path(&gg, delta, EtaPenalty::Ratio(1.0), DEFAULT_PATH_POINTS, DEFAULT_MIN_RATIO)?;
        let fits = fit_path(&gg, delta, &path, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let edge_path: Vec<EdgeSet> = fits
            .iter()
            .map(|f| EdgeSet::from_matrix(&f.edge_scores, 0.0))
            .collect::<Result<_>>()?;
        let auc = roc_auc(&edge_path, truth)?;
        rows.push(TrialRow {
            family: cfg.domain_family.label().to_string(),
            a: cfg.a,
            alpha: s.alpha,
            pi: s.pi,
            mode: s.mode.to_string(),
            k0_index: k,
            trial: t,
            auc,
        });
    }
    Ok(rows)
}

/// Aggregate trial rows against the flat baseline, ordered like the
/// config's weight settings.
pub fn aggregate_trials(cfg: &ExperimentConfig, trials: &[TrialRow]) -> Vec<AggregateRow> {
    aggregate(cfg, &weight_settings(cfg), trials)
}

fn aggregate(cfg: &ExperimentConfig, settings: &[Setting], trials: &[TrialRow]) -> Vec<AggregateRow> {
    let baseline: Vec<f64> = trials
        .iter()
        .filter(|r| r.mode == "power" && r.alpha == 0.0)
        .map(|r| r.auc)
        .collect();
    let base_mean = if baseline.is_empty() {
        None
    } else {
        Some(baseline.iter().sum::<f64>() / baseline.len() as f64)
    };
    let mut out = Vec::new();
    for s in settings {
        let aucs: Vec<f64> = trials
            .iter()
            .filter(|r| r.mode == s.mode && r.alpha == s.alpha && r.pi == s.pi)
            .map(|r| r.auc)
            .collect();
        if aucs.is_empty() {
            continue;
        }
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        out.push(AggregateRow {
            family: cfg.domain_family.label().to_string(),
            a: cfg.a,
            alpha: s.alpha,
            pi: s.pi,
            mode: s.mode.to_string(),
            mean_auc: mean,
            auc_ratio: base_mean.map(|b| mean / b),
            trials: aucs.len(),
        });
    }
    out
}

/// Run the sweep, skipping the listed (truth index, trial) cells.
/// Failed trials are recorded and do not stop the sweep.
pub fn run_sweep(cfg: &ExperimentConfig, skip: &[(usize, usize)]) -> Result<SweepResult> {
    cfg.validate()?;
    let skipset: BTreeSet<(usize, usize)> = skip.iter().cloned().collect();
    let settings = weight_settings(cfg);
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for k in 0..cfg.n_k0 {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(cfg.seed, &[k as u64]));
        let k0 = generate_k0(cfg.m, cfg.rho, &mut rng)?;
        let truth = EdgeSet::from_matrix(&k0, EDGE_TOL)?;
        for t in 0..cfg.trials_per_k0 {
            if skipset.contains(&(k, t)) {
                continue;
            }
            match run_trial(cfg, &settings, &k0, &truth, k, t) {
                Ok(rows) => trials.extend(rows),
                Err(e) => {
                    failures.push(CellFailure { k0_index: k, trial: t, message: e.to_string() })
                }
            }
        }
    }
    let aggregates = aggregate(cfg, &settings, &trials);
    Ok(SweepResult { config: cfg.clone(), trials, aggregates, failures })
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-trial results as CSV.
pub fn trials_csv(rows: &[TrialRow]) -> String {
    let mut s = String::from("family,a,alpha,pi,mode,k0_index,trial,auc\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.a,
            r.alpha,
            csv_opt(r.pi),
            r.mode,
            r.k0_index,
            r.trial,
            r.auc
        );
    }
    s
}

/// Inverse of `trials_csv`. Empty coverage fields parse to `None`.
pub fn parse_trials_csv(s: &str) -> Result<Vec<TrialRow>> {
    let mut lines = s.lines();
    match lines.next() {
        Some("family,a,alpha,pi,mode,k0_index,trial,auc") => {}
        _ => return Err(Error::InvalidParameter("trial CSV header mismatch".into())),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::InvalidParameter(format!(
                "trial CSV row {} has {} fields, expected 8",
                idx + 2,
                f.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::InvalidParameter(format!("trial CSV row {}: bad number {s:?}", idx + 2))
            })
        };
        let int = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| {
                Error::InvalidParameter(format!("trial CSV row {}: bad index {s:?}", idx + 2))
            })
        };
        rows.push(TrialRow {
            family: f[0].to_string(),
            a: num(f[1])?,
            alpha: num(f[2])?,
            pi: if f[3].is_empty() { None } else { Some(num(f[3])?) },
            mode: f[4].to_string(),
            k0_index: int(f[5])?,
            trial: int(f[6])?,
            auc: num(f[7])?,
        });
    }
    Ok(rows)
}

/// Aggregated results as CSV.
pub fn aggregates_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from("family,a,alpha,pi,mode,mean_auc,auc_ratio,trials\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.a,
            r.alpha,
            csv_opt(r.pi),
            r.mode,
            r.mean_auc,
            csv_opt(r.auc_ratio),
            r.trials
        );
    }
    s
}

const CHART_COLORS: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Mean AUC against coverage level, one polyline per weight setting
/// series, flat-baseline rows drawn as a dashed horizontal rule.
pub fn svg_chart(aggregates: &[AggregateRow], title: &str) -> String {
    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (64.0, 24.0, 48.0, 48.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in aggregates {
        lo = lo.min(r.mean_auc);
        hi = hi.max(r.mean_auc);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let pad = ((hi - lo) * 0.1).max(0.02);
    lo = (lo - pad).max(0.0);
    hi = (hi + pad).min(1.0);
    if hi <= lo {
        lo = 0.0;
        hi = 1.0;
    }
    let x_of = |pi: f64| ml + pw * pi;
    let y_of = |v: f64| mt + ph * (1.0 - (v - lo) / (hi - lo));
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        w / 2.0,
        title
    );
    // axes
    let _ = writeln!(
        s,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(s, "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>", mt + ph);
    for i in 0..=5 {
        let pi = i as f64 / 5.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.1}</text>",
            x_of(pi),
            mt + ph + 18.0,
            pi
        );
        let v = lo + (hi - lo) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>",
            ml - 6.0,
            y_of(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">coverage</text>",
        ml + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">mean AUC</text>",
        mt + ph / 2.0,
        mt + ph / 2.0
    );
    // series keyed by (mode, alpha), baseline drawn flat
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in aggregates {
        let key = (r.mode.clone(), r.alpha);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut legend_y = mt + 8.0;
    for (idx, (mode, alpha)) in keys.iter().enumerate() {
        let color = CHART_COLORS[idx % CHART_COLORS.len()];
        let rows: Vec<&AggregateRow> = aggregates
            .iter()
            .filter(|r| &r.mode == mode && r.alpha == *alpha)
            .collect();
        let label = if *alpha == 0.0 && rows.iter().all(|r| r.pi.is_none()) {
            let y = y_of(rows[0].mean_auc);
            let _ = writeln!(
                s,
                "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-dasharray=\"6 4\"/>",
                ml + pw
            );
            format!("{mode} alpha=0 (flat)")
        } else {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| r.pi.map(|pi| (pi, r.mean_auc)))
                .collect();
            pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
            let path: Vec<String> =
                pts.iter().map(|&(pi, v)| format!("{:.2},{:.2}", x_of(pi), y_of(v))).collect();
            let _ = writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                path.join(" ")
            );
            for &(pi, v) in &pts {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>",
                    x_of(pi),
                    y_of(v)
                );
            }
            format!("{mode} alpha={alpha}")
        };
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"3\" fill=\"{color}\"/>",
            ml + pw - 140.0,
            legend_y - 3.0
        );
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{label}</text>", ml + pw - 120.0, legend_y + 3.0);
        legend_y += 16.0;
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::DomainFamily;

    fn edges(m: usize, list: &[(usize, usize)]) -> EdgeSet {
        let mut e = EdgeSet::new(m);
        for &(i, j) in list {
            e.insert(i, j).unwrap();
        }
        e
    }

    #[test]
    fn edge_set_uses_the_larger_symmetric_entry() {
        let mut k = DMatrix::zeros(3, 3);
        k[(0, 1)] = 1e-15;
        k[(1, 0)] = 0.5;
        k[(2, 2)] = 4.0;
        let e = EdgeSet::from_matrix(&k, 1e-12).unwrap();
        assert_eq!(e.len(), 1);
        assert!(e.contains(0, 1));
        assert!(e.contains(1, 0));
        assert!(!e.contains(0, 2));
    }

    #[test]
    fn roc_area_matches_hand_trapezoids() {
        let truth = edges(4, &[(0, 1), (2, 3)]);
        let est1 = edges(4, &[(0, 1)]);
        let est2 = edges(4, &[(0, 1), (2, 3), (0, 2), (0, 3)]);
        // points (0, 0.5) and (0.5, 1) with the corners give 0.875
        let auc = roc_auc(&[est1.clone(), est2.clone()], &truth).unwrap();
        assert!((auc - 0.875).abs() < 1e-15, "got {auc}");
        let auc = roc_auc(&[est2, est1], &truth).unwrap();
        assert!((auc - 0.875).abs() < 1e-15, "order must not matter, got {auc}");
    }

    #[test]
    fn empty_path_scores_the_diagonal() {
        let truth = edges(4, &[(0, 1)]);
        let auc = roc_auc(&[], &truth).unwrap();
        assert!((auc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_truth_is_rejected() {
        let empty = EdgeSet::new(4);
        let full = edges(3, &[(0, 1), (0, 2), (1, 2)]);
        let est = EdgeSet::new(4);
        assert!(matches!(roc_auc(&[est.clone()], &empty), Err(Error::DegenerateTruth(_))));
        let est3 = EdgeSet::new(3);
        assert!(matches!(roc_auc(&[est3], &full), Err(Error::DegenerateTruth(_))));
    }

    #[test]
    fn graph_compare_counts_the_symmetric_difference() {
        let left = edges(4, &[(0, 1), (1, 2)]);
        let right = edges(4, &[(1, 2), (2, 3)]);
        let cmp = graph_compare(&left, &right).unwrap();
        assert_eq!(cmp.hamming, 2);
        assert_eq!(cmp.degrees_left, vec![1, 2, 1, 0]);
        assert_eq!(cmp.degrees_right, vec![0, 1, 2, 1]);
        assert!(graph_compare(&left, &EdgeSet::new(3)).is_err());
    }

    #[test]
    fn truth_matrices_have_the_pinned_spectrum() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let k = generate_k0(20, 0.5, &mut rng).unwrap();
        assert_eq!(k.nrows(), 20);
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(k[(i, j)], k[(j, i)]);
                // blocks of two: off-block entries vanish
                if i / 2 != j / 2 {
                    assert_eq!(k[(i, j)], 0.0);
                }
            }
        }
        let lmin = min_eigenvalue(&k);
        assert!((lmin - 0.1).abs() < 1e-8, "got {lmin}");
        assert_eq!(k[(0, 0)], k[(19, 19)]);
    }

    #[test]
    fn truth_generation_validates_inputs() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(generate_k0(15, 0.5, &mut rng).is_err());
        assert!(generate_k0(0, 0.5, &mut rng).is_err());
        assert!(generate_k0(20, 0.0, &mut rng).is_err());
        assert!(generate_k0(20, 1.0, &mut rng).is_err());
    }

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            m: 20,
            n: 40,
            a: 1.0,
            b: 1.0,
            domain_family: DomainFamily::L2Nn,
            rho: 0.5,
            n_k0: 1,
            trials_per_k0: 2,
            alpha_grid: vec![0.0, 1.0],
            pi_grid: vec![0.5],
            include_g0: false,
            seed: 99,
        }
    }

    #[test]
    fn sweep_rows_are_deterministic_and_resumable() {
        let cfg = tiny_config();
        let full = run_sweep(&cfg, &[]).unwrap();
        assert!(full.failures.is_empty(), "{:?}", full.failures);
        // baseline + one (alpha, pi) cell, two trials
        assert_eq!(full.trials.len(), 4);
        assert_eq!(full.completed_cells(), vec![(0, 0), (0, 1)]);
        for r in &full.trials {
            assert!(r.auc >= 0.0 && r.auc <= 1.0);
        }
        let again = run_sweep(&cfg, &[]).unwrap();
        for (x, y) in full.trials.iter().zip(again.trials.iter()) {
            assert_eq!(x.auc, y.auc);
        }
        let resumed = run_sweep(&cfg, &[(0, 0)]).unwrap();
        assert_eq!(resumed.completed_cells(), vec![(0, 1)]);
        let tail: Vec<&TrialRow> = full.trials.iter().filter(|r| r.trial == 1).collect();
        for (x, y) in tail.iter().zip(resumed.trials.iter()) {
            assert_eq!(x.auc, y.auc, "per-cell seeding must make resume exact");
        }
    }

    #[test]
    fn aggregates_reference_the_flat_baseline() {
        let cfg = tiny_config();
        let res = run_sweep(&cfg, &[]).unwrap();
        assert_eq!(res.aggregates.len(), 2);
        let base = &res.aggregates[0];
        assert_eq!(base.alpha, 0.0);
        assert_eq!(base.auc_ratio, Some(1.0));
        let cell = &res.aggregates[1];
        assert_eq!(cell.trials, 2);
        let expect = cell.mean_auc / base.mean_auc;
        assert!((cell.auc_ratio.unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trips_the_optional_coverage() {
        let rows = vec![
            TrialRow {
                family: "l2-nn".into(),
                a: 1.0,
                alpha: 0.0,
                pi: None,
                mode: "power".into(),
                k0_index: 0,
                trial: 3,
                auc: 0.75,
            },
            TrialRow {
                family: "l2-nn".into(),
                a: 1.0,
                alpha: 0.5,
                pi: Some(0.4),
                mode: "power".into(),
                k0_index: 1,
                trial: 0,
                auc: 0.5,
            },
        ];
        let csv = trials_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "family,a,alpha,pi,mode,k0_index,trial,auc");
        assert_eq!(lines[1], "l2-nn,1,0,,power,0,3,0.75");
        assert_eq!(lines[2], "l2-nn,1,0.5,0.4,power,1,0,0.5");
        let back = parse_trials_csv(&csv).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].pi, None);
        assert_eq!(back[1].pi, Some(0.4));
        assert_eq!(trials_csv(&back), csv);
        assert!(parse_trials_csv("bogus\n1,2\n").is_err());
    }

    #[test]
    fn chart_contains_each_series() {
        let rows = vec![
            AggregateRow {
                family: "l2".into(),
                a: 1.0,
                alpha: 0.0,
                pi: None,
                mode: "power".into(),
                mean_auc: 0.6,
                auc_ratio: Some(1.0),
                trials: 4,
            },
            AggregateRow {
                family: "l2".into(),
                a: 1.0,
                alpha: 1.5,
                pi: Some(0.4),
                mode: "power".into(),
                mean_auc: 0.7,
                auc_ratio: Some(1.1),
                trials: 4,
            },
            AggregateRow {
                family: "l2".into(),
                a: 1.0,
                alpha: 1.5,
                pi: Some(0.8),
                mode: "power".into(),
                mean_auc: 0.72,
                auc_ratio: Some(1.2),
                trials: 4,
            },
        ];
        let svg = svg_chart(&rows, "recovery");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("alpha=1.5"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
