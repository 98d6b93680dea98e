//! Gibbs sampling of a-b models on general domains
//!
//! Each sweep resamples every coordinate from its exact univariate
//! conditional restricted to the current domain section. Linear models
//! (`a = 1` with a linear or absent interaction term) use truncated
//! normal conditionals, logarithmic models (`a = 0` likewise) use
//! truncated log-normals, and everything else falls back to a grid
//! inverse-CDF sampler on the section.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, Shape};
use crate::gauss;
use crate::interval::{Interval, IntervalUnion};
use crate::model::{check_normalizable, ABModel};
use crate::util::xpow;
use crate::{Error, Result};

/// Starting point policy.
#[derive(Clone, Debug, PartialEq)]
pub enum InitPoint {
    /// Search for an in-domain point by coordinate-wise section probes.
    Auto,
    Point(Vec<f64>),
}

impl Serialize for InitPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            InitPoint::Auto => s.serialize_str("auto"),
            InitPoint::Point(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for InitPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Tag(String),
            Point(Vec<f64>),
        }
        match Repr::deserialize(d)? {
            Repr::Tag(t) if t == "auto" => Ok(InitPoint::Auto),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!(
                "unknown init policy {t:?}, expected \"auto\" or a point"
            ))),
            Repr::Point(v) => Ok(InitPoint::Point(v)),
        }
    }
}

fn default_burn_in() -> usize {
    1000
}
fn default_grid_points() -> usize {
    2048
}
fn default_tail_cutoff() -> f64 {
    40.0
}
fn default_chains() -> usize {
    1
}
fn default_init() -> InitPoint {
    InitPoint::Auto
}

/// Gibbs chain configuration. `thin` counts full sweeps between
/// retained samples; the conventional choice is the dimension `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_tail_cutoff")]
    pub tail_cutoff_nats: f64,
    #[serde(default = "default_init")]
    pub init: InitPoint,
    /// Independent chains with derived seed streams; retained samples
    /// are concatenated in chain order.
    #[serde(default = "default_chains")]
    pub chains: usize,
}

impl SamplerConfig {
    /// Defaults for a model of dimension `m`: burn-in 1000, thinning of
    /// `m` sweeps, one chain, automatic initialization.
    pub fn default_for(m: usize, seed: u64) -> Self {
        SamplerConfig {
            burn_in: default_burn_in(),
            thin: m.max(1),
            seed,
            grid_points: default_grid_points(),
            tail_cutoff_nats: default_tail_cutoff(),
            init: default_init(),
            chains: default_chains(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin < 1 {
            return Err(Error::InvalidParameter("thin must be >= 1".into()));
        }
        if self.grid_points < 16 {
            return Err(Error::InvalidParameter("grid_points must be >= 16".into()));
        }
        if !(self.tail_cutoff_nats > 0.0) {
            return Err(Error::InvalidParameter("tail_cutoff_nats must be > 0".into()));
        }
        if self.chains < 1 {
            return Err(Error::InvalidParameter("chains must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CondKind {
    /// Truncated normal in the coordinate itself.
    Gauss,
    /// Truncated normal in the logarithm of the coordinate.
    LogGauss,
    /// Grid inverse-CDF on the section.
    Grid,
}

fn conditional_kind(model: &ABModel) -> CondKind {
    if model.a == 1.0 && (model.centered || model.b == 1.0) {
        CondKind::Gauss
    } else if model.a == 0.0 && (model.centered || model.b == 0.0) {
        CondKind::LogGauss
    } else {
        CondKind::Grid
    }
}

const AUTO_INIT_ATTEMPTS: usize = 10_000;

/// Find an in-domain starting point by repeatedly replacing one
/// coordinate with a representative of its feasible section.
fn auto_init(domain: &DomainSpec, seed: u64) -> Result<Vec<f64>> {
    let m = domain.dim;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut x = vec![0.0f64; m];
    for attempt in 0..AUTO_INIT_ATTEMPTS {
        if x.iter().all(|v| v.is_finite()) && domain.contains(&x) {
            return Ok(x);
        }
        let j = attempt % m;
        let sec = domain.section(&x, j)?;
        let scale = 2.0 * (1.0 + (attempt / (10 * m.max(1))) as f64);
        if sec.parts().is_empty() {
            // the other coordinates make the exact section empty, so
            // draw from the coordinate's feasible hull instead
            let hull = domain.coordinate_hull(j);
            let parts = hull.parts();
            if parts.is_empty() {
                x[j] = (rng.random::<f64>() * 2.0 - 1.0) * scale;
            } else {
                x[j] = random_in(&parts[rng.random_range(0..parts.len())], scale, &mut rng);
            }
            continue;
        }
        let parts = sec.parts();
        let part = &parts[rng.random_range(0..parts.len())];
        x[j] = representative(part, &mut rng);
    }
    Err(Error::NoStartPoint { attempts: AUTO_INIT_ATTEMPTS })
}

/// A random point of an interval, spreading half-line draws over a
/// window of the given scale.
fn random_in<R: Rng + ?Sized>(iv: &Interval, scale: f64, rng: &mut R) -> f64 {
    let (lo, hi) = (iv.lower, iv.upper);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => lo + rng.random::<f64>() * (hi - lo),
        (true, false) => lo + rng.random::<f64>() * scale,
        (false, true) => hi - rng.random::<f64>() * scale,
        (false, false) => (rng.random::<f64>() * 2.0 - 1.0) * scale,
    }
}

/// Logarithmic models carry no mass at or below zero, so a start
/// chosen from domain geometry alone may need a push into the open
/// positive orthant.
fn positive_start(domain: &DomainSpec, x: &mut [f64], seed: u64, explicit: bool) -> Result<()> {
    if x.iter().all(|v| *v > 0.0) {
        return Ok(());
    }
    if explicit {
        return Err(Error::InvalidParameter(
            "logarithmic models need a strictly positive starting point".into(),
        ));
    }
    let positive = IntervalUnion::of(Interval::new(0.0, f64::INFINITY, false, false)?);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    for j in 0..x.len() {
        if x[j] > 0.0 {
            continue;
        }
        let pos = domain.section(x, j)?.intersect(&positive);
        let parts = pos.parts();
        if parts.is_empty() {
            return Err(Error::NotNormalizable {
                condition: "positive support for a logarithmic model".into(),
            });
        }
        x[j] = representative(&parts[rng.random_range(0..parts.len())], &mut rng);
    }
    Ok(())
}

/// A finite interior-ish point of an interval.
fn representative<R: Rng + ?Sized>(iv: &Interval, rng: &mut R) -> f64 {
    let (lo, hi) = (iv.lower, iv.upper);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 0.5 + rng.random::<f64>(),
        (false, true) => hi - 0.5 - rng.random::<f64>(),
        (false, false) => rng.random::<f64>() * 2.0 - 1.0,
    }
}

struct Conditionals<'a> {
    model: &'a ABModel,
    domain: &'a DomainSpec,
    kind: CondKind,
    grid_points: usize,
    tail_cutoff: f64,
}

impl<'a> Conditionals<'a> {
    /// Resample coordinate `j` of `x` in place.
    fn step<R: Rng + ?Sized>(&self, x: &mut [f64], j: usize, rng: &mut R) -> Result<()> {
        let sec = self.domain.section(x, j)?;
        if sec.is_empty() {
            return Err(Error::MassUnderflow);
        }
        let k = &self.model.k;
        let m = x.len();
        match self.kind {
            CondKind::Gauss => {
                let mut s = 0.0;
                for l in 0..m {
                    if l != j {
                        s += k[(j, l)] * x[l];
                    }
                }
                let kjj = k[(j, j)];
                let mean = (self.model.eta[j] - s) / kjj;
                let sigma = kjj.sqrt().recip();
                let parts: Vec<(f64, f64)> =
                    sec.parts().iter().map(|p| (p.lower, p.upper)).collect();
                x[j] = gauss::sample_truncnorm_union(rng, mean, sigma, &parts)?;
            }
            CondKind::LogGauss => {
                let mut s = 0.0;
                for l in 0..m {
                    if l != j {
                        if !(x[l] > 0.0) {
                            return Err(Error::NonFinite("logarithmic conditional state"));
                        }
                        s += k[(j, l)] * x[l].ln();
                    }
                }
                let kjj = k[(j, j)];
                // the +1 comes from the Jacobian of y = log x
                let mean = (self.model.eta[j] + 1.0 - s) / kjj;
                let sigma = kjj.sqrt().recip();
                let mut parts = Vec::new();
                for p in sec.parts() {
                    if p.upper <= 0.0 {
                        continue;
                    }
                    let lo = if p.lower <= 0.0 { f64::NEG_INFINITY } else { p.lower.ln() };
                    parts.push((lo, p.upper.ln()));
                }
                if parts.is_empty() {
                    return Err(Error::MassUnderflow);
                }
                let y = gauss::sample_truncnorm_union(rng, mean, sigma, &parts)?;
                x[j] = y.exp();
            }
            CondKind::Grid => {
                x[j] = self.grid_sample(x, j, &sec, rng)?;
            }
        }
        Ok(())
    }

    /// Unnormalized log conditional of coordinate `j` at value `xj`,
    /// with `s` the interaction sum over the other coordinates.
    fn log_cond(&self, j: usize, xj: f64, s: f64) -> f64 {
        let model = self.model;
        let (a, b) = (model.a, model.b);
        let t = if a == 0.0 { xj.ln() } else { xpow(xj, a) };
        let quad_scale = if a == 0.0 { 0.5 } else { 1.0 / (2.0 * a) };
        let kjj = model.k[(j, j)];
        let mut v = -quad_scale * (kjj * t * t + 2.0 * t * s);
        if !model.centered {
            v += if b == 0.0 {
                model.eta[j] * xj.ln()
            } else {
                model.eta[j] * xpow(xj, b) / b
            };
        }
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn grid_sample<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        j: usize,
        sec: &IntervalUnion,
        rng: &mut R,
    ) -> Result<f64> {
        let model = self.model;
        let a = model.a;
        // interaction sum over the other coordinates
        let mut s = 0.0;
        for (l, &xl) in x.iter().enumerate() {
            if l != j {
                let t = if a == 0.0 { xl.ln() } else { xpow(xl, a) };
                if !t.is_finite() {
                    return Err(Error::NonFinite("grid conditional state"));
                }
                s += model.k[(j, l)] * t;
            }
        }
        let f = |xj: f64| self.log_cond(j, xj, s);

        // locate a finite window per component
        let mut windows: Vec<(f64, f64)> = Vec::new();
        for p in sec.parts() {
            if p.lower == p.upper {
                continue;
            }
            let w = self.component_window(p, x[j], &f)?;
            windows.push(w);
        }
        if windows.is_empty() {
            return Err(Error::MassUnderflow);
        }

        // evaluate the grid and find the global maximum for stability
        let g = self.grid_points;
        let mut grids: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(windows.len());
        let mut vmax = f64::NEG_INFINITY;
        for &(lo, hi) in &windows {
            let mut xs = Vec::with_capacity(g);
            let mut lv = Vec::with_capacity(g);
            let h = (hi - lo) / (g - 1) as f64;
            for t in 0..g {
                let xt = if t + 1 == g { hi } else { lo + h * t as f64 };
                let v = f(xt);
                vmax = vmax.max(v);
                xs.push(xt);
                lv.push(v);
            }
            grids.push((xs, lv));
        }
        if vmax == f64::NEG_INFINITY {
            return Err(Error::MassUnderflow);
        }

        // per-component trapezoid masses
        let mut cums: Vec<Vec<f64>> = Vec::with_capacity(grids.len());
        let mut total = 0.0;
        for (xs, lv) in &grids {
            let mut cum = Vec::with_capacity(g);
            cum.push(0.0);
            let mut acc = 0.0;
            for t in 1..g {
                let h = xs[t] - xs[t - 1];
                let f0 = (lv[t - 1] - vmax).exp();
                let f1 = (lv[t] - vmax).exp();
                acc += 0.5 * (f0 + f1) * h;
                cum.push(acc);
            }
            total += acc;
            cums.push(cum);
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::MassUnderflow);
        }

        // invert the stitched CDF by linear interpolation
        let mut target = rng.random::<f64>() * total;
        for (ci, (xs, _)) in grids.iter().enumerate() {
            let cum = &cums[ci];
            let mass = *cum.last().unwrap();
            if target > mass {
                target -= mass;
                continue;
            }
            let mut lo = 0usize;
            let mut hi = g - 1;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if cum[mid] < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cell = cum[hi] - cum[lo];
            let frac = if cell > 0.0 { (target - cum[lo]) / cell } else { 0.5 };
            return Ok(xs[lo] + frac * (xs[hi] - xs[lo]));
        }
        // numerically total * u fell just past the last cell
        let (xs, _) = grids.last().unwrap();
        Ok(*xs.last().unwrap())
    }

    /// A finite `[lo, hi]` window covering all but `exp(-cutoff)` of a
    /// component's conditional mass, located by doubling searches from
    /// the finite structure of the component.
    fn component_window(
        &self,
        part: &Interval,
        current: f64,
        f: &dyn Fn(f64) -> f64,
    ) -> Result<(f64, f64)> {
        let cutoff = self.tail_cutoff;
        match (part.lower.is_finite(), part.upper.is_finite()) {
            (true, true) => Ok((part.lower, part.upper)),
            (true, false) => {
                let hi = expand(part.lower, 1.0 + part.lower.abs() * 0.5, cutoff, f)?;
                Ok((part.lower, hi))
            }
            (false, true) => {
                let lo = expand(part.upper, -(1.0 + part.upper.abs() * 0.5), cutoff, f)?;
                Ok((lo, part.upper))
            }
            (false, false) => {
                let anchor = if current.is_finite() { current } else { 0.0 };
                let hi = expand(anchor, 1.0 + anchor.abs() * 0.5, cutoff, f)?;
                let lo = expand(anchor, -(1.0 + anchor.abs() * 0.5), cutoff, f)?;
                Ok((lo, hi))
            }
        }
    }
}

const MAX_DOUBLINGS: usize = 300;

/// Double `step` away from `anchor` until the log density drops
/// `cutoff` nats below the best value seen.
fn expand(anchor: f64, step0: f64, cutoff: f64, f: &dyn Fn(f64) -> f64) -> Result<f64> {
    let mut best = f(anchor);
    let mut step = step0;
    for _ in 0..MAX_DOUBLINGS {
        let probe = anchor + step;
        let v = f(probe);
        if v > best {
            best = v;
        } else if (v.is_finite() || v == f64::NEG_INFINITY)
            && best.is_finite()
            && v <= best - cutoff
        {
            return Ok(probe);
        }
        step *= 2.0;
        if !probe.is_finite() {
            break;
        }
    }
    Err(Error::Quadrature(
        "tail window search did not reach the cutoff".into(),
    ))
}

/// Draw `n` approximate samples from the model restricted to `domain`.
/// Deterministic in `(model, domain, n, cfg)`; the sample matrix is
/// split across `cfg.chains` independent chains.
pub fn gibbs_sample(
    model: &ABModel,
    domain: &DomainSpec,
    n: usize,
    cfg: &SamplerConfig,
) -> Result<DMatrix<f64>> {
    let m = model.dim();
    if domain.dim != m {
        return Err(Error::DimensionMismatch { expected: m, got: domain.dim });
    }
    cfg.validate()?;
    domain.validate()?;
    check_normalizable(model, domain)?;
    let mut start = match &cfg.init {
        InitPoint::Auto => auto_init(domain, cfg.seed)?,
        InitPoint::Point(p) => {
            if p.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: p.len() });
            }
            if !domain.contains(p) {
                return Err(Error::OutOfDomain { row: None });
            }
            p.clone()
        }
    };
    if model.a == 0.0 {
        positive_start(domain, &mut start, cfg.seed, matches!(&cfg.init, InitPoint::Point(_)))?;
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, m));
    }

    let cond = Conditionals {
        model,
        domain,
        kind: conditional_kind(model),
        grid_points: cfg.grid_points,
        tail_cutoff: cfg.tail_cutoff_nats,
    };

    let chains = cfg.chains.min(n);
    let base = n / chains;
    let rem = n % chains;
    let sizes: Vec<usize> = (0..chains).map(|c| base + usize::from(c < rem)).collect();

    let outputs: Vec<Result<Vec<Vec<f64>>>> = sizes
        .par_iter()
        .enumerate()
        .map(|(chain, &rows)| {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1 + chain as u64);
            let mut x = start.clone();
            let mut out = Vec::with_capacity(rows);
            for _ in 0..cfg.burn_in {
                for j in 0..m {
                    cond.step(&mut x, j, &mut rng)?;
                }
            }
            for _ in 0..rows {
                for _ in 0..cfg.thin {
                    for j in 0..m {
                        cond.step(&mut x, j, &mut rng)?;
                    }
                }
                out.push(x.clone());
            }
            Ok(out)
        })
        .collect();

    let mut data = DMatrix::zeros(n, m);
    let mut row = 0;
    for chunk in outputs {
        for r in chunk? {
            for (j, v) in r.into_iter().enumerate() {
                data[(row, j)] = v;
            }
            row += 1;
        }
    }
    Ok(data)
}

/// The six simulation domain families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainFamily {
    #[serde(rename = "l2-nn")]
    L2Nn,
    #[serde(rename = "l2c-nn")]
    L2CNn,
    #[serde(rename = "unif-nn")]
    UnifNn,
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "l2c")]
    L2C,
    #[serde(rename = "unif")]
    Unif,
}

impl DomainFamily {
    pub const ALL: [DomainFamily; 6] = [
        DomainFamily::L2Nn,
        DomainFamily::L2CNn,
        DomainFamily::UnifNn,
        DomainFamily::L2,
        DomainFamily::L2C,
        DomainFamily::Unif,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            DomainFamily::L2Nn => "l2-nn",
            DomainFamily::L2CNn => "l2c-nn",
            DomainFamily::UnifNn => "unif-nn",
            DomainFamily::L2 => "l2",
            DomainFamily::L2C => "l2c",
            DomainFamily::Unif => "unif",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|f| f.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown domain family {s:?}")))
    }

    /// Families restricted to the nonnegative orthant.
    pub fn nonneg(&self) -> bool {
        matches!(self, DomainFamily::L2Nn | DomainFamily::L2CNn | DomainFamily::UnifNn)
    }

    /// The untruncated base domain used for threshold calibration.
    pub fn base_domain(&self, m: usize) -> DomainSpec {
        if self.nonneg() {
            DomainSpec::nonneg(m)
        } else {
            DomainSpec::full(m)
        }
    }

    /// The scalar whose sample median defines the truncation threshold.
    pub fn statistic(&self, x: &[f64]) -> f64 {
        match self {
            DomainFamily::L2Nn | DomainFamily::L2CNn | DomainFamily::L2 | DomainFamily::L2C => {
                x.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
            DomainFamily::UnifNn => x.iter().cloned().fold(f64::INFINITY, f64::min),
            DomainFamily::Unif => x.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min),
        }
    }

    /// The truncated domain at threshold `c1`.
    pub fn domain(&self, m: usize, c1: f64) -> Result<DomainSpec> {
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain threshold must be positive and finite, got {c1}"
            )));
        }
        let shape = match self {
            DomainFamily::L2Nn => Shape::LqBall { q: 2.0, r: c1, nonneg: true },
            DomainFamily::L2CNn => Shape::LqBallComplement { q: 2.0, r: c1, nonneg: true },
            DomainFamily::UnifNn => Shape::Product {
                coords: vec![IntervalUnion::of(Interval::new(c1, f64::INFINITY, true, false)?); m],
            },
            DomainFamily::L2 => Shape::LqBall { q: 2.0, r: c1, nonneg: false },
            DomainFamily::L2C => Shape::LqBallComplement { q: 2.0, r: c1, nonneg: false },
            DomainFamily::Unif => {
                let two_rays = IntervalUnion::from_parts(vec![
                    Interval::new(f64::NEG_INFINITY, -c1, false, true)?,
                    Interval::new(c1, f64::INFINITY, true, false)?,
                ]);
                Shape::Product { coords: vec![two_rays; m] }
            }
        };
        DomainSpec::new(m, shape)
    }
}

/// Calibrate the family threshold: sample the untruncated model on the
/// family's base domain and return the nearest-rank median of the
/// family statistic.
pub fn calibrate_c1(
    model: &ABModel,
    family: DomainFamily,
    n: usize,
    cfg: &SamplerConfig,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyData("threshold calibration needs at least one sample"));
    }
    let base = family.base_domain(model.dim());
    let data = gibbs_sample(model, &base, n, cfg)?;
    let mut stats: Vec<f64> = (0..n)
        .map(|i| {
            let row: Vec<f64> = data.row(i).iter().cloned().collect();
            family.statistic(&row)
        })
        .collect();
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(stats[n.div_ceil(2) - 1])
}
