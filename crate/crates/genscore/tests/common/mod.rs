//! Independent oracles shared by the integration tests. Everything
//! here recomputes its target quantity from first principles through
//! public membership or raw-sum routes, never through the code paths
//! under test.

#![allow(dead_code)]

use genscore::domain::DomainSpec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Truncated section distance by line scan: walk coordinate `j` in
/// fixed steps until membership flips, bisect the flip, and take the
/// nearer side capped at `c`. Only `contains` is consulted. The step
/// must undercut any gap between section components within the cap.
pub fn phi_line_scan(domain: &DomainSpec, c: f64, x: &[f64], j: usize, step: f64) -> f64 {
    let up = first_flip(domain, x, j, step, 1.0, c);
    let down = first_flip(domain, x, j, step, -1.0, c);
    up.min(down).min(c)
}

fn first_flip(domain: &DomainSpec, x: &[f64], j: usize, step: f64, dir: f64, cap: f64) -> f64 {
    let mut y = x.to_vec();
    let mut t = 0.0f64;
    loop {
        let next = t + step;
        if next > cap + 2.0 * step {
            return f64::INFINITY;
        }
        y[j] = x[j] + dir * next;
        if !domain.contains(&y) {
            let (mut lo, mut hi) = (t, next);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                y[j] = x[j] + dir * mid;
                if domain.contains(&y) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        t = next;
    }
}

/// Exit time of the ray `x + t u` out of the closed domain, by
/// doubling then bisection on membership.
fn ray_exit(domain: &DomainSpec, x: &[f64], u: &[f64], reach: f64) -> f64 {
    let mut y = x.to_vec();
    let probe = |t: f64, y: &mut Vec<f64>| {
        for k in 0..x.len() {
            y[k] = x[k] + t * u[k];
        }
        domain.contains(y)
    };
    let mut hi = reach * 1e-6;
    let mut lo = 0.0f64;
    while probe(hi, &mut y) {
        lo = hi;
        hi *= 2.0;
        if hi > 4.0 * reach {
            return f64::INFINITY;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut y) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Boundary distance oracle for bounded domains whose component-wise
/// boundary coincides with the topological boundary: cast rays in many
/// directions, take the smallest exit time, then refine directions in
/// a shrinking cap around the best one.
pub fn g0_ray_cast(domain: &DomainSpec, x: &[f64], c: f64, reach: f64, seed: u64) -> f64 {
    let m = x.len();
    let mut best = f64::INFINITY;
    let mut best_u = vec![0.0; m];
    if m == 2 {
        let n = 4096;
        for i in 0..n {
            let ang = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let u = [ang.cos(), ang.sin()];
            let t = ray_exit(domain, x, &u, reach);
            if t < best {
                best = t;
                best_u = u.to_vec();
            }
        }
    } else {
        let mut r = rng(seed);
        for _ in 0..4000 {
            let u = random_unit(m, &mut r);
            let t = ray_exit(domain, x, &u, reach);
            if t < best {
                best = t;
                best_u = u;
            }
        }
    }
    // Local refinement: shrink an angular cap around the best ray.
    let mut r = rng(seed ^ 0x9e3779b97f4a7c15);
    let mut radius = 0.1f64;
    for _ in 0..4 {
        for _ in 0..2000 {
            let mut u: Vec<f64> = (0..m)
                .map(|k| best_u[k] + radius * (r.random::<f64>() - 0.5))
                .collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            u.iter_mut().for_each(|v| *v /= norm);
            let t = ray_exit(domain, x, &u, reach);
            if t < best {
                best = t;
                best_u = u;
            }
        }
        radius *= 0.25;
    }
    best.min(c)
}

fn random_unit<R: Rng + ?Sized>(m: usize, r: &mut R) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..m).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
        let n2: f64 = u.iter().map(|v| v * v).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return u.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Worst-case optimality violation of the penalized quadratic at
/// `theta`, written out from the subgradient conditions.
pub fn kkt_inf(
    gamma: &DMatrix<f64>,
    g: &DVector<f64>,
    lam: &DVector<f64>,
    theta: &DVector<f64>,
) -> f64 {
    let grad = gamma * theta - g;
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        let v = if theta[i] != 0.0 {
            (grad[i] + lam[i] * theta[i].signum()).abs()
        } else {
            (grad[i].abs() - lam[i]).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Accelerated proximal gradient solver for
/// `min 0.5 theta' Gamma theta - g' theta + sum lam_i |theta_i|`,
/// run until the subgradient residual drops below `tol`.
pub fn qp_prox_oracle(
    gamma: &DMatrix<f64>,
    g: &DVector<f64>,
    lam: &DVector<f64>,
    tol: f64,
) -> DVector<f64> {
    let p = g.len();
    let lip = gamma
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let step = 1.0 / lip;
    let soft = |z: f64, t: f64| {
        if z > t {
            z - t
        } else if z < -t {
            z + t
        } else {
            0.0
        }
    };
    let mut theta = DVector::zeros(p);
    let mut momentum = theta.clone();
    let mut tk = 1.0f64;
    for it in 0..2_000_000u64 {
        let grad = gamma * &momentum - g;
        let mut next = DVector::zeros(p);
        for i in 0..p {
            next[i] = soft(momentum[i] - step * grad[i], step * lam[i]);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let beta = (tk - 1.0) / t_next;
        momentum = &next + (&next - &theta) * beta;
        // restart the momentum when it points uphill
        if (&next - &theta).dot(&(gamma * &next - g)) > 0.0 {
            momentum = next.clone();
            tk = 1.0;
        } else {
            tk = t_next;
        }
        theta = next;
        if it % 16 == 0 && kkt_inf(gamma, g, lam, &theta) <= tol {
            return theta;
        }
    }
    panic!("proximal oracle did not reach tolerance {tol}");
}

/// Plain-sum quadratic forms for the exponent-1 model with weight
/// `x_j^2` on the nonnegative orthant: per column j the stacked block
/// over (K column, eta entry) and its linear vector.
pub fn nonneg_sq_oracle(data: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
    let n = data.nrows();
    let m = data.ncols();
    let p = m + 1;
    let mut gammas = Vec::with_capacity(m);
    let mut gs = Vec::with_capacity(m);
    for j in 0..m {
        let mut gamma = DMatrix::zeros(p, p);
        let mut g = DVector::zeros(p);
        for i in 0..n {
            let xj = data[(i, j)];
            let w = xj * xj;
            for r in 0..m {
                for s in 0..m {
                    gamma[(r, s)] += w * data[(i, r)] * data[(i, s)];
                }
                gamma[(r, m)] += -w * data[(i, r)];
                g[r] += 2.0 * xj * data[(i, r)];
            }
            gamma[(m, m)] += w;
            g[j] += w;
            g[m] += -2.0 * xj;
        }
        for r in 0..m {
            for s in 0..p {
                gamma[(r, s)] /= n as f64;
            }
        }
        for s in 0..p {
            gamma[(m, s)] = gamma[(s, m)];
        }
        gamma[(m, m)] /= n as f64;
        g /= n as f64;
        gammas.push(gamma);
        gs.push(g);
    }
    (gammas, gs)
}

/// One-sample Kolmogorov statistic against a continuous cdf.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max((f - i as f64 / n).abs());
        worst = worst.max(((i + 1) as f64 / n - f).abs());
    }
    worst
}

/// Two-sample Kolmogorov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = 0.0f64;
    while i < xs.len() && j < ys.len() {
        if xs[i] <= ys[j] {
            i += 1;
        } else {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

/// Asymptotic Kolmogorov critical values at level 0.01.
pub fn ks_critical_one(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn ks_critical_two(n1: usize, n2: usize) -> f64 {
    1.628 * (((n1 + n2) as f64) / ((n1 * n2) as f64)).sqrt()
}

/// Random symmetric interaction matrix with smallest eigenvalue 0.1:
/// hollow part with signed magnitudes in [0.5, 1), constant diagonal
/// lifting the spectrum.
pub fn k0_dense<R: Rng + ?Sized>(m: usize, r: &mut R) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..i {
            let mag = r.random_range(0.5..1.0);
            let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
            k[(i, j)] = sign * mag;
            k[(j, i)] = k[(i, j)];
        }
    }
    let lam_min = k
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    for i in 0..m {
        k[(i, i)] = 0.1 - lam_min;
    }
    k
}
