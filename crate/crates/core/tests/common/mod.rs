//! Brute-force reference computations on enumerable domains, written
//! independently of the library's operators.

#![allow(dead_code, clippy::needless_range_loop)]

use dfdbayes_core::domain::{CoordinateDomain, ProductDomain};
use dfdbayes_core::losses::DiscreteKernel;
use dfdbayes_core::models::TabulatedModel;
use dfdbayes_core::DiscreteModel;
use rand::Rng;

pub fn pred(c: CoordinateDomain, v: i64) -> Option<i64> {
    match c {
        CoordinateDomain::FiniteCyclic(k) => Some(if v == 0 { k as i64 - 1 } else { v - 1 }),
        CoordinateDomain::HalfInfiniteMin => (v > 0).then(|| v - 1),
        CoordinateDomain::BiInfinite => Some(v - 1),
    }
}

pub fn succ(c: CoordinateDomain, v: i64) -> i64 {
    match c {
        CoordinateDomain::FiniteCyclic(k) => (v + 1) % k as i64,
        _ => v + 1,
    }
}

fn shift(domain: &ProductDomain, x: &[i64], i: usize, up: bool) -> Option<Vec<i64>> {
    let mut y = x.to_vec();
    let c = domain.coord(i);
    y[i] = if up { succ(c, x[i]) } else { pred(c, x[i])? };
    Some(y)
}

/// A tabulated pmf together with an explicit support list and normalised
/// probabilities. Half-infinite axes are enumerated to `table size + tail`,
/// past which the geometric tail carries negligible mass.
pub struct Enumerated {
    pub model: TabulatedModel,
    pub points: Vec<Vec<i64>>,
    pub probs: Vec<f64>,
}

impl Enumerated {
    pub fn new(model: TabulatedModel, tail: usize) -> Self {
        let ranges: Vec<usize> = model
            .domain()
            .coords()
            .iter()
            .zip(model.sizes())
            .map(|(c, &s)| match c {
                CoordinateDomain::FiniteCyclic(k) => *k,
                _ => s + tail,
            })
            .collect();
        let mut points = vec![vec![]];
        for &r in &ranges {
            points = points
                .into_iter()
                .flat_map(|p| {
                    (0..r as i64).map(move |v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        let logs: Vec<f64> = points.iter().map(|x| model.log_tilde_p(&[], x)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = w.iter().sum();
        let probs = w.iter().map(|v| v / z).collect();
        Self { model, points, probs }
    }

    pub fn domain(&self) -> &ProductDomain {
        self.model.domain()
    }

    /// `r_i(x) = p(x^{i−}) / p(x)`, zero at ★.
    pub fn ratio(&self, x: &[i64], i: usize) -> f64 {
        match shift(self.domain(), x, i, false) {
            Some(y) => (self.model.log_tilde_p(&[], &y) - self.model.log_tilde_p(&[], x)).exp(),
            None => 0.0,
        }
    }

    /// `(∇⁻p / p)(x)`.
    pub fn score(&self, x: &[i64]) -> Vec<f64> {
        (0..x.len()).map(|i| 1.0 - self.ratio(x, i)).collect()
    }
}

/// Random tabulated model: log-weights uniform on `[-spread, spread]`, tail
/// decay uniform on `[-1.5, -0.5]`.
pub fn random_table<R: Rng>(rng: &mut R, domain: &ProductDomain, spread: f64) -> TabulatedModel {
    let sizes: Vec<usize> = domain
        .coords()
        .iter()
        .map(|c| match c {
            CoordinateDomain::FiniteCyclic(k) => *k,
            _ => 4,
        })
        .collect();
    let len = sizes.iter().product();
    let w = (0..len).map(|_| rng.random_range(-spread..spread)).collect();
    TabulatedModel::new(domain.clone(), sizes, w, rng.random_range(-1.5..-0.5)).unwrap()
}

/// `E_q ‖∇⁻p/p − ∇⁻q/q‖²`.
pub fn dfd_expectation(p: &Enumerated, q: &Enumerated) -> f64 {
    q.points
        .iter()
        .zip(&q.probs)
        .map(|(x, w)| {
            let a = p.score(x);
            let b = q.score(x);
            w * a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
        })
        .sum()
}

/// `E_q [‖∇⁻p/p‖² + 2 ∇⁺·(∇⁻p/p)]`, the part that depends on `p`.
pub fn dfd_computable(p: &Enumerated, q: &Enumerated) -> f64 {
    let dom = q.domain();
    q.points
        .iter()
        .zip(&q.probs)
        .map(|(x, w)| {
            let a = p.score(x);
            let mut v: f64 = a.iter().map(|u| u * u).sum();
            for i in 0..x.len() {
                let up = shift(dom, x, i, true).unwrap();
                v += 2.0 * (p.score(&up)[i] - a[i]);
            }
            w * v
        })
        .sum()
}

/// `E_q ‖∇⁻q/q‖²`.
pub fn dfd_constant(q: &Enumerated) -> f64 {
    q.points.iter().zip(&q.probs).map(|(x, w)| w * q.score(x).iter().map(|u| u * u).sum::<f64>()).sum()
}

/// Stein kernel built from explicit shifts and kernel evaluations.
pub fn stein_kernel<K: DiscreteKernel>(p: &Enumerated, k: &K, x: &[i64], y: &[i64]) -> f64 {
    let dom = p.domain();
    (0..x.len())
        .map(|i| {
            let xp = shift(dom, x, i, true).unwrap();
            let yp = shift(dom, y, i, true).unwrap();
            let (rx, ry) = (p.ratio(x, i), p.ratio(y, i));
            k.eval(&xp, &yp) - ry * k.eval(&xp, y) - rx * k.eval(x, &yp) + rx * ry * k.eval(x, y)
        })
        .sum()
}

/// `E_{x,y ∼ q} u_p(x, y)`.
pub fn ksd_squared<K: DiscreteKernel>(p: &Enumerated, q: &Enumerated, k: &K) -> f64 {
    let mut total = 0.0;
    for (x, wx) in q.points.iter().zip(&q.probs) {
        for (y, wy) in q.points.iter().zip(&q.probs) {
            total += wx * wy * stein_kernel(p, k, x, y);
        }
    }
    total
}

/// Total-variation distance between two pmfs on the same index set.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum::<f64>()
}

/// Central first differences.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, theta: &[f64], rel: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|k| {
            let h = rel * (1.0 + theta[k].abs());
            let mut t = theta.to_vec();
            t[k] = theta[k] + h;
            let up = f(&t);
            t[k] = theta[k] - h;
            (up - f(&t)) / (2.0 * h)
        })
        .collect()
}

/// Sum of fourth-order central second differences.
pub fn fd_laplacian<F: Fn(&[f64]) -> f64>(f: F, theta: &[f64], rel: f64) -> f64 {
    let f0 = f(theta);
    (0..theta.len())
        .map(|k| {
            let h = rel * (1.0 + theta[k].abs());
            let at = |s: f64| {
                let mut t = theta.to_vec();
                t[k] = theta[k] + s * h;
                f(&t)
            };
            (-at(2.0) + 16.0 * at(1.0) - 30.0 * f0 + 16.0 * at(-1.0) - at(-2.0)) / (12.0 * h * h)
        })
        .sum()
}
