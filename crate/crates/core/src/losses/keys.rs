//! Grouping of statistic differences for exponential-family losses.
//!
//! For `log p̃_θ(x) = η(θ)·T(x) + b(x)` every ratio is
//! `exp(η·ΔT + Δb)`, so a loss that depends on the data only through ratios
//! can be summed over the distinct `(ΔT, Δb)` values, each with its total
//! weight.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::WeightedPoints;
use crate::models::{DiscreteModel, ExpFamily};

/// Distinct `(ΔT, Δb)` keys, stored with stride `k + 1`, and their weights.
#[derive(Clone, Debug, Default)]
pub(crate) struct StatKeys {
    pub k: usize,
    pub keys: Vec<f64>,
    pub weights: Vec<f64>,
    index: BTreeMap<Vec<u64>, usize>,
}

impl StatKeys {
    pub fn new(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn stat(&self, i: usize) -> &[f64] {
        let s = self.k + 1;
        &self.keys[i * s..i * s + self.k]
    }

    #[inline]
    pub fn base(&self, i: usize) -> f64 {
        self.keys[i * (self.k + 1) + self.k]
    }

    /// `η·ΔT + Δb` for key `i`.
    #[inline]
    pub fn log_ratio(&self, eta: &[f64], i: usize) -> f64 {
        crate::math::dot(eta, self.stat(i)) + self.base(i)
    }

    /// Adds `w` to the key `(stat, base)`, creating it if needed.
    pub fn add(&mut self, key: &[f64], w: f64) {
        // +0.0 folds negative zero into the same key
        let bits: Vec<u64> = key.iter().map(|v| (v + 0.0).to_bits()).collect();
        let next = self.weights.len();
        let id = *self.index.entry(bits).or_insert(next);
        if id == next {
            self.keys.extend_from_slice(key);
            self.weights.push(w);
        } else {
            self.weights[id] += w;
        }
    }

    /// Drops the lookup table once all keys are in.
    pub fn seal(mut self) -> Self {
        self.index = BTreeMap::new();
        self
    }
}

/// Backward keys `ΔT` of `x → x^{j−}` (skipping ★) and, when `forward` is
/// set, the keys of `x^{j+} → x`, over every point and coordinate.
pub(crate) fn collect_keys<M: DiscreteModel + ?Sized>(
    model: &M,
    ef: &dyn ExpFamily,
    data: &WeightedPoints,
    forward: bool,
) -> (StatKeys, StatKeys) {
    let k = ef.stat_dim();
    let d = data.dim;
    let domain = model.domain();
    let mut minus = StatKeys::new(k);
    let mut plus = StatKeys::new(k);
    let mut buf = vec![0.0; k + 1];
    let mut succ = vec![0i64; d];
    for a in 0..data.len() {
        let x = data.point(a);
        let w = data.weights[a];
        for j in 0..d {
            if let Some(db) = ef.stat_diff_minus(x, j, &mut buf[..k]) {
                buf[k] = db;
                minus.add(&buf, w);
            }
            if forward {
                domain.succ_into(x, j, &mut succ);
                buf[k] = ef
                    .stat_diff_minus(&succ, j, &mut buf[..k])
                    .expect("the predecessor of a successor is never the star state");
                plus.add(&buf, w);
            }
        }
    }
    (minus.seal(), plus.seal())
}

/// Accumulates `∂/∂η` and the parameter-space Laplacian of
/// `Σ c · f(η·t + b)` term by term.
pub(crate) struct ExpFamilyAccumulator<'a> {
    k: usize,
    p: usize,
    jac: &'a [f64],
    pub g_eta: Vec<f64>,
    pub trace: f64,
    want_trace: bool,
    u: Vec<f64>,
}

impl<'a> ExpFamilyAccumulator<'a> {
    pub fn new(k: usize, p: usize, jac: &'a [f64], want_trace: bool) -> Self {
        Self { k, p, jac, g_eta: vec![0.0; k], trace: 0.0, want_trace, u: vec![0.0; p] }
    }

    /// Adds a term with `df/ds = d1` and `d²f/ds² = d2` at `s = η·t + b`.
    /// The `η`-curvature part of the trace is added in [`Self::finish`].
    #[inline]
    pub fn add(&mut self, t: &[f64], d1: f64, d2: f64) {
        for m in 0..self.k {
            self.g_eta[m] += d1 * t[m];
        }
        if self.want_trace {
            for a in 0..self.p {
                self.u[a] = (0..self.k).map(|m| t[m] * self.jac[m * self.p + a]).sum();
            }
            self.trace += d2 * crate::math::norm_sq(&self.u);
        }
    }

    /// Gradient in `θ` and `Tr ∇²` including `g_η · Tr_θ ∇²η`.
    pub fn finish(self, ef: &dyn ExpFamily, theta: &[f64]) -> (Vec<f64>, f64) {
        let grad = (0..self.p).map(|a| (0..self.k).map(|m| self.jac[m * self.p + a] * self.g_eta[m]).sum()).collect();
        let mut trace = self.trace;
        if self.want_trace {
            trace += crate::math::dot(&self.g_eta, &ef.eta_hessian_traces(theta));
        }
        (grad, trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_merge_weights_and_signed_zero() {
        let mut s = StatKeys::new(1);
        s.add(&[1.0, 0.0], 2.0);
        s.add(&[1.0, -0.0], 3.0);
        s.add(&[-1.0, 0.0], 1.0);
        let s = s.seal();
        assert_eq!(s.len(), 2);
        assert_eq!(s.weights, vec![5.0, 1.0]);
        assert_eq!(s.stat(1), &[-1.0]);
        assert_eq!(s.log_ratio(&[2.0], 0), 2.0);
    }
}
