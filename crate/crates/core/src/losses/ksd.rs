use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::kernel::DiscreteKernel;
use super::{Aggregation, EvalMode, Loss, WeightedPoints};
use crate::data::Dataset;
use crate::models::DiscreteModel;

/// Stein kernel `u_p(x, y) = Σ_i A_i^x A_i^y k(x, y)` for the difference Stein
/// operator `A_i h(x) = h(x^{i+}) − r_{i−}(x) h(x)`.
pub fn stein_kernel<M, K>(model: &M, kernel: &K, theta: &[f64], x: &[i64], y: &[i64]) -> f64
where
    M: DiscreteModel + ?Sized,
    K: DiscreteKernel + ?Sized,
{
    let d = x.len();
    let mut shifted = vec![[0.0; 4]; d];
    kernel.shifted(model.domain(), x, y, &mut shifted);
    (0..d)
        .map(|i| {
            let rx = model.ratio_minus(theta, x, i);
            let ry = model.ratio_minus(theta, y, i);
            let [kpp, kpx, kxp, kxx] = shifted[i];
            kpp - ry * kpx - rx * kxp + rx * ry * kxx
        })
        .sum()
}

/// Largest number of distinct ratio keys the keyed mode will tabulate.
const MAX_KEYS: usize = 1024;

/// Total kernel Stein discrepancy loss `n · KSD²`, with the V-statistic
/// `KSD² = (1/n²) Σ_{a,b} u_p(x_a, x_b)`.
///
/// For an exponential-family model every ratio is `exp(η(θ)·ΔT + Δb)` for one
/// of finitely many keys `(ΔT, Δb)` fixed by the data, so the double sum
/// collapses to `C − Σ_k c_k r_k + Σ_{kl} Q_{kl} r_k r_l`. Building `(C, c, Q)`
/// costs one `O(U² d)` pass; each evaluation after that costs `O(K²)`.
pub struct KsdLoss<'a, M: DiscreteModel + ?Sized, K: DiscreteKernel> {
    model: &'a M,
    kernel: K,
    data: WeightedPoints,
    keyed: Option<Keyed>,
}

struct Keyed {
    /// Statistic difference (first `k` entries) and base difference per key.
    keys: Vec<Vec<f64>>,
    constant: f64,
    linear: Vec<f64>,
    quadratic: Vec<f64>,
}

impl<'a, M: DiscreteModel + ?Sized, K: DiscreteKernel> KsdLoss<'a, M, K> {
    pub fn new(model: &'a M, kernel: K, data: &Dataset) -> Self {
        Self::with_options(model, kernel, data, Aggregation::Auto, EvalMode::Auto)
    }

    pub fn with_options(model: &'a M, kernel: K, data: &Dataset, aggregation: Aggregation, mode: EvalMode) -> Self {
        // the pair sum is quadratic in the number of points, so any
        // duplication pays for the aggregation pass
        let aggregation = match aggregation {
            Aggregation::Auto => Aggregation::Always,
            other => other,
        };
        let mut loss = Self { model, kernel, data: WeightedPoints::new(data, aggregation), keyed: None };
        if mode != EvalMode::Direct {
            loss.keyed = loss.build_keyed(if mode == EvalMode::Keyed { usize::MAX } else { MAX_KEYS });
        }
        loss
    }

    /// Whether evaluations use the precomputed quadratic form.
    pub fn is_keyed(&self) -> bool {
        self.keyed.is_some()
    }

    /// `KSD²` itself, i.e. the total loss divided by `n`.
    pub fn discrepancy(&self, theta: &[f64]) -> f64 {
        self.value(theta) / self.data.n as f64
    }

    fn pair_factor(a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else {
            2.0
        }
    }

    fn build_keyed(&self, max_keys: usize) -> Option<Keyed> {
        let ef = self.model.exp_family()?;
        let k = ef.stat_dim();
        let d = self.data.dim;
        let u = self.data.len();
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut keys: Vec<Vec<f64>> = Vec::new();
        let mut slot = vec![None; u * d];
        let mut buf = vec![0.0; k + 1];
        for a in 0..u {
            for i in 0..d {
                if let Some(db) = ef.stat_diff_minus(self.data.point(a), i, &mut buf[..k]) {
                    buf[k] = db;
                    // +0.0 folds negative zero into the same key
                    let bits: Vec<u64> = buf.iter().map(|v| (v + 0.0).to_bits()).collect();
                    let next = keys.len();
                    let id = *index.entry(bits).or_insert(next);
                    if id == next {
                        if next >= max_keys {
                            return None;
                        }
                        keys.push(buf.clone());
                    }
                    slot[a * d + i] = Some(id);
                }
            }
        }
        let nk = keys.len();
        let mut constant = 0.0;
        let mut linear = vec![0.0; nk];
        let mut quadratic = vec![0.0; nk * nk];
        let mut shifted = vec![[0.0; 4]; d];
        let domain = self.model.domain();
        let mut factors = vec![0.0; u * (d + 1)];
        let factored = (0..u).all(|a| {
            self.kernel.point_factors(domain, self.data.point(a), &mut factors[a * (d + 1)..(a + 1) * (d + 1)])
        });
        for a in 0..u {
            for b in a..u {
                let w = Self::pair_factor(a, b) * self.data.weights[a] * self.data.weights[b];
                if factored {
                    self.kernel.shifted_base(domain, self.data.point(a), self.data.point(b), &mut shifted);
                    let (fa, fb) = (&factors[a * (d + 1)..(a + 1) * (d + 1)], &factors[b * (d + 1)..(b + 1) * (d + 1)]);
                    for (i, k) in shifted.iter_mut().enumerate() {
                        k[0] *= fa[i + 1] * fb[i + 1];
                        k[1] *= fa[i + 1] * fb[0];
                        k[2] *= fa[0] * fb[i + 1];
                        k[3] *= fa[0] * fb[0];
                    }
                } else {
                    self.kernel.shifted(domain, self.data.point(a), self.data.point(b), &mut shifted);
                }
                for i in 0..d {
                    let [kpp, kpx, kxp, kxx] = shifted[i];
                    constant += w * kpp;
                    let (sa, sb) = (slot[a * d + i], slot[b * d + i]);
                    if let Some(kb) = sb {
                        linear[kb] += w * kpx;
                    }
                    if let Some(ka) = sa {
                        linear[ka] += w * kxp;
                    }
                    if let (Some(ka), Some(kb)) = (sa, sb) {
                        quadratic[ka * nk + kb] += 0.5 * w * kxx;
                        quadratic[kb * nk + ka] += 0.5 * w * kxx;
                    }
                }
            }
        }
        Some(Keyed { keys, constant, linear, quadratic })
    }

    fn direct_value(&self, theta: &[f64]) -> f64 {
        let d = self.data.dim;
        let u = self.data.len();
        let mut r = vec![0.0; u * d];
        for a in 0..u {
            for i in 0..d {
                r[a * d + i] = self.model.ratio_minus(theta, self.data.point(a), i);
            }
        }
        let domain = self.model.domain();
        let mut shifted = vec![[0.0; 4]; d];
        let mut total = 0.0;
        for a in 0..u {
            let ra = &r[a * d..(a + 1) * d];
            let mut row = 0.0;
            for b in a..u {
                let rb = &r[b * d..(b + 1) * d];
                self.kernel.shifted(domain, self.data.point(a), self.data.point(b), &mut shifted);
                let mut s = 0.0;
                for i in 0..d {
                    let [kpp, kpx, kxp, kxx] = shifted[i];
                    s += kpp - rb[i] * kpx - ra[i] * kxp + ra[i] * rb[i] * kxx;
                }
                row += Self::pair_factor(a, b) * self.data.weights[b] * s;
            }
            total += self.data.weights[a] * row;
        }
        total / self.data.n as f64
    }

    /// Ratios `r_k(θ)` and projected statistic differences `J(θ)ᵀ ΔT_k` per key.
    fn keyed_ratios(&self, keyed: &Keyed, theta: &[f64], with_proj: bool) -> (Vec<f64>, Vec<f64>) {
        let ef = self.model.exp_family().expect("keyed mode requires an exponential family");
        let k = ef.stat_dim();
        let p = theta.len();
        let eta = ef.eta(theta);
        let r: Vec<f64> = keyed.keys.iter().map(|key| libm::exp(crate::math::dot(&eta, &key[..k]) + key[k])).collect();
        let mut proj = Vec::new();
        if with_proj {
            let jac = ef.eta_jacobian(theta);
            proj = vec![0.0; keyed.keys.len() * p];
            for (ki, key) in keyed.keys.iter().enumerate() {
                for a in 0..p {
                    proj[ki * p + a] = (0..k).map(|m| key[m] * jac[m * p + a]).sum();
                }
            }
        }
        (r, proj)
    }

    fn keyed_value(&self, keyed: &Keyed, theta: &[f64]) -> f64 {
        let (r, _) = self.keyed_ratios(keyed, theta, false);
        let nk = r.len();
        let mut total = keyed.constant - crate::math::dot(&keyed.linear, &r);
        for a in 0..nk {
            let row = &keyed.quadratic[a * nk..(a + 1) * nk];
            total += r[a] * crate::math::dot(row, &r);
        }
        total / self.data.n as f64
    }

    fn keyed_derivatives(&self, keyed: &Keyed, theta: &[f64], want_trace: bool) -> (Vec<f64>, f64) {
        let ef = self.model.exp_family().expect("keyed mode requires an exponential family");
        let k = ef.stat_dim();
        let p = theta.len();
        let (r, proj) = self.keyed_ratios(keyed, theta, true);
        let nk = r.len();
        let q = &keyed.quadratic;
        // c_k = ∂f/∂r_k
        let c: Vec<f64> =
            (0..nk).map(|a| -keyed.linear[a] + 2.0 * crate::math::dot(&q[a * nk..(a + 1) * nk], &r)).collect();
        let mut grad = vec![0.0; p];
        for a in 0..nk {
            for j in 0..p {
                grad[j] += c[a] * r[a] * proj[a * p + j];
            }
        }
        let mut trace = 0.0;
        if want_trace {
            let h_tr = ef.eta_hessian_traces(theta);
            for a in 0..nk {
                let u = &proj[a * p..(a + 1) * p];
                let curv = crate::math::norm_sq(u) + crate::math::dot(&keyed.keys[a][..k], &h_tr);
                trace += c[a] * r[a] * curv;
                for b in 0..nk {
                    let v = &proj[b * p..(b + 1) * p];
                    trace += 2.0 * q[a * nk + b] * r[a] * r[b] * crate::math::dot(u, v);
                }
            }
        }
        let n = self.data.n as f64;
        for g in &mut grad {
            *g /= n;
        }
        (grad, trace / n)
    }
}

impl<M: DiscreteModel + ?Sized, K: DiscreteKernel> Loss for KsdLoss<'_, M, K> {
    fn dim(&self) -> usize {
        self.model.dim_theta()
    }

    fn n(&self) -> usize {
        self.data.n
    }

    fn value(&self, theta: &[f64]) -> f64 {
        match &self.keyed {
            Some(keyed) => self.keyed_value(keyed, theta),
            None => self.direct_value(theta),
        }
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        match &self.keyed {
            Some(keyed) => self.keyed_derivatives(keyed, theta, false).0,
            None => super::numdiff::gradient(|t| self.direct_value(t), theta),
        }
    }

    fn hessian_trace(&self, theta: &[f64]) -> f64 {
        match &self.keyed {
            Some(keyed) => self.keyed_derivatives(keyed, theta, true).1,
            None => super::numdiff::hessian_trace(|t| self.direct_value(t), theta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CoordinateDomain, ProductDomain};
    use crate::losses::ExpIndicatorKernel;
    use crate::models::{CmpModel, IsingModel, TabulatedModel};

    #[test]
    fn constant_kernel_collapses() {
        struct Constant(f64);
        impl DiscreteKernel for Constant {
            fn eval(&self, _: &[i64], _: &[i64]) -> f64 {
                self.0
            }
        }
        let model = IsingModel::grid(2).unwrap();
        let x = [1, 0, 1, 1];
        let y = [0, 0, 1, 0];
        let th = [1.7];
        let expect: f64 =
            (0..4).map(|i| 0.3 * (1.0 - model.ratio_minus(&th, &x, i)) * (1.0 - model.ratio_minus(&th, &y, i))).sum();
        let got = stein_kernel(&model, &Constant(0.3), &th, &x, &y);
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn single_point_is_diagonal() {
        let model = CmpModel::new();
        let data = Dataset::new(model.domain(), vec![vec![3]]).unwrap();
        let k = ExpIndicatorKernel::hamming();
        let loss = KsdLoss::new(&model, k, &data);
        let th = [2.5, 0.9];
        let diag = stein_kernel(&model, &k, &th, &[3], &[3]);
        assert!(diag >= 0.0);
        assert!((loss.value(&th) - diag).abs() < 1e-12);
    }

    #[test]
    fn keyed_and_direct_agree() {
        let model = IsingModel::grid(3).unwrap();
        let rows: Vec<Vec<i64>> = (0..40u64)
            .map(|s| {
                let h = crate::rng::splitmix64(s);
                (0..9).map(|i| ((h >> i) & 1) as i64).collect()
            })
            .collect();
        let data = Dataset::new(model.domain(), rows).unwrap();
        let k = ExpIndicatorKernel::hamming();
        let keyed = KsdLoss::with_options(&model, k, &data, Aggregation::Never, EvalMode::Keyed);
        let direct = KsdLoss::with_options(&model, k, &data, Aggregation::Never, EvalMode::Direct);
        assert!(keyed.is_keyed() && !direct.is_keyed());
        for th in [0.7, 2.0, 5.0] {
            let (a, b) = (keyed.value(&[th]), direct.value(&[th]));
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn vanishes_when_model_matches_data() {
        // empirical distribution on a 3 x 2 cyclic domain with rational masses
        let dom =
            ProductDomain::new(vec![CoordinateDomain::FiniteCyclic(3), CoordinateDomain::FiniteCyclic(2)]).unwrap();
        let counts = [1usize, 2, 3, 1, 2, 3];
        let logw: Vec<f64> = counts.iter().map(|&c| libm::log(c as f64)).collect();
        let model = TabulatedModel::finite(dom.clone(), logw).unwrap();
        let pts = dom.enumerate().unwrap();
        let mut rows = Vec::new();
        for (x, &c) in pts.iter().zip(&counts) {
            for _ in 0..c {
                rows.push(x.clone());
            }
        }
        let data = Dataset::new(&dom, rows).unwrap();
        let loss = KsdLoss::new(&model, ExpIndicatorKernel::hamming(), &data);
        assert!(loss.discrepancy(&[]).abs() < 1e-12);
    }
}
