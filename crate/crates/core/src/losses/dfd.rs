use alloc::vec;
use alloc::vec::Vec;

use super::keys::{collect_keys, ExpFamilyAccumulator, StatKeys};
use super::{Aggregation, EvalMode, Loss, WeightedPoints};
use crate::data::Dataset;
use crate::models::DiscreteModel;

/// Total discrete Fisher divergence loss
///
/// `D_n(θ) = Σ_i Σ_j r_{j−}(x_i, θ)² − 2 r_{j−}(x_i^{j+}, θ)`,
///
/// which equals `n · DFD(p_θ ‖ p_n)` up to an additive constant that does not
/// depend on θ. Cost is `O(n d)` ratio evaluations, or `O(U d)` for `U`
/// unique points when the data are aggregated.
///
/// Analytic gradient and Hessian trace are available whenever the model has
/// an exponential-family form; otherwise they fall back to finite differences.
pub struct DfdLoss<'a, M: DiscreteModel + ?Sized> {
    model: &'a M,
    data: WeightedPoints,
    /// Backward and forward statistic-difference keys.
    keyed: Option<(StatKeys, StatKeys)>,
}

impl<'a, M: DiscreteModel + ?Sized> DfdLoss<'a, M> {
    pub fn new(model: &'a M, data: &Dataset) -> Self {
        Self::with_options(model, data, Aggregation::Auto, EvalMode::Auto)
    }

    pub fn with_aggregation(model: &'a M, data: &Dataset, mode: Aggregation) -> Self {
        Self::with_options(model, data, mode, EvalMode::Auto)
    }

    /// `EvalMode::Auto` keys the sums when that at least halves the number
    /// of terms.
    pub fn with_options(model: &'a M, data: &Dataset, aggregation: Aggregation, mode: EvalMode) -> Self {
        debug_assert_eq!(model.domain().dim(), data.dim());
        let data = WeightedPoints::new(data, aggregation);
        let keyed = match (mode, model.exp_family()) {
            (EvalMode::Direct, _) | (_, None) => None,
            (_, Some(ef)) => {
                let keys = collect_keys(model, ef, &data, true);
                let terms = 2 * data.len() * data.dim;
                (mode == EvalMode::Keyed || 2 * (keys.0.len() + keys.1.len()) <= terms).then_some(keys)
            }
        };
        Self { model, data, keyed }
    }

    /// Whether evaluations run over grouped statistic differences.
    pub fn is_keyed(&self) -> bool {
        self.keyed.is_some()
    }

    /// Number of summands actually visited (unique points when aggregated).
    pub fn terms(&self) -> usize {
        self.data.len()
    }

    /// Per-datum value `D_n(θ) / n`.
    pub fn per_datum(&self, theta: &[f64]) -> f64 {
        self.value(theta) / self.data.n as f64
    }

    fn derivatives(&self, theta: &[f64], want_trace: bool) -> Option<(Vec<f64>, f64)> {
        let ef = self.model.exp_family()?;
        let k = ef.stat_dim();
        let eta = ef.eta(theta);
        let jac = ef.eta_jacobian(theta);
        let mut acc = ExpFamilyAccumulator::new(k, theta.len(), &jac, want_trace);
        // r_{j−}(x)² contributes e^{2s}, the forward ratio −2e^{s}
        let backward = |acc: &mut ExpFamilyAccumulator, t: &[f64], s: f64, w: f64| {
            let r2 = libm::exp(2.0 * s);
            acc.add(t, 2.0 * w * r2, 4.0 * w * r2);
        };
        let forward = |acc: &mut ExpFamilyAccumulator, t: &[f64], s: f64, w: f64| {
            let r = libm::exp(s);
            acc.add(t, -2.0 * w * r, -2.0 * w * r);
        };
        match &self.keyed {
            Some((minus, plus)) => {
                for i in 0..minus.len() {
                    backward(&mut acc, minus.stat(i), minus.log_ratio(&eta, i), minus.weights[i]);
                }
                for i in 0..plus.len() {
                    forward(&mut acc, plus.stat(i), plus.log_ratio(&eta, i), plus.weights[i]);
                }
            }
            None => {
                let d = self.data.dim;
                let mut t = vec![0.0; k];
                let mut succ = vec![0i64; d];
                let domain = self.model.domain();
                for a in 0..self.data.len() {
                    let x = self.data.point(a);
                    let w = self.data.weights[a];
                    for j in 0..d {
                        if let Some(db) = ef.stat_diff_minus(x, j, &mut t) {
                            backward(&mut acc, &t, crate::math::dot(&eta, &t) + db, w);
                        }
                        domain.succ_into(x, j, &mut succ);
                        let db = ef
                            .stat_diff_minus(&succ, j, &mut t)
                            .expect("the predecessor of a successor is never the star state");
                        forward(&mut acc, &t, crate::math::dot(&eta, &t) + db, w);
                    }
                }
            }
        }
        Some(acc.finish(ef, theta))
    }
}

impl<M: DiscreteModel + ?Sized> Loss for DfdLoss<'_, M> {
    fn dim(&self) -> usize {
        self.model.dim_theta()
    }

    fn n(&self) -> usize {
        self.data.n
    }

    fn value(&self, theta: &[f64]) -> f64 {
        if let (Some((minus, plus)), Some(ef)) = (&self.keyed, self.model.exp_family()) {
            let eta = ef.eta(theta);
            let back: f64 =
                (0..minus.len()).map(|i| minus.weights[i] * libm::exp(2.0 * minus.log_ratio(&eta, i))).sum();
            let fwd: f64 = (0..plus.len()).map(|i| plus.weights[i] * libm::exp(plus.log_ratio(&eta, i))).sum();
            return back - 2.0 * fwd;
        }
        let d = self.data.dim;
        let mut acc = 0.0;
        for i in 0..self.data.len() {
            let x = self.data.point(i);
            let mut s = 0.0;
            for j in 0..d {
                if let Some(lr) = self.model.log_ratio_minus(theta, x, j) {
                    s += libm::exp(2.0 * lr);
                }
                s -= 2.0 * self.model.ratio_forward(theta, x, j);
            }
            acc += self.data.weights[i] * s;
        }
        acc
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        match self.derivatives(theta, false) {
            Some((g, _)) => g,
            None => super::numdiff::gradient(|t| self.value(t), theta),
        }
    }

    fn hessian_trace(&self, theta: &[f64]) -> f64 {
        match self.derivatives(theta, true) {
            Some((_, t)) => t,
            None => super::numdiff::hessian_trace(|t| self.value(t), theta),
        }
    }
}

/// Empirical discrete Fisher divergence (per datum, up to a θ-independent
/// constant): `(1/n) Σ_i Σ_j r_{j−}(x_i)² − 2 r_{j−}(x_i^{j+})`.
pub fn dfd_empirical<M: DiscreteModel + ?Sized>(model: &M, theta: &[f64], data: &Dataset) -> f64 {
    DfdLoss::new(model, data).per_datum(theta)
}
