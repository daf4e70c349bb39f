use alloc::vec;
use alloc::vec::Vec;

use super::keys::{collect_keys, ExpFamilyAccumulator, StatKeys};
use super::{Aggregation, EvalMode, Loss, WeightedPoints};
use crate::data::Dataset;
use crate::domain::CoordinateDomain;
use crate::error::ModelError;
use crate::math::{logistic, softplus};
use crate::models::DiscreteModel;

/// Negative log pseudo-likelihood `−Σ_a Σ_i log p_θ(x_{a,i} | x_{a,−i})` for
/// models on `{0,1}^d`.
///
/// On a binary coordinate the predecessor is the flipped state, so each
/// factor is `1 / (1 + r_{i−}(x))` and the summand is `softplus(log r_{i−}(x))`.
pub struct PseudoLikelihoodLoss<'a, M: DiscreteModel + ?Sized> {
    model: &'a M,
    data: WeightedPoints,
    keyed: Option<StatKeys>,
}

impl<'a, M: DiscreteModel + ?Sized> PseudoLikelihoodLoss<'a, M> {
    pub fn new(model: &'a M, data: &Dataset) -> Result<Self, ModelError> {
        Self::with_options(model, data, Aggregation::Auto, EvalMode::Auto)
    }

    /// `EvalMode::Auto` keys the sum when that at least halves the number
    /// of terms.
    pub fn with_options(
        model: &'a M,
        data: &Dataset,
        aggregation: Aggregation,
        mode: EvalMode,
    ) -> Result<Self, ModelError> {
        if model.domain().coords().iter().any(|c| *c != CoordinateDomain::FiniteCyclic(2)) {
            return Err(ModelError::Config("pseudo-likelihood requires binary coordinates"));
        }
        let data = WeightedPoints::new(data, aggregation);
        let keyed = match (mode, model.exp_family()) {
            (EvalMode::Direct, _) | (_, None) => None,
            (_, Some(ef)) => {
                let (minus, _) = collect_keys(model, ef, &data, false);
                (mode == EvalMode::Keyed || 2 * minus.len() <= data.len() * data.dim).then_some(minus)
            }
        };
        Ok(Self { model, data, keyed })
    }

    fn derivatives(&self, theta: &[f64], want_trace: bool) -> Option<(Vec<f64>, f64)> {
        let ef = self.model.exp_family()?;
        let k = ef.stat_dim();
        let eta = ef.eta(theta);
        let jac = ef.eta_jacobian(theta);
        let mut acc = ExpFamilyAccumulator::new(k, theta.len(), &jac, want_trace);
        let term = |acc: &mut ExpFamilyAccumulator, t: &[f64], s: f64, w: f64| {
            let sig = logistic(s);
            acc.add(t, w * sig, w * sig * (1.0 - sig));
        };
        match &self.keyed {
            Some(keys) => {
                for i in 0..keys.len() {
                    term(&mut acc, keys.stat(i), keys.log_ratio(&eta, i), keys.weights[i]);
                }
            }
            None => {
                let mut t = vec![0.0; k];
                for a in 0..self.data.len() {
                    let x = self.data.point(a);
                    for i in 0..self.data.dim {
                        let db = ef.stat_diff_minus(x, i, &mut t).expect("binary coordinates have no star state");
                        term(&mut acc, &t, crate::math::dot(&eta, &t) + db, self.data.weights[a]);
                    }
                }
            }
        }
        Some(acc.finish(ef, theta))
    }
}

impl<M: DiscreteModel + ?Sized> Loss for PseudoLikelihoodLoss<'_, M> {
    fn dim(&self) -> usize {
        self.model.dim_theta()
    }

    fn n(&self) -> usize {
        self.data.n
    }

    fn value(&self, theta: &[f64]) -> f64 {
        if let (Some(keys), Some(ef)) = (&self.keyed, self.model.exp_family()) {
            let eta = ef.eta(theta);
            return (0..keys.len()).map(|i| keys.weights[i] * softplus(keys.log_ratio(&eta, i))).sum();
        }
        let mut total = 0.0;
        for a in 0..self.data.len() {
            let x = self.data.point(a);
            let s: f64 = (0..self.data.dim)
                .map(|i| softplus(self.model.log_ratio_minus(theta, x, i).unwrap_or(f64::NEG_INFINITY)))
                .sum();
            total += self.data.weights[a] * s;
        }
        total
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{binary_conditional, IsingModel};

    #[test]
    fn matches_enumerated_conditionals() {
        let model = IsingModel::grid(2).unwrap();
        let x = vec![1, 1, 0, 1];
        let data = Dataset::new(model.domain(), vec![x.clone()]).unwrap();
        let loss = PseudoLikelihoodLoss::new(&model, &data).unwrap();
        let th = [5.0];
        let expect: f64 = (0..4)
            .map(|i| {
                let p1 = binary_conditional(&model, &th, &x, i);
                -libm::log(if x[i] == 1 { p1 } else { 1.0 - p1 })
            })
            .sum();
        assert!((loss.value(&th) - expect).abs() < 1e-12);
    }

    #[test]
    fn hot_limit_is_log_two_per_site() {
        let model = IsingModel::grid(3).unwrap();
        let data = Dataset::new(model.domain(), vec![vec![1; 9], vec![0, 1, 0, 1, 1, 0, 0, 0, 1]]).unwrap();
        let loss = PseudoLikelihoodLoss::new(&model, &data).unwrap();
        let v = loss.value(&[1e9]);
        assert!((v - 18.0 * core::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn rejects_count_domains() {
        let model = crate::models::CmpModel::new();
        let data = Dataset::new(model.domain(), vec![vec![1]]).unwrap();
        assert!(PseudoLikelihoodLoss::new(&model, &data).is_err());
    }
}
