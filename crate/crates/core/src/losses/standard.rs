use alloc::vec::Vec;

use super::{Aggregation, Loss, WeightedPoints};
use crate::data::Dataset;
use crate::math::{ln_factorial, log_sum_exp};

/// Negative log-likelihood of the CMP model with its normaliser truncated to
/// `Σ_{y=0}^{terms−1}`: the standard-Bayes comparator (used with `β = 1`).
pub struct TruncatedCmpNll {
    data: WeightedPoints,
    terms: usize,
    ln_fact: Vec<f64>,
}

impl TruncatedCmpNll {
    pub const DEFAULT_TERMS: usize = 100;

    pub fn new(data: &Dataset) -> Self {
        Self::with_terms(data, Self::DEFAULT_TERMS)
    }

    pub fn with_terms(data: &Dataset, terms: usize) -> Self {
        assert_eq!(data.dim(), 1, "CMP data are one-dimensional");
        let ln_fact = (0..terms as i64).map(ln_factorial).collect();
        Self { data: WeightedPoints::new(data, Aggregation::Always), terms, ln_fact }
    }

    pub fn log_normaliser(&self, theta: &[f64]) -> f64 {
        let l1 = libm::log(theta[0]);
        let logs: Vec<f64> = (0..self.terms).map(|y| y as f64 * l1 - theta[1] * self.ln_fact[y]).collect();
        log_sum_exp(&logs)
    }
}

impl Loss for TruncatedCmpNll {
    fn dim(&self) -> usize {
        2
    }

    fn n(&self) -> usize {
        self.data.n
    }

    fn value(&self, theta: &[f64]) -> f64 {
        if !(theta[0] > 0.0 && theta[1] > 0.0) {
            return f64::NAN;
        }
        let l1 = libm::log(theta[0]);
        let mut total = self.data.n as f64 * self.log_normaliser(theta);
        for a in 0..self.data.len() {
            let x = self.data.point(a)[0];
            total -= self.data.weights[a] * (x as f64 * l1 - theta[1] * ln_factorial(x));
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CmpModel, DiscreteModel};

    #[test]
    fn poisson_case_matches_pmf() {
        let model = CmpModel::new();
        let data = Dataset::new(model.domain(), alloc::vec![alloc::vec![2], alloc::vec![5]]).unwrap();
        let nll = TruncatedCmpNll::new(&data);
        // Poisson(3) pmf; the truncation error at 100 terms is negligible
        let lp = |x: i64| x as f64 * libm::log(3.0) - 3.0 - ln_factorial(x);
        let expect = -(lp(2) + lp(5));
        assert!((nll.value(&[3.0, 1.0]) - expect).abs() < 1e-10);
    }
}
