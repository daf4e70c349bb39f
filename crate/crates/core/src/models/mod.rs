//! Statistical models known up to a normalising constant.
//!
//! A model exposes its unnormalised log-mass `log p̃_θ(x)` and the ratio
//! functions `r_{j−}(x, θ) = p_θ(x^{j−}) / p_θ(x)` that every discrete loss is
//! built from. Models in exponential-family form additionally expose
//! `(η, T, b)` through [`ExpFamily`], which the losses use for analytic
//! derivatives.

mod cmp;
mod graphical;
mod ising;
mod table;
mod transform;

use alloc::vec;
use alloc::vec::Vec;

pub use cmp::{cmp_ratio_minus, CmpModel};
pub use graphical::{GraphicalModel, GraphicalModelKind};
pub use ising::IsingModel;
pub use table::TabulatedModel;
pub use transform::{CoordTransform, ParamTransform};

use crate::domain::ProductDomain;
use crate::error::ModelError;

pub trait DiscreteModel: Send + Sync {
    fn domain(&self) -> &ProductDomain;

    /// Number of parameters `p`.
    fn dim_theta(&self) -> usize;

    fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError>;

    /// `log p̃_θ(x)`.
    fn log_tilde_p(&self, theta: &[f64], x: &[i64]) -> f64;

    /// `log r_{j−}(x, θ)`, or `None` when `x^{j−}` has a ★ coordinate.
    fn log_ratio_minus(&self, theta: &[f64], x: &[i64], j: usize) -> Option<f64> {
        let mut y = vec![0; x.len()];
        if !self.domain().pred_into(x, j, &mut y) {
            return None;
        }
        Some(self.log_tilde_p(theta, &y) - self.log_tilde_p(theta, x))
    }

    /// `r_{j−}(x, θ)`; zero at ★.
    #[inline]
    fn ratio_minus(&self, theta: &[f64], x: &[i64], j: usize) -> f64 {
        self.log_ratio_minus(theta, x, j).map_or(0.0, libm::exp)
    }

    /// `log r_{j−}(x^{j+}, θ) = log p_θ(x) − log p_θ(x^{j+})`, always finite.
    fn log_ratio_forward(&self, theta: &[f64], x: &[i64], j: usize) -> f64 {
        let mut y = vec![0; x.len()];
        self.domain().succ_into(x, j, &mut y);
        self.log_tilde_p(theta, x) - self.log_tilde_p(theta, &y)
    }

    #[inline]
    fn ratio_forward(&self, theta: &[f64], x: &[i64], j: usize) -> f64 {
        libm::exp(self.log_ratio_forward(theta, x, j))
    }

    /// Exponential-family structure, when the model has one.
    fn exp_family(&self) -> Option<&dyn ExpFamily> {
        None
    }

    /// Transform to the unconstrained space used for sampling and optimisation.
    fn default_transform(&self) -> ParamTransform {
        ParamTransform::identity(self.dim_theta())
    }
}

/// `log p̃_θ(x) = η(θ)·T(x) + b(x)`.
pub trait ExpFamily: Send + Sync {
    /// Natural-parameter dimension `k`.
    fn stat_dim(&self) -> usize;

    fn eta(&self, theta: &[f64]) -> Vec<f64>;

    /// `∂η/∂θ` as a row-major `k × p` matrix.
    fn eta_jacobian(&self, theta: &[f64]) -> Vec<f64>;

    /// `∂²η/∂θ²` as `k` row-major `p × p` blocks.
    fn eta_hessian(&self, theta: &[f64]) -> Vec<f64>;

    /// Traces of the `k` blocks of [`ExpFamily::eta_hessian`].
    fn eta_hessian_traces(&self, theta: &[f64]) -> Vec<f64> {
        let k = self.stat_dim();
        let p = theta.len();
        let h = self.eta_hessian(theta);
        (0..k).map(|m| (0..p).map(|a| h[m * p * p + a * p + a]).sum()).collect()
    }

    /// Sufficient statistic `T(x)`.
    fn stat(&self, x: &[i64]) -> Vec<f64>;

    /// Base measure `b(x)`.
    fn base(&self, x: &[i64]) -> f64;

    fn domain(&self) -> &ProductDomain;

    /// Writes `T(x^{j−}) − T(x)` into `out` and returns `b(x^{j−}) − b(x)`,
    /// or returns `None` when `x^{j−}` has a ★ coordinate.
    fn stat_diff_minus(&self, x: &[i64], j: usize, out: &mut [f64]) -> Option<f64> {
        let mut y = vec![0; x.len()];
        if !self.domain().pred_into(x, j, &mut y) {
            return None;
        }
        let ty = self.stat(&y);
        let tx = self.stat(x);
        for ((o, a), b) in out.iter_mut().zip(&ty).zip(&tx) {
            *o = a - b;
        }
        Some(self.base(&y) - self.base(x))
    }
}

pub(crate) fn check_len(theta: &[f64], expected: usize) -> Result<(), ModelError> {
    if theta.len() != expected {
        return Err(ModelError::ParameterLength { expected, got: theta.len() });
    }
    if let Some((index, &value)) = theta.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(ModelError::ParameterDomain { index, value });
    }
    Ok(())
}

pub(crate) fn check_positive(theta: &[f64]) -> Result<(), ModelError> {
    match theta.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        Some((index, &value)) => Err(ModelError::ParameterDomain { index, value }),
        None => Ok(()),
    }
}

/// Probability that `x_i` takes the upper of two values given the rest,
/// `logistic(log p̃(x | x_i=1) − log p̃(x | x_i=0))`. Coordinate `i` must be
/// binary.
pub fn binary_conditional<M: DiscreteModel + ?Sized>(model: &M, theta: &[f64], x: &[i64], i: usize) -> f64 {
    let mut y = x.to_vec();
    y[i] = 1;
    let up = model.log_tilde_p(theta, &y);
    y[i] = 0;
    let down = model.log_tilde_p(theta, &y);
    crate::math::logistic(up - down)
}
