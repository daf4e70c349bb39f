use alloc::vec;
use alloc::vec::Vec;

use super::{check_len, check_positive, DiscreteModel, ExpFamily, ParamTransform};
use crate::domain::{CoordinateDomain, ProductDomain};
use crate::error::ModelError;
use crate::math::ln_factorial;

/// Conway–Maxwell–Poisson counts: `p̃_θ(x) = θ₁^x (x!)^{−θ₂}` on `{0, 1, ...}`.
///
/// `θ = (θ₁, θ₂)`, both positive. `θ₂ = 1` is the Poisson(θ₁) model;
/// `θ₂ < 1` is over-dispersed and `θ₂ > 1` under-dispersed.
#[derive(Clone, Debug)]
pub struct CmpModel {
    domain: ProductDomain,
}

impl Default for CmpModel {
    fn default() -> Self {
        Self::new()
    }
}

impl CmpModel {
    pub fn new() -> Self {
        Self { domain: ProductDomain::new(vec![CoordinateDomain::HalfInfiniteMin]).unwrap() }
    }
}

/// `r(x, θ) = x^{θ₂} / θ₁` for `x ≥ 1` and `0` at `x = 0`.
pub fn cmp_ratio_minus(theta: &[f64], x: i64) -> Result<f64, ModelError> {
    check_len(theta, 2)?;
    check_positive(theta)?;
    if x <= 0 {
        return Ok(0.0);
    }
    Ok(libm::pow(x as f64, theta[1]) / theta[0])
}

impl DiscreteModel for CmpModel {
    fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    fn dim_theta(&self) -> usize {
        2
    }

    fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError> {
        check_len(theta, 2)?;
        check_positive(theta)
    }

    #[inline]
    fn log_tilde_p(&self, theta: &[f64], x: &[i64]) -> f64 {
        x[0] as f64 * libm::log(theta[0]) - theta[1] * ln_factorial(x[0])
    }

    #[inline]
    fn log_ratio_minus(&self, theta: &[f64], x: &[i64], _j: usize) -> Option<f64> {
        if x[0] == 0 {
            return None;
        }
        Some(theta[1] * libm::log(x[0] as f64) - libm::log(theta[0]))
    }

    #[inline]
    fn log_ratio_forward(&self, theta: &[f64], x: &[i64], _j: usize) -> f64 {
        theta[1] * libm::log(x[0] as f64 + 1.0) - libm::log(theta[0])
    }

    fn exp_family(&self) -> Option<&dyn ExpFamily> {
        Some(self)
    }

    fn default_transform(&self) -> ParamTransform {
        ParamTransform::log(2)
    }
}

/// `η(θ) = (log θ₁, θ₂)`, `T(x) = (x, −log x!)`, `b ≡ 0`.
impl ExpFamily for CmpModel {
    fn stat_dim(&self) -> usize {
        2
    }

    fn eta(&self, theta: &[f64]) -> Vec<f64> {
        vec![libm::log(theta[0]), theta[1]]
    }

    fn eta_jacobian(&self, theta: &[f64]) -> Vec<f64> {
        vec![1.0 / theta[0], 0.0, 0.0, 1.0]
    }

    fn eta_hessian(&self, theta: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; 8];
        h[0] = -1.0 / (theta[0] * theta[0]);
        h
    }

    fn stat(&self, x: &[i64]) -> Vec<f64> {
        vec![x[0] as f64, -ln_factorial(x[0])]
    }

    fn base(&self, _x: &[i64]) -> f64 {
        0.0
    }

    fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    #[inline]
    fn stat_diff_minus(&self, x: &[i64], _j: usize, out: &mut [f64]) -> Option<f64> {
        if x[0] == 0 {
            return None;
        }
        out[0] = -1.0;
        out[1] = libm::log(x[0] as f64);
        Some(0.0)
    }
}
