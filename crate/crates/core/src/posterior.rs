//! Priors and the generalised posterior `π(θ) exp(−β D_n(θ))`.

use alloc::vec::Vec;

use crate::error::EvalError;
use crate::losses::{numdiff, Loss};
use crate::models::ParamTransform;

/// Prior density on the constrained parameter, known up to a constant.
pub trait Prior: Send + Sync {
    fn log_density(&self, theta: &[f64]) -> f64;

    fn grad_log_density(&self, theta: &[f64]) -> Vec<f64> {
        numdiff::gradient(|t| self.log_density(t), theta)
    }

    /// `Tr ∇² log π(θ)`.
    fn laplacian_log_density(&self, theta: &[f64]) -> f64 {
        numdiff::hessian_trace(|t| self.log_density(t), theta)
    }
}

/// One-dimensional prior factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoordPrior {
    /// Chi-squared with `dof` degrees of freedom on `θ > 0`.
    ChiSquared {
        dof: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Half-normal with the given scale on `θ ≥ 0`.
    HalfNormal {
        scale: f64,
    },
    /// Improper constant density.
    Flat,
}

impl CoordPrior {
    pub fn standard_normal() -> Self {
        Self::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn log_density(self, t: f64) -> f64 {
        match self {
            Self::ChiSquared { dof } => {
                if t > 0.0 {
                    (0.5 * dof - 1.0) * libm::log(t) - 0.5 * t
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Normal { mean, sd } => {
                let u = (t - mean) / sd;
                -0.5 * u * u
            }
            Self::HalfNormal { scale } => {
                if t >= 0.0 {
                    let u = t / scale;
                    -0.5 * u * u
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Flat => 0.0,
        }
    }

    pub fn grad(self, t: f64) -> f64 {
        match self {
            Self::ChiSquared { dof } => (0.5 * dof - 1.0) / t - 0.5,
            Self::Normal { mean, sd } => -(t - mean) / (sd * sd),
            Self::HalfNormal { scale } => -t / (scale * scale),
            Self::Flat => 0.0,
        }
    }

    pub fn second_derivative(self, t: f64) -> f64 {
        match self {
            Self::ChiSquared { dof } => -(0.5 * dof - 1.0) / (t * t),
            Self::Normal { sd, .. } => -1.0 / (sd * sd),
            Self::HalfNormal { scale } => -1.0 / (scale * scale),
            Self::Flat => 0.0,
        }
    }

    /// Mean of the distribution, where it has one.
    pub fn mean(self) -> Option<f64> {
        match self {
            Self::ChiSquared { dof } => Some(dof),
            Self::Normal { mean, .. } => Some(mean),
            Self::HalfNormal { scale } => {
                Some(scale * core::f64::consts::FRAC_2_SQRT_PI * core::f64::consts::FRAC_1_SQRT_2)
            }
            Self::Flat => None,
        }
    }
}

/// Independent prior factors, one per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPrior {
    pub factors: Vec<CoordPrior>,
}

impl ProductPrior {
    pub fn new(factors: Vec<CoordPrior>) -> Self {
        Self { factors }
    }

    pub fn iid(factor: CoordPrior, p: usize) -> Self {
        Self { factors: alloc::vec![factor; p] }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    /// Coordinate-wise prior means, `None` if any factor is improper.
    pub fn mean(&self) -> Option<Vec<f64>> {
        self.factors.iter().map(|f| f.mean()).collect()
    }
}

impl Prior for ProductPrior {
    fn log_density(&self, theta: &[f64]) -> f64 {
        self.factors.iter().zip(theta).map(|(f, &t)| f.log_density(t)).sum()
    }

    fn grad_log_density(&self, theta: &[f64]) -> Vec<f64> {
        self.factors.iter().zip(theta).map(|(f, &t)| f.grad(t)).collect()
    }

    fn laplacian_log_density(&self, theta: &[f64]) -> f64 {
        self.factors.iter().zip(theta).map(|(f, &t)| f.second_derivative(t)).sum()
    }
}

/// `π(θ) exp(−β D_n(θ))` with a reparameterisation `θ = θ(z)` for sampling.
pub struct GeneralisedPosterior<P, L> {
    pub prior: P,
    pub loss: L,
    pub beta: f64,
    pub transform: ParamTransform,
}

impl<P: Prior, L: Loss> GeneralisedPosterior<P, L> {
    pub fn new(prior: P, loss: L, beta: f64, transform: ParamTransform) -> Self {
        assert!(beta >= 0.0 && beta.is_finite(), "beta must be finite and nonnegative");
        assert_eq!(transform.dim(), loss.dim(), "transform and loss dimensions differ");
        Self { prior, loss, beta, transform }
    }

    pub fn dim(&self) -> usize {
        self.transform.dim()
    }

    /// `log π(θ) − β D_n(θ)`; the loss is skipped entirely when `β = 0`.
    pub fn log_density_constrained(&self, theta: &[f64]) -> Result<f64, EvalError> {
        let mut v = self.prior.log_density(theta);
        if self.beta != 0.0 {
            v -= self.beta * self.loss.value(theta);
        }
        finite(v)
    }

    /// `log π(θ(z)) + log |det ∂θ/∂z| − β D_n(θ(z))`.
    pub fn log_density(&self, z: &[f64]) -> Result<f64, EvalError> {
        let theta = self.transform.to_constrained(z);
        let v = self.log_density_constrained(&theta)?;
        finite(v + self.transform.log_jacobian(z))
    }

    /// Gradient of [`Self::log_density`] with respect to `z`.
    pub fn grad_log_density(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        let theta = self.transform.to_constrained(z);
        let mut g = self.prior.grad_log_density(&theta);
        if self.beta != 0.0 {
            for (gi, li) in g.iter_mut().zip(self.loss.gradient(&theta)) {
                *gi -= self.beta * li;
            }
        }
        let mut gz = self.transform.pullback_gradient(z, &g);
        for (gi, j) in gz.iter_mut().zip(self.transform.log_jacobian_grad(z)) {
            *gi += j;
        }
        if gz.iter().all(|v| v.is_finite()) {
            Ok(gz)
        } else {
            Err(EvalError::NonFiniteGradient)
        }
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(v))
    }
}
