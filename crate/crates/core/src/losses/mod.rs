//! Loss functions `D_n(θ)` for the generalised posterior `π(θ) exp(−β D_n(θ))`.
//!
//! Every loss reports the *total* loss over the dataset: the per-datum
//! average multiplied by `n`. For the discrete Fisher divergence this is
//! `D_n(θ) = n · DFD(p_θ ‖ p_n)` up to a θ-independent constant.

mod dfd;
mod kernel;
mod keys;
mod ksd;
pub mod numdiff;
mod pseudo;
mod standard;

use alloc::vec::Vec;

pub use dfd::{dfd_empirical, DfdLoss};
pub use kernel::{DiscreteKernel, ExpIndicatorKernel, IndicatorCount, SigmoidWeight};
pub use ksd::{stein_kernel, KsdLoss};
pub use pseudo::PseudoLikelihoodLoss;
pub use standard::TruncatedCmpNll;

use crate::data::Dataset;

/// A twice-differentiable loss over a `p`-dimensional parameter.
///
/// `gradient` and `hessian_trace` default to central finite differences of
/// `value` (see [`numdiff`]).
pub trait Loss: Send + Sync {
    /// Parameter dimension `p`.
    fn dim(&self) -> usize;

    /// Number of data points `n` behind the loss.
    fn n(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        numdiff::gradient(|t| self.value(t), theta)
    }

    /// `Tr ∇²D_n(θ)`.
    fn hessian_trace(&self, theta: &[f64]) -> f64 {
        numdiff::hessian_trace(|t| self.value(t), theta)
    }
}

impl<L: Loss + ?Sized> Loss for &L {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        (**self).value(theta)
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        (**self).gradient(theta)
    }
    fn hessian_trace(&self, theta: &[f64]) -> f64 {
        (**self).hessian_trace(theta)
    }
}

impl<L: Loss + ?Sized> Loss for alloc::boxed::Box<L> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        (**self).value(theta)
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        (**self).gradient(theta)
    }
    fn hessian_trace(&self, theta: &[f64]) -> f64 {
        (**self).hessian_trace(theta)
    }
}

/// How a loss with an exponential-family model is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EvalMode {
    /// Keyed when the model is an exponential family and the number of
    /// distinct statistic differences is manageable, direct otherwise.
    #[default]
    Auto,
    /// A pass over every (weighted) data point for each evaluation.
    Direct,
    /// Sums precomputed over the distinct statistic differences `(ΔT, Δb)`
    /// (requires an exponential-family model).
    Keyed,
}

/// Whether a loss sums over unique points weighted by multiplicity or over
/// every datum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Aggregation {
    /// Aggregate when fewer than `n/2` points are unique.
    #[default]
    Auto,
    Always,
    Never,
}

/// `(point, weight)` pairs flattened for the inner loops.
#[derive(Clone, Debug)]
pub(crate) struct WeightedPoints {
    pub dim: usize,
    pub points: Vec<i64>,
    pub weights: Vec<f64>,
    pub n: usize,
}

impl WeightedPoints {
    pub fn new(data: &Dataset, mode: Aggregation) -> Self {
        let n = data.len();
        let aggregate = match mode {
            Aggregation::Always => true,
            Aggregation::Never => false,
            Aggregation::Auto => {
                let unique = data.aggregate();
                if unique.len() * 2 < n {
                    return Self::from_unique(data.dim(), unique, n);
                }
                false
            }
        };
        if aggregate {
            return Self::from_unique(data.dim(), data.aggregate(), n);
        }
        Self { dim: data.dim(), points: data.as_flat().to_vec(), weights: alloc::vec![1.0; n], n }
    }

    fn from_unique(dim: usize, unique: Vec<(Vec<i64>, usize)>, n: usize) -> Self {
        let mut points = Vec::with_capacity(unique.len() * dim);
        let mut weights = Vec::with_capacity(unique.len());
        for (x, c) in unique {
            points.extend_from_slice(&x);
            weights.push(c as f64);
        }
        Self { dim, points, weights, n }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[i64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}
