use alloc::vec;
use alloc::vec::Vec;

use super::{check_len, check_positive, DiscreteModel, ExpFamily, ParamTransform};
use crate::domain::{CoordinateDomain, ProductDomain};
use crate::error::ModelError;

/// Ferromagnetic Ising model on `{0, 1}^d`:
/// `p̃_θ(x) = exp((1/θ) Σ_i Σ_{j ∈ N_i} x_i x_j)` with temperature `θ > 0`.
///
/// The double sum visits every edge twice. Each coordinate is a two-element
/// cyclic set, so decrementing and incrementing a site are both a bit flip.
#[derive(Clone, Debug)]
pub struct IsingModel {
    domain: ProductDomain,
    neighbors: Vec<Vec<usize>>,
    side: Option<usize>,
}

impl IsingModel {
    /// Four-neighbour `m × m` grid with free boundaries; site `(r, c)` is
    /// coordinate `r·m + c`.
    pub fn grid(m: usize) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::Config("grid side must be positive"));
        }
        let mut neighbors = vec![Vec::new(); m * m];
        for r in 0..m {
            for c in 0..m {
                let i = r * m + c;
                if r > 0 {
                    neighbors[i].push(i - m);
                }
                if c > 0 {
                    neighbors[i].push(i - 1);
                }
                if c + 1 < m {
                    neighbors[i].push(i + 1);
                }
                if r + 1 < m {
                    neighbors[i].push(i + m);
                }
            }
        }
        let mut model = Self::new(neighbors)?;
        model.side = Some(m);
        Ok(model)
    }

    /// Arbitrary undirected graph given by neighbour lists.
    pub fn new(neighbors: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        let d = neighbors.len();
        for (i, ns) in neighbors.iter().enumerate() {
            for &j in ns {
                if j >= d {
                    return Err(ModelError::Config("neighbour index out of range"));
                }
                if j == i {
                    return Err(ModelError::Config("self-edges are not allowed"));
                }
                if !neighbors[j].contains(&i) {
                    return Err(ModelError::Config("neighbour relation must be symmetric"));
                }
            }
        }
        let domain = ProductDomain::uniform(CoordinateDomain::FiniteCyclic(2), d)?;
        Ok(Self { domain, neighbors, side: None })
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn side(&self) -> Option<usize> {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.neighbors.len()
    }

    /// `T(x) = Σ_i Σ_{j ∈ N_i} x_i x_j`.
    pub fn interaction(&self, x: &[i64]) -> f64 {
        let mut acc = 0i64;
        for (i, ns) in self.neighbors.iter().enumerate() {
            if x[i] != 0 {
                acc += ns.iter().map(|&j| x[j]).sum::<i64>();
            }
        }
        acc as f64
    }

    /// Change in `T` when site `j` is flipped: `2 (1 − 2x_j) Σ_{k ∈ N_j} x_k`.
    #[inline]
    pub fn flip_delta(&self, x: &[i64], j: usize) -> f64 {
        let s: i64 = self.neighbors[j].iter().map(|&k| x[k]).sum();
        (2 * (1 - 2 * x[j]) * s) as f64
    }

    /// `P(x_i = 1 | x_{−i})` under the model.
    pub fn pseudo_conditional(&self, theta: &[f64], x: &[i64], i: usize) -> f64 {
        super::binary_conditional(self, theta, x, i)
    }
}

impl DiscreteModel for IsingModel {
    fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    fn dim_theta(&self) -> usize {
        1
    }

    fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError> {
        check_len(theta, 1)?;
        check_positive(theta)
    }

    fn log_tilde_p(&self, theta: &[f64], x: &[i64]) -> f64 {
        self.interaction(x) / theta[0]
    }

    #[inline]
    fn log_ratio_minus(&self, theta: &[f64], x: &[i64], j: usize) -> Option<f64> {
        Some(self.flip_delta(x, j) / theta[0])
    }

    #[inline]
    fn log_ratio_forward(&self, theta: &[f64], x: &[i64], j: usize) -> f64 {
        // x^{j+} is the same flip, so p(x)/p(x^{j+}) = 1 / r_{j-}(x)
        -self.flip_delta(x, j) / theta[0]
    }

    fn exp_family(&self) -> Option<&dyn ExpFamily> {
        Some(self)
    }

    fn default_transform(&self) -> ParamTransform {
        ParamTransform::log(1)
    }
}

/// `η(θ) = 1/θ`, `T(x) = Σ_i Σ_{j ∈ N_i} x_i x_j`, `b ≡ 0`.
impl ExpFamily for IsingModel {
    fn stat_dim(&self) -> usize {
        1
    }

    fn eta(&self, theta: &[f64]) -> Vec<f64> {
        vec![1.0 / theta[0]]
    }

    fn eta_jacobian(&self, theta: &[f64]) -> Vec<f64> {
        vec![-1.0 / (theta[0] * theta[0])]
    }

    fn eta_hessian(&self, theta: &[f64]) -> Vec<f64> {
        vec![2.0 / (theta[0] * theta[0] * theta[0])]
    }

    fn stat(&self, x: &[i64]) -> Vec<f64> {
        vec![self.interaction(x)]
    }

    fn base(&self, _x: &[i64]) -> f64 {
        0.0
    }

    fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    #[inline]
    fn stat_diff_minus(&self, x: &[i64], j: usize, out: &mut [f64]) -> Option<f64> {
        out[0] = self.flip_delta(x, j);
        Some(0.0)
    }
}
