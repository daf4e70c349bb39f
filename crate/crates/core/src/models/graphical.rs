use alloc::vec;
use alloc::vec::Vec;

use super::{check_len, CoordTransform, DiscreteModel, ExpFamily, ParamTransform};
use crate::domain::{CoordinateDomain, ProductDomain};
use crate::error::ModelError;
use crate::math::ln_factorial;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphicalModelKind {
    /// Unit coefficient on every `log x_i!`.
    Poisson,
    /// Free dispersion `θ_{0,i} ≥ 0` on each `log x_i!`.
    ConwayMaxwellPoisson,
}

/// Pairwise graphical model for multivariate counts:
///
/// `log p̃_θ(x) = Σ_i θ_i x_i − Σ_{(i,j) ∈ E} θ_{ij} x_i x_j − Σ_i c_i log x_i!`
///
/// with `c_i = 1` (Poisson) or `c_i = θ_{0,i}` (CMP). The parameter vector is
/// packed as `[θ_1..θ_d, θ_e for e in edges, θ_{0,1}..θ_{0,d}]`, the last block
/// present only for the CMP kind. Edges are stored with `i < j`.
#[derive(Clone, Debug)]
pub struct GraphicalModel {
    kind: GraphicalModelKind,
    domain: ProductDomain,
    edges: Vec<(usize, usize)>,
    /// For each node, `(edge index, other endpoint)`.
    incident: Vec<Vec<(usize, usize)>>,
}

impl GraphicalModel {
    pub fn new(kind: GraphicalModelKind, d: usize, edges: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        if d == 0 {
            return Err(ModelError::Config("graphical model needs at least one node"));
        }
        let mut incident = vec![Vec::new(); d];
        let mut normalised = Vec::with_capacity(edges.len());
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a == b || a >= d || b >= d {
                return Err(ModelError::Config("invalid edge"));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if normalised.contains(&(i, j)) {
                return Err(ModelError::Config("duplicate edge"));
            }
            normalised.push((i, j));
            incident[i].push((e, j));
            incident[j].push((e, i));
        }
        let domain = ProductDomain::uniform(CoordinateDomain::HalfInfiniteMin, d)?;
        Ok(Self { kind, domain, edges: normalised, incident })
    }

    pub fn poisson(d: usize, edges: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        Self::new(GraphicalModelKind::Poisson, d, edges)
    }

    pub fn cmp(d: usize, edges: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        Self::new(GraphicalModelKind::ConwayMaxwellPoisson, d, edges)
    }

    /// All `d(d−1)/2` pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn complete_edges(d: usize) -> Vec<(usize, usize)> {
        (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect()
    }

    pub fn kind(&self) -> GraphicalModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.incident.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Index of the first interaction parameter.
    pub fn interaction_offset(&self) -> usize {
        self.dim()
    }

    /// Index of the first dispersion parameter (CMP kind only).
    pub fn dispersion_offset(&self) -> usize {
        self.dim() + self.edges.len()
    }

    #[inline]
    fn dispersion(&self, theta: &[f64], i: usize) -> f64 {
        match self.kind {
            GraphicalModelKind::Poisson => 1.0,
            GraphicalModelKind::ConwayMaxwellPoisson => theta[self.dispersion_offset() + i],
        }
    }

    /// Natural log-rate of coordinate `i` given the others:
    /// `θ_i − Σ_{e ∋ i} θ_e x_other`.
    #[inline]
    pub fn conditional_log_rate(&self, theta: &[f64], x: &[i64], i: usize) -> f64 {
        let off = self.interaction_offset();
        theta[i] - self.incident[i].iter().map(|&(e, o)| theta[off + e] * x[o] as f64).sum::<f64>()
    }

    /// Coefficient on `log x_i!` in the conditional of coordinate `i`.
    pub fn conditional_dispersion(&self, theta: &[f64], i: usize) -> f64 {
        self.dispersion(theta, i)
    }

    /// A parameter vector with the given linear terms, interactions and
    /// dispersions (the latter ignored for the Poisson kind).
    pub fn pack(&self, linear: &[f64], interaction: &[f64], dispersion: &[f64]) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.dim_theta());
        theta.extend_from_slice(linear);
        theta.extend_from_slice(interaction);
        if self.kind == GraphicalModelKind::ConwayMaxwellPoisson {
            theta.extend_from_slice(dispersion);
        }
        theta
    }
}

impl DiscreteModel for GraphicalModel {
    fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    fn dim_theta(&self) -> usize {
        match self.kind {
            GraphicalModelKind::Poisson => self.dim() + self.edges.len(),
            GraphicalModelKind::ConwayMaxwellPoisson => 2 * self.dim() + self.edges.len(),
        }
    }

    fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError> {
        check_len(theta, self.dim_theta())
    }

    fn log_tilde_p(&self, theta: &[f64], x: &[i64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            acc += theta[i] * x[i] as f64 - self.dispersion(theta, i) * ln_factorial(x[i]);
        }
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            acc -= theta[d + e] * (x[i] * x[j]) as f64;
        }
        acc
    }

    #[inline]
    fn log_ratio_minus(&self, theta: &[f64], x: &[i64], j: usize) -> Option<f64> {
        if x[j] == 0 {
            return None;
        }
        Some(-self.conditional_log_rate(theta, x, j) + self.dispersion(theta, j) * libm::log(x[j] as f64))
    }

    #[inline]
    fn log_ratio_forward(&self, theta: &[f64], x: &[i64], j: usize) -> f64 {
        -self.conditional_log_rate(theta, x, j) + self.dispersion(theta, j) * libm::log(x[j] as f64 + 1.0)
    }

    fn exp_family(&self) -> Option<&dyn ExpFamily> {
        Some(self)
    }

    /// Identity on linear terms, `θ = z²` on interactions and dispersions.
    fn default_transform(&self) -> ParamTransform {
        let mut t = vec![CoordTransform::Identity; self.dim()];
        t.extend(core::iter::repeat_n(CoordTransform::Square, self.dim_theta() - self.dim()));
        ParamTransform::new(t)
    }
}

/// `η(θ) = θ`. `T(x) = [x_i; −x_i x_j per edge; −log x_i! (CMP kind)]` and
/// `b(x) = −Σ log x_i!` for the Poisson kind, `0` otherwise.
impl ExpFamily for GraphicalModel {
    fn stat_dim(&self) -> usize {
        self.dim_theta()
    }

    fn eta(&self, theta: &[f64]) -> Vec<f64> {
        theta.to_vec()
    }

    fn eta_jacobian(&self, theta: &[f64]) -> Vec<f64> {
        let p = theta.len();
        let mut j = vec![0.0; p * p];
        for a in 0..p {
            j[a * p + a] = 1.0;
        }
        j
    }

    fn eta_hessian(&self, theta: &[f64]) -> Vec<f64> {
        let p = theta.len();
        vec![0.0; p * p * p]
    }

    fn eta_hessian_traces(&self, theta: &[f64]) -> Vec<f64> {
        vec![0.0; theta.len()]
    }

    fn stat(&self, x: &[i64]) -> Vec<f64> {
        let d = self.dim();
        let mut t = Vec::with_capacity(self.dim_theta());
        t.extend(x.iter().map(|&v| v as f64));
        t.extend(self.edges.iter().map(|&(i, j)| -((x[i] * x[j]) as f64)));
        if self.kind == GraphicalModelKind::ConwayMaxwellPoisson {
            t.extend((0..d).map(|i| -ln_factorial(x[i])));
        }
        t
    }

    fn base(&self, x: &[i64]) -> f64 {
        match self.kind {
            GraphicalModelKind::Poisson => -x.iter().map(|&v| ln_factorial(v)).sum::<f64>(),
            GraphicalModelKind::ConwayMaxwellPoisson => 0.0,
        }
    }

    fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    fn stat_diff_minus(&self, x: &[i64], j: usize, out: &mut [f64]) -> Option<f64> {
        if x[j] == 0 {
            return None;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        out[j] = -1.0;
        let off = self.interaction_offset();
        for &(e, o) in &self.incident[j] {
            out[off + e] = x[o] as f64;
        }
        let log_x = libm::log(x[j] as f64);
        match self.kind {
            GraphicalModelKind::Poisson => Some(log_x),
            GraphicalModelKind::ConwayMaxwellPoisson => {
                out[self.dispersion_offset() + j] = log_x;
                Some(0.0)
            }
        }
    }
}
