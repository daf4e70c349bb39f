use alloc::vec;
use alloc::vec::Vec;

/// Coordinate-wise map from an unconstrained value `z` to a parameter `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordTransform {
    /// `θ = z`.
    Identity,
    /// `θ = e^z`, for positive parameters.
    Log,
    /// `θ = z²`, for nonnegative parameters. The inverse takes the
    /// nonnegative root, so a sign picked up while sampling is dropped on
    /// readback.
    Square,
}

impl CoordTransform {
    #[inline]
    pub fn to_constrained(self, z: f64) -> f64 {
        match self {
            Self::Identity => z,
            Self::Log => libm::exp(z),
            Self::Square => z * z,
        }
    }

    #[inline]
    pub fn to_unconstrained(self, theta: f64) -> f64 {
        match self {
            Self::Identity => theta,
            Self::Log => libm::log(theta),
            Self::Square => libm::sqrt(libm::fabs(theta)),
        }
    }

    /// `dθ/dz`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Log => libm::exp(z),
            Self::Square => 2.0 * z,
        }
    }

    /// `d²θ/dz²`.
    #[inline]
    pub fn second_derivative(self, z: f64) -> f64 {
        match self {
            Self::Identity => 0.0,
            Self::Log => libm::exp(z),
            Self::Square => 2.0,
        }
    }

    /// `log |dθ/dz|`.
    #[inline]
    pub fn log_jacobian(self, z: f64) -> f64 {
        match self {
            Self::Identity => 0.0,
            Self::Log => z,
            Self::Square => libm::log(libm::fabs(2.0 * z)),
        }
    }

    /// `d/dz log |dθ/dz|`.
    #[inline]
    pub fn log_jacobian_grad(self, z: f64) -> f64 {
        match self {
            Self::Identity => 0.0,
            Self::Log => 1.0,
            Self::Square => 1.0 / z,
        }
    }
}

/// A product of coordinate transforms; the Jacobian is diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamTransform {
    coords: Vec<CoordTransform>,
}

impl ParamTransform {
    pub fn new(coords: Vec<CoordTransform>) -> Self {
        Self { coords }
    }

    pub fn identity(p: usize) -> Self {
        Self::new(vec![CoordTransform::Identity; p])
    }

    pub fn log(p: usize) -> Self {
        Self::new(vec![CoordTransform::Log; p])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[CoordTransform] {
        &self.coords
    }

    pub fn to_constrained(&self, z: &[f64]) -> Vec<f64> {
        self.coords.iter().zip(z).map(|(t, &v)| t.to_constrained(v)).collect()
    }

    pub fn to_unconstrained(&self, theta: &[f64]) -> Vec<f64> {
        self.coords.iter().zip(theta).map(|(t, &v)| t.to_unconstrained(v)).collect()
    }

    /// `log |det ∂θ/∂z|`.
    pub fn log_jacobian(&self, z: &[f64]) -> f64 {
        self.coords.iter().zip(z).map(|(t, &v)| t.log_jacobian(v)).sum()
    }

    /// Diagonal of `∂θ/∂z`.
    pub fn jacobian_diag(&self, z: &[f64]) -> Vec<f64> {
        self.coords.iter().zip(z).map(|(t, &v)| t.derivative(v)).collect()
    }

    pub fn log_jacobian_grad(&self, z: &[f64]) -> Vec<f64> {
        self.coords.iter().zip(z).map(|(t, &v)| t.log_jacobian_grad(v)).collect()
    }

    /// Chain rule: maps `∇_θ f` to `∇_z f`.
    pub fn pullback_gradient(&self, z: &[f64], grad_theta: &[f64]) -> Vec<f64> {
        self.coords.iter().zip(z).zip(grad_theta).map(|((t, &v), &g)| t.derivative(v) * g).collect()
    }
}
