//! Central finite differences, used where a loss has no analytic derivative.

use alloc::vec::Vec;

/// Relative step for first differences: `h_k = 1e−5 (1 + |θ_k|)`.
pub const GRADIENT_STEP: f64 = 1e-5;
/// Relative step for second differences: `h_k = 1e−4 (1 + |θ_k|)`.
pub const HESSIAN_STEP: f64 = 1e-4;

pub fn gradient<F: Fn(&[f64]) -> f64>(f: F, theta: &[f64]) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            let h = GRADIENT_STEP * (1.0 + theta[k].abs());
            t[k] = theta[k] + h;
            let up = f(&t);
            t[k] = theta[k] - h;
            let down = f(&t);
            t[k] = theta[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `Σ_k ∂²f/∂θ_k²` from second central differences.
pub fn hessian_trace<F: Fn(&[f64]) -> f64>(f: F, theta: &[f64]) -> f64 {
    let f0 = f(theta);
    let mut t = theta.to_vec();
    let mut acc = 0.0;
    for k in 0..theta.len() {
        let h = HESSIAN_STEP * (1.0 + theta[k].abs());
        t[k] = theta[k] + h;
        let up = f(&t);
        t[k] = theta[k] - h;
        let down = f(&t);
        t[k] = theta[k];
        acc += (up - 2.0 * f0 + down) / (h * h);
    }
    acc
}
