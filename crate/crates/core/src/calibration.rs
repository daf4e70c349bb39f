//! Bootstrap calibration of the loss weight `β`.
//!
//! Each bootstrap dataset yields a minimiser `θ_b` of its loss. The weight is
//! then chosen to minimise the score-matching objective
//! `J(β) = Σ_b ‖∇log π(θ_b) − β ∇D_n(θ_b)‖² + 2 Tr ∇²(log π − β D_n)(θ_b)`,
//! a quadratic in `β` with vertex
//! `β* = Σ_b [∇D_n·∇log π + Tr ∇²D_n] / Σ_b ‖∇D_n‖²`,
//! all derivatives taken in the constrained parameter space and `D_n` the
//! full-data loss.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::Dataset;
use crate::error::CalibrationError;
use crate::losses::Loss;
use crate::math::{dot, norm_sq};
use crate::models::ParamTransform;
use crate::posterior::Prior;
use crate::rng::stream_rng;

/// Resample `n` points uniformly with replacement using stream `(seed, b)`.
pub fn bootstrap_resample(data: &Dataset, b: usize, seed: u64) -> Dataset {
    let n = data.len();
    let mut rng = stream_rng(seed, b as u64);
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    data.select(&idx)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop once `‖∇_z D(θ(z))‖ ≤ grad_tol`.
    pub grad_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iters: 500, grad_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimiser {
    /// Constrained parameter.
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub value: f64,
    /// `‖∇_z‖` at the returned point.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const ROUNDING_SLACK: f64 = 1e-12;
/// Curvature pairs kept by the quasi-Newton update.
const MEMORY: usize = 10;

/// L-BFGS two-loop recursion: the search direction `−H g` from the stored
/// `(s, y)` pairs, oldest first.
fn lbfgs_direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qk, yk) in q.iter_mut().zip(y) {
            *qk -= a * yk;
        }
        alpha.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / norm_sq(y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alpha.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qk, sk) in q.iter_mut().zip(s) {
            *qk += (a - b) * sk;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// L-BFGS on `z ↦ D(θ(z))` with Armijo backtracking, falling back to the
/// negative gradient whenever the quasi-Newton direction is not a descent
/// direction.
pub fn minimise_loss<L: Loss + ?Sized>(
    loss: &L,
    transform: &ParamTransform,
    init_z: &[f64],
    config: &OptimizerConfig,
) -> Result<Minimiser, CalibrationError> {
    let objective = |z: &[f64]| {
        let v = loss.value(&transform.to_constrained(z));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let gradient = |z: &[f64]| transform.pullback_gradient(z, &loss.gradient(&transform.to_constrained(z)));

    let mut z = init_z.to_vec();
    let mut f = objective(&z);
    let mut g = gradient(&z);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(CalibrationError::BadInitialPoint);
    }
    let mut gn = libm::sqrt(norm_sq(&g));
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut iterations = 0;
    let mut trial = z.clone();
    while gn > config.grad_tol && iterations < config.max_iters {
        iterations += 1;
        let mut dir = lbfgs_direction(&g, &pairs);
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            pairs.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }
        let mut t = if pairs.is_empty() { 1.0 / gn.max(1.0) } else { 1.0 };
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            for k in 0..z.len() {
                trial[k] = z[k] + t * dir[k];
            }
            let f_new = objective(&trial);
            let sufficient = f_new <= f + ARMIJO * t * slope;
            // near the minimum the decrease falls below the rounding error
            // of `f`, so a step that keeps `f` level and shrinks the
            // gradient is taken instead
            let level = f_new <= f + ROUNDING_SLACK * f.abs();
            if sufficient || level {
                let g_new = gradient(&trial);
                let shrinks = norm_sq(&g_new) < gn * gn;
                if g_new.iter().all(|v| v.is_finite()) && (sufficient || shrinks) {
                    let s: Vec<f64> = trial.iter().zip(&z).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                    let sy = dot(&s, &y);
                    if sy > 1e-12 * libm::sqrt(norm_sq(&s) * norm_sq(&y)) {
                        if pairs.len() == MEMORY {
                            pairs.pop_front();
                        }
                        pairs.push_back((s, y, 1.0 / sy));
                    }
                    z.copy_from_slice(&trial);
                    f = f_new;
                    g = g_new;
                    gn = libm::sqrt(norm_sq(&g));
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            if pairs.is_empty() {
                break;
            }
            // retry along the gradient before giving up
            pairs.clear();
        }
    }
    Ok(Minimiser {
        theta: transform.to_constrained(&z),
        z,
        value: f,
        grad_norm: gn,
        iterations,
        converged: gn <= config.grad_tol,
    })
}

/// The two sums behind `β*` and their ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaStar {
    pub beta: f64,
    /// `Σ_b ∇D_n·∇log π + Tr ∇²D_n`.
    pub numerator: f64,
    /// `Σ_b ‖∇D_n‖²`.
    pub denominator: f64,
}

/// Closed-form minimiser of the score-matching objective over `β > 0`.
pub fn beta_star<L, P>(loss: &L, prior: &P, minimisers: &[Vec<f64>]) -> Result<BetaStar, CalibrationError>
where
    L: Loss + ?Sized,
    P: Prior + ?Sized,
{
    if minimisers.is_empty() {
        return Err(CalibrationError::NoMinimisers);
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for theta in minimisers {
        let g = loss.gradient(theta);
        numerator += dot(&g, &prior.grad_log_density(theta)) + loss.hessian_trace(theta);
        denominator += norm_sq(&g);
    }
    if !numerator.is_finite() || !denominator.is_finite() {
        return Err(CalibrationError::NonFinite { numerator, denominator });
    }
    if !(denominator > 0.0) {
        return Err(CalibrationError::DegenerateGradients { numerator, denominator });
    }
    if !(numerator > 0.0) {
        return Err(CalibrationError::TheoremConditionViolated { numerator, denominator });
    }
    Ok(BetaStar { beta: numerator / denominator, numerator, denominator })
}

/// `J(β) = Σ_b ‖∇log π(θ_b) − β ∇D_n(θ_b)‖² + 2 (Tr ∇²log π(θ_b) − β Tr ∇²D_n(θ_b))`.
pub fn score_objective<L, P>(loss: &L, prior: &P, minimisers: &[Vec<f64>], beta: f64) -> f64
where
    L: Loss + ?Sized,
    P: Prior + ?Sized,
{
    minimisers
        .iter()
        .map(|theta| {
            let g = loss.gradient(theta);
            let gp = prior.grad_log_density(theta);
            let sq: f64 = gp.iter().zip(&g).map(|(a, b)| (a - beta * b) * (a - beta * b)).sum();
            sq + 2.0 * (prior.laplacian_log_density(theta) - beta * loss.hessian_trace(theta))
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

/// Bootstrap minimisers together with the resulting `β*`.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    pub beta_star: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Constrained minimisers, one per replicate.
    pub minimisers: Vec<Vec<f64>>,
    pub grad_norms: Vec<f64>,
    pub converged: Vec<bool>,
}

impl CalibrationResult {
    /// Computes `β*` from minimisers found elsewhere (e.g. in parallel).
    /// Non-converged minimisers are kept in the sums.
    pub fn assemble<L, P>(loss: &L, prior: &P, minimisers: Vec<Minimiser>) -> Result<Self, CalibrationError>
    where
        L: Loss + ?Sized,
        P: Prior + ?Sized,
    {
        let thetas: Vec<Vec<f64>> = minimisers.iter().map(|m| m.theta.clone()).collect();
        let b = beta_star(loss, prior, &thetas)?;
        Ok(Self {
            beta_star: b.beta,
            numerator: b.numerator,
            denominator: b.denominator,
            grad_norms: minimisers.iter().map(|m| m.grad_norm).collect(),
            converged: minimisers.iter().map(|m| m.converged).collect(),
            minimisers: thetas,
        })
    }

    pub fn replicates(&self) -> usize {
        self.minimisers.len()
    }

    pub fn non_converged(&self) -> usize {
        self.converged.iter().filter(|c| !**c).count()
    }
}

/// Minimiser of the loss on bootstrap replicate `b`.
pub fn bootstrap_minimiser<F, L>(
    make_loss: &F,
    data: &Dataset,
    b: usize,
    transform: &ParamTransform,
    init_z: &[f64],
    config: &BootstrapConfig,
) -> Result<Minimiser, CalibrationError>
where
    F: Fn(&Dataset) -> L + ?Sized,
    L: Loss,
{
    let resampled = bootstrap_resample(data, b, config.seed);
    minimise_loss(&make_loss(&resampled), transform, init_z, &config.optimizer)
}

/// Sequential bootstrap calibration. `make_loss` builds the loss for a
/// dataset; `β*` uses the loss on the full data.
pub fn calibrate<F, L, P>(
    make_loss: &F,
    prior: &P,
    data: &Dataset,
    transform: &ParamTransform,
    init_z: &[f64],
    config: &BootstrapConfig,
) -> Result<CalibrationResult, CalibrationError>
where
    F: Fn(&Dataset) -> L + ?Sized,
    L: Loss,
    P: Prior + ?Sized,
{
    let minimisers = (0..config.replicates)
        .map(|b| bootstrap_minimiser(make_loss, data, b, transform, init_z, config))
        .collect::<Result<Vec<_>, _>>()?;
    CalibrationResult::assemble(&make_loss(data), prior, minimisers)
}
