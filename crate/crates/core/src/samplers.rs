//! Random-walk Metropolis–Hastings and MALA over unconstrained parameters,
//! plus the Gelman–Rubin diagnostic.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::EvalError;
use crate::losses::{numdiff, Loss};
use crate::models::ParamTransform;
use crate::posterior::{GeneralisedPosterior, Prior};
use crate::rng::{rng_from_seed, StreamRng};

/// Unnormalised log-density over `ℝ^p`.
pub trait Target: Send + Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, z: &[f64]) -> Result<f64, EvalError>;

    fn grad_log_density(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        let bad = core::cell::Cell::new(false);
        let g = numdiff::gradient(
            |t| match self.log_density(t) {
                Ok(v) => v,
                Err(_) => {
                    bad.set(true);
                    f64::NAN
                }
            },
            z,
        );
        if bad.get() || g.iter().any(|v| !v.is_finite()) {
            Err(EvalError::NonFiniteGradient)
        } else {
            Ok(g)
        }
    }
}

impl<P: Prior, L: Loss> Target for GeneralisedPosterior<P, L> {
    fn dim(&self) -> usize {
        GeneralisedPosterior::dim(self)
    }
    fn log_density(&self, z: &[f64]) -> Result<f64, EvalError> {
        GeneralisedPosterior::log_density(self, z)
    }
    fn grad_log_density(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        GeneralisedPosterior::grad_log_density(self, z)
    }
}

/// Target built from closures, mainly for tests and ad hoc densities.
pub struct FnTarget<F, G> {
    pub dim: usize,
    pub log_density: F,
    pub gradient: G,
}

impl<F, G> Target for FnTarget<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_density(&self, z: &[f64]) -> Result<f64, EvalError> {
        let v = (self.log_density)(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(v))
        }
    }
    fn grad_log_density(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        let g = (self.gradient)(z);
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(EvalError::NonFiniteGradient)
        }
    }
}

/// Run lengths shared by both samplers. The sampler performs `burn_in`
/// iterations, then `n_samples · thin` more, keeping every `thin`-th state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunLength {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RwmhConfig {
    pub sigma: f64,
    pub run: RunLength,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MalaConfig {
    pub step_size: f64,
    pub run: RunLength,
    pub seed: u64,
    /// Adapt the step size during burn-in towards [`MALA_TARGET_ACCEPTANCE`].
    pub adapt: bool,
}

pub const MALA_TARGET_ACCEPTANCE: f64 = 0.574;

/// Retained draws of one chain, stored in constrained space.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub dim: usize,
    /// Row-major `n_samples × dim`.
    pub draws: Vec<f64>,
    pub log_densities: Vec<f64>,
    /// Accepted moves over the post-burn-in iterations.
    pub accepted: usize,
    pub iterations: usize,
    pub acceptance_rate: f64,
    /// Proposals rejected because the density or gradient was not finite.
    pub eval_failures: usize,
    /// Step size in force after burn-in (`sigma` for RWMH).
    pub step_size: f64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.log_densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_densities.is_empty()
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.draws[i * self.dim + k]).collect()
    }
}

struct Recorder<'a> {
    transform: &'a ParamTransform,
    chain: Chain,
}

impl<'a> Recorder<'a> {
    fn new(transform: &'a ParamTransform, dim: usize, run: RunLength, seed: u64) -> Self {
        Self {
            transform,
            chain: Chain {
                dim,
                draws: Vec::with_capacity(run.n_samples * dim),
                log_densities: Vec::with_capacity(run.n_samples),
                accepted: 0,
                iterations: 0,
                acceptance_rate: 0.0,
                eval_failures: 0,
                step_size: 0.0,
                seed,
                warnings: Vec::new(),
            },
        }
    }

    fn keep(&mut self, z: &[f64], ld: f64) {
        self.chain.draws.extend(self.transform.to_constrained(z));
        self.chain.log_densities.push(ld);
    }

    fn finish(mut self, step: f64) -> Chain {
        let c = &mut self.chain;
        c.step_size = step;
        c.acceptance_rate = if c.iterations == 0 { 0.0 } else { c.accepted as f64 / c.iterations as f64 };
        if c.iterations > 0 && c.accepted == 0 {
            c.warnings.push(String::from("every proposal after burn-in was rejected"));
        }
        self.chain
    }
}

fn check_init<T: Target + ?Sized>(target: &T, init: &[f64]) -> Result<f64, EvalError> {
    assert_eq!(init.len(), target.dim(), "initial point has the wrong dimension");
    if init.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite(f64::NAN));
    }
    target.log_density(init)
}

fn normal_vec(rng: &mut StreamRng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Metropolis–Hastings with isotropic Gaussian proposals `z' = z + σ ξ`.
pub fn rwmh_sample<T: Target + ?Sized>(
    target: &T,
    transform: &ParamTransform,
    init_z: &[f64],
    config: &RwmhConfig,
) -> Result<Chain, EvalError> {
    assert!(config.sigma > 0.0 && config.run.thin >= 1);
    let p = target.dim();
    let mut ld = check_init(target, init_z)?;
    let mut z = init_z.to_vec();
    let mut rng = rng_from_seed(config.seed);
    let mut rec = Recorder::new(transform, p, config.run, config.seed);
    let total = config.run.burn_in + config.run.n_samples * config.run.thin;
    let mut prop = vec![0.0; p];
    for it in 0..total {
        let xi = normal_vec(&mut rng, p);
        let log_u = libm::log(rng.random::<f64>());
        for k in 0..p {
            prop[k] = z[k] + config.sigma * xi[k];
        }
        let accepted = match target.log_density(&prop) {
            Ok(ld_new) if log_u < ld_new - ld => {
                z.copy_from_slice(&prop);
                ld = ld_new;
                true
            }
            Ok(_) => false,
            Err(_) => {
                if it >= config.run.burn_in {
                    rec.chain.eval_failures += 1;
                }
                false
            }
        };
        if it >= config.run.burn_in {
            rec.chain.iterations += 1;
            rec.chain.accepted += accepted as usize;
            if (it - config.run.burn_in + 1).is_multiple_of(config.run.thin) {
                rec.keep(&z, ld);
            }
        }
    }
    Ok(rec.finish(config.sigma))
}

/// Metropolis-adjusted Langevin: `z' = z + (ε²/2) ∇log p(z) + ε ξ` with the
/// exact Metropolis–Hastings correction for the asymmetric proposal.
pub fn mala_sample<T: Target + ?Sized>(
    target: &T,
    transform: &ParamTransform,
    init_z: &[f64],
    config: &MalaConfig,
) -> Result<Chain, EvalError> {
    assert!(config.step_size > 0.0 && config.run.thin >= 1);
    let p = target.dim();
    let mut ld = check_init(target, init_z)?;
    let mut z = init_z.to_vec();
    let mut grad = target.grad_log_density(&z)?;
    let mut rng = rng_from_seed(config.seed);
    let mut rec = Recorder::new(transform, p, config.run, config.seed);
    let mut eps = config.step_size;
    let mut log_eps = libm::log(eps);
    let total = config.run.burn_in + config.run.n_samples * config.run.thin;
    let mut prop = vec![0.0; p];

    // log q(to | from) up to a constant shared by both directions
    let log_q = |to: &[f64], from: &[f64], g: &[f64], eps: f64| -> f64 {
        let h = 0.5 * eps * eps;
        let s: f64 = (0..to.len())
            .map(|k| {
                let r = to[k] - from[k] - h * g[k];
                r * r
            })
            .sum();
        -s / (2.0 * eps * eps)
    };

    for it in 0..total {
        let xi = normal_vec(&mut rng, p);
        let log_u = libm::log(rng.random::<f64>());
        let h = 0.5 * eps * eps;
        for k in 0..p {
            prop[k] = z[k] + h * grad[k] + eps * xi[k];
        }
        let mut alpha = 0.0;
        let mut failed = false;
        let mut accepted = false;
        match (target.log_density(&prop), target.grad_log_density(&prop)) {
            (Ok(ld_new), Ok(g_new)) => {
                let log_alpha = ld_new - ld + log_q(&z, &prop, &g_new, eps) - log_q(&prop, &z, &grad, eps);
                alpha = if log_alpha >= 0.0 { 1.0 } else { libm::exp(log_alpha) };
                if log_u < log_alpha {
                    z.copy_from_slice(&prop);
                    ld = ld_new;
                    grad = g_new;
                    accepted = true;
                }
            }
            _ => failed = true,
        }
        if it < config.run.burn_in {
            if config.adapt {
                let gain = 1.0 / libm::pow((it + 1) as f64, 0.6);
                log_eps += gain * (alpha - MALA_TARGET_ACCEPTANCE);
                eps = libm::exp(log_eps);
            }
        } else {
            rec.chain.iterations += 1;
            rec.chain.accepted += accepted as usize;
            rec.chain.eval_failures += failed as usize;
            if (it - config.run.burn_in + 1).is_multiple_of(config.run.thin) {
                rec.keep(&z, ld);
            }
        }
    }
    Ok(rec.finish(eps))
}

/// Potential scale reduction factor per coordinate,
/// `R̂ = √(((L−1)/L · W + B/L) / W)` with `W` the mean within-chain variance
/// and `B = L · var(chain means)`. Returns `+∞` where `W = 0`.
pub fn gelman_rubin(chains: &[Chain]) -> Vec<f64> {
    assert!(chains.len() >= 2, "need at least two chains");
    let len = chains[0].len();
    assert!(len >= 2 && chains.iter().all(|c| c.len() == len), "chains must share a length of at least two");
    let p = chains[0].dim;
    let columns: Vec<Vec<Vec<f64>>> = chains.iter().map(|c| (0..p).map(|k| c.column(k)).collect()).collect();
    (0..p)
        .map(|k| {
            let cols: Vec<&[f64]> = columns.iter().map(|c| c[k].as_slice()).collect();
            psrf(&cols)
        })
        .collect()
}

/// [`gelman_rubin`] for a single coordinate given as one slice per chain.
pub fn psrf(chains: &[&[f64]]) -> f64 {
    let l = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| crate::math::mean(c)).collect();
    let w = crate::math::mean(&chains.iter().map(|c| crate::math::variance(c)).collect::<Vec<_>>());
    let b = l * crate::math::variance(&means);
    if !(w > 0.0) {
        return f64::INFINITY;
    }
    libm::sqrt(((l - 1.0) / l * w + b / l) / w)
}
