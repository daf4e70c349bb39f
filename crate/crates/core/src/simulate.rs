//! Data generators: single-site Metropolis–Hastings for binary models,
//! inverse-CDF sampling for CMP counts, Gibbs sampling for count graphical
//! models, and posterior-predictive summaries.
//!
//! Every draw uses its own stream `stream_rng(seed, draw_index)`, so results
//! depend only on `(θ, configuration, seed)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::Dataset;
use crate::domain::CoordinateDomain;
use crate::error::{ModelError, SimulationError};
use crate::math::ln_factorial;
use crate::models::{CmpModel, DiscreteModel, GraphicalModel, IsingModel};
use crate::rng::{stream_rng, StreamRng};

/// Relative size below which the tail of a count distribution is dropped.
pub const TRUNCATION_TOLERANCE: f64 = 1e-14;
/// Largest support a univariate count table may need.
pub const SUPPORT_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub n_draws: usize,
    /// Metropolis–Hastings steps (binary models) or Gibbs sweeps (count
    /// graphical models) per independent draw.
    pub iters_per_draw: usize,
    pub seed: u64,
}

/// Models that can generate their own data.
pub trait Simulator: DiscreteModel {
    /// Default `iters_per_draw` for this model.
    fn default_iters(&self) -> usize;

    fn simulate(&self, theta: &[f64], config: &SimConfig) -> Result<Dataset, SimulationError>;
}

impl Simulator for IsingModel {
    /// `100 d` single-site steps.
    fn default_iters(&self) -> usize {
        100 * self.dim()
    }

    fn simulate(&self, theta: &[f64], config: &SimConfig) -> Result<Dataset, SimulationError> {
        binary_mh_simulate(self, theta, config)
    }
}

impl Simulator for CmpModel {
    fn default_iters(&self) -> usize {
        1
    }

    fn simulate(&self, theta: &[f64], config: &SimConfig) -> Result<Dataset, SimulationError> {
        cmp_sample(theta, config.n_draws, config.seed)
    }
}

impl Simulator for GraphicalModel {
    fn default_iters(&self) -> usize {
        100
    }

    fn simulate(&self, theta: &[f64], config: &SimConfig) -> Result<Dataset, SimulationError> {
        pgm_gibbs_sample(self, theta, config.n_draws, config.iters_per_draw, config.seed)
    }
}

/// Independent single-site Metropolis–Hastings chains on `{0,1}^d`.
///
/// Each chain starts from independent fair bits, then repeatedly picks a site
/// uniformly at random and proposes flipping it, accepting with probability
/// `min(1, p̃_θ(x̃) / p̃_θ(x))`. The final states form the dataset.
pub fn binary_mh_simulate<M: DiscreteModel + ?Sized>(
    model: &M,
    theta: &[f64],
    config: &SimConfig,
) -> Result<Dataset, SimulationError> {
    model.check_theta(theta)?;
    let domain = model.domain();
    if domain.coords().iter().any(|c| *c != CoordinateDomain::FiniteCyclic(2)) {
        return Err(ModelError::Config("single-site flips need binary coordinates").into());
    }
    let d = domain.dim();
    let mut values = Vec::with_capacity(config.n_draws * d);
    for draw in 0..config.n_draws {
        let mut rng = stream_rng(config.seed, draw as u64);
        let mut x: Vec<i64> = (0..d).map(|_| rng.random_bool(0.5) as i64).collect();
        for _ in 0..config.iters_per_draw {
            let i = rng.random_range(0..d);
            let u: f64 = rng.random();
            let lr = model.log_ratio_minus(theta, &x, i).expect("binary coordinates have no star state");
            if libm::log(u) < lr {
                x[i] = 1 - x[i];
            }
        }
        values.extend_from_slice(&x);
    }
    Ok(Dataset::from_flat(d, values).map_err(|_| ModelError::Config("no draws requested"))?)
}

/// [`binary_mh_simulate`] for the Ising model.
pub fn ising_simulate(model: &IsingModel, theta: &[f64], config: &SimConfig) -> Result<Dataset, SimulationError> {
    binary_mh_simulate(model, theta, config)
}

/// Normalisable table for the count distribution
/// `q(x) ∝ exp(a x − c log x!)`, `x = 0, 1, …`.
#[derive(Clone, Debug)]
pub struct CountTable {
    /// Cumulative unnormalised masses, scaled so the mode has mass one.
    cumulative: Vec<f64>,
}

impl CountTable {
    /// Accumulates terms from `x = 0` until a term past the mode falls below
    /// [`TRUNCATION_TOLERANCE`] times the running sum.
    pub fn new(log_rate: f64, dispersion: f64, cap: usize) -> Result<Self, SimulationError> {
        let divergent = SimulationError::Divergent { log_rate, dispersion };
        if !(log_rate.is_finite() && dispersion >= 0.0) {
            return Err(divergent);
        }
        let mode = if dispersion == 0.0 {
            if log_rate >= 0.0 {
                return Err(divergent);
            }
            0.0
        } else {
            libm::floor(libm::exp(log_rate / dispersion))
        };
        if !(mode < cap as f64) {
            return Err(SimulationError::SupportTooLarge { coordinate: 0, cap });
        }
        let mode = mode as i64;
        let top = log_rate * mode as f64 - dispersion * ln_factorial(mode);
        let mut cumulative = Vec::new();
        let mut sum = 0.0;
        let mut x = 0i64;
        // log q(x) − log q(mode), updated by the ratio q(x+1)/q(x)
        let mut log_term = -top;
        loop {
            if x > 0 {
                log_term += log_rate - dispersion * libm::log(x as f64);
            }
            let t = libm::exp(log_term);
            sum += t;
            cumulative.push(sum);
            if x > mode && t < TRUNCATION_TOLERANCE * sum {
                break;
            }
            x += 1;
            if x as usize >= cap {
                return Err(SimulationError::SupportTooLarge { coordinate: 0, cap });
            }
        }
        Ok(Self { cumulative })
    }

    pub fn support_len(&self) -> usize {
        self.cumulative.len()
    }

    /// Normalised probability of `x` (zero beyond the truncation point).
    pub fn pmf(&self, x: usize) -> f64 {
        let total = *self.cumulative.last().unwrap();
        match x {
            0 => self.cumulative[0] / total,
            _ if x < self.cumulative.len() => (self.cumulative[x] - self.cumulative[x - 1]) / total,
            _ => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> i64 {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1) as i64
    }
}

/// `n` independent CMP(θ₁, θ₂) draws by inverse-CDF sampling.
pub fn cmp_sample(theta: &[f64], n: usize, seed: u64) -> Result<Dataset, SimulationError> {
    if theta.len() != 2 {
        return Err(ModelError::ParameterLength { expected: 2, got: theta.len() }.into());
    }
    for (index, &value) in theta.iter().enumerate() {
        if !(value >= 0.0) || (index == 0 && value == 0.0) {
            return Err(ModelError::ParameterDomain { index, value }.into());
        }
    }
    let table = CountTable::new(libm::log(theta[0]), theta[1], SUPPORT_CAP)?;
    let values: Vec<i64> = (0..n).map(|i| table.sample(&mut stream_rng(seed, i as u64))).collect();
    Ok(Dataset::from_flat(1, values).map_err(|_| ModelError::Config("no draws requested"))?)
}

/// `n` independent systematic-scan Gibbs chains, each started at the zero
/// vector and run for `sweeps` full sweeps. Each full conditional is a
/// univariate count distribution with log-rate `θ_i − Σ θ_e x_other` and
/// dispersion `c_i`.
pub fn pgm_gibbs_sample(
    model: &GraphicalModel,
    theta: &[f64],
    n: usize,
    sweeps: usize,
    seed: u64,
) -> Result<Dataset, SimulationError> {
    model.check_theta(theta)?;
    let off = model.interaction_offset();
    if let Some(index) = (off..off + model.edges().len()).find(|&k| theta[k] < 0.0) {
        return Err(ModelError::ParameterDomain { index, value: theta[index] }.into());
    }
    let d = model.dim();
    let mut values = Vec::with_capacity(n * d);
    let mut x = vec![0i64; d];
    for draw in 0..n {
        let mut rng = stream_rng(seed, draw as u64);
        x.iter_mut().for_each(|v| *v = 0);
        for _ in 0..sweeps {
            for i in 0..d {
                let a = model.conditional_log_rate(theta, &x, i);
                let c = model.conditional_dispersion(theta, i);
                let table = CountTable::new(a, c, SUPPORT_CAP).map_err(|e| match e {
                    SimulationError::SupportTooLarge { cap, .. } => {
                        SimulationError::SupportTooLarge { coordinate: i, cap }
                    }
                    other => other,
                })?;
                x[i] = table.sample(&mut rng);
            }
        }
        values.extend_from_slice(&x);
    }
    Ok(Dataset::from_flat(d, values).map_err(|_| ModelError::Config("no draws requested"))?)
}

/// Per-cell frequencies of simulated data, averaged over parameter draws.
///
/// Cell `(j, v)` is the fraction of simulated points whose coordinate `j`
/// equals `v`, for `v = 0..=max_value`; larger values fall in no cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorPredictive {
    pub dim: usize,
    pub max_value: usize,
    /// Row-major `dim × (max_value + 1)`.
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// All simulated points, grouped by parameter draw.
    pub samples: Dataset,
}

impl PosteriorPredictive {
    pub fn cell(&self, j: usize, v: usize) -> (f64, f64) {
        let k = j * (self.max_value + 1) + v;
        (self.mean[k], self.sd[k])
    }
}

/// Simulates `draws_per_theta` points at each parameter in `thetas` and
/// summarises the per-cell frequencies by their mean and standard deviation
/// across parameters.
///
/// The stream for a parameter is derived from `seed` and the parameter's bit
/// pattern, so a value repeated in a chain reproduces the same simulated data
/// and a constant chain has zero spread.
pub fn posterior_predictive<S: Simulator + ?Sized>(
    model: &S,
    thetas: &[Vec<f64>],
    draws_per_theta: usize,
    iters_per_draw: usize,
    max_value: usize,
    seed: u64,
) -> Result<PosteriorPredictive, SimulationError> {
    assert!(!thetas.is_empty(), "need at least one parameter draw");
    let d = model.domain().dim();
    let cells = d * (max_value + 1);
    let mut freqs: Vec<Vec<f64>> = Vec::with_capacity(thetas.len());
    let mut all = Vec::with_capacity(thetas.len() * draws_per_theta * d);
    for theta in thetas {
        let key = theta.iter().fold(0u64, |h, v| crate::rng::splitmix64(h ^ v.to_bits()));
        let cfg = SimConfig { n_draws: draws_per_theta, iters_per_draw, seed: crate::rng::stream_seed(seed, key) };
        let data = model.simulate(theta, &cfg)?;
        let mut f = vec![0.0; cells];
        for x in data.iter() {
            for (j, &v) in x.iter().enumerate() {
                if v >= 0 && (v as usize) <= max_value {
                    f[j * (max_value + 1) + v as usize] += 1.0;
                }
            }
        }
        f.iter_mut().for_each(|c| *c /= draws_per_theta as f64);
        freqs.push(f);
        all.extend_from_slice(data.as_flat());
    }
    let mut mean = vec![0.0; cells];
    let mut sd = vec![0.0; cells];
    let mut column = vec![0.0; freqs.len()];
    for k in 0..cells {
        for (c, f) in column.iter_mut().zip(&freqs) {
            *c = f[k];
        }
        mean[k] = crate::math::mean(&column);
        sd[k] = if column.len() > 1 { libm::sqrt(crate::math::variance(&column)) } else { 0.0 };
    }
    let samples = Dataset::from_flat(d, all).map_err(|_| ModelError::Config("no draws requested"))?;
    Ok(PosteriorPredictive { dim: d, max_value, mean, sd, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_pmf(lambda: f64, x: i64) -> f64 {
        libm::exp(x as f64 * libm::log(lambda) - lambda - ln_factorial(x))
    }

    #[test]
    fn count_table_matches_poisson() {
        let t = CountTable::new(libm::log(4.0), 1.0, SUPPORT_CAP).unwrap();
        for x in 0..20 {
            assert!((t.pmf(x) - poisson_pmf(4.0, x as i64)).abs() < 1e-13);
        }
    }

    #[test]
    fn divergent_series_is_an_error() {
        assert!(matches!(cmp_sample(&[1.5, 0.0], 10, 1), Err(SimulationError::Divergent { .. })));
        assert!(cmp_sample(&[0.5, 0.0], 10, 1).is_ok());
    }

    #[test]
    fn cmp_poisson_mean_and_dispersion_direction() {
        let x = cmp_sample(&[4.0, 1.0], 100_000, 3).unwrap();
        let v: Vec<f64> = x.as_flat().iter().map(|&v| v as f64).collect();
        assert!((crate::math::mean(&v) - 4.0).abs() < 0.05);
        for (th2, over) in [(0.75, true), (1.25, false)] {
            let x = cmp_sample(&[4.0, th2], 20_000, 9).unwrap();
            let v: Vec<f64> = x.as_flat().iter().map(|&v| v as f64).collect();
            assert_eq!(crate::math::variance(&v) > crate::math::mean(&v), over);
        }
    }

    #[test]
    fn simulators_are_reproducible() {
        let m = IsingModel::grid(3).unwrap();
        let cfg = SimConfig { n_draws: 20, iters_per_draw: 200, seed: 5 };
        assert_eq!(ising_simulate(&m, &[5.0], &cfg).unwrap(), ising_simulate(&m, &[5.0], &cfg).unwrap());
        assert_eq!(cmp_sample(&[4.0, 0.75], 50, 2).unwrap(), cmp_sample(&[4.0, 0.75], 50, 2).unwrap());
        let g = GraphicalModel::poisson(3, GraphicalModel::complete_edges(3)).unwrap();
        let th = [0.5, 0.2, 1.0, 0.1, 0.0, 0.3];
        assert_eq!(pgm_gibbs_sample(&g, &th, 10, 5, 4).unwrap(), pgm_gibbs_sample(&g, &th, 10, 5, 4).unwrap());
    }

    #[test]
    fn ising_hot_limit_is_uniform() {
        let m = IsingModel::grid(3).unwrap();
        let cfg = SimConfig { n_draws: 4000, iters_per_draw: 50, seed: 1 };
        let data = ising_simulate(&m, &[1e12], &cfg).unwrap();
        for mean in data.column_means() {
            assert!((mean - 0.5).abs() < 0.03);
        }
    }

    #[test]
    fn independent_pgm_is_poisson() {
        let g = GraphicalModel::poisson(2, GraphicalModel::complete_edges(2)).unwrap();
        let th = [libm::log(2.0), libm::log(5.0), 0.0];
        let data = pgm_gibbs_sample(&g, &th, 100_000, 1, 6).unwrap();
        let means = data.column_means();
        assert!((means[0] - 2.0).abs() < 0.04);
        assert!((means[1] - 5.0).abs() < 0.1);
    }

    #[test]
    fn degenerate_chain_has_zero_spread() {
        let m = CmpModel::new();
        let thetas = vec![vec![4.0, 1.0]; 5];
        let pp = posterior_predictive(&m, &thetas, 200, 1, 30, 8).unwrap();
        assert!(pp.sd.iter().all(|&s| s == 0.0));
        assert_eq!(pp.samples.len(), 1000);
        assert_eq!(pp.cell(0, 30).0, 0.0);
    }

    #[test]
    fn predictive_at_poisson_point() {
        let m = CmpModel::new();
        let thetas: Vec<Vec<f64>> = (0..100).map(|i| vec![4.0 + 1e-12 * i as f64, 1.0]).collect();
        let pp = posterior_predictive(&m, &thetas, 1000, 1, 40, 2).unwrap();
        let tv: f64 = 0.5 * (0..=40).map(|v| (pp.cell(0, v).0 - poisson_pmf(4.0, v as i64)).abs()).sum::<f64>();
        assert!(tv <= 0.02, "tv {tv}");
    }
}
