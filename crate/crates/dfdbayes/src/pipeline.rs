//! Model setup, data loading, calibration, sampling and summaries for one
//! method, with bootstrap replicates and chains run in parallel.

use std::path::Path;
use std::time::Instant;

use dfdbayes_core::calibration::{bootstrap_minimiser, minimise_loss, Minimiser};
use dfdbayes_core::losses::{EvalMode, ExpIndicatorKernel, SigmoidWeight, TruncatedCmpNll};
use dfdbayes_core::math::{mean, quantile_sorted, variance};
use dfdbayes_core::rng::{stream_rng, stream_seed};
use dfdbayes_core::simulate::{posterior_predictive, SimConfig, Simulator};
use dfdbayes_core::{
    gelman_rubin, mala_sample, rwmh_sample, Aggregation, BootstrapConfig, CalibrationResult, Chain, CmpModel,
    CoordPrior, CoordinateDomain, Dataset, DfdLoss, DiscreteModel, GeneralisedPosterior, GraphicalModel, IsingModel,
    KsdLoss, Loss, MalaConfig, OptimizerConfig, ParamTransform, ProductPrior, PseudoLikelihoodLoss, RunLength,
    RwmhConfig, Target,
};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::{
    BetaSpec, DataSpec, EdgeSpec, KernelSpec, LossSpec, MethodSpec, ModelSpec, RunConfig, SamplerKind, SamplerSpec,
};
use crate::error::RunError;
use crate::formats::{
    write_chains, write_json, CalibrationRecord, ChainSidecar, PosteriorSummary, PredictiveRecord, Provenance,
    TimingRecord,
};

// Stream indices under the master seed.
const DATA_STREAM: u64 = 0;
const METHOD_STREAM: u64 = 1;

// Stream indices under a method seed.
const CALIBRATION_STREAM: u64 = 0;
const CHAIN_STREAM: u64 = 1;
const PREDICTIVE_STREAM: u64 = 2;

/// A model with its prior, sampling transform and optimiser start.
pub struct ModelSetup {
    pub model: Box<dyn Simulator>,
    pub prior: ProductPrior,
    pub transform: ParamTransform,
    /// Unconstrained starting point for loss minimisation.
    pub init_z: Vec<f64>,
}

impl ModelSetup {
    pub fn build(spec: &ModelSpec) -> Result<Self, RunError> {
        let chi2 = CoordPrior::ChiSquared { dof: 3.0 };
        match spec {
            ModelSpec::Cmp => Ok(Self::positive(Box::new(CmpModel::new()), chi2)),
            ModelSpec::Ising { m } => Ok(Self::positive(Box::new(IsingModel::grid(*m)?), chi2)),
            ModelSpec::Pgm { d, edges } => Self::graphical(GraphicalModel::poisson(*d, resolve_edges(*d, edges)?)?),
            ModelSpec::CmpPgm { d, edges } => Self::graphical(GraphicalModel::cmp(*d, resolve_edges(*d, edges)?)?),
        }
    }

    /// Log-transformed positive parameters with an i.i.d. prior, started at
    /// the prior mean.
    fn positive(model: Box<dyn Simulator>, factor: CoordPrior) -> Self {
        let p = model.dim_theta();
        let prior = ProductPrior::iid(factor, p);
        let transform = model.default_transform();
        let init_z = transform.to_unconstrained(&prior.mean().expect("proper prior"));
        Self { model, prior, transform, init_z }
    }

    /// Normal priors on the linear terms, half-normal on interactions and
    /// dispersions. Square-transformed coordinates start at a small positive
    /// `z` because `z = 0` is a stationary point of any loss under `θ = z²`.
    fn graphical(model: GraphicalModel) -> Result<Self, RunError> {
        let d = model.dim();
        let pairs = (d * d.saturating_sub(1) / 2).max(1) as f64;
        let mut factors = vec![CoordPrior::standard_normal(); d];
        factors.extend(std::iter::repeat_n(CoordPrior::HalfNormal { scale: 1.0 / pairs }, model.edges().len()));
        let mut init_z = vec![0.0; d];
        init_z.extend(std::iter::repeat_n(0.1, model.edges().len()));
        if model.dim_theta() > init_z.len() {
            let extra = model.dim_theta() - init_z.len();
            factors
                .extend(std::iter::repeat_n(CoordPrior::HalfNormal { scale: std::f64::consts::FRAC_1_SQRT_2 }, extra));
            init_z.extend(std::iter::repeat_n(1.0, extra));
        }
        let transform = model.default_transform();
        Ok(Self { model: Box::new(model), prior: ProductPrior::new(factors), transform, init_z })
    }

    pub fn dim_theta(&self) -> usize {
        self.model.dim_theta()
    }
}

fn resolve_edges(d: usize, edges: &EdgeSpec) -> Result<Vec<(usize, usize)>, RunError> {
    match edges {
        EdgeSpec::Named(name) if name == "complete" => Ok(GraphicalModel::complete_edges(d)),
        EdgeSpec::Named(name) => {
            Err(RunError::config(format!("unknown edge set {name:?}; use \"complete\" or a list")))
        }
        EdgeSpec::List(list) => Ok(list.clone()),
    }
}

/// How a loss is assembled from data: aggregated and keyed where possible
/// for inference, or per datum for cost measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossLayout {
    Fast,
    PerDatum,
}

/// Builds the loss of `spec` for `model` on `data`.
pub fn make_loss<'a>(
    model: &'a dyn Simulator,
    model_spec: &ModelSpec,
    spec: &LossSpec,
    data: &Dataset,
    layout: LossLayout,
) -> Result<Box<dyn Loss + 'a>, RunError> {
    let (aggregation, mode) = match layout {
        LossLayout::Fast => (Aggregation::Auto, EvalMode::Auto),
        LossLayout::PerDatum => (Aggregation::Never, EvalMode::Direct),
    };
    Ok(match spec {
        LossSpec::Dfd => Box::new(DfdLoss::with_options(model, data, aggregation, mode)),
        LossSpec::Ksd { kernel } => {
            let binary = model.domain().coords().iter().all(|c| *c == CoordinateDomain::FiniteCyclic(2));
            let kernel = match kernel {
                KernelSpec::Hamming => ExpIndicatorKernel::hamming(),
                KernelSpec::Agreement => ExpIndicatorKernel::agreement(),
                KernelSpec::Weighted { offset } => ExpIndicatorKernel::weighted(SigmoidWeight::new(*offset, binary)),
            };
            Box::new(KsdLoss::with_options(model, kernel, data, aggregation, mode))
        }
        LossSpec::Pseudo => Box::new(PseudoLikelihoodLoss::with_options(model, data, aggregation, mode)?),
        LossSpec::StandardBayesCmp => {
            if *model_spec != ModelSpec::Cmp {
                return Err(RunError::config("standard-bayes-cmp needs the cmp model"));
            }
            Box::new(TruncatedCmpNll::new(data))
        }
    })
}

/// Simulates or reads the dataset and checks it against the model's domain.
pub fn load_data(config: &RunConfig, setup: &ModelSetup) -> Result<Dataset, RunError> {
    let data = match &config.data {
        DataSpec::Simulate { theta, n, iters_per_draw } => {
            setup.model.check_theta(theta)?;
            let cfg = SimConfig {
                n_draws: *n,
                iters_per_draw: iters_per_draw.unwrap_or_else(|| setup.model.default_iters()),
                seed: stream_seed(config.seed, DATA_STREAM),
            };
            setup.model.simulate(theta, &cfg)?
        }
        DataSpec::File { path } => crate::formats::ingest_counts(path)?,
    };
    data.validate(setup.model.domain())?;
    Ok(data)
}

/// Replaces the last `round(ε n)` observations with `outlier`.
pub fn contaminate(data: &Dataset, epsilon: f64, outlier: &[i64]) -> Dataset {
    let n = data.len();
    let k = ((epsilon * n as f64).round() as usize).min(n);
    let mut out = data.clone();
    for i in n - k..n {
        out.set_point(i, outlier);
    }
    out
}

/// Bootstrap calibration with replicates minimised in parallel.
pub fn calibrate_parallel<'a, F>(
    make: &F,
    prior: &ProductPrior,
    data: &Dataset,
    transform: &ParamTransform,
    init_z: &[f64],
    config: &BootstrapConfig,
) -> Result<CalibrationResult, RunError>
where
    F: Fn(&Dataset) -> Box<dyn Loss + 'a> + Sync,
{
    let minimisers = (0..config.replicates)
        .into_par_iter()
        .map(|b| bootstrap_minimiser(make, data, b, transform, init_z, config))
        .collect::<Result<Vec<Minimiser>, _>>()?;
    Ok(CalibrationResult::assemble(&make(data), prior, minimisers)?)
}

/// Runs `spec.chains` chains in parallel. Chain `c` starts at `centre` plus
/// Gaussian jitter, falling back to `centre` if the jittered point has zero
/// density.
pub fn run_chains<T: Target + ?Sized>(
    target: &T,
    transform: &ParamTransform,
    centre: &[f64],
    spec: &SamplerSpec,
    seed: u64,
) -> Result<Vec<Chain>, RunError> {
    let run = RunLength { n_samples: spec.n_samples, burn_in: spec.burn_in, thin: spec.thin };
    (0..spec.chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, 2 * c);
            let mut init: Vec<f64> =
                centre.iter().map(|z| z + spec.init_jitter * rng.sample::<f64, _>(StandardNormal)).collect();
            if target.log_density(&init).is_err() {
                init = centre.to_vec();
            }
            let chain_seed = stream_seed(seed, 2 * c + 1);
            let chain = match spec.kind {
                SamplerKind::Rwmh => {
                    rwmh_sample(target, transform, &init, &RwmhConfig { sigma: spec.step_size, run, seed: chain_seed })
                }
                SamplerKind::Mala => mala_sample(
                    target,
                    transform,
                    &init,
                    &MalaConfig { step_size: spec.step_size, run, seed: chain_seed, adapt: spec.adapt },
                ),
            };
            chain.map_err(RunError::from)
        })
        .collect()
}

/// Pooled marginal summaries of a set of chains.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    pub draws: usize,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    /// Empty unless there are at least two chains of length two.
    pub rhat: Vec<f64>,
}

pub fn marginals(chains: &[Chain]) -> Marginals {
    let p = chains[0].dim;
    let mut m = Marginals { draws: 0, mean: vec![], sd: vec![], ci_lower: vec![], ci_upper: vec![], rhat: vec![] };
    for k in 0..p {
        let mut col: Vec<f64> = chains.iter().flat_map(|c| c.column(k)).collect();
        m.draws = col.len();
        m.mean.push(mean(&col));
        m.sd.push(if col.len() > 1 { variance(&col).sqrt() } else { 0.0 });
        col.sort_by(f64::total_cmp);
        m.ci_lower.push(quantile_sorted(&col, 0.025));
        m.ci_upper.push(quantile_sorted(&col, 0.975));
    }
    if chains.len() >= 2 && chains.iter().all(|c| c.len() >= 2) {
        m.rhat = gelman_rubin(chains);
    }
    m
}

/// Wall-clock seconds per `loss.value` call, averaged over repeated calls
/// lasting at least `min_seconds` in total.
pub fn time_loss(loss: &dyn Loss, theta: &[f64], min_seconds: f64, min_evals: usize) -> f64 {
    std::hint::black_box(loss.value(theta));
    let start = Instant::now();
    let mut evals = 0usize;
    loop {
        std::hint::black_box(loss.value(std::hint::black_box(theta)));
        evals += 1;
        let elapsed = start.elapsed().as_secs_f64();
        if evals >= min_evals && elapsed >= min_seconds {
            return elapsed / evals as f64;
        }
    }
}

/// Everything produced for one method.
pub struct MethodOutcome {
    pub label: String,
    pub loss: String,
    pub beta: f64,
    pub calibration: Option<CalibrationResult>,
    /// Full-data loss minimiser, the centre of the chain starts.
    pub minimiser: Minimiser,
    pub chains: Vec<Chain>,
    pub marginals: Marginals,
    pub predictive: Option<PredictiveRecord>,
    pub timing: TimingRecord,
}

/// A method resolved against the run config.
pub struct MethodPlan {
    pub index: usize,
    pub label: String,
    pub model_spec: ModelSpec,
    pub method: MethodSpec,
}

impl MethodPlan {
    pub fn all(config: &RunConfig) -> Vec<Self> {
        config
            .methods()
            .into_iter()
            .zip(config.method_labels())
            .enumerate()
            .map(|(index, (method, label))| Self {
                index,
                label,
                model_spec: method.model.clone().unwrap_or_else(|| config.model.clone()),
                method,
            })
            .collect()
    }

    pub fn seed(&self, master: u64) -> u64 {
        stream_seed(stream_seed(master, METHOD_STREAM), self.index as u64)
    }
}

pub fn bootstrap_config(config: &RunConfig, method_seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        replicates: config.calibration.replicates,
        optimizer: OptimizerConfig { max_iters: config.calibration.max_iters, grad_tol: config.calibration.grad_tol },
        seed: stream_seed(method_seed, CALIBRATION_STREAM),
    }
}

/// Calibrates only, for the `calibrate` command.
pub fn calibrate_method(config: &RunConfig, plan: &MethodPlan, data: &Dataset) -> Result<CalibrationResult, RunError> {
    let setup = ModelSetup::build(&plan.model_spec)?;
    check_dim(&setup, data)?;
    let model = setup.model.as_ref();
    make_loss(model, &plan.model_spec, &plan.method.loss, data, LossLayout::Fast)?;
    let make = |d: &Dataset| {
        make_loss(model, &plan.model_spec, &plan.method.loss, d, LossLayout::Fast)
            .expect("loss construction succeeded on the full data")
    };
    calibrate_parallel(
        &make,
        &setup.prior,
        data,
        &setup.transform,
        &setup.init_z,
        &bootstrap_config(config, plan.seed(config.seed)),
    )
}

fn check_dim(setup: &ModelSetup, data: &Dataset) -> Result<(), RunError> {
    let d = setup.model.domain().dim();
    if data.dim() != d {
        return Err(RunError::config(format!("data have {} columns, model expects {d}", data.dim())));
    }
    data.validate(setup.model.domain())?;
    Ok(())
}

/// Calibrates (if `β` is `auto`), samples, summarises and times one method.
pub fn run_method(
    config: &RunConfig,
    plan: &MethodPlan,
    data: &Dataset,
    method_seed: u64,
) -> Result<MethodOutcome, RunError> {
    let setup = ModelSetup::build(&plan.model_spec)?;
    check_dim(&setup, data)?;
    let model = setup.model.as_ref();
    let spec = &plan.method.loss;
    let loss = make_loss(model, &plan.model_spec, spec, data, LossLayout::Fast)?;
    let make = |d: &Dataset| {
        make_loss(model, &plan.model_spec, spec, d, LossLayout::Fast)
            .expect("loss construction succeeded on the full data")
    };

    let boot = bootstrap_config(config, method_seed);
    let minimiser = minimise_loss(&loss, &setup.transform, &setup.init_z, &boot.optimizer)?;
    let (beta, calibration) = match plan.method.beta {
        BetaSpec::Fixed(b) => (b, None),
        BetaSpec::Auto => {
            let cal = calibrate_parallel(&make, &setup.prior, data, &setup.transform, &setup.init_z, &boot)?;
            (cal.beta_star, Some(cal))
        }
    };

    let target = GeneralisedPosterior::new(setup.prior.clone(), &loss, beta, setup.transform.clone());
    let chains =
        run_chains(&target, &setup.transform, &minimiser.z, &config.sampler, stream_seed(method_seed, CHAIN_STREAM))?;
    let marginals = marginals(&chains);

    let predictive = match &config.predictive {
        None => None,
        Some(p) => {
            let pooled: Vec<&[f64]> = chains.iter().flat_map(|c| (0..c.len()).map(move |i| c.draw(i))).collect();
            let k = p.n_thetas.min(pooled.len());
            let thetas: Vec<Vec<f64>> = (0..k).map(|i| pooled[i * pooled.len() / k].to_vec()).collect();
            let pred = posterior_predictive(
                model,
                &thetas,
                p.draws_per_theta,
                p.iters_per_draw.unwrap_or_else(|| model.default_iters()),
                p.max_value,
                stream_seed(method_seed, PREDICTIVE_STREAM),
            )?;
            Some(PredictiveRecord::new(&plan.label, &pred, k, data, Provenance { seed: 0, config_hash: String::new() }))
        }
    };

    let timing = TimingRecord {
        loss: spec.name().into(),
        n: data.len(),
        d: data.dim(),
        seconds_per_loss_eval: time_loss(loss.as_ref(), &minimiser.theta, 0.05, 3),
    };

    Ok(MethodOutcome {
        label: plan.label.clone(),
        loss: spec.name().into(),
        beta,
        calibration,
        minimiser,
        chains,
        marginals,
        predictive,
        timing,
    })
}

/// Writes the chain CSV, sidecar, calibration, summary and predictive files
/// of one method into `dir`.
pub fn write_method(dir: &Path, config: &RunConfig, outcome: &MethodOutcome) -> Result<(), RunError> {
    let prov = Provenance { seed: config.seed, config_hash: config.hash() };
    let label = &outcome.label;
    write_chains(&dir.join(format!("{label}_chains.csv")), &outcome.chains)?;
    let sidecar = ChainSidecar {
        label: label.clone(),
        beta: outcome.beta,
        sampler: match config.sampler.kind {
            SamplerKind::Rwmh => "rwmh".into(),
            SamplerKind::Mala => "mala".into(),
        },
        acceptance_rate: outcome.chains.iter().map(|c| c.acceptance_rate).collect(),
        rhat: outcome.marginals.rhat.clone(),
        step_size: outcome.chains.iter().map(|c| c.step_size).collect(),
        eval_failures: outcome.chains.iter().map(|c| c.eval_failures).collect(),
        warnings: outcome.chains.iter().flat_map(|c| c.warnings.iter().cloned()).collect(),
        config: serde_json::to_value(config).expect("config serialises"),
        provenance: prov.clone(),
    };
    write_json(&dir.join(format!("{label}_chains.json")), &sidecar)?;
    if let Some(cal) = &outcome.calibration {
        write_json(&dir.join(format!("{label}_calibration.json")), &CalibrationRecord::new(label, cal, prov.clone()))?;
    }
    let m = &outcome.marginals;
    let summary = PosteriorSummary {
        label: label.clone(),
        loss: outcome.loss.clone(),
        beta: outcome.beta,
        n: outcome.timing.n,
        d: outcome.timing.d,
        draws: m.draws,
        mean: m.mean.clone(),
        sd: m.sd.clone(),
        ci_lower: m.ci_lower.clone(),
        ci_upper: m.ci_upper.clone(),
        rhat: m.rhat.clone(),
        acceptance_rate: sidecar.acceptance_rate.clone(),
        provenance: prov.clone(),
    };
    write_json(&dir.join(format!("{label}_summary.json")), &summary)?;
    if let Some(pred) = &outcome.predictive {
        let pred = PredictiveRecord { provenance: prov, ..pred.clone() };
        write_json(&dir.join(format!("{label}_predictive.json")), &pred)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contamination_replaces_the_tail() {
        let data = Dataset::from_flat(2, vec![0, 0, 0, 1, 1, 0, 0, 0, 1, 1]).unwrap();
        let c = contaminate(&data, 0.4, &[1, 1]);
        assert_eq!(c.as_flat(), &[0, 0, 0, 1, 1, 0, 1, 1, 1, 1]);
        assert_eq!(contaminate(&data, 0.0, &[1, 1]), data);
    }

    #[test]
    fn graphical_setup_layout() {
        let s = ModelSetup::build(&ModelSpec::CmpPgm { d: 3, edges: EdgeSpec::Named("complete".into()) }).unwrap();
        assert_eq!(s.dim_theta(), 9);
        assert_eq!(s.init_z, vec![0.0, 0.0, 0.0, 0.1, 0.1, 0.1, 1.0, 1.0, 1.0]);
        assert_eq!(s.prior.factors[3], CoordPrior::HalfNormal { scale: 1.0 / 3.0 });
        assert!(ModelSetup::build(&ModelSpec::Pgm { d: 3, edges: EdgeSpec::Named("ring".into()) }).is_err());
    }

    #[test]
    fn positive_setup_starts_at_prior_mean() {
        let s = ModelSetup::build(&ModelSpec::Cmp).unwrap();
        for t in s.transform.to_constrained(&s.init_z) {
            assert!((t - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn marginals_of_a_known_chain() {
        let chain = |vals: &[f64]| Chain {
            dim: 1,
            draws: vals.to_vec(),
            log_densities: vec![0.0; vals.len()],
            accepted: 0,
            iterations: 0,
            acceptance_rate: 0.0,
            eval_failures: 0,
            step_size: 0.1,
            seed: 0,
            warnings: vec![],
        };
        let m = marginals(&[chain(&[1.0, 2.0, 3.0]), chain(&[4.0, 5.0, 6.0])]);
        assert_eq!(m.draws, 6);
        assert_eq!(m.mean, vec![3.5]);
        assert!((m.sd[0] - 3.5f64.sqrt()).abs() < 1e-12);
        assert!((m.ci_lower[0] - 1.125).abs() < 1e-12);
        assert_eq!(m.rhat.len(), 1);
        assert!(marginals(&[chain(&[1.0, 2.0])]).rhat.is_empty());
    }
}
