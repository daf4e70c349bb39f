//! Experiment drivers. Each writes its outputs under the config's output
//! directory and returns the in-memory results.

use std::path::Path;

use dfdbayes_core::rng::stream_seed;
use dfdbayes_core::simulate::SimConfig;
use dfdbayes_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::config::{DataSpec, ExperimentKind, RunConfig};
use crate::error::RunError;
use crate::formats::{write_dataset, write_json, Provenance, TimingFile, TimingRecord};
use crate::pipeline::{
    calibrate_method, contaminate, load_data, make_loss, run_method, time_loss, write_method, LossLayout,
    MethodOutcome, MethodPlan, ModelSetup,
};

pub fn provenance(config: &RunConfig) -> Provenance {
    Provenance { seed: config.seed, config_hash: config.hash() }
}

#[derive(Serialize)]
struct DataSidecar {
    n: usize,
    d: usize,
    source: DataSpec,
    #[serde(flatten)]
    provenance: Provenance,
}

fn write_run_files(dir: &Path, config: &RunConfig, data: &Dataset) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    std::fs::write(dir.join("config.json"), config.to_json() + "\n").map_err(|e| RunError::io(dir, e))?;
    write_dataset(&dir.join("data.csv"), data)?;
    write_json(
        &dir.join("data.json"),
        &DataSidecar { n: data.len(), d: data.dim(), source: config.data.clone(), provenance: provenance(config) },
    )
}

fn write_timing(
    dir: &Path,
    config: &RunConfig,
    records: Vec<TimingRecord>,
    slopes: Vec<(String, f64)>,
) -> Result<(), RunError> {
    write_json(&dir.join("timing.json"), &TimingFile { records, slopes, provenance: provenance(config) })
}

/// Loads the primary model's data (simulated or from file).
pub fn prepare_data(config: &RunConfig) -> Result<Dataset, RunError> {
    load_data(config, &ModelSetup::build(&config.model)?)
}

/// `simulate`: writes `data.csv` and its sidecar.
pub fn run_simulate(config: &RunConfig) -> Result<Dataset, RunError> {
    let data = prepare_data(config)?;
    write_run_files(&config.output_dir, config, &data)?;
    Ok(data)
}

/// `calibrate`: bootstrap calibration of the primary method only.
pub fn run_calibrate(config: &RunConfig) -> Result<dfdbayes_core::CalibrationResult, RunError> {
    let data = prepare_data(config)?;
    let plan = MethodPlan::all(config).swap_remove(0);
    let result = calibrate_method(config, &plan, &data)?;
    write_run_files(&config.output_dir, config, &data)?;
    write_json(
        &config.output_dir.join(format!("{}_calibration.json", plan.label)),
        &crate::formats::CalibrationRecord::new(&plan.label, &result, provenance(config)),
    )?;
    Ok(result)
}

/// Runs the given methods on `data` and writes their outputs into `dir`.
fn run_plans(
    config: &RunConfig,
    plans: &[MethodPlan],
    data: &Dataset,
    dir: &Path,
) -> Result<Vec<MethodOutcome>, RunError> {
    write_run_files(dir, config, data)?;
    let mut outcomes = Vec::with_capacity(plans.len());
    for plan in plans {
        let outcome = run_method(config, plan, data, plan.seed(config.seed))?;
        write_method(dir, config, &outcome)?;
        outcomes.push(outcome);
    }
    write_timing(dir, config, outcomes.iter().map(|o| o.timing.clone()).collect(), Vec::new())?;
    Ok(outcomes)
}

/// `sample`: the primary method only.
pub fn run_sample(config: &RunConfig) -> Result<MethodOutcome, RunError> {
    let data = prepare_data(config)?;
    let plans = MethodPlan::all(config);
    Ok(run_plans(config, &plans[..1], &data, &config.output_dir)?.swap_remove(0))
}

/// Primary method and all comparisons on one dataset: the CMP, Ising and
/// graphical-model experiments.
pub fn run_all_methods(config: &RunConfig) -> Result<Vec<MethodOutcome>, RunError> {
    let data = prepare_data(config)?;
    run_plans(config, &MethodPlan::all(config), &data, &config.output_dir)
}

pub fn run_cmp(config: &RunConfig) -> Result<Vec<MethodOutcome>, RunError> {
    run_all_methods(config)
}

pub fn run_ising(config: &RunConfig) -> Result<Vec<MethodOutcome>, RunError> {
    run_all_methods(config)
}

pub fn run_pgm(config: &RunConfig) -> Result<Vec<MethodOutcome>, RunError> {
    run_all_methods(config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessMethod {
    pub label: String,
    /// `mean[k]`: posterior mean at `epsilons[k]`.
    pub mean: Vec<Vec<f64>>,
    pub sd: Vec<Vec<f64>>,
    /// Euclidean distance of `mean[k]` from `mean[0]`.
    pub shift: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub epsilons: Vec<f64>,
    pub outlier: Vec<i64>,
    pub methods: Vec<RobustnessMethod>,
    #[serde(flatten)]
    pub provenance: Provenance,
}

/// Every method at each contamination level. Method seeds are shared across
/// levels, so shifts reflect the data rather than Monte Carlo noise.
pub fn run_robustness(config: &RunConfig) -> Result<RobustnessReport, RunError> {
    let spec = config.robustness.clone().ok_or_else(|| RunError::config("robustness experiment needs `robustness`"))?;
    let data = prepare_data(config)?;
    let outlier = spec.outlier.clone().unwrap_or_else(|| vec![1; data.dim()]);
    if outlier.len() != data.dim() {
        return Err(RunError::config(format!("outlier has {} coordinates, data have {}", outlier.len(), data.dim())));
    }
    let plans = MethodPlan::all(config);
    let mut methods: Vec<RobustnessMethod> = plans
        .iter()
        .map(|p| RobustnessMethod { label: p.label.clone(), mean: vec![], sd: vec![], shift: vec![] })
        .collect();
    for &eps in &spec.epsilons {
        let dir = config.output_dir.join(format!("eps-{eps}"));
        let outcomes = run_plans(config, &plans, &contaminate(&data, eps, &outlier), &dir)?;
        for (m, o) in methods.iter_mut().zip(outcomes) {
            m.mean.push(o.marginals.mean);
            m.sd.push(o.marginals.sd);
        }
    }
    for m in &mut methods {
        m.shift = m
            .mean
            .iter()
            .map(|v| v.iter().zip(&m.mean[0]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
    }
    let report = RobustnessReport { epsilons: spec.epsilons, outlier, methods, provenance: provenance(config) };
    write_json(&config.output_dir.join("robustness.json"), &report)?;
    Ok(report)
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Time per loss evaluation against `n`, with losses evaluated per datum
/// (no aggregation, no precomputed kernel sums) at the data-generating
/// parameter.
pub fn run_cost_benchmark(config: &RunConfig) -> Result<TimingFile, RunError> {
    let spec = config.cost.clone().ok_or_else(|| RunError::config("cost experiment needs `cost`"))?;
    let DataSpec::Simulate { theta, iters_per_draw, .. } = &config.data else {
        return Err(RunError::config("cost experiment simulates its data"));
    };
    let setup = ModelSetup::build(&config.model)?;
    setup.model.check_theta(theta)?;
    let plans = MethodPlan::all(config);
    let mut records = Vec::new();
    for &n in &spec.ns {
        let cfg = SimConfig {
            n_draws: n,
            iters_per_draw: iters_per_draw.unwrap_or_else(|| setup.model.default_iters()),
            seed: stream_seed(stream_seed(config.seed, 0), n as u64),
        };
        let data = setup.model.simulate(theta, &cfg)?;
        for plan in &plans {
            let model = ModelSetup::build(&plan.model_spec)?;
            let loss =
                make_loss(model.model.as_ref(), &plan.model_spec, &plan.method.loss, &data, LossLayout::PerDatum)?;
            records.push(TimingRecord {
                loss: plan.label.clone(),
                n,
                d: data.dim(),
                seconds_per_loss_eval: time_loss(loss.as_ref(), theta, spec.min_seconds, spec.min_evals),
            });
        }
    }
    let slopes = plans
        .iter()
        .map(|p| {
            let (x, y): (Vec<f64>, Vec<f64>) =
                records.iter().filter(|r| r.loss == p.label).map(|r| (r.n as f64, r.seconds_per_loss_eval)).unzip();
            (p.label.clone(), log_log_slope(&x, &y))
        })
        .collect();
    let file = TimingFile { records, slopes, provenance: provenance(config) };
    std::fs::create_dir_all(&config.output_dir).map_err(|e| RunError::io(&config.output_dir, e))?;
    std::fs::write(config.output_dir.join("config.json"), config.to_json() + "\n")
        .map_err(|e| RunError::io(&config.output_dir, e))?;
    write_json(&config.output_dir.join("timing.json"), &file)?;
    Ok(file)
}

/// Dispatches `experiment <kind>`.
pub fn run_experiment(kind: ExperimentKind, config: &RunConfig) -> Result<(), RunError> {
    match kind {
        ExperimentKind::Cmp => run_cmp(config).map(drop),
        ExperimentKind::Ising => run_ising(config).map(drop),
        ExperimentKind::Pgm => run_pgm(config).map(drop),
        ExperimentKind::Robustness => run_robustness(config).map(drop),
        ExperimentKind::Cost => run_cost_benchmark(config).map(drop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let x = [1e3, 2e3, 4e3, 8e3];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3e-9 * v * v).collect();
        assert!((log_log_slope(&x, &y) - 2.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| 5e-7 * v).collect();
        assert!((log_log_slope(&x, &y) - 1.0).abs() < 1e-12);
    }
}
