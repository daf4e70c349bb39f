//! Run configuration: a single JSON document plus desk-scale presets for each
//! experiment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Cmp,
    Ising,
    Pgm,
    Robustness,
    Cost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub model: ModelSpec,
    /// Output label of the primary method; defaults to the loss name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub loss: LossSpec,
    pub beta: BetaSpec,
    /// Further methods run on the same data by `experiment`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<MethodSpec>,
    pub sampler: SamplerSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictive: Option<PredictiveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSpec>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Cmp,
    Ising { m: usize },
    Pgm { d: usize, edges: EdgeSpec },
    CmpPgm { d: usize, edges: EdgeSpec },
}

/// `"complete"` or an explicit list of node pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Named(String),
    List(Vec<(usize, usize)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LossSpec {
    Dfd,
    Ksd {
        #[serde(default)]
        kernel: KernelSpec,
    },
    Pseudo,
    StandardBayesCmp,
}

impl LossSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dfd => "dfd",
            Self::Ksd { kernel: KernelSpec::Weighted { .. } } => "ksd-weighted",
            Self::Ksd { .. } => "ksd",
            Self::Pseudo => "pseudo",
            Self::StandardBayesCmp => "standard-bayes-cmp",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    #[default]
    Hamming,
    Agreement,
    /// Hamming kernel times `σ(offset − |Σ_i (2x_i − 1)|)` in each argument.
    Weighted {
        offset: f64,
    },
}

/// A numeric `β` or `"auto"` for bootstrap calibration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaRepr", into = "BetaRepr")]
pub enum BetaSpec {
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BetaRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<BetaRepr> for BetaSpec {
    type Error = String;

    fn try_from(r: BetaRepr) -> Result<Self, String> {
        match r {
            BetaRepr::Number(v) => BetaSpec::fixed(v),
            BetaRepr::Text(s) => s.parse(),
        }
    }
}

impl From<BetaSpec> for BetaRepr {
    fn from(b: BetaSpec) -> Self {
        match b {
            BetaSpec::Auto => BetaRepr::Text("auto".into()),
            BetaSpec::Fixed(v) => BetaRepr::Number(v),
        }
    }
}

impl BetaSpec {
    fn fixed(v: f64) -> Result<Self, String> {
        if v.is_finite() && v >= 0.0 {
            Ok(Self::Fixed(v))
        } else {
            Err(format!("beta must be a finite nonnegative number or \"auto\", got {v}"))
        }
    }
}

impl FromStr for BetaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("beta must be a number or \"auto\", got {s:?}"))?;
        Self::fixed(v)
    }
}

impl fmt::Display for BetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Fit a different model to the same data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    pub loss: LossSpec,
    pub beta: BetaSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Rwmh,
    Mala,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    /// Proposal sd for RWMH, initial step size for MALA.
    pub step_size: f64,
    /// Draws kept per chain.
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    /// MALA step-size adaptation during burn-in.
    #[serde(default = "default_true")]
    pub adapt: bool,
    /// Sd of the Gaussian jitter added to the loss minimiser (unconstrained
    /// space) to start each chain.
    #[serde(default = "default_jitter")]
    pub init_jitter: f64,
}

fn default_true() -> bool {
    true
}

fn default_jitter() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    Simulate {
        theta: Vec<f64>,
        n: usize,
        /// Simulator steps per draw; the model's default when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        iters_per_draw: Option<usize>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub replicates: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self { replicates: 100, max_iters: 500, grad_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictiveSpec {
    /// Posterior draws used, spread evenly over the pooled chains.
    pub n_thetas: usize,
    pub draws_per_theta: usize,
    /// Histogram cells cover values `0..=max_value`.
    pub max_value: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters_per_draw: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSpec {
    /// Contamination fractions; the first is the reference.
    pub epsilons: Vec<f64>,
    /// Point that replaces contaminated observations; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlier: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub ns: Vec<usize>,
    /// Each loss is evaluated repeatedly for at least this long per `n`.
    pub min_seconds: f64,
    pub min_evals: usize,
}

impl RunConfig {
    /// Reads a config, resolving a relative data path against the config's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
        if let DataSpec::File { path: p } = &mut cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| RunError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Hex SHA-256 of the compact JSON serialisation without `output_dir`.
    pub fn hash(&self) -> String {
        // where the outputs go does not change them
        let mut value = serde_json::to_value(self).expect("config serialises");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        let bytes = serde_json::to_vec(&value).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn primary(&self) -> MethodSpec {
        MethodSpec { label: self.label.clone(), model: None, loss: self.loss, beta: self.beta }
    }

    /// Primary method followed by the comparisons.
    pub fn methods(&self) -> Vec<MethodSpec> {
        std::iter::once(self.primary()).chain(self.comparisons.iter().cloned()).collect()
    }

    /// Distinct output labels, one per entry of [`Self::methods`].
    pub fn method_labels(&self) -> Vec<String> {
        self.methods().iter().map(|m| m.label.clone().unwrap_or_else(|| m.loss.name().to_string())).collect()
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let s = &self.sampler;
        if !(s.step_size > 0.0 && s.step_size.is_finite()) {
            return Err(RunError::config("sampler.step_size must be positive"));
        }
        if s.n_samples == 0 || s.thin == 0 || s.chains == 0 {
            return Err(RunError::config("sampler.n_samples, thin and chains must be positive"));
        }
        if !(s.init_jitter >= 0.0 && s.init_jitter.is_finite()) {
            return Err(RunError::config("sampler.init_jitter must be nonnegative"));
        }
        if let DataSpec::Simulate { n, .. } = &self.data {
            if *n == 0 {
                return Err(RunError::config("data.n must be positive"));
            }
        }
        if self.calibration.replicates == 0 {
            return Err(RunError::config("calibration.replicates must be positive"));
        }
        if let Some(p) = &self.predictive {
            if p.n_thetas == 0 || p.draws_per_theta == 0 {
                return Err(RunError::config("predictive.n_thetas and draws_per_theta must be positive"));
            }
        }
        if let Some(r) = &self.robustness {
            if r.epsilons.is_empty() || r.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
                return Err(RunError::config("robustness.epsilons must be a nonempty list in [0, 1]"));
            }
        }
        if let Some(c) = &self.cost {
            if c.ns.is_empty() || c.ns.contains(&0) {
                return Err(RunError::config("cost.ns must be a nonempty list of positive sizes"));
            }
        }
        let labels = self.method_labels();
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.contains(['/', '\\']) {
                return Err(RunError::config(format!("invalid method label {l:?}")));
            }
            if labels[..i].contains(l) {
                return Err(RunError::config(format!("duplicate method label {l:?}; set `label` to disambiguate")));
            }
        }
        Ok(())
    }

    /// Desk-scale defaults for an experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let rwmh = |n_samples, burn_in, thin, chains| SamplerSpec {
            kind: SamplerKind::Rwmh,
            step_size: 0.1,
            n_samples,
            burn_in,
            thin,
            chains,
            adapt: true,
            init_jitter: 0.1,
        };
        let auto = |loss| MethodSpec { label: None, model: None, loss, beta: BetaSpec::Auto };
        let hamming = LossSpec::Ksd { kernel: KernelSpec::Hamming };
        let base = |model, loss, sampler, data| RunConfig {
            experiment: kind,
            model,
            label: None,
            loss,
            beta: BetaSpec::Auto,
            comparisons: Vec::new(),
            sampler,
            data,
            calibration: CalibrationSpec::default(),
            predictive: None,
            robustness: None,
            cost: None,
            output_dir: PathBuf::from(format!("out/{}", kind.name())),
            seed: 1,
        };
        match kind {
            ExperimentKind::Cmp => RunConfig {
                comparisons: vec![
                    MethodSpec {
                        label: None,
                        model: None,
                        loss: LossSpec::StandardBayesCmp,
                        beta: BetaSpec::Fixed(1.0),
                    },
                    auto(hamming),
                ],
                predictive: Some(PredictiveSpec {
                    n_thetas: 100,
                    draws_per_theta: 500,
                    max_value: 15,
                    iters_per_draw: None,
                }),
                ..base(
                    ModelSpec::Cmp,
                    LossSpec::Dfd,
                    rwmh(500, 5000, 10, 10),
                    DataSpec::Simulate { theta: vec![4.0, 0.75], n: 2000, iters_per_draw: None },
                )
            },
            ExperimentKind::Ising => RunConfig {
                comparisons: vec![auto(hamming), auto(LossSpec::Pseudo)],
                ..base(
                    ModelSpec::Ising { m: 6 },
                    LossSpec::Dfd,
                    rwmh(100, 2000, 20, 10),
                    DataSpec::Simulate { theta: vec![5.0], n: 1000, iters_per_draw: None },
                )
            },
            ExperimentKind::Pgm => {
                let d = 10;
                let edges = d * (d - 1) / 2;
                let mut theta = vec![1.0; d];
                theta.extend(std::iter::repeat_n(0.02, edges));
                RunConfig {
                    label: Some("pgm-dfd".into()),
                    comparisons: vec![MethodSpec {
                        label: Some("cmp-pgm-dfd".into()),
                        model: Some(ModelSpec::CmpPgm { d, edges: EdgeSpec::Named("complete".into()) }),
                        loss: LossSpec::Dfd,
                        beta: BetaSpec::Auto,
                    }],
                    predictive: Some(PredictiveSpec {
                        n_thetas: 100,
                        draws_per_theta: 500,
                        max_value: 15,
                        iters_per_draw: None,
                    }),
                    ..base(
                        ModelSpec::Pgm { d, edges: EdgeSpec::Named("complete".into()) },
                        LossSpec::Dfd,
                        SamplerSpec { kind: SamplerKind::Mala, step_size: 0.01, ..rwmh(100, 5000, 50, 4) },
                        DataSpec::Simulate { theta, n: 878, iters_per_draw: None },
                    )
                }
            }
            ExperimentKind::Robustness => RunConfig {
                comparisons: vec![auto(LossSpec::Ksd { kernel: KernelSpec::Weighted { offset: 32.4 } })],
                robustness: Some(RobustnessSpec { epsilons: vec![0.0, 0.1], outlier: None }),
                ..base(
                    ModelSpec::Ising { m: 6 },
                    LossSpec::Dfd,
                    rwmh(100, 2000, 20, 10),
                    DataSpec::Simulate { theta: vec![5.0], n: 1000, iters_per_draw: None },
                )
            },
            ExperimentKind::Cost => RunConfig {
                comparisons: vec![auto(hamming)],
                cost: Some(CostSpec { ns: vec![1000, 2000, 4000, 8000, 16000], min_seconds: 0.2, min_evals: 3 }),
                ..base(
                    ModelSpec::Cmp,
                    LossSpec::Dfd,
                    rwmh(500, 5000, 10, 10),
                    DataSpec::Simulate { theta: vec![4.0, 1.0], n: 1000, iters_per_draw: None },
                )
            },
        }
    }
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cmp => "cmp",
            Self::Ising => "ising",
            Self::Pgm => "pgm",
            Self::Robustness => "robustness",
            Self::Cost => "cost",
        }
    }
}
