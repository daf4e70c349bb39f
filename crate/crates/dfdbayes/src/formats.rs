//! CSV and JSON file formats.
//!
//! Datasets are CSV with header `x_0,…,x_{d−1}`; chains are CSV with header
//! `chain_id,iter,log_density,theta_0,…`. Every JSON document carries the
//! master seed and the config hash.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dfdbayes_core::simulate::PosteriorPredictive;
use dfdbayes_core::{CalibrationResult, Chain, Dataset};
use serde::{Deserialize, Serialize};

use crate::error::{IngestError, RunError};

/// Seed and config hash attached to every JSON output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

/// Reads nonnegative integer counts.
///
/// Accepts a headerless single-column file (`d = 1`) or a `d`-column file
/// whose header is `x_0,…,x_{d−1}`. Blank lines are skipped.
pub fn ingest_counts(path: &Path) -> Result<Dataset, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    parse_counts(&text).map_err(|e| match e {
        ParseFailure::Empty => IngestError::Empty { path: path.into() },
        ParseFailure::At { line, message } => IngestError::Parse { path: path.into(), line, message },
    })
}

#[derive(Debug)]
enum ParseFailure {
    Empty,
    At { line: usize, message: String },
}

fn parse_counts(text: &str) -> Result<Dataset, ParseFailure> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut dim = None;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ParseFailure::At {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let d = match dim {
            Some(d) => d,
            None => {
                let is_header = record.get(0).is_some_and(|f| f.starts_with(|c: char| c.is_ascii_alphabetic()));
                if is_header {
                    for (i, name) in record.iter().enumerate() {
                        if name != format!("x_{i}") {
                            return Err(ParseFailure::At {
                                line,
                                message: format!("header column {i} is {name:?}, expected \"x_{i}\""),
                            });
                        }
                    }
                    dim = Some(record.len());
                    continue;
                }
                if record.len() != 1 {
                    return Err(ParseFailure::At {
                        line,
                        message: "multi-column files need a header x_0,...,x_{d-1}".into(),
                    });
                }
                dim = Some(1);
                1
            }
        };
        if record.len() != d {
            return Err(ParseFailure::At { line, message: format!("expected {d} columns, found {}", record.len()) });
        }
        for field in record.iter() {
            values.push(parse_count(field).map_err(|message| ParseFailure::At { line, message })?);
        }
    }
    match dim {
        Some(d) if !values.is_empty() => Ok(Dataset::from_flat(d, values).expect("rows have equal length")),
        _ => Err(ParseFailure::Empty),
    }
}

fn parse_count(field: &str) -> Result<i64, String> {
    match field.parse::<i64>() {
        Ok(v) if v >= 0 => Ok(v),
        Ok(v) => Err(format!("negative count {v}")),
        Err(_) => Err(format!("{field:?} is not a nonnegative integer")),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| RunError::io(path, e))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> RunError + '_ {
    move |source| RunError::Csv { path: path.into(), source }
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = csv_error(path);
    w.write_record((0..data.dim()).map(|i| format!("x_{i}"))).map_err(&err)?;
    for x in data.iter() {
        w.write_record(x.iter().map(i64::to_string)).map_err(&err)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// One row per retained draw; `iter` counts retained draws within a chain.
pub fn write_chains(path: &Path, chains: &[Chain]) -> Result<(), RunError> {
    let p = chains.first().map_or(0, |c| c.dim);
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = csv_error(path);
    let mut header = vec!["chain_id".to_string(), "iter".into(), "log_density".into()];
    header.extend((0..p).map(|k| format!("theta_{k}")));
    w.write_record(&header).map_err(&err)?;
    for (c, chain) in chains.iter().enumerate() {
        for i in 0..chain.len() {
            let mut row = vec![c.to_string(), i.to_string(), chain.log_densities[i].to_string()];
            row.extend(chain.draw(i).iter().map(f64::to_string));
            w.write_record(&row).map_err(&err)?;
        }
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// Reads a chain CSV back into `(chain_id, draws)` groups.
pub fn read_chains(path: &Path) -> Result<Vec<Vec<Vec<f64>>>, RunError> {
    let err = csv_error(path);
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    let mut out: Vec<Vec<Vec<f64>>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(&err)?;
        let bad = || RunError::config(format!("{}: malformed chain row", path.display()));
        let c: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let theta = rec.iter().skip(3).map(|s| s.parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
        if out.len() <= c {
            out.resize(c + 1, Vec::new());
        }
        out[c].push(theta);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| RunError::Json { path: path.into(), source })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| RunError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| RunError::Json { path: path.into(), source })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSidecar {
    pub label: String,
    pub beta: f64,
    pub sampler: String,
    pub acceptance_rate: Vec<f64>,
    pub rhat: Vec<f64>,
    pub step_size: Vec<f64>,
    pub eval_failures: Vec<usize>,
    pub warnings: Vec<String>,
    pub config: serde_json::Value,
    #[serde(flatten)]
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub label: String,
    pub beta_star: f64,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub minimisers: Vec<Vec<f64>>,
    pub grad_norms: Vec<f64>,
    pub converged: Vec<bool>,
    pub numerator: f64,
    pub denominator: f64,
    #[serde(flatten)]
    pub provenance: Provenance,
}

impl CalibrationRecord {
    pub fn new(label: &str, result: &CalibrationResult, provenance: Provenance) -> Self {
        Self {
            label: label.into(),
            beta_star: result.beta_star,
            replicates: result.replicates(),
            minimisers: result.minimisers.clone(),
            grad_norms: result.grad_norms.clone(),
            converged: result.converged.clone(),
            numerator: result.numerator,
            denominator: result.denominator,
            provenance,
        }
    }
}

/// Marginal posterior summaries; intervals are the 2.5% and 97.5% empirical
/// quantiles of the pooled draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub label: String,
    pub loss: String,
    pub beta: f64,
    pub n: usize,
    pub d: usize,
    pub draws: usize,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub rhat: Vec<f64>,
    pub acceptance_rate: Vec<f64>,
    #[serde(flatten)]
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveRecord {
    pub label: String,
    pub dim: usize,
    pub max_value: usize,
    pub n_thetas: usize,
    pub draws_per_theta: usize,
    /// `mean[j][v]`: average frequency of value `v` in coordinate `j`.
    pub mean: Vec<Vec<f64>>,
    pub sd: Vec<Vec<f64>>,
    /// Empirical frequencies of the observed data on the same cells.
    pub observed: Vec<Vec<f64>>,
    #[serde(flatten)]
    pub provenance: Provenance,
}

impl PredictiveRecord {
    pub fn new(
        label: &str,
        pred: &PosteriorPredictive,
        n_thetas: usize,
        data: &Dataset,
        provenance: Provenance,
    ) -> Self {
        let w = pred.max_value + 1;
        let rows = |v: &[f64]| v.chunks(w).map(<[f64]>::to_vec).collect();
        let mut observed = vec![vec![0.0; w]; data.dim()];
        for x in data.iter() {
            for (j, &v) in x.iter().enumerate() {
                if (v as usize) < w {
                    observed[j][v as usize] += 1.0 / data.len() as f64;
                }
            }
        }
        Self {
            label: label.into(),
            dim: pred.dim,
            max_value: pred.max_value,
            n_thetas,
            draws_per_theta: pred.samples.len() / n_thetas,
            mean: rows(&pred.mean),
            sd: rows(&pred.sd),
            observed,
            provenance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub loss: String,
    pub n: usize,
    pub d: usize,
    pub seconds_per_loss_eval: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingFile {
    pub records: Vec<TimingRecord>,
    /// Least-squares slope of log time on log n, per loss (cost benchmark).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slopes: Vec<(String, f64)>,
    #[serde(flatten)]
    pub provenance: Provenance,
}
