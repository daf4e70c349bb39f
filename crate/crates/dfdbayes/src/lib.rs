//! File formats, experiment drivers and the command-line interface for
//! [`dfdbayes_core`].
//!
//! A run is described by a JSON [`RunConfig`]. Drivers simulate or ingest
//! data, calibrate `β` by the bootstrap when asked, sample the generalised
//! posterior with parallel chains and write CSV and JSON outputs that carry
//! the master seed and the config hash.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod pipeline;

pub use config::{BetaSpec, ExperimentKind, LossSpec, ModelSpec, RunConfig};
pub use dfdbayes_core as core;
pub use error::{IngestError, RunError};
pub use formats::ingest_counts;
