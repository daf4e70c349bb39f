//! Generalised Bayesian inference for discrete models with intractable
//! normalising constants, using the discrete Fisher divergence as the loss.
//!
//! The crate is `no_std` with `alloc`. File formats, the command line and
//! parallel orchestration live in the companion `dfdbayes` crate.

#![no_std]
// `!(x > 0.0)` deliberately treats NaN as failing the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// numeric loops index several parallel arrays
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod data;
pub mod domain;
pub mod error;
pub mod losses;
pub mod math;
pub mod models;
pub mod posterior;
pub mod rng;
pub mod samplers;
pub mod simulate;

pub use calibration::{beta_star, calibrate, minimise_loss, BootstrapConfig, CalibrationResult, OptimizerConfig};
pub use data::Dataset;
pub use domain::{CoordinateDomain, ExtendedCoordinate, ExtendedPoint, Point, ProductDomain};
pub use error::{CalibrationError, DataError, DomainError, EvalError, ModelError, SimulationError};
pub use losses::{Aggregation, DfdLoss, EvalMode, KsdLoss, Loss, PseudoLikelihoodLoss};
pub use models::{CmpModel, DiscreteModel, ExpFamily, GraphicalModel, IsingModel, ParamTransform};
pub use posterior::{CoordPrior, GeneralisedPosterior, Prior, ProductPrior};
pub use samplers::{gelman_rubin, mala_sample, rwmh_sample, Chain, MalaConfig, RunLength, RwmhConfig, Target};
