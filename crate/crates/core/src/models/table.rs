use alloc::vec::Vec;

use super::DiscreteModel;
use crate::domain::{CoordinateDomain, ProductDomain};
use crate::error::ModelError;

/// A parameter-free model given by a table of log-weights over a box of
/// positions.
///
/// Finite coordinates are covered by the table exactly. On a half-infinite
/// coordinate the table covers positions `0..size`; beyond it the weight
/// continues geometrically from the last entry with factor `e^{tail_log_decay}`
/// per step, so the mass stays positive and summable. Used as a brute-force
/// reference for divergence identities.
#[derive(Clone, Debug)]
pub struct TabulatedModel {
    domain: ProductDomain,
    sizes: Vec<usize>,
    log_weights: Vec<f64>,
    tail_log_decay: f64,
}

impl TabulatedModel {
    pub fn new(
        domain: ProductDomain,
        sizes: Vec<usize>,
        log_weights: Vec<f64>,
        tail_log_decay: f64,
    ) -> Result<Self, ModelError> {
        if sizes.len() != domain.dim() {
            return Err(ModelError::Config("table shape does not match the domain"));
        }
        for (c, &s) in domain.coords().iter().zip(&sizes) {
            match *c {
                CoordinateDomain::FiniteCyclic(k) if k != s => {
                    return Err(ModelError::Config("table must cover each finite coordinate"))
                }
                CoordinateDomain::BiInfinite => {
                    return Err(ModelError::Config("bi-infinite coordinates are not supported"))
                }
                _ if s == 0 => return Err(ModelError::Config("empty table axis")),
                _ => {}
            }
        }
        if log_weights.len() != sizes.iter().product::<usize>() {
            return Err(ModelError::Config("table length does not match its shape"));
        }
        if !(tail_log_decay < 0.0) {
            return Err(ModelError::Config("tail decay must be negative"));
        }
        Ok(Self { domain, sizes, log_weights, tail_log_decay })
    }

    /// Fully enumerable model on a domain of finite coordinates.
    pub fn finite(domain: ProductDomain, log_weights: Vec<f64>) -> Result<Self, ModelError> {
        let sizes = domain
            .coords()
            .iter()
            .map(|c| c.cardinality().ok_or(ModelError::Config("domain must be finite")))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(domain, sizes, log_weights, -1.0)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
}

impl DiscreteModel for TabulatedModel {
    fn domain(&self) -> &ProductDomain {
        &self.domain
    }

    fn dim_theta(&self) -> usize {
        0
    }

    fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError> {
        super::check_len(theta, 0)
    }

    fn log_tilde_p(&self, _theta: &[f64], x: &[i64]) -> f64 {
        let mut idx = 0usize;
        let mut excess = 0i64;
        for (&s, &v) in self.sizes.iter().zip(x) {
            let last = s as i64 - 1;
            let pos = if v > last {
                excess += v - last;
                last
            } else {
                v
            };
            idx = idx * s + pos as usize;
        }
        self.log_weights[idx] + excess as f64 * self.tail_log_decay
    }
}
