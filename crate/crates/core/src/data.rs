//! Datasets of points stored as a flat row-major array of positions.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::domain::{Point, ProductDomain};
use crate::error::DataError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    dim: usize,
    values: Vec<i64>,
}

impl Dataset {
    /// Builds a dataset from rows, checking each against `domain`.
    pub fn new(domain: &ProductDomain, rows: Vec<Point>) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        let dim = domain.dim();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (row, x) in rows.iter().enumerate() {
            if x.len() != dim {
                return Err(DataError::RowLength { row, expected: dim, got: x.len() });
            }
            domain.check_point(x).map_err(|source| DataError::InvalidPoint { row, source })?;
            values.extend_from_slice(x);
        }
        Ok(Self { dim, values })
    }

    /// Builds a dataset from a flat row-major buffer without domain checks.
    pub fn from_flat(dim: usize, values: Vec<i64>) -> Result<Self, DataError> {
        if dim == 0 || values.is_empty() {
            return Err(DataError::Empty);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(DataError::RowLength { row: values.len() / dim, expected: dim, got: values.len() % dim });
        }
        Ok(Self { dim, values })
    }

    pub fn validate(&self, domain: &ProductDomain) -> Result<(), DataError> {
        if domain.dim() != self.dim {
            return Err(DataError::RowLength { row: 0, expected: domain.dim(), got: self.dim });
        }
        for (row, x) in self.iter().enumerate() {
            domain.check_point(x).map_err(|source| DataError::InvalidPoint { row, source })?;
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[i64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, i64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[i64] {
        &self.values
    }

    /// Rows selected by index (with repetition), e.g. a bootstrap resample.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, values }
    }

    /// Replaces row `i` with `x`.
    pub fn set_point(&mut self, i: usize, x: &[i64]) {
        self.values[i * self.dim..(i + 1) * self.dim].copy_from_slice(x);
    }

    /// Unique points with their multiplicities, in lexicographic order.
    pub fn aggregate(&self) -> Vec<(Point, usize)> {
        let mut counts: BTreeMap<&[i64], usize> = BTreeMap::new();
        for x in self.iter() {
            *counts.entry(x).or_insert(0) += 1;
        }
        counts.into_iter().map(|(x, c)| (x.to_vec(), c)).collect()
    }

    /// Per-coordinate sample means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut m = alloc::vec![0.0; self.dim];
        for x in self.iter() {
            for (acc, &v) in m.iter_mut().zip(x) {
                *acc += v as f64;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}
