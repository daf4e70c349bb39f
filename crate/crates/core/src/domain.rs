//! Countable ordered product domains and the discrete difference operators.
//!
//! A point is stored as a vector of *positions*: the rank of each coordinate
//! within its ordered set. Raw data values are mapped to positions by a
//! [`CoordinateEncoding`] at ingestion time, so every operator here (and every
//! loss built on top of them) only ever sees positions. Order-preserving
//! relabelling of the raw values therefore cannot change any result.
//!
//! Each coordinate set falls into one of three shapes:
//!
//! * [`CoordinateDomain::FiniteCyclic`]: both a minimum and a maximum exist.
//!   Incrementing the maximum wraps to the minimum and vice versa.
//! * [`CoordinateDomain::HalfInfiniteMin`]: only a minimum exists. Decrementing
//!   the minimum yields the sentinel state ★, and ★ increments back to the
//!   minimum. A set with only a maximum is stored in this form after
//!   reversing its order.
//! * [`CoordinateDomain::BiInfinite`]: neither exists.
//!
//! Any function evaluated at a point with a ★ coordinate is zero.

use alloc::vec::Vec;
use core::fmt;

use crate::error::DomainError;

/// A point of a product domain: one position index per coordinate.
pub type Point = Vec<i64>;

/// Ordering shape of a single coordinate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoordinateDomain {
    /// Positions `0..size`, cyclic successor and predecessor.
    FiniteCyclic(usize),
    /// Positions `0, 1, 2, ...`; the predecessor of `0` is ★.
    HalfInfiniteMin,
    /// All integer positions.
    BiInfinite,
}

impl CoordinateDomain {
    /// A finite ordered set with `size` elements.
    pub fn finite_cyclic(size: usize) -> Result<Self, DomainError> {
        if size < 2 {
            return Err(DomainError::TooFewElements(size));
        }
        Ok(Self::FiniteCyclic(size))
    }

    /// Whether `pos` is a valid position.
    pub fn contains(&self, pos: i64) -> bool {
        match *self {
            Self::FiniteCyclic(k) => pos >= 0 && (pos as u64) < k as u64,
            Self::HalfInfiniteMin => pos >= 0,
            Self::BiInfinite => true,
        }
    }

    /// Successor of a valid position.
    #[inline]
    pub fn succ(&self, pos: i64) -> i64 {
        match *self {
            Self::FiniteCyclic(k) if pos + 1 == k as i64 => 0,
            _ => pos + 1,
        }
    }

    /// Successor of an extended coordinate; ★ maps to the minimum.
    #[inline]
    pub fn succ_extended(&self, c: ExtendedCoordinate) -> i64 {
        match c {
            ExtendedCoordinate::Star => 0,
            ExtendedCoordinate::Pos(p) => self.succ(p),
        }
    }

    /// Predecessor of a valid position.
    #[inline]
    pub fn pred(&self, pos: i64) -> ExtendedCoordinate {
        match *self {
            Self::FiniteCyclic(k) if pos == 0 => ExtendedCoordinate::Pos(k as i64 - 1),
            Self::HalfInfiniteMin if pos == 0 => ExtendedCoordinate::Star,
            _ => ExtendedCoordinate::Pos(pos - 1),
        }
    }

    /// Number of elements, when finite.
    pub fn cardinality(&self) -> Option<usize> {
        match *self {
            Self::FiniteCyclic(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for CoordinateDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FiniteCyclic(k) => write!(f, "cyclic({k})"),
            Self::HalfInfiniteMin => f.write_str("half-infinite"),
            Self::BiInfinite => f.write_str("bi-infinite"),
        }
    }
}

/// A coordinate of the extended domain: a position or the sentinel ★.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtendedCoordinate {
    Pos(i64),
    Star,
}

impl ExtendedCoordinate {
    pub fn position(self) -> Option<i64> {
        match self {
            Self::Pos(p) => Some(p),
            Self::Star => None,
        }
    }

    pub fn is_star(self) -> bool {
        matches!(self, Self::Star)
    }
}

/// A point of the extended domain. It is "extended" iff some coordinate is ★.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtendedPoint(pub Vec<ExtendedCoordinate>);

impl ExtendedPoint {
    pub fn from_point(x: &[i64]) -> Self {
        Self(x.iter().map(|&p| ExtendedCoordinate::Pos(p)).collect())
    }

    /// The underlying point, or `None` if any coordinate is ★.
    pub fn to_point(&self) -> Option<Point> {
        self.0.iter().map(|c| c.position()).collect()
    }

    pub fn has_star(&self) -> bool {
        self.0.iter().any(|c| c.is_star())
    }
}

/// A product `S_1 × ... × S_d` of ordered coordinate sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductDomain {
    coords: Vec<CoordinateDomain>,
}

impl ProductDomain {
    pub fn new(coords: Vec<CoordinateDomain>) -> Result<Self, DomainError> {
        if coords.is_empty() {
            return Err(DomainError::Empty);
        }
        for c in &coords {
            if let CoordinateDomain::FiniteCyclic(k) = *c {
                if k < 2 {
                    return Err(DomainError::TooFewElements(k));
                }
            }
        }
        Ok(Self { coords })
    }

    /// `d` copies of the same coordinate set.
    pub fn uniform(coord: CoordinateDomain, d: usize) -> Result<Self, DomainError> {
        Self::new(alloc::vec![coord; d])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[CoordinateDomain] {
        &self.coords
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> CoordinateDomain {
        self.coords[axis]
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim() && self.coords.iter().zip(x).all(|(c, &p)| c.contains(p))
    }

    pub fn check_point(&self, x: &[i64]) -> Result<(), DomainError> {
        if x.len() != self.dim() {
            return Err(DomainError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        for (axis, (c, &p)) in self.coords.iter().zip(x).enumerate() {
            if !c.contains(p) {
                return Err(DomainError::InvalidPosition { axis, position: p });
            }
        }
        Ok(())
    }

    fn check_axis(&self, axis: usize) -> Result<(), DomainError> {
        if axis >= self.dim() {
            Err(DomainError::AxisOutOfRange { axis, dim: self.dim() })
        } else {
            Ok(())
        }
    }

    /// `x^{axis+}`. Never produces ★.
    pub fn succ(&self, x: &[i64], axis: usize) -> Result<Point, DomainError> {
        self.check_axis(axis)?;
        let mut y = x.to_vec();
        y[axis] = self.coords[axis].succ(x[axis]);
        Ok(y)
    }

    /// `x^{axis-}`, with ★ on `axis` when decrementing a half-infinite minimum.
    pub fn pred(&self, x: &[i64], axis: usize) -> Result<ExtendedPoint, DomainError> {
        self.check_axis(axis)?;
        let mut y = ExtendedPoint::from_point(x);
        y.0[axis] = self.coords[axis].pred(x[axis]);
        Ok(y)
    }

    /// Successor on the extended domain (`★^+` is the minimum). Every
    /// coordinate other than `axis` must be a position.
    pub fn succ_extended(&self, x: &ExtendedPoint, axis: usize) -> Result<Point, DomainError> {
        self.check_axis(axis)?;
        x.0.iter()
            .enumerate()
            .map(|(i, &c)| {
                if i == axis {
                    Ok(self.coords[axis].succ_extended(c))
                } else {
                    c.position().ok_or(DomainError::StarOffAxis { axis: i })
                }
            })
            .collect()
    }

    /// Predecessor written into `out`; returns `false` if the result is ★.
    #[inline]
    pub fn pred_into(&self, x: &[i64], axis: usize, out: &mut [i64]) -> bool {
        out.copy_from_slice(x);
        match self.coords[axis].pred(x[axis]) {
            ExtendedCoordinate::Pos(p) => {
                out[axis] = p;
                true
            }
            ExtendedCoordinate::Star => false,
        }
    }

    /// Successor written into `out`.
    #[inline]
    pub fn succ_into(&self, x: &[i64], axis: usize, out: &mut [i64]) {
        out.copy_from_slice(x);
        out[axis] = self.coords[axis].succ(x[axis]);
    }

    /// Enumerates every point of a domain whose coordinates are all finite.
    pub fn enumerate(&self) -> Option<Vec<Point>> {
        let sizes: Vec<usize> = self.coords.iter().map(|c| c.cardinality()).collect::<Option<_>>()?;
        Some(enumerate_box(&sizes))
    }
}

/// All points of `{0..sizes[0]} × ... × {0..sizes[d-1]}` in lexicographic order
/// (last coordinate fastest).
pub fn enumerate_box(sizes: &[usize]) -> Vec<Point> {
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur: Point = alloc::vec![0; sizes.len()];
    if sizes.contains(&0) {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if (cur[i] as usize) < sizes[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

fn eval_extended<H: Fn(&[i64]) -> f64>(h: &H, x: &ExtendedPoint) -> f64 {
    match x.to_point() {
        Some(p) => h(&p),
        None => 0.0,
    }
}

/// `∇⁺h(x)`: component `i` is `h(x^{i+}) − h(x)`.
pub fn forward_difference<H>(domain: &ProductDomain, h: H, x: &[i64]) -> Result<Vec<f64>, DomainError>
where
    H: Fn(&[i64]) -> f64,
{
    domain.check_point(x)?;
    let hx = h(x);
    (0..domain.dim()).map(|i| Ok(h(&domain.succ(x, i)?) - hx)).collect()
}

/// `∇⁻h(x)`: component `i` is `h(x) − h(x^{i−})`, with `h(★) = 0`.
pub fn backward_difference<H>(domain: &ProductDomain, h: H, x: &[i64]) -> Result<Vec<f64>, DomainError>
where
    H: Fn(&[i64]) -> f64,
{
    domain.check_point(x)?;
    let hx = h(x);
    (0..domain.dim()).map(|i| Ok(hx - eval_extended(&h, &domain.pred(x, i)?))).collect()
}

/// `∇⁺·h(x) = Σ_i h_i(x^{i+}) − h_i(x)` for a vector field `h`.
pub fn forward_divergence<H>(domain: &ProductDomain, h: H, x: &[i64]) -> Result<f64, DomainError>
where
    H: Fn(&[i64]) -> Vec<f64>,
{
    domain.check_point(x)?;
    let hx = h(x);
    let mut acc = 0.0;
    for i in 0..domain.dim() {
        acc += h(&domain.succ(x, i)?)[i] - hx[i];
    }
    Ok(acc)
}

/// `∇⁻·h(x) = Σ_i h_i(x) − h_i(x^{i−})`, with `h(★) = 0`.
pub fn backward_divergence<H>(domain: &ProductDomain, h: H, x: &[i64]) -> Result<f64, DomainError>
where
    H: Fn(&[i64]) -> Vec<f64>,
{
    domain.check_point(x)?;
    let hx = h(x);
    let mut acc = 0.0;
    for i in 0..domain.dim() {
        let prev = match domain.pred(x, i)?.to_point() {
            Some(p) => h(&p)[i],
            None => 0.0,
        };
        acc += hx[i] - prev;
    }
    Ok(acc)
}

/// Maps raw integer values of one coordinate to positions and back.
///
/// Built from the observed bounds of a coordinate set: both bounds give a
/// finite cyclic coordinate, a lone maximum is reversed into a half-infinite
/// coordinate, and so on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordinateEncoding {
    /// `position = raw − min`.
    Offset { min: i64 },
    /// `position = max − raw`.
    Reversed { max: i64 },
}

impl CoordinateEncoding {
    /// Domain and encoding for a coordinate set with the given bounds.
    pub fn from_bounds(
        min: Option<i64>,
        max: Option<i64>,
    ) -> Result<(CoordinateDomain, CoordinateEncoding), DomainError> {
        match (min, max) {
            (Some(lo), Some(hi)) => {
                if hi <= lo {
                    return Err(DomainError::TooFewElements((hi - lo + 1).max(0) as usize));
                }
                let size = (hi - lo + 1) as usize;
                Ok((CoordinateDomain::finite_cyclic(size)?, Self::Offset { min: lo }))
            }
            (Some(lo), None) => Ok((CoordinateDomain::HalfInfiniteMin, Self::Offset { min: lo })),
            (None, Some(hi)) => Ok((CoordinateDomain::HalfInfiniteMin, Self::Reversed { max: hi })),
            (None, None) => Ok((CoordinateDomain::BiInfinite, Self::Offset { min: 0 })),
        }
    }

    #[inline]
    pub fn encode(&self, raw: i64) -> i64 {
        match *self {
            Self::Offset { min } => raw - min,
            Self::Reversed { max } => max - raw,
        }
    }

    #[inline]
    pub fn decode(&self, pos: i64) -> i64 {
        match *self {
            Self::Offset { min } => pos + min,
            Self::Reversed { max } => max - pos,
        }
    }
}
