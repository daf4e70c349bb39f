use crate::domain::ProductDomain;
use crate::math::logistic;

/// Symmetric kernel on a discrete product domain.
pub trait DiscreteKernel: Send + Sync {
    fn eval(&self, x: &[i64], y: &[i64]) -> f64;

    /// For every axis `i`, writes `[k(x⁺,y⁺), k(x⁺,y), k(x,y⁺), k(x,y)]` where
    /// `⁺` increments axis `i`. The default evaluates the kernel four times per
    /// axis; implementations override it with incremental updates.
    fn shifted(&self, domain: &ProductDomain, x: &[i64], y: &[i64], out: &mut [[f64; 4]]) {
        let d = x.len();
        let mut xp = alloc::vec![0i64; d];
        let mut yp = alloc::vec![0i64; d];
        let kxy = self.eval(x, y);
        for (i, o) in out.iter_mut().enumerate().take(d) {
            domain.succ_into(x, i, &mut xp);
            domain.succ_into(y, i, &mut yp);
            *o = [self.eval(&xp, &yp), self.eval(&xp, y), self.eval(x, &yp), kxy];
        }
    }

    /// For kernels of the form `m(x) m(y) k₀(x, y)`, writes `m(x)` followed by
    /// `m(x^{i+})` for every axis into `out` (length `d + 1`) and returns true.
    /// Callers evaluating many pairs then combine these with
    /// [`DiscreteKernel::shifted_base`] instead of recomputing the weights.
    fn point_factors(&self, _domain: &ProductDomain, _x: &[i64], _out: &mut [f64]) -> bool {
        false
    }

    /// [`DiscreteKernel::shifted`] for `k₀` when [`DiscreteKernel::point_factors`]
    /// applies, otherwise for the kernel itself.
    fn shifted_base(&self, domain: &ProductDomain, x: &[i64], y: &[i64], out: &mut [[f64; 4]]) {
        self.shifted(domain, x, y, out)
    }
}

/// Which coordinate comparisons the exponential indicator kernel counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndicatorCount {
    /// `Σ 1(x_i ≠ y_i)`: the Hamming distance. Positive definite, `k(x,x) = 1`.
    Disagreements,
    /// `Σ 1(x_i = y_i)`. Not positive semidefinite, so the resulting Stein
    /// discrepancy can be negative; kept only for comparison.
    Agreements,
}

/// Multiplicative weight `m(x) = σ(offset − |Σ_i g(x_i)|)` where `g(v) = 2v − 1`
/// (binary positions read as ±1 spins) or `g(v) = v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmoidWeight {
    pub offset: f64,
    pub spin_coding: bool,
}

impl SigmoidWeight {
    pub fn new(offset: f64, spin_coding: bool) -> Self {
        Self { offset, spin_coding }
    }

    #[inline]
    fn coded(&self, v: i64) -> f64 {
        if self.spin_coding {
            (2 * v - 1) as f64
        } else {
            v as f64
        }
    }

    fn total(&self, x: &[i64]) -> f64 {
        x.iter().map(|&v| self.coded(v)).sum()
    }

    #[inline]
    fn weight_at(&self, s: f64) -> f64 {
        logistic(self.offset - s.abs())
    }

    pub fn eval(&self, x: &[i64]) -> f64 {
        self.weight_at(self.total(x))
    }
}

/// `k(x,y) = m(x) m(y) exp(−(1/d) Σ_i c(x_i, y_i))` with `c` an indicator of
/// disagreement (default) or agreement and `m` an optional sigmoid weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpIndicatorKernel {
    pub count: IndicatorCount,
    pub weight: Option<SigmoidWeight>,
}

impl Default for ExpIndicatorKernel {
    fn default() -> Self {
        Self::hamming()
    }
}

impl ExpIndicatorKernel {
    pub fn hamming() -> Self {
        Self { count: IndicatorCount::Disagreements, weight: None }
    }

    pub fn agreement() -> Self {
        Self { count: IndicatorCount::Agreements, weight: None }
    }

    pub fn weighted(weight: SigmoidWeight) -> Self {
        Self { count: IndicatorCount::Disagreements, weight: Some(weight) }
    }

    #[inline]
    fn hit(&self, a: i64, b: i64) -> i32 {
        match self.count {
            IndicatorCount::Disagreements => (a != b) as i32,
            IndicatorCount::Agreements => (a == b) as i32,
        }
    }
}

impl DiscreteKernel for ExpIndicatorKernel {
    fn eval(&self, x: &[i64], y: &[i64]) -> f64 {
        let d = x.len() as f64;
        let c: i32 = x.iter().zip(y).map(|(&a, &b)| self.hit(a, b)).sum();
        let base = libm::exp(-(c as f64) / d);
        match &self.weight {
            Some(w) => w.eval(x) * base * w.eval(y),
            None => base,
        }
    }

    fn shifted(&self, domain: &ProductDomain, x: &[i64], y: &[i64], out: &mut [[f64; 4]]) {
        self.shifted_base(domain, x, y, out);
        if let Some(w) = &self.weight {
            let (sx, sy) = (w.total(x), w.total(y));
            let (mx, my) = (w.weight_at(sx), w.weight_at(sy));
            for (i, k) in out.iter_mut().enumerate().take(x.len()) {
                let coord = domain.coord(i);
                let mxp = w.weight_at(sx - w.coded(x[i]) + w.coded(coord.succ(x[i])));
                let myp = w.weight_at(sy - w.coded(y[i]) + w.coded(coord.succ(y[i])));
                k[0] *= mxp * myp;
                k[1] *= mxp * my;
                k[2] *= mx * myp;
                k[3] *= mx * my;
            }
        }
    }

    fn point_factors(&self, domain: &ProductDomain, x: &[i64], out: &mut [f64]) -> bool {
        let Some(w) = &self.weight else {
            return false;
        };
        let sx = w.total(x);
        out[0] = w.weight_at(sx);
        for (i, &a) in x.iter().enumerate() {
            out[i + 1] = w.weight_at(sx - w.coded(a) + w.coded(domain.coord(i).succ(a)));
        }
        true
    }

    fn shifted_base(&self, domain: &ProductDomain, x: &[i64], y: &[i64], out: &mut [[f64; 4]]) {
        let d = x.len();
        let inv_d = 1.0 / d as f64;
        let c: i32 = x.iter().zip(y).map(|(&a, &b)| self.hit(a, b)).sum();
        // every shifted count lies in {c − 1, c, c + 1}
        let table = [
            libm::exp(-((c - 1) as f64) * inv_d),
            libm::exp(-(c as f64) * inv_d),
            libm::exp(-((c + 1) as f64) * inv_d),
        ];
        let e = |count: i32| table[(count - c + 1) as usize];
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let coord = domain.coord(i);
            let (a, b) = (x[i], y[i]);
            let (ap, bp) = (coord.succ(a), coord.succ(b));
            let base = c - self.hit(a, b);
            *o = [e(base + self.hit(ap, bp)), e(base + self.hit(ap, b)), e(base + self.hit(a, bp)), table[1]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CoordinateDomain;
    use alloc::vec;

    fn check_shifted(k: &ExpIndicatorKernel, dom: &ProductDomain, x: &[i64], y: &[i64]) {
        let d = x.len();
        let mut fast = vec![[0.0; 4]; d];
        k.shifted(dom, x, y, &mut fast);
        let mut xp = vec![0; d];
        let mut yp = vec![0; d];
        for i in 0..d {
            dom.succ_into(x, i, &mut xp);
            dom.succ_into(y, i, &mut yp);
            let slow = [k.eval(&xp, &yp), k.eval(&xp, y), k.eval(x, &yp), k.eval(x, y)];
            for c in 0..4 {
                assert!((fast[i][c] - slow[c]).abs() < 1e-14, "axis {i} slot {c}");
            }
        }
    }

    #[test]
    fn incremental_shifts_match_direct_evaluation() {
        let bin = ProductDomain::uniform(CoordinateDomain::FiniteCyclic(2), 5).unwrap();
        let x = [0, 1, 1, 0, 1];
        let y = [1, 1, 0, 0, 0];
        check_shifted(&ExpIndicatorKernel::hamming(), &bin, &x, &y);
        check_shifted(&ExpIndicatorKernel::agreement(), &bin, &x, &y);
        check_shifted(&ExpIndicatorKernel::weighted(SigmoidWeight::new(2.0, true)), &bin, &x, &y);
        let counts = ProductDomain::uniform(CoordinateDomain::HalfInfiniteMin, 3).unwrap();
        check_shifted(&ExpIndicatorKernel::weighted(SigmoidWeight::new(4.0, false)), &counts, &[0, 3, 2], &[1, 3, 0]);
    }

    #[test]
    fn diagonal_and_symmetry() {
        let k = ExpIndicatorKernel::hamming();
        assert_eq!(k.eval(&[1, 0, 2], &[1, 0, 2]), 1.0);
        assert_eq!(k.eval(&[1, 0, 2], &[0, 0, 1]), k.eval(&[0, 0, 1], &[1, 0, 2]));
        assert!((ExpIndicatorKernel::agreement().eval(&[1, 0], &[1, 0]) - libm::exp(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn agreement_kernel_is_indefinite() {
        // Gram matrix on {0, 1}: [[e⁻¹, 1], [1, e⁻¹]] has determinant e⁻² − 1 < 0
        let k = ExpIndicatorKernel::agreement();
        let det = k.eval(&[0], &[0]) * k.eval(&[1], &[1]) - k.eval(&[0], &[1]) * k.eval(&[1], &[0]);
        assert!(det < 0.0);
        let h = ExpIndicatorKernel::hamming();
        assert!(h.eval(&[0], &[0]) * h.eval(&[1], &[1]) - h.eval(&[0], &[1]) * h.eval(&[1], &[0]) > 0.0);
    }

    #[test]
    fn weight_is_flat_far_from_the_offset() {
        let w = SigmoidWeight::new(90.0, true);
        assert!(1.0 - w.eval(&[1; 36]) < 1e-20);
        assert!(w.eval(&[1; 100]) < 0.5);
    }
}
