//! B-spline bases over a uniform knot grid.
//!
//! A grid with `G` intervals on `[lo, hi]` and order `K` carries
//! `G + 2K + 1` knots: the `G + 1` grid points plus `K` extra knots on each
//! side at the same spacing. That layout yields exactly `G + K` basis
//! functions, which form a partition of unity on `[lo, hi]`.
//!
//! Inputs outside `[lo, hi]` are clamped to the nearest bound before
//! evaluation. The right end of the domain belongs to the last interval, so
//! the partition of unity also holds at `x == hi` (including order 0).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};

pub const DEFAULT_GRID_SIZE: usize = 5;
pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_RANGE: (f64, f64) = (-2.0, 2.0);

/// Highest supported spline order. Evaluation uses fixed stack buffers of
/// `MAX_ORDER + 1` entries.
pub const MAX_ORDER: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct SplineGrid {
    grid_size: usize,
    order: usize,
    range_lo: f64,
    range_hi: f64,
    knots: Vec<f64>,
}

impl SplineGrid {
    pub fn new(grid_size: usize, order: usize, range_lo: f64, range_hi: f64) -> Result<Self> {
        if grid_size < 1 {
            bail!(Config, "grid size must be at least 1, got {grid_size}");
        }
        if order > MAX_ORDER {
            bail!(Config, "spline order {order} exceeds the supported maximum {MAX_ORDER}");
        }
        if !(range_lo.is_finite() && range_hi.is_finite()) || range_lo >= range_hi {
            bail!(Config, "grid range must satisfy lo < hi, got [{range_lo}, {range_hi}]");
        }
        let h = (range_hi - range_lo) / grid_size as f64;
        let n_knots = grid_size + 2 * order + 1;
        let mut knots: Vec<f64> = (0..n_knots).map(|j| range_lo + (j as f64 - order as f64) * h).collect();
        knots[order] = range_lo;
        knots[order + grid_size] = range_hi;
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            bail!(
                Config,
                "grid [{range_lo}, {range_hi}] with {grid_size} intervals is too fine for f64"
            );
        }
        Ok(Self {
            grid_size,
            order,
            range_lo,
            range_hi,
            knots,
        })
    }

    /// Grid on the default domain `[-2, 2]`.
    pub fn uniform(grid_size: usize, order: usize) -> Result<Self> {
        Self::new(grid_size, order, DEFAULT_RANGE.0, DEFAULT_RANGE.1)
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn range(&self) -> (f64, f64) {
        (self.range_lo, self.range_hi)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Knot spacing `h = (hi - lo) / G`.
    pub fn spacing(&self) -> f64 {
        (self.range_hi - self.range_lo) / self.grid_size as f64
    }

    /// Number of basis functions, `G + K`.
    pub fn num_basis(&self) -> usize {
        self.grid_size + self.order
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.range_lo, self.range_hi)
    }

    /// True when `x` lies strictly outside the grid domain, i.e. clamping
    /// changes it and the basis is locally constant in `x`.
    pub fn is_clamped(&self, x: f64) -> bool {
        x < self.range_lo || x > self.range_hi
    }

    /// Index `s` of the knot interval `[t_s, t_{s+1})` containing the clamped
    /// input, with `K <= s <= G + K - 1`.
    fn span(&self, u: f64) -> usize {
        let k = self.order;
        let last = self.grid_size + k - 1;
        let cell = libm::floor((u - self.range_lo) / self.spacing());
        let mut s = if cell <= 0.0 { k } else { (k + cell as usize).min(last) };
        // floor() can land one cell off near a knot; settle against the stored knots.
        while s > k && self.knots[s] > u {
            s -= 1;
        }
        while s < last && self.knots[s + 1] <= u {
            s += 1;
        }
        s
    }

    /// Evaluates the `degree + 1` basis functions of the given degree that are
    /// nonzero on interval `span` (triangular Cox-de Boor scheme). Entry `r`
    /// belongs to basis index `span - degree + r`.
    fn local_basis(&self, span: usize, degree: usize, u: f64, out: &mut [f64; MAX_ORDER + 1]) {
        let t = &self.knots;
        let mut left = [0.0; MAX_ORDER + 1];
        let mut right = [0.0; MAX_ORDER + 1];
        out[0] = 1.0;
        for j in 1..=degree {
            left[j] = u - t[span + 1 - j];
            right[j] = t[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
    }

    /// The `K + 1` possibly-nonzero basis values at `x`, written to the front
    /// of `out`. Returns the global index of the first one.
    pub fn nonzero_basis(&self, x: f64, out: &mut [f64]) -> usize {
        debug_assert!(x.is_finite(), "spline input must be finite");
        let k = self.order;
        let u = self.clamp(x);
        let span = self.span(u);
        let mut local = [0.0; MAX_ORDER + 1];
        self.local_basis(span, k, u, &mut local);
        out[..=k].copy_from_slice(&local[..=k]);
        span - k
    }

    /// Writes all `G + K` basis values at `x` into `out`.
    pub fn basis_values_into(&self, x: f64, out: &mut [f64]) {
        assert_eq!(out.len(), self.num_basis(), "basis buffer length");
        out.fill(0.0);
        let mut local = [0.0; MAX_ORDER + 1];
        let start = self.nonzero_basis(x, &mut local);
        out[start..=start + self.order].copy_from_slice(&local[..=self.order]);
    }

    /// `[B_1(x), ..., B_{G+K}(x)]`.
    pub fn basis_values(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.num_basis()];
        self.basis_values_into(x, &mut out);
        out
    }

    /// Writes basis values and their derivatives with respect to the
    /// (clamped) input. Derivatives use the degree-lowering recurrence
    /// `B'_{i,K} = K/(t_{i+K} - t_i) B_{i,K-1} - K/(t_{i+K+1} - t_{i+1}) B_{i+1,K-1}`.
    pub fn basis_and_derivatives_into(&self, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        let n = self.num_basis();
        assert_eq!(values.len(), n, "basis buffer length");
        assert_eq!(derivs.len(), n, "derivative buffer length");
        values.fill(0.0);
        derivs.fill(0.0);
        let k = self.order;
        let u = self.clamp(x);
        let span = self.span(u);
        let start = span - k;

        let mut local = [0.0; MAX_ORDER + 1];
        self.local_basis(span, k, u, &mut local);
        values[start..=span].copy_from_slice(&local[..=k]);
        if k == 0 {
            return;
        }

        let mut lower = [0.0; MAX_ORDER + 1];
        self.local_basis(span, k - 1, u, &mut lower);
        let t = &self.knots;
        let kf = k as f64;
        for r in 0..=k {
            let i = start + r;
            let mut d = 0.0;
            if r >= 1 {
                d += kf / (t[i + k] - t[i]) * lower[r - 1];
            }
            if r < k {
                d -= kf / (t[i + k + 1] - t[i + 1]) * lower[r];
            }
            derivs[i] = d;
        }
    }

    /// `[dB_1/dx, ..., dB_{G+K}/dx]` at the clamped input.
    pub fn basis_derivatives(&self, x: f64) -> Vec<f64> {
        let n = self.num_basis();
        let mut values = vec![0.0; n];
        let mut derivs = vec![0.0; n];
        self.basis_and_derivatives_into(x, &mut values, &mut derivs);
        derivs
    }

    /// `Σ c_i B_i(x)`.
    pub fn spline_eval(&self, coefficients: &[f64], x: f64) -> Result<f64> {
        if coefficients.len() != self.num_basis() {
            bail!(
                Contract,
                "expected {} spline coefficients, got {}",
                self.num_basis(),
                coefficients.len()
            );
        }
        let mut local = [0.0; MAX_ORDER + 1];
        let start = self.nonzero_basis(x, &mut local);
        Ok(local[..=self.order]
            .iter()
            .zip(&coefficients[start..])
            .map(|(b, c)| b * c)
            .sum())
    }
}

impl Default for SplineGrid {
    fn default() -> Self {
        Self::uniform(DEFAULT_GRID_SIZE, DEFAULT_ORDER).expect("default grid is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knot_layout() {
        let g = SplineGrid::new(4, 2, 0.0, 1.0).unwrap();
        assert_eq!(g.knots().len(), 4 + 2 * 2 + 1);
        assert_eq!(g.num_basis(), 6);
        assert_eq!(g.knots()[0], -0.5);
        assert_eq!(g.knots()[2], 0.0);
        assert_eq!(g.knots()[6], 1.0);
        assert!(g.knots().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SplineGrid::new(0, 3, -1.0, 1.0).is_err());
        assert!(SplineGrid::new(3, 3, 1.0, 1.0).is_err());
        assert!(SplineGrid::new(3, 3, 1.0, -1.0).is_err());
        assert!(SplineGrid::new(3, 3, f64::NAN, 1.0).is_err());
        assert!(SplineGrid::new(3, MAX_ORDER + 1, -1.0, 1.0).is_err());
    }

    #[test]
    fn order_zero_is_interval_indicator() {
        let g = SplineGrid::new(4, 0, 0.0, 1.0).unwrap();
        assert_eq!(g.basis_values(0.1), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(g.basis_values(0.6), vec![0.0, 0.0, 1.0, 0.0]);
        // right end belongs to the last interval
        assert_eq!(g.basis_values(1.0), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(g.basis_derivatives(0.3).iter().all(|&d| d == 0.0));
    }

    #[test]
    fn clamps_out_of_range() {
        let g = SplineGrid::new(5, 3, -1.0, 1.0).unwrap();
        assert_eq!(g.basis_values(-7.0), g.basis_values(-1.0));
        assert_eq!(g.basis_values(3.0), g.basis_values(1.0));
        let s: f64 = g.basis_values(1.0).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(g.is_clamped(1.5) && !g.is_clamped(1.0));
    }

    #[test]
    fn spline_eval_constant_and_length_check() {
        let g = SplineGrid::new(5, 3, -1.0, 1.0).unwrap();
        let ones = vec![1.0; g.num_basis()];
        assert!((g.spline_eval(&ones, 0.37).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(g.spline_eval(&[0.0; 8], 0.37).unwrap(), 0.0);
        assert!(matches!(g.spline_eval(&[1.0; 3], 0.0), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn local_support() {
        let g = SplineGrid::new(7, 3, -2.0, 2.0).unwrap();
        for i in 0..=100 {
            let x = -2.0 + 4.0 * i as f64 / 100.0;
            let nz = g.basis_values(x).iter().filter(|&&b| b != 0.0).count();
            assert!(nz <= 4);
        }
    }
}
