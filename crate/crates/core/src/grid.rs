//! Uniform grids and the finite-difference calculus every other module uses.
//!
//! All stencils are second order. Quadrature is the trapezoid rule, with
//! indefinite integrals anchored at the left end of the grid.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest node count accepted by [`Grid::new`].
pub const MIN_NODES: usize = 8;

/// Uniformly spaced nodes `x_min + i h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    x_min: T,
    x_max: T,
    n: usize,
    h: T,
}

impl<T: Real> Grid<T> {
    pub fn new(x_min: T, x_max: T, n: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!("x_min ({x_min}) must be below x_max ({x_max})")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        let h = (x_max - x_min) / T::from_usize_lossy(n - 1);
        Ok(Self { x_min, x_max, n, h })
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    /// Position of node `i`. The last node is pinned to `x_max`.
    pub fn x(&self, i: usize) -> T {
        debug_assert!(i < self.n);
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + T::from_usize_lossy(i) * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Index of the node closest to the midpoint.
    pub fn mid_index(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Grid with the same bounds and `2n - 1` nodes (spacing halved).
    pub fn refined(&self) -> Self {
        Self::new(self.x_min, self.x_max, 2 * self.n - 1).expect("refining a valid grid")
    }
}

/// Real samples aligned to a [`Grid`], with an optional validity mask.
///
/// A `false` mask entry marks a node whose value is undefined; such
/// values are stored as NaN so accidental use is visible.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    grid: Grid<T>,
    values: Vec<T>,
    mask: Option<Vec<bool>>,
}

impl<T: Real> SampledFunction<T> {
    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: values.len() });
        }
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value: v.as_f64() });
        }
        Ok(Self { grid, values, mask: None })
    }

    /// Builds a masked function. Entries with `mask[i] == false` are replaced by NaN.
    pub fn from_masked(grid: Grid<T>, mut values: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: values.len() });
        }
        if mask.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: mask.len() });
        }
        for (i, (v, &ok)) in values.iter_mut().zip(&mask).enumerate() {
            if !ok {
                *v = T::nan();
            } else if !v.is_finite() {
                return Err(Error::NonFinite { index: i, value: v.as_f64() });
            }
        }
        let mask = if mask.iter().all(|&m| m) { None } else { Some(mask) };
        Ok(Self { grid, values, mask })
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::from_values(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: Grid<T>, c: T) -> Self {
        Self { grid, values: vec![c; grid.len()], mask: None }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[i])
    }

    pub fn is_fully_valid(&self) -> bool {
        self.mask.is_none()
    }

    pub fn valid_count(&self) -> usize {
        self.mask.as_ref().map_or(self.values.len(), |m| m.iter().filter(|&&b| b).count())
    }

    /// Value at node `i`, or `None` when masked.
    pub fn get(&self, i: usize) -> Option<T> {
        self.is_valid(i).then(|| self.values[i])
    }

    /// Copy with the listed nodes additionally masked.
    pub fn masking(&self, nodes: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = self.mask_vec();
        for i in nodes {
            mask[i] = false;
        }
        Self::from_masked(self.grid, self.values.clone(), mask).expect("valid values stay finite")
    }

    /// Copy with both end nodes masked.
    pub fn mask_ends(&self) -> Self {
        self.masking([0, self.grid.len() - 1])
    }

    fn mask_vec(&self) -> Vec<bool> {
        self.mask.clone().unwrap_or_else(|| vec![true; self.values.len()])
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise map over valid nodes. Non-finite results become masked.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let mut mask = self.mask_vec();
        let values = self
            .values
            .iter()
            .zip(mask.iter_mut())
            .map(|(&v, ok)| {
                if !*ok {
                    return T::nan();
                }
                let r = f(v);
                if !r.is_finite() {
                    *ok = false;
                }
                r
            })
            .collect();
        Self::from_masked(self.grid, values, mask).expect("map keeps finite values")
    }

    /// Pointwise map with access to the node position.
    pub fn map_with_x(&self, f: impl Fn(T, T) -> T) -> Self {
        let grid = self.grid;
        let mut mask = self.mask_vec();
        let values = (0..grid.len())
            .map(|i| {
                if !mask[i] {
                    return T::nan();
                }
                let r = f(grid.x(i), self.values[i]);
                if !r.is_finite() {
                    mask[i] = false;
                }
                r
            })
            .collect();
        Self::from_masked(grid, values, mask).expect("map keeps finite values")
    }

    /// Pointwise combination; the result is valid where both inputs are
    /// and the combination is finite.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_grid(other)?;
        let mut mask = vec![true; self.values.len()];
        let values = (0..self.values.len())
            .map(|i| {
                if !(self.is_valid(i) && other.is_valid(i)) {
                    mask[i] = false;
                    return T::nan();
                }
                let r = f(self.values[i], other.values[i]);
                if !r.is_finite() {
                    mask[i] = false;
                }
                r
            })
            .collect();
        Self::from_masked(self.grid, values, mask)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    /// Maximum of `|self - other|` over nodes valid in both.
    /// Returns zero when no node is jointly valid.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_grid(other)?;
        Ok((0..self.values.len())
            .filter(|&i| self.is_valid(i) && other.is_valid(i))
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(T::zero(), T::max))
    }

    /// Like [`Self::max_abs_diff`] but ignoring `margin` nodes at each end.
    pub fn max_abs_diff_interior(&self, other: &Self, margin: usize) -> Result<T> {
        self.check_same_grid(other)?;
        let n = self.values.len();
        Ok((margin..n.saturating_sub(margin))
            .filter(|&i| self.is_valid(i) && other.is_valid(i))
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(T::zero(), T::max))
    }

    /// Maximum of `|f|` over valid nodes.
    pub fn max_abs(&self) -> T {
        self.valid_values().map(T::abs).fold(T::zero(), T::max)
    }

    pub fn valid_values(&self) -> impl Iterator<Item = T> + '_ {
        self.values.iter().enumerate().filter(|(i, _)| self.is_valid(*i)).map(|(_, &v)| v)
    }

    /// Fills masked nodes at either end by linear extrapolation from the
    /// nearest two valid nodes. Interior masked nodes are left alone.
    pub fn extrapolate_ends(&self) -> Self {
        let n = self.values.len();
        let Some(first) = (0..n).find(|&i| self.is_valid(i)) else {
            return self.clone();
        };
        let last = (0..n).rev().find(|&i| self.is_valid(i)).expect("first exists");
        let mut values = self.values.clone();
        let mut mask = self.mask_vec();
        if first + 1 < n && self.is_valid(first + 1) {
            let slope = values[first + 1] - values[first];
            for i in (0..first).rev() {
                values[i] = values[i + 1] - slope;
                mask[i] = true;
            }
        }
        if last >= 1 && self.is_valid(last - 1) {
            let slope = values[last] - values[last - 1];
            for i in last + 1..n {
                values[i] = values[i - 1] + slope;
                mask[i] = true;
            }
        }
        Self::from_masked(self.grid, values, mask).expect("extrapolation stays finite")
    }

    /// First derivative.
    ///
    /// Central differences where both neighbours are valid, second-order
    /// one-sided differences otherwise. A node is masked when it is
    /// masked on input or no second-order stencil around it is available.
    pub fn derivative(&self) -> Result<Self> {
        if !self.has_run(3) {
            return Err(Error::MaskedInput("at least three consecutive valid nodes"));
        }
        let n = self.values.len();
        let f = &self.values;
        let h2 = T::lit(2.0) * self.grid.h;
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        let ok = |i: usize| self.is_valid(i);
        let mut mask = vec![true; n];
        let values = (0..n)
            .map(|i| {
                if !ok(i) {
                    mask[i] = false;
                    return T::nan();
                }
                if i > 0 && i + 1 < n && ok(i - 1) && ok(i + 1) {
                    (f[i + 1] - f[i - 1]) / h2
                } else if i + 2 < n && ok(i + 1) && ok(i + 2) {
                    (-three * f[i] + four * f[i + 1] - f[i + 2]) / h2
                } else if i >= 2 && ok(i - 1) && ok(i - 2) {
                    (three * f[i] - four * f[i - 1] + f[i - 2]) / h2
                } else {
                    mask[i] = false;
                    T::nan()
                }
            })
            .collect();
        Self::from_masked(self.grid, values, mask)
    }

    /// Second derivative by the three-point stencil. End nodes, and any
    /// node whose stencil touches a masked node, are masked.
    pub fn second_derivative(&self) -> Result<Self> {
        if !self.has_run(3) {
            return Err(Error::MaskedInput("at least three consecutive valid nodes"));
        }
        let n = self.values.len();
        let f = &self.values;
        let hh = self.grid.h * self.grid.h;
        let two = T::lit(2.0);
        let mut mask = vec![false; n];
        let mut values = vec![T::nan(); n];
        for i in 1..n - 1 {
            if self.is_valid(i - 1) && self.is_valid(i) && self.is_valid(i + 1) {
                values[i] = (f[i + 1] - two * f[i] + f[i - 1]) / hh;
                mask[i] = true;
            }
        }
        Self::from_masked(self.grid, values, mask)
    }

    /// Trapezoid cumulative integral `∫_{x_min}^x f`. Requires a fully valid input.
    pub fn cumulative_integral(&self) -> Result<Self> {
        if !self.is_fully_valid() {
            return Err(Error::MaskedInput("a fully unmasked integrand"));
        }
        let half_h = self.grid.h / T::lit(2.0);
        let mut acc = T::zero();
        let mut out = Vec::with_capacity(self.values.len());
        out.push(acc);
        for w in self.values.windows(2) {
            acc = acc + half_h * (w[0] + w[1]);
            out.push(acc);
        }
        Self::from_values(self.grid, out)
    }

    /// Cumulative trapezoid with the Euler-Maclaurin end correction
    /// `-h²/12 (f'(x) - f'(x_min))`, accurate to `O(h⁴)` at every node.
    pub fn cumulative_integral_corrected(&self) -> Result<Self> {
        let trap = self.cumulative_integral()?;
        let df = self.derivative()?;
        let c = self.grid.h * self.grid.h / T::lit(12.0);
        let d0 = df.values[0];
        let values = trap.values.iter().zip(&df.values).map(|(&t, &d)| t - c * (d - d0)).collect();
        Self::from_values(self.grid, values)
    }

    /// Trapezoid integral over the whole grid.
    pub fn total_integral(&self) -> Result<T> {
        Ok(*self.cumulative_integral()?.values.last().expect("grid is non-empty"))
    }

    /// Logarithmic derivative `σ = f'/f`, evaluated as the derivative of `ln f`.
    ///
    /// Every valid node must hold a strictly positive value.
    pub fn log_derivative(&self) -> Result<Self> {
        self.ln()?.derivative()
    }

    /// Natural logarithm; every valid node must be strictly positive.
    pub fn ln(&self) -> Result<Self> {
        self.check_positive()?;
        Ok(self.map(T::ln))
    }

    pub fn check_positive(&self) -> Result<()> {
        match self.values.iter().enumerate().find(|&(i, &v)| self.is_valid(i) && v <= T::zero()) {
            Some((index, v)) => Err(Error::NonPositive { index, value: v.as_f64() }),
            None => Ok(()),
        }
    }

    fn has_run(&self, len: usize) -> bool {
        let mut run = 0;
        for i in 0..self.values.len() {
            if self.is_valid(i) {
                run += 1;
                if run >= len {
                    return true;
                }
            } else {
                run = 0;
            }
        }
        false
    }

    /// Same samples in reversed node order (the grid is mirrored onto itself).
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        let mut mask = self.mask_vec();
        mask.reverse();
        Self::from_masked(self.grid, values, mask).expect("reversal keeps finite values")
    }
}
