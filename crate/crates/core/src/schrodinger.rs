//! Finite-difference Schrödinger operator `H = -d²/dx² + V(x)` (ħ = 2m = 1)
//! with Dirichlet walls at both grid ends.
//!
//! Eigenvalues come from Sturm-sequence bisection, the ground state from
//! inverse iteration shifted just below the lowest eigenvalue. Because
//! `H - μ` is then a Stieltjes matrix, its inverse is entrywise positive
//! and the LDLᵀ sweeps only ever add positive terms: the computed ground
//! state is strictly positive and its exponentially small tails keep full
//! relative accuracy.

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::scalar::Real;

/// Absolute tolerance on bisected eigenvalues.
pub const EIGENVALUE_TOL: f64 = 1e-10;
/// Relative residual accepted for an inverse-iteration eigenvector.
pub const VECTOR_RESIDUAL_TOL: f64 = 1e-8;
/// Minimum gap between the two lowest levels for a well-defined zero mode.
pub const MIN_GROUND_GAP: f64 = 1e-8;

/// Symmetric tridiagonal discretization of `-D² + V`.
///
/// `diag` covers every node; the Dirichlet walls at nodes `0` and `n-1`
/// remove those rows, so the eigenproblem lives on the `n-2` interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian<T> {
    grid: Grid<T>,
    diag: Vec<T>,
    offdiag: T,
}

impl<T: Real> Hamiltonian<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    pub fn offdiag(&self) -> T {
        self.offdiag
    }

    /// Dimension of the interior eigenproblem.
    pub fn dim(&self) -> usize {
        self.diag.len() - 2
    }

    fn interior(&self) -> &[T] {
        &self.diag[1..self.diag.len() - 1]
    }

    /// Gershgorin interval enclosing the interior spectrum.
    fn bounds(&self) -> (T, T) {
        let d = self.interior();
        let r = T::lit(2.0) * self.offdiag.abs();
        let lo = d.iter().copied().fold(T::infinity(), T::min) - r;
        let hi = d.iter().copied().fold(T::neg_infinity(), T::max) + r;
        (lo, hi)
    }

    /// Number of interior eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: T) -> usize {
        let e2 = self.offdiag * self.offdiag;
        let pivmin = T::min_positive_value() * e2.max(T::one()) / T::epsilon();
        let mut count = 0;
        let mut q = T::one();
        for (i, &d) in self.interior().iter().enumerate() {
            q = if i == 0 { d - x } else { (d - x) - e2 / q };
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// `k`-th (0-based) interior eigenvalue by bisection.
    fn bisect(&self, k: usize, lo: T, hi: T) -> T {
        let (mut lo, mut hi) = (lo, hi);
        let two = T::lit(2.0);
        let floor = T::lit(1e-3 * EIGENVALUE_TOL);
        for _ in 0..256 {
            let mid = (lo + hi) / two;
            if mid <= lo || mid >= hi || hi - lo <= floor {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) / two
    }

    /// Applies the interior operator to `u` (boundary values of `u` are ignored).
    fn apply_interior(&self, u: &[T], out: &mut [T]) {
        let d = self.interior();
        let m = d.len();
        for i in 0..m {
            let mut acc = d[i] * u[i];
            if i > 0 {
                acc = acc + self.offdiag * u[i - 1];
            }
            if i + 1 < m {
                acc = acc + self.offdiag * u[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Solves `(H - mu) y = b` on the interior by the Thomas algorithm.
    /// Fails if a pivot is not positive (`mu` not below the spectrum).
    fn solve_shifted_spd(&self, mu: T, b: &[T]) -> Result<Vec<T>> {
        let d = self.interior();
        let m = d.len();
        let e = self.offdiag;
        let mut c = vec![T::zero(); m];
        let mut z = vec![T::zero(); m];
        let mut pivot = d[0] - mu;
        for i in 0..m {
            if i > 0 {
                pivot = (d[i] - mu) - e * c[i - 1];
            }
            if !(pivot > T::zero()) {
                return Err(Error::NotConverged(format!("shifted operator lost definiteness at interior row {i}")));
            }
            c[i] = e / pivot;
            z[i] = if i == 0 { b[0] / pivot } else { (b[i] - e * z[i - 1]) / pivot };
        }
        for i in (0..m - 1).rev() {
            z[i] = z[i] - c[i] * z[i + 1];
        }
        Ok(z)
    }
}

/// Lowest eigenvalues of a discretized Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    energies: Vec<T>,
    grid: Grid<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn count(&self) -> usize {
        self.energies.len()
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Per-level `|E_n - E'_n|` over the common levels.
    pub fn abs_deltas(&self, other: &Self) -> Vec<T> {
        self.energies.iter().zip(&other.energies).map(|(a, b)| (*a - *b).abs()).collect()
    }
}

/// Eigenfunction samples with their energy.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T> {
    pub samples: SampledFunction<T>,
    pub energy: T,
    pub normalized: bool,
}

impl<T: Real> WaveFunction<T> {
    pub fn grid(&self) -> &Grid<T> {
        self.samples.grid()
    }

    /// `∫ ψ²` by the trapezoid rule.
    pub fn norm(&self) -> Result<T> {
        self.samples.map(|v| v * v).total_integral()
    }

    /// Wraps closed-form samples, rescaling them to unit trapezoid norm.
    pub fn normalized_from(samples: SampledFunction<T>, energy: T) -> Result<Self> {
        let norm = samples.map(|v| v * v).total_integral()?;
        if !(norm > T::zero()) {
            return Err(Error::Unnormalized { norm: norm.as_f64() });
        }
        Ok(Self { samples: samples.scale(T::one() / norm.sqrt()), energy, normalized: true })
    }

    /// Same wave function with the energy label replaced.
    pub fn with_energy(mut self, energy: T) -> Self {
        self.energy = energy;
        self
    }
}

/// Builds the tridiagonal operator `diag_i = 2/h² + V_i`, `offdiag = -1/h²`.
pub fn discretize<T: Real>(v: &SampledFunction<T>) -> Result<Hamiltonian<T>> {
    if !v.is_fully_valid() {
        return Err(Error::MaskedInput("a fully unmasked potential"));
    }
    let grid = *v.grid();
    let h2 = grid.spacing() * grid.spacing();
    let two_over = T::lit(2.0) / h2;
    let diag = v.values().iter().map(|&vi| two_over + vi).collect();
    Ok(Hamiltonian { grid, diag, offdiag: -T::one() / h2 })
}

/// Lowest `count` eigenvalues, ascending.
pub fn compute_spectrum<T: Real>(h: &Hamiltonian<T>, count: usize) -> Result<Spectrum<T>> {
    if count == 0 || count > h.dim() {
        return Err(Error::LevelCount { requested: count, available: h.dim() });
    }
    let (lo, hi) = h.bounds();
    let energies: Vec<T> = (0..count).map(|k| h.bisect(k, lo, hi)).collect();
    if energies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NotConverged("eigenvalues are not strictly increasing".into()));
    }
    Ok(Spectrum { energies, grid: h.grid })
}

/// Convenience: discretize then compute the spectrum.
pub fn spectrum_of<T: Real>(v: &SampledFunction<T>, count: usize) -> Result<Spectrum<T>> {
    compute_spectrum(&discretize(v)?, count)
}

/// Ground state `u₀` and energy `E₀` of `V`: positive, nodeless, unit norm.
/// The Dirichlet wall nodes hold exact zeros.
pub fn compute_zero_mode<T: Real>(v: &SampledFunction<T>) -> Result<WaveFunction<T>> {
    let h = discretize(v)?;
    let spec = compute_spectrum(&h, 2.min(h.dim()))?;
    let e0 = spec.energies[0];
    let gap = if spec.count() > 1 { spec.energies[1] - e0 } else { T::one() };
    if !(gap > T::lit(MIN_GROUND_GAP)) {
        return Err(Error::Degenerate { gap: gap.as_f64() });
    }
    let shift = (T::lit(1e-4) * gap).max(T::lit(1e-10));
    let mu = e0 - shift;

    let m = h.dim();
    let mut y = vec![T::one(); m];
    let mut converged = false;
    for _ in 0..64 {
        let mut next = h.solve_shifted_spd(mu, &y)?;
        let top = next.iter().copied().fold(T::zero(), T::max);
        if !(top > T::zero()) || !top.is_finite() {
            return Err(Error::NotConverged("inverse iteration collapsed".into()));
        }
        next.iter_mut().for_each(|v| *v = *v / top);
        let change = next.iter().zip(&y).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
        y = next;
        if change < T::lit(1e2) * T::epsilon() {
            converged = true;
            break;
        }
    }
    let residual = relative_residual(&h, &y, e0);
    let accept = T::lit(VECTOR_RESIDUAL_TOL).max(T::lit(1e3) * T::epsilon());
    if !converged || residual > accept {
        return Err(Error::NotConverged(format!("ground-state residual {residual}")));
    }
    if let Some(i) = y.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::Nodal { index: i + 1 });
    }

    let mut values = Vec::with_capacity(m + 2);
    values.push(T::zero());
    values.extend_from_slice(&y);
    values.push(T::zero());
    let samples = SampledFunction::from_values(*v.grid(), values)?;
    WaveFunction::normalized_from(samples, e0)
}

fn relative_residual<T: Real>(h: &Hamiltonian<T>, y: &[T], e: T) -> T {
    let mut hy = vec![T::zero(); y.len()];
    h.apply_interior(y, &mut hy);
    let (lo, hi) = h.bounds();
    let scale = lo.abs().max(hi.abs());
    let ymax = y.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    let r = hy.iter().zip(y).map(|(a, b)| (*a - e * *b).abs()).fold(T::zero(), T::max);
    r / (scale * ymax)
}

/// `V - E₀`: moves the ground level to zero energy.
pub fn shift_to_zero_ground<T: Real>(v: &SampledFunction<T>, e0: T) -> SampledFunction<T> {
    v.map(|x| x - e0)
}

/// Max over interior nodes of `|(-D² + V - E) u|`.
pub fn eigen_residual<T: Real>(v: &SampledFunction<T>, u: &SampledFunction<T>, energy: T) -> Result<T> {
    let d2 = u.second_derivative()?;
    let vu = v.zip_with(u, |a, b| (a - energy) * b)?;
    let hu = d2.zip_with(&vu, |a, b| b - a)?;
    Ok(hu.max_abs())
}

/// Solution of `H u = ε u` shot from the left edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSolution<T> {
    /// Unnormalized samples (rescaled on the fly to avoid overflow).
    pub samples: SampledFunction<T>,
    pub energy: T,
    /// Number of sign changes at interior nodes.
    pub sign_changes: usize,
}

impl<T: Real> ShotSolution<T> {
    pub fn nodeless(&self) -> bool {
        self.sign_changes == 0
    }
}

/// Numerov integration of `u'' = (V - ε) u` from `x_min` to `x_max`.
///
/// The start is the solution decaying towards `x_min`: WKB data
/// `u₀ = 1, u₁ = exp(h √(V₀ - ε))` in a forbidden edge, a Dirichlet start
/// `u₀ = 0, u₁ = h` otherwise. No restriction on `ε`.
pub fn shoot<T: Real>(v: &SampledFunction<T>, energy: T) -> Result<ShotSolution<T>> {
    if !v.is_fully_valid() {
        return Err(Error::MaskedInput("a fully unmasked potential"));
    }
    let grid = *v.grid();
    let n = grid.len();
    let h = grid.spacing();
    let c = h * h / T::lit(12.0);
    let (two, five) = (T::lit(2.0), T::lit(5.0));
    let g: Vec<T> = v.values().iter().map(|&vi| vi - energy).collect();

    let mut u = vec![T::zero(); n];
    if g[0] > T::zero() {
        u[0] = T::one();
        u[1] = (h * g[0].sqrt()).exp();
    } else {
        u[0] = T::zero();
        u[1] = h;
    }
    let limit = T::max_value().sqrt();
    for i in 1..n - 1 {
        let a = T::one() - c * g[i + 1];
        if !(a > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "grid too coarse for Numerov: h²(V - ε)/12 ≥ 1 at node {}",
                i + 1
            )));
        }
        let next = (two * (T::one() + five * c * g[i]) * u[i] - (T::one() - c * g[i - 1]) * u[i - 1]) / a;
        u[i + 1] = next;
        if next.abs() > limit {
            let s = next.abs();
            u[..=i + 1].iter_mut().for_each(|x| *x = *x / s);
        }
        if !u[i + 1].is_finite() {
            return Err(Error::Overflow { index: i + 1 });
        }
    }
    let sign_changes = count_sign_changes(&u[1..n - 1]);
    Ok(ShotSolution { samples: SampledFunction::from_values(grid, u)?, energy, sign_changes })
}

fn count_sign_changes<T: Real>(u: &[T]) -> usize {
    let mut last = T::zero();
    let mut changes = 0;
    for &x in u {
        if x == T::zero() {
            // an exact interior zero counts as a node
            if last != T::zero() {
                changes += 1;
                last = T::zero();
            }
            continue;
        }
        if last != T::zero() && (x > T::zero()) != (last > T::zero()) {
            changes += 1;
        }
        last = x;
    }
    changes
}

/// Solution at a factorization energy `ε` strictly below the ground energy.
///
/// `ground` supplies `E₀`; when `None` it is computed from `V`.
pub fn solve_at_energy<T: Real>(v: &SampledFunction<T>, energy: T, ground: Option<T>) -> Result<ShotSolution<T>> {
    let e0 = match ground {
        Some(e) => e,
        None => spectrum_of(v, 1)?.energies[0],
    };
    if !(energy < e0) {
        return Err(Error::EnergyNotBelowGround { energy: energy.as_f64(), ground: e0.as_f64() });
    }
    shoot(v, energy)
}
