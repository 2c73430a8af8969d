//! Witten superpotential, partner potentials and the strictly isospectral
//! one-parameter family built from the general Riccati solution.
//!
//! Conventions: the parent potential `V₋` is shifted so that its ground
//! level sits at zero energy, `u₀` is normalized with the trapezoid rule,
//! and `I₀(x) = ∫_{x_min}^x u₀²` runs from 0 to 1 across the grid. The
//! parameter `λ` is then valid outside the closed band `[-1, 0]`.
//!
//! The general solution is evaluated in Bernoulli form,
//! `w_g = w_p + u₀²/(I₀ + λ)`, which keeps the Möbius structure of the
//! family exact node by node. The single-logarithm form
//! `-D ln(u₀/(I₀ + λ))` is available as a cross-check.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::scalar::Real;
use crate::schrodinger::{compute_zero_mode, eigen_residual, shift_to_zero_ground, WaveFunction};

/// Tolerance on `∫u₀² = 1` for inputs that claim to be normalized.
pub const NORM_TOL: f64 = 1e-6;

/// `λ` whose denominator `I₀ + λ` comes closer to zero than this fraction
/// of `I_total` anywhere on the grid is reported as numerically singular.
pub const NEAR_SINGULAR_MARGIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperpotentialKind {
    /// No free parameter (Witten's `w_p`, or a hierarchy member with all parameters fixed).
    Particular,
    /// The last entry of `lambda_chain` is the free parameter.
    General,
}

/// Sampled Riccati solution `w(x)` with its provenance.
#[derive(Debug, Clone)]
pub struct Superpotential<T> {
    pub samples: SampledFunction<T>,
    pub kind: SuperpotentialKind,
    pub lambda_chain: Vec<T>,
    pub source: Option<Arc<WaveFunction<T>>>,
}

impl<T: Real> Superpotential<T> {
    pub fn particular(samples: SampledFunction<T>, lambda_chain: Vec<T>) -> Self {
        Self { samples, kind: SuperpotentialKind::Particular, lambda_chain, source: None }
    }

    pub fn general(samples: SampledFunction<T>, lambda_chain: Vec<T>) -> Self {
        Self { samples, kind: SuperpotentialKind::General, lambda_chain, source: None }
    }

    fn with_source(mut self, source: &WaveFunction<T>) -> Self {
        self.source = Some(Arc::new(source.clone()));
        self
    }

    /// The free parameter, for general solutions.
    pub fn free_lambda(&self) -> Option<T> {
        match self.kind {
            SuperpotentialKind::General => self.lambda_chain.last().copied(),
            SuperpotentialKind::Particular => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MemberDiagnostics<T> {
    /// Max `|V₊(w_g) - V₊(w_p)|` over valid nodes.
    pub partner_deviation: T,
    /// Max interior `|(-D² + V₋(x;λ) - E) u₀(x;λ)|`.
    pub gs_residual: T,
    /// `|∫u₀(x;λ)² - 1|`.
    pub norm_error: T,
}

/// One member `V₋(x;λ)` of the isospectral family.
#[derive(Debug, Clone)]
pub struct FamilyMember<T> {
    pub lambda: T,
    pub potential: SampledFunction<T>,
    pub ground_state: WaveFunction<T>,
    /// Ground energy of the unshifted parent (zero if the caller worked shifted).
    pub shift: T,
    pub diagnostics: MemberDiagnostics<T>,
}

fn nodal(e: Error) -> Error {
    match e {
        Error::NonPositive { index, .. } => Error::Nodal { index },
        other => other,
    }
}

/// `w_p = -D ln u₀`, end nodes masked.
pub fn witten_superpotential<T: Real>(u0: &WaveFunction<T>) -> Result<Superpotential<T>> {
    let sigma = u0.samples.mask_ends().log_derivative().map_err(nodal)?;
    Ok(Superpotential::particular(sigma.scale(-T::one()), Vec::new()).with_source(u0))
}

/// `V₊ = w² + w'`.
pub fn fermionic_partner<T: Real>(w: &SampledFunction<T>) -> Result<SampledFunction<T>> {
    w.derivative()?.zip_with(w, |dw, w| w * w + dw)
}

/// `V₋ = w² - w'`.
pub fn bosonic_from_superpotential<T: Real>(w: &SampledFunction<T>) -> Result<SampledFunction<T>> {
    w.derivative()?.zip_with(w, |dw, w| w * w - dw)
}

/// `I₀(x) = ∫_{x_min}^x u₀²` for a normalized ground state.
pub fn norm_integral<T: Real>(u0: &WaveFunction<T>) -> Result<SampledFunction<T>> {
    let i0 = u0.samples.map(|v| v * v).cumulative_integral_corrected()?;
    let total = *i0.values().last().expect("non-empty grid");
    if !u0.normalized || (total - T::one()).abs() > T::lit(NORM_TOL) {
        return Err(Error::Unnormalized { norm: total.as_f64() });
    }
    Ok(i0)
}

/// Rejects `λ` in the closed band `[-I_total, 0]`, and `λ` whose
/// denominator `I₀ + λ` nearly vanishes somewhere on the grid.
pub fn check_lambda<T: Real>(i0: &SampledFunction<T>, lambda: T) -> Result<()> {
    let total = *i0.values().last().expect("non-empty grid");
    let (lower, upper) = (-total.as_f64(), 0.0);
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
    }
    if lambda >= -total && lambda <= T::zero() {
        return Err(Error::SingularBand { lambda: lambda.as_f64(), lower, upper });
    }
    let min_den = i0.values().iter().map(|&i| (i + lambda).abs()).fold(T::infinity(), T::min);
    if min_den < T::lit(NEAR_SINGULAR_MARGIN) * total {
        return Err(Error::NearSingular { lambda: lambda.as_f64(), min_denominator: min_den.as_f64(), lower, upper });
    }
    Ok(())
}

/// `σ₀(λ) = D ln(I₀ + λ) = u₀²/(I₀ + λ)`.
pub fn sigma0<T: Real>(u0: &WaveFunction<T>, lambda: T) -> Result<SampledFunction<T>> {
    let i0 = norm_integral(u0)?;
    check_lambda(&i0, lambda)?;
    sigma_from(&u0.samples, &i0, lambda)
}

fn sigma_from<T: Real>(u: &SampledFunction<T>, i0: &SampledFunction<T>, lambda: T) -> Result<SampledFunction<T>> {
    u.zip_with(i0, |u, i| u * u / (i + lambda))
}

/// Solution `v = (I₀ + λ)/u₀²` of the Bernoulli equation `v' - 2 v w_p = 1`.
/// Nodes where `u₀` vanishes (Dirichlet walls) are masked.
pub fn bernoulli_solution<T: Real>(u0: &WaveFunction<T>, lambda: T) -> Result<SampledFunction<T>> {
    let i0 = norm_integral(u0)?;
    check_lambda(&i0, lambda)?;
    let u = positive_interior(u0)?;
    u.zip_with(&i0, |u, i| (i + lambda) / (u * u))
}

/// Ground-state samples with zero-valued end nodes masked; any other
/// non-positive node is an error.
fn positive_interior<T: Real>(u0: &WaveFunction<T>) -> Result<SampledFunction<T>> {
    let n = u0.samples.grid().len();
    let ends: Vec<usize> = [0, n - 1].into_iter().filter(|&i| !(u0.samples.values()[i] > T::zero())).collect();
    let u = u0.samples.masking(ends);
    u.check_positive().map_err(nodal)?;
    Ok(u)
}

/// General Riccati solution `w_g(x;λ) = w_p + u₀²/(I₀ + λ)`.
pub fn general_superpotential<T: Real>(u0: &WaveFunction<T>, lambda: T) -> Result<Superpotential<T>> {
    let wp = witten_superpotential(u0)?;
    let sigma = sigma0(u0, lambda)?;
    let w = wp.samples.add(&sigma)?;
    Ok(Superpotential::general(w, vec![lambda]).with_source(u0))
}

/// `w_g` evaluated as `-D ln(u₀/|I₀ + λ|)`; agrees with
/// [`general_superpotential`] to `O(h²)`.
pub fn general_superpotential_log_form<T: Real>(u0: &WaveFunction<T>, lambda: T) -> Result<Superpotential<T>> {
    let i0 = norm_integral(u0)?;
    check_lambda(&i0, lambda)?;
    let ln_u = u0.samples.mask_ends().ln().map_err(nodal)?;
    let ln_den = i0.map(|i| (i + lambda).abs().ln());
    let w = ln_u.sub(&ln_den)?.derivative()?.scale(-T::one());
    Ok(Superpotential::general(w, vec![lambda]).with_source(u0))
}

/// `u₀(x;λ) = √(λ(λ+1)) u₀/|I₀ + λ|`, the normalized zero mode of `V₋(x;λ)`.
///
/// The energy label is inherited from `u0`: the deformation preserves it.
pub fn deformed_ground_state<T: Real>(u0: &WaveFunction<T>, lambda: T) -> Result<WaveFunction<T>> {
    let i0 = norm_integral(u0)?;
    check_lambda(&i0, lambda)?;
    let f = (lambda * (lambda + T::one())).sqrt();
    let samples = u0.samples.zip_with(&i0, |u, i| f * u / (i + lambda).abs())?;
    Ok(WaveFunction { samples, energy: u0.energy, normalized: true })
}

/// `V₋(x;λ) = V₋ - 4u₀u₀'/(I₀+λ) + 2u₀⁴/(I₀+λ)²` with its ground state and diagnostics.
///
/// `v_minus` must be the potential whose zero mode is `u0` (usually the
/// parent shifted to zero ground energy). `shift` is left at zero.
pub fn deformed_potential<T: Real>(
    v_minus: &SampledFunction<T>,
    u0: &WaveFunction<T>,
    lambda: T,
) -> Result<FamilyMember<T>> {
    let i0 = norm_integral(u0)?;
    check_lambda(&i0, lambda)?;
    let potential = deformation(v_minus, u0, &i0, lambda)?;
    let ground_state = deformed_ground_state(u0, lambda)?;
    let diagnostics = MemberDiagnostics {
        partner_deviation: partner_deviation(u0, lambda)?,
        gs_residual: eigen_residual(&potential, &ground_state.samples, ground_state.energy)?,
        norm_error: (ground_state.norm()? - T::one()).abs(),
    };
    Ok(FamilyMember { lambda, potential, ground_state, shift: T::zero(), diagnostics })
}

fn deformation<T: Real>(
    v: &SampledFunction<T>,
    u0: &WaveFunction<T>,
    i0: &SampledFunction<T>,
    lambda: T,
) -> Result<SampledFunction<T>> {
    let u = &u0.samples;
    let du = u.derivative()?;
    let (two, four) = (T::lit(2.0), T::lit(4.0));
    let n = u.grid().len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (ui, dui, p) = (u.values()[i], du.values()[i], i0.values()[i] + lambda);
        let value = v.values()[i] - four * ui * dui / p + two * ui.powi(4) / (p * p);
        if !value.is_finite() {
            return Err(Error::NonFinite { index: i, value: value.as_f64() });
        }
        out.push(value);
    }
    SampledFunction::from_values(*u.grid(), out)
}

/// `V₋ - 2 D² ln|I₀ + λ|`, the second-derivative form of the family.
pub fn deformed_potential_log_form<T: Real>(
    v_minus: &SampledFunction<T>,
    u0: &WaveFunction<T>,
    lambda: T,
) -> Result<SampledFunction<T>> {
    let i0 = norm_integral(u0)?;
    check_lambda(&i0, lambda)?;
    let d2 = i0.map(|i| (i + lambda).abs().ln()).second_derivative()?;
    v_minus.zip_with(&d2, |v, d| v - T::lit(2.0) * d)
}

/// `V₊ + 2 D² ln u₀(x;λ)`: the family recovered from the shared fermionic
/// partner by the inverse Darboux step.
pub fn double_darboux_reconstruct<T: Real>(
    v_plus: &SampledFunction<T>,
    u0_lambda: &WaveFunction<T>,
) -> Result<SampledFunction<T>> {
    let u = positive_interior(u0_lambda)?;
    let d2 = u.ln()?.second_derivative()?;
    v_plus.zip_with(&d2, |v, d| v + T::lit(2.0) * d)
}

/// Max `|V₊(w_g(λ)) - V₊(w_p)|` over interior nodes where both are defined.
pub fn partner_deviation<T: Real>(u0: &WaveFunction<T>, lambda: T) -> Result<T> {
    let wp = witten_superpotential(u0)?;
    let wg = general_superpotential(u0, lambda)?;
    fermionic_partner(&wg.samples)?.max_abs_diff_interior(&fermionic_partner(&wp.samples)?, 2)
}

/// A parent potential prepared for deformation: shifted to zero ground
/// energy, with its normalized zero mode and `I₀`.
#[derive(Debug, Clone)]
pub struct Parent<T> {
    /// `V - E₀`.
    pub potential: SampledFunction<T>,
    /// `V` as supplied.
    pub physical: SampledFunction<T>,
    pub ground_state: WaveFunction<T>,
    pub shift: T,
    pub norm_integral: SampledFunction<T>,
}

impl<T: Real> Parent<T> {
    /// Zero mode computed numerically from `v`.
    pub fn from_potential(v: &SampledFunction<T>) -> Result<Self> {
        let u0 = compute_zero_mode(v)?;
        let e0 = u0.energy;
        Self::assemble(v, u0, e0)
    }

    /// Closed-form ground-state samples with known energy `e0`.
    /// The samples are renormalized with the trapezoid rule.
    pub fn with_ground_state(v: &SampledFunction<T>, u0: SampledFunction<T>, e0: T) -> Result<Self> {
        let u0 = WaveFunction::normalized_from(u0, e0)?;
        Self::assemble(v, u0, e0)
    }

    fn assemble(v: &SampledFunction<T>, u0: WaveFunction<T>, e0: T) -> Result<Self> {
        let potential = shift_to_zero_ground(v, e0);
        let ground_state = u0.with_energy(T::zero());
        let norm_integral = norm_integral(&ground_state)?;
        Ok(Self { potential, physical: v.clone(), ground_state, shift: e0, norm_integral })
    }

    /// Unshifted potential.
    pub fn physical_potential(&self) -> SampledFunction<T> {
        self.physical.clone()
    }

    pub fn check_lambda(&self, lambda: T) -> Result<()> {
        check_lambda(&self.norm_integral, lambda)
    }

    pub fn witten(&self) -> Result<Superpotential<T>> {
        witten_superpotential(&self.ground_state)
    }

    pub fn general(&self, lambda: T) -> Result<Superpotential<T>> {
        general_superpotential(&self.ground_state, lambda)
    }

    pub fn fermionic_partner(&self) -> Result<SampledFunction<T>> {
        fermionic_partner(&self.witten()?.samples)
    }

    /// Family member in the shifted convention, with `shift` recorded.
    pub fn member(&self, lambda: T) -> Result<FamilyMember<T>> {
        let mut m = deformed_potential(&self.potential, &self.ground_state, lambda)?;
        m.shift = self.shift;
        Ok(m)
    }

    /// Deformation of the unshifted potential: `V(x;λ) = V + (V₋(x;λ) - V₋)`.
    pub fn physical_member_potential(&self, lambda: T) -> Result<SampledFunction<T>> {
        self.check_lambda(lambda)?;
        deformation(&self.physical_potential(), &self.ground_state, &self.norm_integral, lambda)
    }
}
