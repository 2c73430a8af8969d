//! Iterated general solutions `w_g⁽ⁱ⁾ = w_p + w_{λ₁} + … + w_{λ_{i-1}} + w_λ`.
//!
//! Each step treats the previous particular solution as the new reference:
//! `w_{λ_j} = F_{j-1} / (λ_j + J_{j-1})`, where `F_j = exp(-∫ 2 w_p⁽ʲ⁾)` and
//! `J_j = ∫_{x_min}^x F_j`. Since `F_j = F_{j-1}/(λ_j + J_{j-1})²`, the factors
//! are propagated in closed form rather than by integrating `w`. They are
//! stored rescaled to unit maximum; the true factor is `F · e^{log_scale}`.

use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::riccati::{cross_ratio, CrossRatio, RiccatiTriple};
use crate::scalar::Real;
use crate::schrodinger::WaveFunction;
use crate::susy::{check_lambda, fermionic_partner, witten_superpotential, Superpotential};

/// Max interior deviation between fermionic partners accepted as "shared".
pub const PARTNER_TOL: f64 = 1e-3;

const NEAR_SINGULAR_MARGIN: f64 = crate::susy::NEAR_SINGULAR_MARGIN;

#[derive(Debug, Clone)]
pub struct HierarchyState<T> {
    pub order: usize,
    pub fixed_lambdas: Vec<T>,
    pub w_particular: Superpotential<T>,
    /// `F_order / e^{log_scale}`, maximum 1.
    pub f: SampledFunction<T>,
    pub log_scale: T,
    /// `∫_{x_min}^x f` (end-corrected trapezoid).
    pub j: SampledFunction<T>,
    /// Max `|F₀ - u₀²|` when `F₀` is rebuilt as `exp(-∫ 2 w_p)` with plain
    /// trapezoid quadrature and matched at the middle node.
    pub quadrature_defect: T,
}

impl<T: Real> HierarchyState<T> {
    /// `λ` as seen by the rescaled factor: `λ + J_true = e^{log_scale} (λ_eff + J)`.
    pub fn effective_lambda(&self, lambda: T) -> T {
        lambda * (-self.log_scale).exp()
    }

    /// `F_order` at its true scale.
    pub fn factor(&self) -> SampledFunction<T> {
        let s = self.log_scale.exp();
        self.f.map(|v| v * s)
    }

    fn check(&self, lambda: T) -> Result<()> {
        if self.order == 0 {
            return check_lambda(&self.j.scale(self.log_scale.exp()), lambda);
        }
        let le = self.effective_lambda(lambda);
        let total = *self.j.values().last().expect("non-empty grid");
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        let mut min_abs = T::infinity();
        for &v in self.j.values() {
            let a = le + v;
            lo = lo.min(a);
            hi = hi.max(a);
            min_abs = min_abs.min(a.abs());
        }
        if !(lo > T::zero() || hi < T::zero()) {
            return Err(Error::ZeroCrossing { order: self.order + 1, lambda: lambda.as_f64() });
        }
        if min_abs < T::lit(NEAR_SINGULAR_MARGIN) * total {
            let s = self.log_scale.exp();
            return Err(Error::NearSingular {
                lambda: lambda.as_f64(),
                min_denominator: (min_abs * s).as_f64(),
                lower: (-total * s).as_f64(),
                upper: 0.0,
            });
        }
        Ok(())
    }

    fn increment(&self, lambda: T) -> Result<SampledFunction<T>> {
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
        }
        self.check(lambda)?;
        let le = self.effective_lambda(lambda);
        self.f.zip_with(&self.j, |f, j| f / (le + j))
    }
}

/// Order-0 state built from a normalized nodeless ground state.
pub fn init_hierarchy<T: Real>(u0: &WaveFunction<T>) -> Result<HierarchyState<T>> {
    let w_particular = witten_superpotential(u0)?;
    let u2 = u0.samples.map(|u| u * u);
    let max = u2.max_abs();
    if !(max > T::zero()) {
        return Err(Error::Nodal { index: 0 });
    }
    let f = u2.scale(max.recip());
    let j = f.cumulative_integral_corrected()?;
    let total = *j.values().last().expect("non-empty grid") * max;
    if !u0.normalized || (total - T::one()).abs() > T::lit(crate::susy::NORM_TOL) {
        return Err(Error::Unnormalized { norm: total.as_f64() });
    }
    let quadrature_defect = quadrature_factor(&w_particular.samples, &u2)?.max_abs_diff(&u2)?;
    Ok(HierarchyState {
        order: 0,
        fixed_lambdas: Vec::new(),
        w_particular,
        f,
        log_scale: max.ln(),
        j,
        quadrature_defect,
    })
}

/// `exp(-∫_{x_min}^x 2w)` scaled to match `reference` at the middle node.
fn quadrature_factor<T: Real>(w: &SampledFunction<T>, reference: &SampledFunction<T>) -> Result<SampledFunction<T>> {
    let two = T::lit(2.0);
    let exponent = w.extrapolate_ends().scale(-two).cumulative_integral()?;
    let mid = w.grid().mid_index();
    let shift = reference.values()[mid].ln() - exponent.values()[mid];
    Ok(exponent.map(|e| (e + shift).exp()))
}

/// Fixes `λ` as the next parameter: `w_p⁽ʲ⁺¹⁾ = w_p⁽ʲ⁾ + w_λ`.
pub fn extend<T: Real>(state: &HierarchyState<T>, lambda: T) -> Result<HierarchyState<T>> {
    let increment = state.increment(lambda)?;
    let mut fixed_lambdas = state.fixed_lambdas.clone();
    fixed_lambdas.push(lambda);
    let mut w_particular =
        Superpotential::particular(state.w_particular.samples.add(&increment)?, fixed_lambdas.clone());
    w_particular.source = state.w_particular.source.clone();

    // ln F_new = ln F - 2 ln|λ + J| with everything at true scale
    let le = state.effective_lambda(lambda);
    let two = T::lit(2.0);
    let log_f = state.f.zip_with(&state.j, |f, j| f.ln() - two * (le + j).abs().ln())?;
    let peak = log_f.valid_values().fold(T::neg_infinity(), T::max);
    let f = log_f.map(|l| (l - peak).exp());
    let log_scale = peak - state.log_scale;
    let j = f.cumulative_integral_corrected()?;
    Ok(HierarchyState {
        order: state.order + 1,
        fixed_lambdas,
        w_particular,
        f,
        log_scale,
        j,
        quadrature_defect: state.quadrature_defect,
    })
}

/// General solution one order above `state`, with `λ` free.
pub fn general_at_order<T: Real>(state: &HierarchyState<T>, lambda: T) -> Result<Superpotential<T>> {
    let increment = state.increment(lambda)?;
    let mut chain = state.fixed_lambdas.clone();
    chain.push(lambda);
    let mut w = Superpotential::general(state.w_particular.samples.add(&increment)?, chain);
    w.source = state.w_particular.source.clone();
    Ok(w)
}

/// Builds the hierarchy through every fixed parameter in `lambdas`.
pub fn hierarchy<T: Real>(u0: &WaveFunction<T>, lambdas: &[T]) -> Result<HierarchyState<T>> {
    lambdas.iter().try_fold(init_hierarchy(u0)?, |s, &l| extend(&s, l))
}

/// Normalized `exp(-∫ w)`, the zero mode of `V₋ = w² - w'` (end values extrapolated).
pub fn reconstructed_ground_state<T: Real>(w: &Superpotential<T>) -> Result<WaveFunction<T>> {
    let exponent = w.samples.extrapolate_ends().scale(-T::one()).cumulative_integral()?;
    let peak = exponent.valid_values().fold(T::neg_infinity(), T::max);
    WaveFunction::normalized_from(exponent.map(|e| (e - peak).exp()), T::zero())
}

/// Max interior deviation of each input's fermionic partner from the first one's.
pub fn partner_spread<T: Real>(ws: &[&Superpotential<T>]) -> Result<T> {
    let partners = ws.iter().map(|w| fermionic_partner(&w.samples)).collect::<Result<Vec<_>>>()?;
    partners[1..].iter().try_fold(T::zero(), |m, p| Ok(m.max(p.max_abs_diff_interior(&partners[0], 2)?)))
}

/// Cross ratio of solutions from arbitrary hierarchy orders. The inputs must
/// share one fermionic partner within [`PARTNER_TOL`].
pub fn cross_order_invariant<T: Real>(
    w: &Superpotential<T>,
    t1: &Superpotential<T>,
    t2: &Superpotential<T>,
    t3: &Superpotential<T>,
    rel_tol: T,
) -> Result<CrossRatio<T>> {
    let deviation = partner_spread(&[w, t1, t2, t3])?;
    let tol = T::lit(PARTNER_TOL);
    if !(deviation <= tol) {
        return Err(Error::PartnerMismatch { deviation: deviation.as_f64(), tol: PARTNER_TOL });
    }
    let triple = RiccatiTriple::new(t1.clone(), t2.clone(), t3.clone())?;
    cross_ratio(w, &triple, rel_tol)
}
