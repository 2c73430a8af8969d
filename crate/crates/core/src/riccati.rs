//! Nonlinear superposition of Riccati solutions sharing one fermionic partner.
//!
//! Any four solutions `w, w₁, w₂, w₃` of the same Riccati equation have a
//! position-independent cross ratio
//! `k = (w - w₁)(w₃ - w₂) / ((w - w₂)(w₃ - w₁))`, and [`superpose`] is its
//! exact inverse: `k = 0` gives `w₁`, `k = 1` gives `w₃` and `k → ∞` gives `w₂`.

use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::scalar::{median, Real};
use crate::schrodinger::WaveFunction;
use crate::susy::{check_lambda, norm_integral, Superpotential};

pub const DEFAULT_REL_TOL: f64 = 1e-8;

pub const SUPPORT_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CrossRatio<T> {
    pub pointwise: SampledFunction<T>,
    /// Median of the unmasked pointwise values.
    pub k_estimate: T,
    pub k_mean: T,
    /// Max `|k(x) - k_estimate|` over unmasked nodes.
    pub constancy: T,
    pub valid_fraction: T,
}

/// Three solutions on one grid with pairwise distinct parameter chains.
#[derive(Debug, Clone)]
pub struct RiccatiTriple<T> {
    pub w1: Superpotential<T>,
    pub w2: Superpotential<T>,
    pub w3: Superpotential<T>,
}

impl<T: Real> RiccatiTriple<T> {
    pub fn new(w1: Superpotential<T>, w2: Superpotential<T>, w3: Superpotential<T>) -> Result<Self> {
        let g = *w1.samples.grid();
        if *w2.samples.grid() != g || *w3.samples.grid() != g {
            return Err(Error::GridMismatch);
        }
        let pairs = [(&w1, &w2, "w1, w2"), (&w1, &w3, "w1, w3"), (&w2, &w3, "w2, w3")];
        for (a, b, name) in pairs {
            if a.lambda_chain == b.lambda_chain {
                return Err(Error::DegenerateTriple(format!("{name} share the parameter chain {:?}", a.lambda_chain)));
            }
            if a.samples.max_abs_diff(&b.samples)? == T::zero() {
                return Err(Error::DegenerateTriple(format!("{name} have identical samples")));
            }
        }
        Ok(Self { w1, w2, w3 })
    }
}

fn summarize<T: Real>(values: Vec<T>, mask: Vec<bool>, grid: crate::grid::Grid<T>) -> Result<CrossRatio<T>> {
    let valid: Vec<T> = values.iter().zip(&mask).filter(|(_, &ok)| ok).map(|(&k, _)| k).collect();
    let k_estimate = median(&valid).ok_or(Error::DegenerateConfiguration)?;
    let count = T::from_usize_lossy(valid.len());
    let k_mean = valid.iter().fold(T::zero(), |s, &k| s + k) / count;
    let constancy = valid.iter().fold(T::zero(), |m, &k| m.max((k - k_estimate).abs()));
    let valid_fraction = count / T::from_usize_lossy(grid.len());
    Ok(CrossRatio {
        pointwise: SampledFunction::from_masked(grid, values, mask)?,
        k_estimate,
        k_mean,
        constancy,
        valid_fraction,
    })
}

/// Pointwise cross ratio of four sampled functions. Nodes where
/// `|w - w₂|`, `|w₃ - w₁|` or `|w₃ - w₂|` is at most `rel_tol` times the
/// largest of the four magnitudes at that node are masked.
fn cross_ratio_samples<T: Real>(
    w: &SampledFunction<T>,
    w1: &SampledFunction<T>,
    w2: &SampledFunction<T>,
    w3: &SampledFunction<T>,
    rel_tol: T,
) -> Result<CrossRatio<T>> {
    let grid = *w.grid();
    if *w1.grid() != grid || *w2.grid() != grid || *w3.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(rel_tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let n = grid.len();
    let (mut values, mut mask) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let k = match (w.get(i), w1.get(i), w2.get(i), w3.get(i)) {
            (Some(w), Some(w1), Some(w2), Some(w3)) => {
                let threshold = rel_tol * w.abs().max(w1.abs()).max(w2.abs()).max(w3.abs());
                let (a, b, c, d) = (w - w1, w - w2, w3 - w1, w3 - w2);
                if b.abs() <= threshold || c.abs() <= threshold || d.abs() <= threshold {
                    None
                } else {
                    Some(a * d / (b * c)).filter(|k| k.is_finite())
                }
            }
            _ => None,
        };
        values.push(k.unwrap_or(T::zero()));
        mask.push(k.is_some());
    }
    summarize(values, mask, grid)
}

/// `k(x) = (w - w₁)(w₃ - w₂) / ((w - w₂)(w₃ - w₁))` with near-pole nodes masked.
pub fn cross_ratio<T: Real>(w: &Superpotential<T>, triple: &RiccatiTriple<T>, rel_tol: T) -> Result<CrossRatio<T>> {
    cross_ratio_samples(&w.samples, &triple.w1.samples, &triple.w2.samples, &triple.w3.samples, rel_tol)
}

/// Solution with cross ratio `k` relative to the triple.
pub fn superpose<T: Real>(triple: &RiccatiTriple<T>, k: T) -> Result<Superpotential<T>> {
    superpose_with_tol(triple, k, T::lit(DEFAULT_REL_TOL))
}

pub fn superpose_with_tol<T: Real>(triple: &RiccatiTriple<T>, k: T, rel_tol: T) -> Result<Superpotential<T>> {
    if !k.is_finite() {
        return Err(Error::InvalidArgument(format!("k must be finite, got {k}")));
    }
    let (w1, w2, w3) = (&triple.w1.samples, &triple.w2.samples, &triple.w3.samples);
    let grid = *w1.grid();
    let n = grid.len();
    let (mut values, mut mask) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let w = match (w1.get(i), w2.get(i), w3.get(i)) {
            // the endpoints are returned bitwise
            (Some(w1), Some(_), Some(_)) if k == T::zero() => Some(w1),
            (Some(_), Some(_), Some(w3)) if k == T::one() => Some(w3),
            (Some(w1), Some(w2), Some(w3)) => {
                let threshold = rel_tol * w1.abs().max(w2.abs()).max(w3.abs());
                let (c, d) = (w3 - w1, w3 - w2);
                let den = d - k * c;
                if den.abs() <= threshold || d.abs() <= threshold {
                    None
                } else {
                    Some(w1 + k * c * (w1 - w2) / den).filter(|w| w.is_finite())
                }
            }
            _ => None,
        };
        values.push(w.unwrap_or(T::zero()));
        mask.push(w.is_some());
    }
    if !mask.iter().any(|&ok| ok) {
        return Err(Error::DegenerateConfiguration);
    }
    let mut chain = triple.w1.lambda_chain.clone();
    chain.pop();
    let mut out = Superpotential::general(SampledFunction::from_masked(grid, values, mask)?, chain);
    out.source = triple.w1.source.clone();
    Ok(out)
}

/// Closed-form cross ratio of four family members `w_g(λ)`:
/// `(λ₁ - λ)(λ₂ - λ₃) / ((λ₂ - λ)(λ₁ - λ₃))`.
pub fn lambda_cross_ratio<T: Real>(lambda: T, l1: T, l2: T, l3: T) -> Result<T> {
    let all = [lambda, l1, l2, l3];
    for i in 0..4 {
        if !all[i].is_finite() {
            return Err(Error::InvalidArgument(format!("parameter {} is not finite", all[i])));
        }
        for j in i + 1..4 {
            if all[i] == all[j] {
                return Err(Error::CoincidentParameters(format!("{} appears twice in {all:?}", all[i])));
            }
        }
    }
    Ok((l1 - lambda) * (l2 - l3) / ((l2 - lambda) * (l1 - l3)))
}

/// Cross ratio of four members evaluated through `σ₀(λ) = u₀²/(I₀ + λ)`
/// instead of through the superpotentials, along two routes.
#[derive(Debug, Clone)]
pub struct LambdaFormInvariant<T> {
    /// `σ₀(λᵢ)` evaluated directly.
    pub sigma_path: CrossRatio<T>,
    /// `σ₀(λᵢ)` rebuilt as `σ₀(λᵢ; x_min) + ∫_{x_min}^x Dσ₀(λᵢ)`.
    pub integral_path: CrossRatio<T>,
    /// Max pointwise `|k_σ - k_∫|` over nodes valid on both routes where
    /// `u₀² ≥ SUPPORT_FRACTION · max u₀²`. Outside that support the integral
    /// route is dominated by its absolute quadrature error.
    pub path_agreement: T,
}

pub fn lambda_form_invariant<T: Real>(
    u0: &WaveFunction<T>,
    lambda: T,
    l1: T,
    l2: T,
    l3: T,
) -> Result<LambdaFormInvariant<T>> {
    lambda_cross_ratio(lambda, l1, l2, l3)?;
    let i0 = norm_integral(u0)?;
    let u2 = u0.samples.map(|u| u * u);
    let mut sigmas = Vec::with_capacity(4);
    let mut rebuilt = Vec::with_capacity(4);
    for l in [lambda, l1, l2, l3] {
        check_lambda(&i0, l)?;
        let s = u2.zip_with(&i0, |a, i| a / (i + l))?;
        let anchor = s.values()[0];
        let integral = s.derivative()?.cumulative_integral_corrected()?.map(|v| v + anchor);
        sigmas.push(s);
        rebuilt.push(integral);
    }
    let tol = T::lit(DEFAULT_REL_TOL);
    let sigma_path = cross_ratio_samples(&sigmas[0], &sigmas[1], &sigmas[2], &sigmas[3], tol)?;
    let integral_path = cross_ratio_samples(&rebuilt[0], &rebuilt[1], &rebuilt[2], &rebuilt[3], tol)?;
    let floor = T::lit(SUPPORT_FRACTION) * u2.max_abs();
    let path_agreement = (0..u0.grid().len())
        .filter(|&i| u2.values()[i] >= floor)
        .filter_map(|i| Some((sigma_path.pointwise.get(i)? - integral_path.pointwise.get(i)?).abs()))
        .fold(T::zero(), T::max);
    Ok(LambdaFormInvariant { sigma_path, integral_path, path_agreement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::susy::{fermionic_partner, general_superpotential, Parent};
    use proptest::prelude::*;

    fn oscillator() -> Parent<f64> {
        let g = Grid::new(-10.0, 10.0, 2001).unwrap();
        let v = SampledFunction::from_fn(g, |x| x * x).unwrap();
        let u = SampledFunction::from_fn(g, |x: f64| (-x * x / 2.0).exp()).unwrap();
        Parent::with_ground_state(&v, u, 1.0).unwrap()
    }

    fn family_triple(p: &Parent<f64>, l: [f64; 3]) -> RiccatiTriple<f64> {
        let w = |l| p.general(l).unwrap();
        RiccatiTriple::new(w(l[0]), w(l[1]), w(l[2])).unwrap()
    }

    // Independent oracle: pointwise evaluation straight from the closed-form
    // Gaussian quantities, no shared code with the implementation.
    fn oracle_k(x: f64, l: [f64; 4]) -> f64 {
        let u2 = (-x * x).exp() / std::f64::consts::PI.sqrt();
        let i0 = 0.5 * (1.0 + erf(x));
        let w = |l: f64| x + u2 / (i0 + l);
        let [a, b, c, d] = l.map(w);
        (a - b) * (d - c) / ((a - c) * (d - b))
    }

    fn erf(x: f64) -> f64 {
        // Simpson on e^{-t²}
        let n = 20000;
        let h = x / n as f64;
        let f = |t: f64| (-t * t).exp();
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        2.0 / std::f64::consts::PI.sqrt() * s * h / 3.0
    }

    #[test]
    fn cross_ratio_of_family_quadruple() {
        let p = oscillator();
        let t = family_triple(&p, [1.0, 3.0, 4.0]);
        let cr = cross_ratio(&p.general(2.0).unwrap(), &t, 1e-8).unwrap();
        assert!((cr.k_estimate + 1.0 / 3.0).abs() < 1e-6, "{}", cr.k_estimate);
        assert!(cr.constancy < 1e-6, "{}", cr.constancy);
        for x in [-2.0, 0.0, 0.7, 3.0] {
            assert!((oracle_k(x, [2.0, 1.0, 3.0, 4.0]) + 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_ratio_endpoints() {
        let p = oscillator();
        let t = family_triple(&p, [1.0, 3.0, 4.0]);
        let k1 = cross_ratio(&t.w1, &t, 1e-8).unwrap();
        assert_eq!(k1.k_estimate, 0.0);
        let k3 = cross_ratio(&t.w3, &t, 1e-8).unwrap();
        assert!((k3.k_estimate - 1.0).abs() < 1e-12);
        // w₂ is the pole of the cross ratio
        assert!(matches!(cross_ratio(&t.w2, &t, 1e-8), Err(Error::DegenerateConfiguration)));
        assert!(cross_ratio(&t.w1, &t, 0.0).is_err());
    }

    #[test]
    fn superpose_examples() {
        let p = oscillator();
        let t = family_triple(&p, [1.0, 3.0, 4.0]);
        let w = superpose(&t, -1.0 / 3.0).unwrap();
        let target = p.general(2.0).unwrap();
        assert!(w.samples.max_abs_diff(&target.samples).unwrap() < 1e-6);
        assert_eq!(superpose(&t, 0.0).unwrap().samples.max_abs_diff(&t.w1.samples).unwrap(), 0.0);
        assert!(superpose(&t, 1.0).unwrap().samples.max_abs_diff(&t.w3.samples).unwrap() < 1e-12);
    }

    #[test]
    fn superposition_closure_and_round_trip() {
        let p = oscillator();
        let t = family_triple(&p, [1.0, 3.0, 4.0]);
        let vp = p.fermionic_partner().unwrap();
        for k in [-2.0, -1.0 / 3.0, 0.5, 3.0] {
            let w = superpose(&t, k).unwrap();
            let partner = fermionic_partner(&w.samples).unwrap();
            assert!(partner.max_abs_diff_interior(&vp, 2).unwrap() < 1e-4, "{k}");
            let back = cross_ratio(&w, &t, 1e-8).unwrap();
            assert!((back.k_estimate - k).abs() < 1e-8, "{k}: {}", back.k_estimate);
        }
    }

    #[test]
    fn degenerate_triples_rejected() {
        let p = oscillator();
        let w = |l| p.general(l).unwrap();
        assert!(matches!(RiccatiTriple::new(w(1.0), w(1.0), w(4.0)), Err(Error::DegenerateTriple(_))));
        let mut other = w(3.0);
        other.lambda_chain = vec![7.0];
        other.samples = w(1.0).samples;
        assert!(matches!(RiccatiTriple::new(w(1.0), other, w(4.0)), Err(Error::DegenerateTriple(_))));
    }

    #[test]
    fn lambda_cross_ratio_examples() {
        assert!((lambda_cross_ratio::<f64>(2.0, 1.0, 3.0, 4.0).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(lambda_cross_ratio(1.0, 1.0, 3.0, 4.0), Err(Error::CoincidentParameters(_))));
        assert!((lambda_cross_ratio::<f64>(1e8, 1.0, 3.0, 4.0).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn lambda_form_invariant_examples() {
        let p = oscillator();
        let inv = lambda_form_invariant(&p.ground_state, 2.0, 1.0, 3.0, 4.0).unwrap();
        let exact = lambda_cross_ratio(2.0, 1.0, 3.0, 4.0).unwrap();
        assert!((inv.sigma_path.k_estimate - exact).abs() < 1e-6);
        assert!(inv.sigma_path.constancy < 1e-6);
        assert!(inv.sigma_path.valid_fraction > 0.9, "{}", inv.sigma_path.valid_fraction);
        assert!(inv.path_agreement < 1e-6, "{}", inv.path_agreement);
        assert!(matches!(
            lambda_form_invariant(&p.ground_state, 2.0, 1.0, 3.0, 1.0),
            Err(Error::CoincidentParameters(_))
        ));
    }

    fn valid_lambda() -> impl Strategy<Value = f64> {
        prop_oneof![0.05f64..20.0, -20.0f64..-1.05]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn k_estimate_matches_closed_form(l in proptest::array::uniform4(valid_lambda())) {
            for i in 0..4 {
                for j in i + 1..4 {
                    prop_assume!((l[i] - l[j]).abs() > 0.05);
                }
            }
            let p = oscillator();
            let t = RiccatiTriple::new(
                general_superpotential(&p.ground_state, l[1]).unwrap(),
                general_superpotential(&p.ground_state, l[2]).unwrap(),
                general_superpotential(&p.ground_state, l[3]).unwrap(),
            ).unwrap();
            let cr = cross_ratio(&p.general(l[0]).unwrap(), &t, 1e-8).unwrap();
            let exact = lambda_cross_ratio(l[0], l[1], l[2], l[3]).unwrap();
            // rounding in w - wᵢ limits k to relative, not absolute, accuracy
            let tol = 1e-6 * exact.abs().max(1.0);
            prop_assert!((cr.k_estimate - exact).abs() < tol, "{} vs {}", cr.k_estimate, exact);
            prop_assert!(cr.constancy < tol, "{}", cr.constancy);
        }
    }
}
