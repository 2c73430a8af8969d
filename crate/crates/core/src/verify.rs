//! Checks that a deformation is strictly isospectral: spectra, shared
//! fermionic partner, zero-mode residuals and scattering moduli.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::scalar::Real;
use crate::schrodinger::{eigen_residual, spectrum_of};
use crate::susy::{partner_deviation, FamilyMember, Parent};

/// Reflection and transmission amplitudes for a plane wave incident from the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringData<T> {
    pub k: T,
    pub r: Complex<T>,
    pub t: Complex<T>,
    /// `||R|² + |T|² - 1|`.
    pub unitarity_defect: T,
}

/// Scattering solution normalized to unit incident amplitude.
#[derive(Debug, Clone)]
pub struct ScatteringWave<T> {
    pub data: ScatteringData<T>,
    pub psi: Vec<Complex<T>>,
}

/// Discrete wavenumber `q` for which `e^{iqx}` solves the free Numerov recurrence exactly.
fn numerov_wavenumber<T: Real>(k: T, h: T) -> T {
    let c = h * h * k * k / T::lit(12.0);
    let cos_qh = (T::one() - T::lit(5.0) * c) / (T::one() + c);
    cos_qh.max(-T::one()).min(T::one()).acos() / h
}

/// `R` and `T` for `-ψ'' + Vψ = k²ψ`, integrating from the right with the
/// transmitted wave `e^{ikx}` and matching `A e^{ikx} + B e^{-ikx}` on the left.
pub fn scattering_coefficients<T: Real>(v: &SampledFunction<T>, k: T, tol: T) -> Result<ScatteringData<T>> {
    scattering_wave(v, k, tol).map(|w| w.data)
}

pub fn scattering_wave<T: Real>(v: &SampledFunction<T>, k: T, tol: T) -> Result<ScatteringWave<T>> {
    if !(k > T::zero()) || !k.is_finite() {
        return Err(Error::Wavenumber(k.as_f64()));
    }
    if !v.is_fully_valid() {
        return Err(Error::MaskedInput("a fully unmasked potential"));
    }
    let vals = v.values();
    let n = vals.len();
    for &edge in &[vals[0], vals[n - 1]] {
        if !(edge.abs() < tol) {
            return Err(Error::NotShortRange { value: edge.as_f64(), tol: tol.as_f64() });
        }
    }
    let g = v.grid();
    let h = g.spacing();
    let q = numerov_wavenumber(k, h);
    let c = h * h / T::lit(12.0);
    let f: Vec<T> = vals.iter().map(|&vi| T::one() + c * (k * k - vi)).collect();
    let plane = |x: T, sign: T| Complex::new(T::zero(), sign * q * x).exp();

    let mut psi = vec![Complex::new(T::zero(), T::zero()); n];
    psi[n - 1] = plane(g.x(n - 1), T::one());
    psi[n - 2] = plane(g.x(n - 2), T::one());
    let (two, six) = (T::lit(2.0), T::lit(6.0));
    for i in (1..n - 1).rev() {
        // (1 + c g_{i-1}) ψ_{i-1} = 2(1 - 5c g_i) ψ_i - (1 + c g_{i+1}) ψ_{i+1}
        let mid = two * (six - T::lit(5.0) * f[i]);
        psi[i - 1] = (psi[i] * mid - psi[i + 1] * f[i + 1]) / f[i - 1];
        if !psi[i - 1].re.is_finite() || !psi[i - 1].im.is_finite() {
            return Err(Error::Overflow { index: i - 1 });
        }
    }

    // ψ_j = A e^{iqx_j} + B e^{-iqx_j}, j = 0, 1
    let (p0, m0) = (plane(g.x(0), T::one()), plane(g.x(0), -T::one()));
    let (p1, m1) = (plane(g.x(1), T::one()), plane(g.x(1), -T::one()));
    let det = p0 * m1 - p1 * m0;
    let a = (psi[0] * m1 - psi[1] * m0) / det;
    let b = (p0 * psi[1] - p1 * psi[0]) / det;
    let t = a.inv();
    let r = b / a;
    let unitarity_defect = (r.norm_sqr() + t.norm_sqr() - T::one()).abs();
    let limit = T::lit(10.0) * tol;
    if !(unitarity_defect <= limit) {
        return Err(Error::Unitarity { defect: unitarity_defect.as_f64(), limit: limit.as_f64() });
    }
    let psi = psi.into_iter().map(|p| p * t).collect();
    Ok(ScatteringWave { data: ScatteringData { k, r, t, unitarity_defect }, psi })
}

/// `(||R_λ| - |R||, ||T_λ| - |T||)` for each wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringDelta {
    pub k: f64,
    pub reflection: f64,
    pub transmission: f64,
    pub unitarity_defect: f64,
}

/// Compares scattering moduli of the physical parent and its deformation at `λ`.
pub fn scattering_invariance<T: Real>(parent: &Parent<T>, lambda: T, ks: &[T], tol: T) -> Result<Vec<ScatteringDelta>> {
    let v = parent.physical_potential();
    let deformed = parent.physical_member_potential(lambda)?;
    let edge = [deformed.values()[0], *deformed.values().last().expect("non-empty grid")];
    if edge.iter().any(|e| !(e.abs() < tol)) {
        return Err(Error::InvalidArgument(format!(
            "deformed potential at lambda = {lambda} is not short-range (edges {}, {})",
            edge[0], edge[1]
        )));
    }
    ks.iter()
        .map(|&k| {
            let a = scattering_coefficients(&v, k, tol)?;
            let b = scattering_coefficients(&deformed, k, tol)?;
            Ok(ScatteringDelta {
                k: k.as_f64(),
                reflection: (b.r.norm() - a.r.norm()).abs().as_f64(),
                transmission: (b.t.norm() - a.t.norm()).abs().as_f64(),
                unitarity_defect: a.unitarity_defect.max(b.unitarity_defect).as_f64(),
            })
        })
        .collect()
}

/// Max interior `|V₊(w_g(λ)) - V₊(w_p)|` per `λ`.
pub fn partner_uniqueness<T: Real>(parent: &Parent<T>, lambdas: &[T]) -> Result<Vec<T>> {
    lambdas.iter().map(|&l| partner_deviation(&parent.ground_state, l).map_err(|e| e.at_lambda(l.as_f64()))).collect()
}

/// Max interior `|(-D² + V₋(x;λ)) u₀(x;λ)|`.
pub fn ground_state_residual<T: Real>(member: &FamilyMember<T>) -> Result<T> {
    eigen_residual(&member.potential, &member.ground_state.samples, member.ground_state.energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub spectrum: f64,
    pub partner: f64,
    pub residual: f64,
    pub scattering: f64,
    pub unitarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { spectrum: 5e-3, partner: 1e-4, residual: 1e-3, scattering: 5e-4, unitarity: 1e-4 }
    }
}

/// Grids coarser than this many nodes per unit length draw a warning.
pub const COARSE_NODES_PER_UNIT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub potential_id: String,
    pub lambdas: Vec<f64>,
    pub levels: usize,
    /// Parent energies in the unshifted convention.
    pub parent_spectrum: Vec<f64>,
    /// `[λ][level]` absolute energy differences.
    pub spectrum_deltas: Vec<Vec<f64>>,
    pub partner_deviation: Vec<f64>,
    pub gs_residual: Vec<f64>,
    /// `[λ][k]`; empty when no wavenumbers were requested.
    pub scattering_deltas: Vec<Vec<ScatteringDelta>>,
    pub tolerances: Tolerances,
    pub passed: bool,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    pub fn max_spectrum_delta(&self) -> f64 {
        self.spectrum_deltas.iter().flatten().fold(0.0, |m, &d| m.max(d))
    }

    pub fn max_partner_deviation(&self) -> f64 {
        self.partner_deviation.iter().fold(0.0, |m, &d| m.max(d))
    }

    pub fn max_gs_residual(&self) -> f64 {
        self.gs_residual.iter().fold(0.0, |m, &d| m.max(d))
    }

    pub fn max_scattering_delta(&self) -> f64 {
        self.scattering_deltas.iter().flatten().fold(0.0, |m, d| m.max(d.reflection).max(d.transmission))
    }

    fn evaluate(&mut self) {
        let t = &self.tolerances;
        let unitarity_ok = self.scattering_deltas.iter().flatten().all(|d| d.unitarity_defect < t.unitarity);
        self.passed = self.max_spectrum_delta() < t.spectrum
            && self.max_partner_deviation() < t.partner
            && self.max_gs_residual() < t.residual
            && self.max_scattering_delta() < t.scattering
            && unitarity_ok
            && [&self.spectrum_deltas.concat(), &self.partner_deviation, &self.gs_residual]
                .iter()
                .all(|v| v.iter().all(|d| d.is_finite()));
    }
}

/// Builds the full report for one parent. Spectra are compared in the shifted
/// convention; scattering, when `ks` is non-empty, uses the physical potential.
pub fn isospectrality_report<T: Real>(
    potential_id: &str,
    parent: &Parent<T>,
    lambdas: &[T],
    levels: usize,
    ks: &[T],
    tolerances: Tolerances,
) -> Result<VerificationReport> {
    if levels == 0 {
        return Err(Error::InvalidArgument("at least one level is required".into()));
    }
    let base = spectrum_of(&parent.potential, levels)?;
    let mut report = VerificationReport {
        potential_id: potential_id.to_string(),
        lambdas: lambdas.iter().map(|l| l.as_f64()).collect(),
        levels,
        parent_spectrum: base.energies().iter().map(|&e| (e + parent.shift).as_f64()).collect(),
        spectrum_deltas: Vec::with_capacity(lambdas.len()),
        partner_deviation: Vec::with_capacity(lambdas.len()),
        gs_residual: Vec::with_capacity(lambdas.len()),
        scattering_deltas: Vec::new(),
        tolerances,
        passed: false,
        warnings: Vec::new(),
    };
    let tol = T::lit(tolerances.unitarity);
    for &l in lambdas {
        let at = |e: Error| e.at_lambda(l.as_f64());
        let member = parent.member(l).map_err(at)?;
        let spectrum = spectrum_of(&member.potential, levels).map_err(at)?;
        report.spectrum_deltas.push(spectrum.abs_deltas(&base).into_iter().map(T::as_f64).collect());
        report.partner_deviation.push(member.diagnostics.partner_deviation.as_f64());
        report.gs_residual.push(member.diagnostics.gs_residual.as_f64());
        if !ks.is_empty() {
            report.scattering_deltas.push(scattering_invariance(parent, l, ks, tol).map_err(at)?);
        }
    }
    let g = parent.potential.grid();
    let density = (g.len() - 1) as f64 / (g.x_max() - g.x_min()).as_f64();
    if density < COARSE_NODES_PER_UNIT {
        report.warnings.push(format!(
            "coarse grid: {density:.1} nodes per unit length (below {COARSE_NODES_PER_UNIT}); tolerances may not be met"
        ));
    }
    report.evaluate();
    Ok(report)
}

/// Ratios of the worst deltas on a grid and on its refinement (`2n - 1` nodes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    pub spectrum: Option<f64>,
    pub partner: Option<f64>,
    pub residual: Option<f64>,
}

/// Deltas below this are treated as converged to rounding and excluded from ratios.
pub const CONVERGENCE_FLOOR: f64 = 1e-10;

/// Expected minimum improvement for second-order schemes when the spacing halves.
pub const MIN_REFINEMENT_RATIO: f64 = 3.0;

impl Convergence {
    pub fn between(coarse: &VerificationReport, fine: &VerificationReport) -> Self {
        let ratio = |a: f64, b: f64| (a > CONVERGENCE_FLOOR && b > 0.0).then(|| a / b);
        Self {
            spectrum: ratio(coarse.max_spectrum_delta(), fine.max_spectrum_delta()),
            partner: ratio(coarse.max_partner_deviation(), fine.max_partner_deviation()),
            residual: ratio(coarse.max_gs_residual(), fine.max_gs_residual()),
        }
    }

    /// Names of quantities that improved by less than [`MIN_REFINEMENT_RATIO`].
    pub fn stalled(&self) -> Vec<&'static str> {
        [("spectrum", self.spectrum), ("partner", self.partner), ("residual", self.residual)]
            .into_iter()
            .filter(|(_, r)| r.is_some_and(|r| r < MIN_REFINEMENT_RATIO))
            .map(|(name, _)| name)
            .collect()
    }

    /// One warning per stalled quantity.
    pub fn warnings(&self) -> Vec<String> {
        self.stalled()
            .into_iter()
            .map(|name| format!("{name} deltas tightened by less than {MIN_REFINEMENT_RATIO}x under refinement"))
            .collect()
    }
}

/// Runs the report on `grid` and on its refinement, recording a warning on
/// the coarse report for every quantity that fails to tighten.
pub fn refinement_study<T: Real>(
    potential_id: &str,
    build: impl Fn(Grid<T>) -> Result<Parent<T>>,
    grid: Grid<T>,
    lambdas: &[T],
    levels: usize,
    tolerances: Tolerances,
) -> Result<(VerificationReport, VerificationReport, Convergence)> {
    let mut coarse = isospectrality_report(potential_id, &build(grid)?, lambdas, levels, &[], tolerances)?;
    let fine = isospectrality_report(potential_id, &build(grid.refined())?, lambdas, levels, &[], tolerances)?;
    let convergence = Convergence::between(&coarse, &fine);
    coarse.warnings.extend(convergence.warnings());
    Ok((coarse, fine, convergence))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    fn sampled(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> SampledFunction<f64> {
        SampledFunction::from_fn(Grid::new(a, b, n).unwrap(), f).unwrap()
    }

    /// Step function with the half value on a node that sits exactly on a jump.
    fn box_profile(height: f64, half_width: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| {
            let d = x.abs() - half_width;
            if d.abs() < 1e-9 {
                height / 2.0
            } else if d < 0.0 {
                height
            } else {
                0.0
            }
        }
    }

    fn oscillator(n: usize) -> Parent<f64> {
        let g = Grid::new(-10.0, 10.0, n).unwrap();
        let v = SampledFunction::from_fn(g, |x| x * x).unwrap();
        let u = SampledFunction::from_fn(g, |x: f64| (-x * x / 2.0).exp()).unwrap();
        Parent::with_ground_state(&v, u, 1.0).unwrap()
    }

    fn poschl_teller() -> Parent<f64> {
        let g = Grid::new(-15.0, 15.0, 3001).unwrap();
        let v = SampledFunction::from_fn(g, |x| -2.0 * sech(x).powi(2)).unwrap();
        let u = SampledFunction::from_fn(g, sech).unwrap();
        Parent::with_ground_state(&v, u, -1.0).unwrap()
    }

    // Closed-form |T|² for a rectangular barrier of height v0 and width a at energy e.
    fn barrier_transmission(v0: f64, a: f64, e: f64) -> f64 {
        if (e - v0).abs() < 1e-12 {
            1.0 / (1.0 + v0 * a * a / 4.0)
        } else if e < v0 {
            let kappa = (v0 - e).sqrt();
            1.0 / (1.0 + v0 * v0 * (kappa * a).sinh().powi(2) / (4.0 * e * (v0 - e)))
        } else {
            let kk = (e - v0).sqrt();
            1.0 / (1.0 + v0 * v0 * (kk * a).sin().powi(2) / (4.0 * e * (e - v0)))
        }
    }

    #[test]
    fn free_propagation() {
        let v = sampled(-10.0, 10.0, 1001, |_| 0.0);
        for k in [0.3, 1.0, 2.5] {
            let s = scattering_coefficients(&v, k, 1e-4).unwrap();
            assert!(s.r.norm() < 1e-10);
            assert!((s.t - Complex::new(1.0, 0.0)).norm() < 1e-10, "{:?}", s.t);
        }
    }

    #[test]
    fn poschl_teller_is_reflectionless() {
        let v = sampled(-15.0, 15.0, 3001, |x| -2.0 * sech(x).powi(2));
        for k in [0.5, 1.0, 2.0] {
            let s = scattering_coefficients(&v, k, 1e-4).unwrap();
            assert!(s.r.norm() < 1e-4, "{k}: {}", s.r.norm());
            assert!((s.t.norm() - 1.0).abs() < 1e-4);
            assert!(s.unitarity_defect < 1e-4);
        }
    }

    #[test]
    fn square_barrier_matches_closed_form() {
        let v = sampled(-10.0, 10.0, 8001, box_profile(1.0, 0.5));
        for k in [0.5, 1.0, 1.5] {
            let s = scattering_coefficients(&v, k, 1e-4).unwrap();
            let exact = barrier_transmission(1.0, 1.0, k * k);
            assert!((s.t.norm_sqr() - exact).abs() < 1e-3, "{k}: {} vs {exact}", s.t.norm_sqr());
        }
        assert!((barrier_transmission(1.0, 1.0, 1.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn scattering_rejects_bad_input() {
        let v = sampled(-5.0, 5.0, 501, |x| x * x);
        assert!(matches!(scattering_coefficients(&v, 1.0, 1e-4), Err(Error::NotShortRange { .. })));
        let v = sampled(-5.0, 5.0, 501, |_| 0.0);
        assert!(matches!(scattering_coefficients(&v, 0.0, 1e-4), Err(Error::Wavenumber(_))));
        assert!(matches!(scattering_coefficients(&v, -1.0, 1e-4), Err(Error::Wavenumber(_))));
    }

    #[test]
    fn scattering_invariance_examples() {
        let pt = poschl_teller();
        let d = scattering_invariance(&pt, 1.0, &[1.0], 1e-4).unwrap();
        assert!(d[0].transmission < 5e-4 && d[0].reflection < 5e-4, "{d:?}");
        let r = scattering_coefficients(&pt.physical_member_potential(1.0).unwrap(), 1.0, 1e-4).unwrap();
        assert!((r.t.norm() - 1.0).abs() < 5e-4 && r.r.norm() < 5e-4);

        let big = scattering_invariance(&pt, 1e8, &[0.5, 1.0, 2.0], 1e-4).unwrap();
        assert!(big.iter().all(|d| d.reflection < 1e-8 && d.transmission < 1e-8), "{big:?}");

        let g = Grid::new(-12.0, 12.0, 4801).unwrap();
        let v = SampledFunction::from_fn(g, box_profile(-2.0, 1.0)).unwrap();
        let well = Parent::from_potential(&v).unwrap();
        let d = scattering_invariance(&well, 0.5, &[0.5, 1.0, 2.0], 1e-4).unwrap();
        assert!(d.iter().all(|d| d.reflection < 1e-3 && d.transmission < 1e-3), "{d:?}");
    }

    #[test]
    fn scattering_deltas_decay_like_inverse_lambda() {
        let g = Grid::new(-12.0, 12.0, 4801).unwrap();
        let v = SampledFunction::from_fn(g, box_profile(-2.0, 1.0)).unwrap();
        let well = Parent::from_potential(&v).unwrap();
        let worst = |l: f64| {
            let d = scattering_invariance(&well, l, &[1.0], 1e-4).unwrap()[0];
            d.reflection.max(d.transmission)
        };
        let (a, b) = (worst(10.0), worst(100.0));
        assert!(b <= a / 5.0 || b < 1e-9, "{a} {b}");
    }

    #[test]
    fn isospectrality_examples() {
        let p = oscillator(2001);
        let r = isospectrality_report("harmonic", &p, &[0.5, 1.0, 5.0], 5, &[], Tolerances::default()).unwrap();
        assert!(r.max_spectrum_delta() < 5e-3, "{}", r.max_spectrum_delta());
        assert!(r.passed, "{r:?}");
        assert_eq!(r.spectrum_deltas.len(), 3);
        assert_eq!(r.spectrum_deltas[0].len(), 5);
        assert!((r.parent_spectrum[0] - 1.0).abs() < 1e-3);

        let r = isospectrality_report("harmonic", &p, &[1e8], 5, &[], Tolerances::default()).unwrap();
        assert!(r.max_spectrum_delta() < 1e-9, "{}", r.max_spectrum_delta());

        let pt = poschl_teller();
        let r = isospectrality_report("poschl_teller", &pt, &[1.0], 1, &[], Tolerances::default()).unwrap();
        assert!(r.max_spectrum_delta() < 1e-3);

        let err = isospectrality_report("harmonic", &p, &[1.0, -0.5], 5, &[], Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::SingularBand { lambda, .. } if lambda == -0.5));
    }

    #[test]
    fn partner_uniqueness_examples() {
        let p = oscillator(2001);
        let d = partner_uniqueness(&p, &[1.0, 1e8, -2.0]).unwrap();
        assert!(d[0] < 1e-4 && d[2] < 1e-4, "{d:?}");
        assert!(d[1] < 1e-8, "{d:?}");
        assert!(partner_uniqueness(&p, &[-0.5]).is_err());
    }

    #[test]
    fn ground_state_residual_examples() {
        let p = oscillator(2001);
        assert!(ground_state_residual(&p.member(1.0).unwrap()).unwrap() < 1e-3);
        assert!(ground_state_residual(&p.member(-2.0).unwrap()).unwrap() < 1e-3);
        let parent = eigen_residual(&p.potential, &p.ground_state.samples, 0.0).unwrap();
        let big = ground_state_residual(&p.member(1e8).unwrap()).unwrap();
        assert!((big - parent).abs() < 1e-6);
    }

    #[test]
    fn refinement_tightens_every_delta() {
        let build = |g: Grid<f64>| {
            let v = SampledFunction::from_fn(g, |x| x * x)?;
            let u = SampledFunction::from_fn(g, |x: f64| (-x * x / 2.0).exp())?;
            Parent::with_ground_state(&v, u, 1.0)
        };
        let g = Grid::new(-10.0, 10.0, 2001).unwrap();
        let (coarse, fine, c) =
            refinement_study("harmonic", build, g, &[0.5, 1.0, 5.0, -2.0], 5, Tolerances::default()).unwrap();
        assert!(coarse.passed && fine.passed);
        assert!(c.stalled().is_empty(), "{c:?}");
        assert!(coarse.warnings.is_empty(), "{:?}", coarse.warnings);
    }

    #[test]
    fn coarse_grid_warning() {
        let p = oscillator(201);
        let r = isospectrality_report("harmonic", &p, &[1.0], 3, &[], Tolerances::default()).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("coarse")));
    }

    #[test]
    fn report_serializes() {
        let p = oscillator(2001);
        let r = isospectrality_report("harmonic", &p, &[1.0], 2, &[], Tolerances::default()).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["potential_id"], "harmonic");
        assert_eq!(json["spectrum_deltas"][0].as_array().unwrap().len(), 2);
        assert_eq!(json["passed"], true);
    }
}
