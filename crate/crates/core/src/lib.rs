//! Strictly isospectral deformations of one-dimensional Schrödinger
//! potentials built from the general solution of the Riccati equation,
//! together with the nonlinear superposition rule its solutions obey.
//!
//! Units are `ħ = 2m = 1`, so `H = -d²/dx² + V(x)`. Every routine is generic
//! over the scalar ([`Real`]: `f32` or `f64`); the `*64` aliases cover the
//! common case.

// negated comparisons are used deliberately so NaN fails every check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod multiparam;
pub mod riccati;
pub mod scalar;
pub mod schrodinger;
pub mod susy;
pub mod verify;

pub use num_complex;

pub use error::{Error, Result};
pub use grid::{Grid, SampledFunction};
pub use multiparam::{cross_order_invariant, extend, general_at_order, init_hierarchy, HierarchyState};
pub use riccati::{cross_ratio, lambda_cross_ratio, lambda_form_invariant, superpose, CrossRatio, RiccatiTriple};
pub use scalar::Real;
pub use schrodinger::{compute_spectrum, compute_zero_mode, solve_at_energy, spectrum_of, Spectrum, WaveFunction};
pub use susy::{
    deformed_ground_state, deformed_potential, double_darboux_reconstruct, fermionic_partner, general_superpotential,
    witten_superpotential, FamilyMember, Parent, Superpotential, SuperpotentialKind,
};
pub use verify::{isospectrality_report, scattering_coefficients, ScatteringData, Tolerances, VerificationReport};

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type SampledFunction64 = SampledFunction<f64>;
pub type SampledFunction32 = SampledFunction<f32>;
pub type WaveFunction64 = WaveFunction<f64>;
pub type WaveFunction32 = WaveFunction<f32>;
pub type Superpotential64 = Superpotential<f64>;
pub type Parent64 = Parent<f64>;
pub type FamilyMember64 = FamilyMember<f64>;
pub type CrossRatio64 = CrossRatio<f64>;
pub type HierarchyState64 = HierarchyState<f64>;
pub type ScatteringData64 = ScatteringData<f64>;
