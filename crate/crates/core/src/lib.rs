//! Numerical laboratory for quantum metastability in the delta-shell well:
//! the complex resonance spectrum, exact wave-packet survival probability
//! and its non-exponential regimes, finite-temperature decay kinetics, and
//! the thermodynamics of the metastable phase — every approximate route
//! cross-checked against an exact numerical one.
//!
//! The well is a hard wall at the origin plus a barrier
//! `(lambda/a) delta(x - a)`; units are natural (`hbar = m = 1`). All
//! numerics are generic over the scalar type through [`num::Real`]; the
//! `f64` aliases below are the production instantiation.

pub mod filon;
pub mod kinetics;
pub mod model;
pub mod num;
pub mod oracle;
pub mod propagation;
pub mod quad;
pub mod scattering;
pub mod solver;
pub mod thermo;
pub mod validate;

pub use model::{
    make_initial_state, InitialState, Method, ModelError, PotentialSpec, Resonance, StateKind,
    SurvivalCurve,
};
pub use num::Real;

/// Production scalar type.
pub type F = f64;
/// Complex number over the production scalar.
pub type Complex = num_complex::Complex<F>;

pub type Potential64 = PotentialSpec<F>;
pub type Resonance64 = Resonance<F>;
pub type InitialState64 = InitialState<F>;
pub type SurvivalCurve64 = SurvivalCurve<F>;
pub type TwoLevelModel64 = kinetics::TwoLevelModel<F>;
pub type SpectralPlan64 = propagation::SpectralPlan<F>;
