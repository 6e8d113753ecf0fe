//! Thermodynamics of the metastable phase: the in-well partition function by
//! direct continuum quadrature, its Lorentzian spectral-density form, the
//! narrow-resonance free energy and the complex partition function whose
//! imaginary part carries the thermal-average decay rate.
//!
//! The full-line partition function contains an infinite-volume divergence
//! (a delta(0) normalization factor) and is deliberately not computed; the
//! volume-regularized density of states per unit length is `1/sqrt(2E)`,
//! with no trace of metastability — the in-well quantities below are where
//! the resonances show up.

use crate::kinetics::{thermal_average_rate, KineticsError};
use crate::model::{PotentialSpec, Resonance};
use crate::num::{pairwise_sum, Real, C};
use crate::quad::{integrate_adaptive, QuadError};
use crate::scattering::{amplitudes, resonance_breakpoints};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThermoError {
    #[error("inverse temperature must be positive and finite")]
    BadBeta,
    #[error("k_max = {k_max} below the Boltzmann decay scale 8/sqrt(beta) = {needed}")]
    KmaxTooSmall { k_max: f64, needed: f64 },
    #[error("empty resonance list")]
    EmptyEnsemble,
    #[error("complex partition function too close to the branch cut: |arg Z2| = {arg} > pi/2; outside the narrow-resonance regime")]
    BranchAmbiguity { arg: f64 },
    #[error("first-order form requires beta * max(Gamma_n) < 0.1, got {0}")]
    RegimeViolation(f64),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// In-well spectral density: one unit-weight Lorentzian per resonance,
/// `rho_1(E) = sum_n (1/pi) (Gamma_n/2) / ((E - eps_n)^2 + Gamma_n^2/4)`.
pub fn spectral_density_well<T: Real>(resonances: &[Resonance<T>], energy: T) -> T {
    let terms: Vec<T> = resonances
        .iter()
        .map(|r| {
            let half = r.gamma() * T::of(0.5);
            half / ((energy - r.epsilon()).powi(2) + half * half) / T::PI()
        })
        .collect();
    pairwise_sum(&terms)
}

/// Lorentzian-sum view of the in-well density with its defining resonance
/// set attached.
#[derive(Debug, Clone)]
pub struct SpectralDensityWell<T> {
    resonances: Vec<Resonance<T>>,
}

impl<T: Real> SpectralDensityWell<T> {
    pub fn new(resonances: Vec<Resonance<T>>) -> Result<Self, ThermoError> {
        if resonances.is_empty() {
            return Err(ThermoError::EmptyEnsemble);
        }
        Ok(SpectralDensityWell { resonances })
    }

    pub fn resonances(&self) -> &[Resonance<T>] {
        &self.resonances
    }

    pub fn evaluate(&self, energy: T) -> T {
        spectral_density_well(&self.resonances, energy)
    }
}

/// Direct in-well partition function with diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct PartitionDirect<T> {
    pub value: T,
    pub quad_error: T,
    /// Bound on the mass dropped beyond `k_max`.
    pub truncation_bound: T,
}

/// `Z_1 = int_0^kmax dk e^{-beta k^2/2} int_0^a |phi(k,x)|^2 dx` by
/// quadrature with resonance breakpoints. The inner integral is closed-form:
/// `|A(k)|^2 (a/2 - sin(2ka)/(4k)) / (2 pi)`.
pub fn partition_inside_direct<T: Real>(
    potential: &PotentialSpec<T>,
    beta: T,
    k_max: T,
) -> Result<PartitionDirect<T>, ThermoError> {
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(ThermoError::BadBeta);
    }
    let needed = T::of(8.0) / beta.sqrt();
    if k_max < needed {
        return Err(ThermoError::KmaxTooSmall {
            k_max: k_max.to_f64().unwrap_or(f64::NAN),
            needed: needed.to_f64().unwrap_or(f64::NAN),
        });
    }
    let a = potential.width();
    let integrand = |k: T| {
        if k <= T::zero() {
            return T::zero();
        }
        let a2 = amplitudes(potential, k).inside.norm_sqr();
        let inner = a * T::of(0.5) - (T::of(2.0) * k * a).sin() / (T::of(4.0) * k);
        (-beta * k * k * T::of(0.5)).exp() * a2 * inner / (T::of(2.0) * T::PI())
    };
    let bps = resonance_breakpoints(potential, k_max);
    let r = integrate_adaptive(&integrand, T::zero(), k_max, &bps, T::of(1e-13), T::of(1e-9), 40_000)?;
    // |A| <= 2 and the inner factor <= a: tail < (2a/pi) e^{-beta kmax^2/2} / (beta kmax)
    let truncation_bound = T::of(2.0) * a / T::PI() * (-beta * k_max * k_max * T::of(0.5)).exp()
        / (beta * k_max);
    Ok(PartitionDirect { value: r.value, quad_error: r.error, truncation_bound })
}

/// Narrow-resonance partition function and free energy:
/// `Z = sum_n e^{-beta eps_n}`, `F_1 = -(1/beta) ln Z`, both computed with a
/// max-shift so deep-cold ensembles neither overflow nor flush to zero.
pub fn partition_inside_narrow<T: Real>(
    resonances: &[Resonance<T>],
    beta: T,
) -> Result<(T, T), ThermoError> {
    if resonances.is_empty() {
        return Err(ThermoError::EmptyEnsemble);
    }
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(ThermoError::BadBeta);
    }
    let e_min = resonances.iter().map(|r| r.epsilon()).fold(T::infinity(), T::min);
    let shifted: Vec<T> = resonances.iter().map(|r| (-beta * (r.epsilon() - e_min)).exp()).collect();
    let s = pairwise_sum(&shifted);
    let z = (-beta * e_min).exp() * s;
    let f = e_min - s.ln() / beta;
    Ok((z, f))
}

/// Complex partition function built from the complex eigenenergies:
/// `Z_2 = sum_n e^{-beta (eps_n - i Gamma_n/2)}`, `F_2 = -(1/beta) ln Z_2`
/// on the principal branch.
pub fn complex_partition<T: Real>(
    resonances: &[Resonance<T>],
    beta: T,
) -> Result<(C<T>, C<T>), ThermoError> {
    if resonances.is_empty() {
        return Err(ThermoError::EmptyEnsemble);
    }
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(ThermoError::BadBeta);
    }
    let e_min = resonances.iter().map(|r| r.epsilon()).fold(T::infinity(), T::min);
    let terms: Vec<C<T>> = resonances
        .iter()
        .map(|r| {
            let arg = C::new(-beta * (r.epsilon() - e_min), beta * r.gamma() * T::of(0.5));
            arg.exp()
        })
        .collect();
    let s = crate::num::pairwise_sum_c(&terms);
    let arg = s.arg();
    if arg.abs() > T::FRAC_PI_2() {
        return Err(ThermoError::BranchAmbiguity { arg: arg.to_f64().unwrap_or(f64::NAN) });
    }
    let z = s * (-beta * e_min).exp();
    // F2 = -(1/beta)(ln|Z2| + i arg Z2), assembled from the shifted pieces
    // so the real part stays finite for deep-cold ensembles.
    let f = C::new(e_min - s.norm().ln() / beta, -arg / beta);
    Ok((z, f))
}

/// First-order imaginary free energy, `Im F_2 ~ -<Gamma>/2`, the value the
/// complex partition function must reproduce for small widths.
pub fn im_free_energy_firstorder<T: Real>(
    resonances: &[Resonance<T>],
    beta: T,
) -> Result<T, ThermoError> {
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(ThermoError::BadBeta);
    }
    let gmax = resonances.iter().map(|r| r.gamma()).fold(T::zero(), T::max);
    if beta * gmax >= T::of(0.1) {
        return Err(ThermoError::RegimeViolation((beta * gmax).to_f64().unwrap_or(f64::NAN)));
    }
    Ok(-thermal_average_rate(resonances, beta)? * T::of(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::resonance_spectrum;

    fn synthetic(eps_gamma: &[(f64, f64)]) -> Vec<Resonance<f64>> {
        eps_gamma
            .iter()
            .enumerate()
            .map(|(i, &(e, g))| Resonance::from_energy(i as u32 + 1, e, g).unwrap())
            .collect()
    }

    #[test]
    fn lorentzian_peak_and_halfwidth() {
        let rs = synthetic(&[(4.0, 2e-3)]);
        let peak = spectral_density_well(&rs, 4.0);
        assert!((peak - 2.0 / (std::f64::consts::PI * 2e-3)).abs() < 1e-9);
        let half = spectral_density_well(&rs, 4.0 + 1e-3);
        assert!((half - 0.5 * peak).abs() < 1e-9 * peak);
        let half2 = spectral_density_well(&rs, 4.0 - 1e-3);
        assert!((half2 - 0.5 * peak).abs() < 1e-9 * peak);
    }

    #[test]
    fn lorentzian_window_mass() {
        // +-50 half-widths carry 2 atan(100)/pi ~ 0.99363 of the unit mass.
        let rs = synthetic(&[(4.0, 2e-3)]);
        let g = 2e-3;
        let f = |e: f64| spectral_density_well(&rs, e);
        let r = integrate_adaptive(&f, 4.0 - 50.0 * g, 4.0 + 50.0 * g, &[4.0], 1e-12, 1e-12, 4000)
            .unwrap();
        let expect = 2.0 * (100.0f64).atan() / std::f64::consts::PI;
        assert!((r.value - expect).abs() < 1e-9);
        assert!((expect - 0.9937).abs() < 1e-4);
    }

    #[test]
    fn narrow_partition_closed_forms() {
        // single level: F1 = eps exactly
        let single = synthetic(&[(4.0, 1e-3)]);
        let (z, f) = partition_inside_narrow(&single, 2.0).unwrap();
        assert!((z - (-8.0f64).exp()).abs() < 1e-18);
        assert!((f - 4.0).abs() < 1e-14);
        // two levels at beta E = ln 2: Z = e^{-beta eps1} * 3/2
        let two = synthetic(&[(1.0, 1e-3), (2.0, 2e-3)]);
        let beta = 2.0f64.ln();
        let (z2, _) = partition_inside_narrow(&two, beta).unwrap();
        assert!((z2 - (-beta).exp() * 1.5).abs() < 1e-15);
        // beta -> 0+: Z -> level count
        let (z0, _) = partition_inside_narrow(&two, 1e-12).unwrap();
        assert!((z0 - 2.0).abs() < 1e-10);
        // deep cold: no underflow in F1
        let (_, fc) = partition_inside_narrow(&two, 2000.0).unwrap();
        assert!((fc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_partition_degenerate_and_single() {
        // all Gamma = 0 is not constructible as a Resonance; the degenerate
        // check uses a vanishingly small width instead.
        let rs = synthetic(&[(1.0, 1e-300), (2.0, 1e-300)]);
        let beta = 0.7;
        let (z2, f2) = complex_partition(&rs, beta).unwrap();
        let (z1, f1) = partition_inside_narrow(&rs, beta).unwrap();
        assert!((z2.re - z1).abs() < 1e-15 * z1);
        assert!(z2.im.abs() < 1e-15 * z1);
        assert!((f2.re - f1).abs() < 1e-14);
        assert!(f2.im.abs() < 1e-14);
        // single level: Im F2 = -Gamma/2 exactly
        let single = synthetic(&[(4.0, 6e-3)]);
        let (_, f) = complex_partition(&single, 3.0).unwrap();
        assert!((f.im + 3e-3).abs() < 1e-17);
    }

    #[test]
    fn complex_partition_matches_first_order() {
        let rs = synthetic(&[(0.0, 1e-3), (1.0, 8e-3)]);
        let beta = 2.0f64.ln();
        let (_, f2) = complex_partition(&rs, beta).unwrap();
        let first = im_free_energy_firstorder(&rs, beta).unwrap();
        assert!((first + 3.3333e-3 / 2.0).abs() < 1e-7);
        let rel = (f2.im - first).abs() / first.abs();
        let bg = beta * 8e-3;
        assert!(rel < bg * bg * 10.0, "rel {rel} vs bound {}", bg * bg * 10.0);
        // Im F2 <= 0 and Re F2 ~ F1
        assert!(f2.im <= 0.0);
        let (_, f1) = partition_inside_narrow(&rs, beta).unwrap();
        assert!((f2.re - f1).abs() / f1.abs().max(1.0) < bg * bg);
    }

    #[test]
    fn first_order_flat_ensemble_any_temperature() {
        let rs = synthetic(&[(0.0, 4e-3), (1.0, 4e-3), (3.0, 4e-3)]);
        for beta in [0.1, 1.0, 20.0] {
            let v = im_free_energy_firstorder(&rs, beta).unwrap();
            assert!((v + 2e-3).abs() < 1e-18);
        }
    }

    #[test]
    fn regime_guards() {
        let rs = synthetic(&[(0.0, 1e-3), (1.0, 8e-3)]);
        assert!(matches!(
            im_free_energy_firstorder(&rs, 100.0),
            Err(ThermoError::RegimeViolation(_))
        ));
        let wide = synthetic(&[(0.0, 5.0)]);
        assert!(matches!(complex_partition(&wide, 1.0), Err(ThermoError::BranchAmbiguity { .. })));
        assert!(partition_inside_direct(&PotentialSpec::<f64>::new(100.0, 1.0).unwrap(), 1.0, 2.0).is_err());
    }

    #[test]
    fn direct_partition_against_frozen_reference() {
        // lambda = 100, beta eps_1 = 2: frozen from an independent
        // quadrature, Z1 = 0.13567935; narrow sum agrees to 6e-5 relative.
        let p = PotentialSpec::<f64>::new(100.0, 1.0).unwrap();
        let rs = resonance_spectrum(&p, 10, true).unwrap();
        let beta = 2.0 / rs[0].epsilon();
        let k_max = rs[9].kappa() + 1.0;
        let direct = partition_inside_direct(&p, beta, k_max.max(8.0 / beta.sqrt())).unwrap();
        assert!((direct.value - 0.13567935).abs() < 1e-6, "{}", direct.value);
        let (zn, _) = partition_inside_narrow(&rs, beta).unwrap();
        assert!((direct.value / zn - 1.0).abs() < 7e-4);
    }

    #[test]
    fn direct_partition_lambda_insensitive() {
        // Doubling the opacity moves the resonance energies by O(1/lambda):
        // Z1 changes by under 2%.
        let beta = 0.41f64;
        let k_max = 40.0f64;
        let z100 = partition_inside_direct(&PotentialSpec::<f64>::new(100.0, 1.0).unwrap(), beta, k_max)
            .unwrap()
            .value;
        let z200 = partition_inside_direct(&PotentialSpec::<f64>::new(200.0, 1.0).unwrap(), beta, k_max)
            .unwrap()
            .value;
        assert!((z200 / z100 - 1.0).abs() < 0.02, "ratio {}", z200 / z100);
    }

    #[test]
    fn background_dominates_deep_cold_direct_partition() {
        // At beta eps_1 = 20 the low-energy continuum background
        // (~|A(0)|^2 beta^{-3/2}) exceeds e^{-beta eps_1} by orders of
        // magnitude, so the narrow-resonance form underestimates Z1 by a
        // factor ~430 (frozen from an independent quadrature). This is the
        // physical limit of the narrow-resonance approximation, not a
        // numerical artifact.
        let p = PotentialSpec::<f64>::new(100.0, 1.0).unwrap();
        let rs = resonance_spectrum(&p, 10, true).unwrap();
        let beta = 20.0 / rs[0].epsilon();
        let k_max = rs[9].kappa() + 1.0;
        let direct = partition_inside_direct(&p, beta, k_max).unwrap();
        assert!((direct.value - 8.9519239e-7).abs() < 2e-11, "{}", direct.value);
        let (zn, _) = partition_inside_narrow(&rs, beta).unwrap();
        let ratio = direct.value / zn;
        assert!((ratio - 434.3).abs() < 1.0, "ratio {ratio}");
    }
}
