//! Decay at finite temperature: Boltzmann occupation of the resonances and
//! the exactly solvable two-level kinetic model with bath coupling.
//!
//! The paper-level limits (overdamped and underdamped) are recovered as
//! tested asymptotics of the exact eigen-solution rather than assumed.

use crate::model::Resonance;
use crate::num::{pairwise_sum, Real};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KineticsError {
    #[error("empty resonance list")]
    EmptyEnsemble,
    #[error("inverse temperature must be nonnegative and finite")]
    BadBeta,
    #[error("zero decay rate in the ensemble; lifetime average undefined")]
    ZeroRate,
    #[error("level splitting must be positive, got {0}")]
    NonPositiveSplitting(f64),
    #[error("rates and couplings must be nonnegative and finite")]
    BadRates,
    #[error("populations must be nonnegative")]
    NegativePopulation,
}

/// Boltzmann weights `e^{-beta eps_n} / Z`, overflow-safe via max-shift.
pub fn thermal_weights<T: Real>(
    resonances: &[Resonance<T>],
    beta: T,
) -> Result<Vec<T>, KineticsError> {
    if resonances.is_empty() {
        return Err(KineticsError::EmptyEnsemble);
    }
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(KineticsError::BadBeta);
    }
    let e_min = resonances.iter().map(|r| r.epsilon()).fold(T::infinity(), T::min);
    let raw: Vec<T> = resonances.iter().map(|r| (-beta * (r.epsilon() - e_min)).exp()).collect();
    let z = pairwise_sum(&raw);
    Ok(raw.into_iter().map(|w| w / z).collect())
}

/// Thermal-average decay rate `<Gamma> = sum_n w_n Gamma_n`.
pub fn thermal_average_rate<T: Real>(
    resonances: &[Resonance<T>],
    beta: T,
) -> Result<T, KineticsError> {
    let w = thermal_weights(resonances, beta)?;
    let terms: Vec<T> = w.iter().zip(resonances).map(|(&w, r)| w * r.gamma()).collect();
    Ok(pairwise_sum(&terms))
}

/// Thermal averages answering the "rate or lifetime?" question: both
/// `<Gamma>` and `1/<tau>` for the same ensemble.
#[derive(Debug, Clone, Copy)]
pub struct RateLifetimePair<T> {
    pub mean_rate: T,
    pub mean_lifetime: T,
    pub inverse_mean_lifetime: T,
}

/// Thermal-average lifetime `<tau> = sum_n w_n / Gamma_n`, returned together
/// with `<Gamma>`; Jensen's inequality makes `<Gamma> >= 1/<tau>` with
/// equality only for a flat rate spectrum.
pub fn thermal_average_lifetime<T: Real>(
    resonances: &[Resonance<T>],
    beta: T,
) -> Result<RateLifetimePair<T>, KineticsError> {
    let w = thermal_weights(resonances, beta)?;
    if resonances.iter().any(|r| !(r.gamma() > T::zero())) {
        return Err(KineticsError::ZeroRate);
    }
    let taus: Vec<T> = w.iter().zip(resonances).map(|(&w, r)| w / r.gamma()).collect();
    let mean_lifetime = pairwise_sum(&taus);
    let mean_rate = thermal_average_rate(resonances, beta)?;
    Ok(RateLifetimePair { mean_rate, mean_lifetime, inverse_mean_lifetime: mean_lifetime.recip() })
}

/// Two metastable levels coupled to a heat bath: intrinsic decay rates
/// `gamma1`, `gamma2`, bath exchange rate `bath`, level splitting
/// `E = eps2 - eps1 > 0` and inverse temperature `beta`.
#[derive(Debug, Clone, Copy)]
pub struct TwoLevelModel<T> {
    eps1: T,
    eps2: T,
    gamma1: T,
    gamma2: T,
    bath: T,
    beta: T,
}

impl<T: Real> TwoLevelModel<T> {
    pub fn new(
        eps1: T,
        eps2: T,
        gamma1: T,
        gamma2: T,
        bath: T,
        beta: T,
    ) -> Result<Self, KineticsError> {
        if !(eps2 - eps1 > T::zero()) {
            return Err(KineticsError::NonPositiveSplitting(
                (eps2 - eps1).to_f64().unwrap_or(f64::NAN),
            ));
        }
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(KineticsError::BadBeta);
        }
        for v in [gamma1, gamma2, bath] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(KineticsError::BadRates);
            }
        }
        Ok(TwoLevelModel { eps1, eps2, gamma1, gamma2, bath, beta })
    }

    pub fn splitting(&self) -> T {
        self.eps2 - self.eps1
    }

    pub fn gamma1(&self) -> T {
        self.gamma1
    }

    pub fn gamma2(&self) -> T {
        self.gamma2
    }

    pub fn bath(&self) -> T {
        self.bath
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn eps1(&self) -> T {
        self.eps1
    }

    pub fn eps2(&self) -> T {
        self.eps2
    }

    /// Boltzmann factor `q = e^{-beta E}` of the splitting.
    pub fn boltzmann(&self) -> T {
        (-self.beta * self.splitting()).exp()
    }

    /// Thermal-average rate `(Gamma_1 + q Gamma_2) / (1 + q)` of the pair.
    pub fn mean_rate(&self) -> T {
        let q = self.boltzmann();
        (self.gamma1 + q * self.gamma2) / (T::one() + q)
    }
}

/// Level populations at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations<T> {
    pub t: T,
    pub n1: T,
    pub n2: T,
}

/// Generator of the kinetics, `d(n1, n2)/dt = M (n1, n2)`:
/// natural decay on the diagonal, bath exchange with detailed balance.
pub fn rate_matrix<T: Real>(model: &TwoLevelModel<T>) -> [[T; 2]; 2] {
    let q = model.boltzmann();
    let g = model.bath;
    [[-model.gamma1 - g * q, g], [g * q, -model.gamma2 - g]]
}

/// One decay eigenmode: `(n1, n2) ~ v e^{-rate t}`.
#[derive(Debug, Clone, Copy)]
pub struct DecayMode<T> {
    pub rate: T,
    /// Eigenvector normalized so its first entry of significant size is 1.
    pub vector: [T; 2],
}

/// Both eigenmodes, slow first. The rates are the roots of
///
/// ```text
/// r^2 - [G1 + G2 + (1 + q) G] r + G1 G2 + (G1 + q G2) G = 0,
/// ```
///
/// real and positive for every admissible model: the discriminant equals
/// `[G1 - G2 - (1 - q) G]^2 + 4 q G^2 >= 0`. The slow root is computed from
/// the product form to avoid cancellation.
pub fn decay_eigenmodes<T: Real>(model: &TwoLevelModel<T>) -> [DecayMode<T>; 2] {
    let q = model.boltzmann();
    let (g1, g2, g) = (model.gamma1, model.gamma2, model.bath);
    let sum = g1 + g2 + (T::one() + q) * g;
    let prod = g1 * g2 + (g1 + q * g2) * g;
    let disc = {
        let u = g1 - g2 - (T::one() - q) * g;
        u * u + T::of(4.0) * q * g * g
    };
    let root = disc.max(T::zero()).sqrt();
    let fast = (sum + root) * T::of(0.5);
    let slow = if fast > T::zero() { prod / fast } else { T::zero() };

    let m = rate_matrix(model);
    let vector_for = |rate: T| -> [T; 2] {
        // (M + r I) v = 0: candidate null vectors from either row.
        let c1 = [m[0][1], -(m[0][0] + rate)];
        let c2 = [-(m[1][1] + rate), m[1][0]];
        let n1 = c1[0].abs() + c1[1].abs();
        let n2 = c2[0].abs() + c2[1].abs();
        let v = if n1 >= n2 { c1 } else { c2 };
        let scale = if v[0].abs() > T::of(1e-3) * (v[0].abs() + v[1].abs()) { v[0] } else { v[1] };
        [v[0] / scale, v[1] / scale]
    };
    [DecayMode { rate: slow, vector: vector_for(slow) }, DecayMode { rate: fast, vector: vector_for(fast) }]
}

/// Exact populations from the eigen-decomposition. `bath = 0` decouples the
/// levels and is solved in closed form (also covering the degenerate-rate
/// case).
pub fn evolve_populations<T: Real>(
    model: &TwoLevelModel<T>,
    n10: T,
    n20: T,
    times: &[T],
) -> Result<Vec<Populations<T>>, KineticsError> {
    if !(n10 >= T::zero() && n20 >= T::zero()) {
        return Err(KineticsError::NegativePopulation);
    }
    if model.bath == T::zero() {
        return Ok(times
            .iter()
            .map(|&t| Populations {
                t,
                n1: n10 * (-model.gamma1 * t).exp(),
                n2: n20 * (-model.gamma2 * t).exp(),
            })
            .collect());
    }
    let [slow, fast] = decay_eigenmodes(model);
    // Solve [v_slow v_fast] (alpha, beta) = (n10, n20).
    let det = slow.vector[0] * fast.vector[1] - fast.vector[0] * slow.vector[1];
    let alpha = (n10 * fast.vector[1] - fast.vector[0] * n20) / det;
    let beta = (slow.vector[0] * n20 - n10 * slow.vector[1]) / det;
    Ok(times
        .iter()
        .map(|&t| {
            let es = (-slow.rate * t).exp();
            let ef = (-fast.rate * t).exp();
            Populations {
                t,
                n1: alpha * slow.vector[0] * es + beta * fast.vector[0] * ef,
                n2: alpha * slow.vector[1] * es + beta * fast.vector[1] * ef,
            }
        })
        .collect())
}

/// Damping regime of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Overdamped,
    Underdamped,
    Intermediate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Overdamped => "overdamped",
            Regime::Underdamped => "underdamped",
            Regime::Intermediate => "intermediate",
        }
    }
}

/// Default classification thresholds: overdamped at `bath >= 10 max(G1,G2)`,
/// underdamped at `bath <= 0.1 min(G1,G2)`.
pub fn regime_classify<T: Real>(model: &TwoLevelModel<T>) -> Regime {
    regime_classify_with(model, T::of(10.0), T::of(0.1))
}

pub fn regime_classify_with<T: Real>(model: &TwoLevelModel<T>, over: T, under: T) -> Regime {
    let hi = model.gamma1.max(model.gamma2);
    let lo = model.gamma1.min(model.gamma2);
    if model.bath >= over * hi {
        Regime::Overdamped
    } else if model.bath <= under * lo {
        Regime::Underdamped
    } else {
        Regime::Intermediate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(eps_gamma: &[(f64, f64)]) -> Vec<Resonance<f64>> {
        eps_gamma
            .iter()
            .enumerate()
            .map(|(i, &(e, g))| Resonance::from_energy(i as u32 + 1, e, g).unwrap())
            .collect()
    }

    fn example_model() -> TwoLevelModel<f64> {
        // beta E = ln 2, gamma = (1e-3, 8e-3), bath = 1
        TwoLevelModel::new(0.0, 1.0, 1e-3, 8e-3, 1.0, 2.0f64.ln()).unwrap()
    }

    #[test]
    fn weights_flat_at_infinite_temperature() {
        let rs = synthetic(&[(1.0, 1e-3), (2.0, 2e-3), (3.0, 3e-3), (4.0, 4e-3)]);
        let w = thermal_weights(&rs, 0.0).unwrap();
        for &wi in &w {
            assert!((wi - 0.25).abs() < 1e-15);
        }
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weights_ground_state_dominance() {
        // beta (eps2 - eps1) = 50: the upper weight is e^-50 < 1e-20.
        let rs = synthetic(&[(1.0, 1e-3), (2.0, 2e-3)]);
        let w = thermal_weights(&rs, 50.0).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-20);
        assert!(w[1] < 2e-22);
    }

    #[test]
    fn weights_two_thirds_one_third() {
        // beta E = ln 2 puts weights at (2/3, 1/3).
        let rs = synthetic(&[(0.0, 1e-3), (1.0, 2e-3)]);
        let w = thermal_weights(&rs, 2.0f64.ln()).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn average_rate_examples() {
        let rs = synthetic(&[(0.0, 1e-3), (1.0, 8e-3)]);
        let beta = 2.0f64.ln();
        let g = thermal_average_rate(&rs, beta).unwrap();
        assert!((g - (1e-3 + 0.5 * 8e-3) / 1.5).abs() < 1e-16);
        assert!((g - 3.3333e-3).abs() < 1e-7);
        // beta -> large: ground-state rate
        let g_cold = thermal_average_rate(&rs, 1e3).unwrap();
        assert!((g_cold - 1e-3).abs() < 1e-15);
        // flat rates: average equals the common rate at any temperature
        let flat = synthetic(&[(0.0, 5e-3), (1.0, 5e-3), (2.5, 5e-3)]);
        for beta in [0.0, 0.3, 7.0] {
            assert!((thermal_average_rate(&flat, beta).unwrap() - 5e-3).abs() < 1e-17);
        }
    }

    #[test]
    fn average_lifetime_examples() {
        let rs = synthetic(&[(0.0, 1e-3), (1.0, 8e-3)]);
        let pair = thermal_average_lifetime(&rs, 2.0f64.ln()).unwrap();
        assert!((pair.mean_lifetime - (1000.0 + 0.5 * 125.0) / 1.5).abs() < 1e-10);
        assert!((pair.mean_lifetime - 708.33).abs() < 0.01);
        // single level: <tau> = 1/Gamma = 1/<Gamma>
        let single = synthetic(&[(1.0, 4e-3)]);
        let p1 = thermal_average_lifetime(&single, 1.0).unwrap();
        assert!((p1.mean_lifetime - 250.0).abs() < 1e-10);
        assert!((p1.inverse_mean_lifetime - p1.mean_rate).abs() < 1e-18);
        // Jensen: <Gamma> >= 1/<tau>, strict for distinct rates
        assert!(pair.mean_rate > pair.inverse_mean_lifetime);
    }

    #[test]
    fn rate_matrix_structure() {
        // bath = 0: diagonal decay
        let free = TwoLevelModel::<f64>::new(0.0, 1.0, 1e-3, 8e-3, 0.0, 1.0).unwrap();
        let m = rate_matrix(&free);
        assert_eq!(m[0][1], 0.0);
        assert_eq!(m[1][0], 0.0);
        assert_eq!(m[0][0], -1e-3);
        assert_eq!(m[1][1], -8e-3);
        // pure bath: columns sum to zero (population exchange conserves n1+n2)
        let pure = TwoLevelModel::<f64>::new(0.0, 1.0, 0.0, 0.0, 0.7, 1.3).unwrap();
        let m = rate_matrix(&pure);
        assert!((m[0][0] + m[1][0]).abs() < 1e-18);
        assert!((m[0][1] + m[1][1]).abs() < 1e-18);
        // detailed balance: stationary vector (1, q)
        let q = pure.boltzmann();
        let v = [1.0, q];
        let mv = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        assert!(mv[0].abs() < 1e-16 && mv[1].abs() < 1e-16);
    }

    #[test]
    fn eigenmodes_match_frozen_values() {
        // Frozen quadratic roots for the example model:
        // slow = 3.3259...e-3, fast = 1.50559...
        let model = example_model();
        let [slow, fast] = decay_eigenmodes(&model);
        assert!((slow.rate - 3.3260e-3).abs() < 1e-6, "{}", slow.rate);
        assert!((fast.rate - 1.5056).abs() < 1e-4, "{}", fast.rate);
        // slow rate approximates <Gamma> to ~0.3% in the overdamped regime
        let rel = (slow.rate - model.mean_rate()).abs() / model.mean_rate();
        assert!(rel < 3e-3, "rel {rel}");
        // characteristic-equation residual at 1e-14 relative
        let q = model.boltzmann();
        let sum = 1e-3 + 8e-3 + (1.0 + q) * 1.0;
        let prod = 1e-3 * 8e-3 + (1e-3 + q * 8e-3) * 1.0;
        for r in [slow.rate, fast.rate] {
            let res = r * r - sum * r + prod;
            let scale = r * r + sum * r + prod;
            assert!(res.abs() < 1e-14 * scale);
        }
        // overdamped slow eigenvector ~ (1, q)
        assert!((slow.vector[0] - 1.0).abs() < 1e-12);
        assert!((slow.vector[1] - q).abs() < 0.01);
    }

    #[test]
    fn eigenvector_residuals_small() {
        for (g1, g2, g, beta) in
            [(1e-3f64, 8e-3, 1.0, 0.69), (0.3, 0.1, 0.05, 2.0), (2.0, 1.0, 3.0, 0.0)]
        {
            let model = TwoLevelModel::new(0.0, 1.0, g1, g2, g, beta).unwrap();
            let m = rate_matrix(&model);
            let norm_m = m.iter().flatten().fold(0.0f64, |acc, &v| acc.max(v.abs()));
            for mode in decay_eigenmodes(&model) {
                let v = mode.vector;
                let r = [
                    m[0][0] * v[0] + m[0][1] * v[1] + mode.rate * v[0],
                    m[1][0] * v[0] + m[1][1] * v[1] + mode.rate * v[1],
                ];
                let vn = v[0].abs().max(v[1].abs());
                assert!(r[0].abs().max(r[1].abs()) < 1e-12 * norm_m * vn.max(1.0));
            }
        }
    }

    #[test]
    fn decoupled_limit_exact() {
        let model = TwoLevelModel::<f64>::new(0.0, 1.0, 1e-3, 8e-3, 0.0, 1.0).unwrap();
        let [slow, fast] = decay_eigenmodes(&model);
        assert!((slow.rate - 1e-3).abs() < 1e-18);
        assert!((fast.rate - 8e-3).abs() < 1e-18);
        // populations decay with their own rates, exactly
        let pops = evolve_populations(&model, 1.0, 1.0, &[0.0, 100.0, 700.0]).unwrap();
        assert_eq!(pops[0].n1, 1.0);
        assert_eq!(pops[0].n2, 1.0);
        assert!((pops[2].n1 - (-0.7f64).exp()).abs() < 1e-15);
        assert!((pops[2].n2 - (-5.6f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn conservation_without_decay() {
        let model = TwoLevelModel::<f64>::new(0.0, 1.0, 0.0, 0.0, 0.9, 1.1).unwrap();
        let pops = evolve_populations(&model, 0.3, 0.9, &[0.0, 0.5, 5.0, 50.0]).unwrap();
        for p in &pops {
            assert!((p.n1 + p.n2 - 1.2).abs() < 1e-14, "t={}", p.t);
            assert!(p.n1 >= 0.0 && p.n2 >= 0.0);
        }
        // long-time ratio reaches detailed balance
        let last = pops.last().unwrap();
        assert!((last.n2 / last.n1 - model.boltzmann()).abs() < 1e-10);
    }

    #[test]
    fn thermalization_ratio_in_overdamped_model() {
        // Started from (1, 0), n2/n1 approaches e^{-beta E} within 1% for
        // t > 5 / fast rate.
        let model = example_model();
        let [_, fast] = decay_eigenmodes(&model);
        let times: Vec<f64> = [6.0, 8.0, 12.0].iter().map(|s| s / fast.rate).collect();
        let pops = evolve_populations(&model, 1.0, 0.0, &times).unwrap();
        let q = model.boltzmann();
        for p in &pops {
            assert!((p.n2 / p.n1 - q).abs() / q < 0.01, "t={} ratio={}", p.t, p.n2 / p.n1);
        }
    }

    #[test]
    fn initial_conditions_reproduced_exactly() {
        let model = example_model();
        let pops = evolve_populations(&model, 0.4, 0.6, &[0.0]).unwrap();
        assert!((pops[0].n1 - 0.4).abs() < 1e-14);
        assert!((pops[0].n2 - 0.6).abs() < 1e-14);
    }

    #[test]
    fn regime_thresholds() {
        let m = |bath: f64| TwoLevelModel::new(0.0, 1.0, 1e-3, 8e-3, bath, 2.0f64.ln()).unwrap();
        assert_eq!(regime_classify(&m(1.0)), Regime::Overdamped);
        assert_eq!(regime_classify(&m(1e-6)), Regime::Underdamped);
        assert_eq!(regime_classify(&m(3e-3)), Regime::Intermediate);
    }

    #[test]
    fn overdamped_slow_rate_error_shrinks_per_decade() {
        let base = 8e-3f64;
        let mut prev_err = f64::INFINITY;
        for decade in [1e2, 1e3, 1e4] {
            let model = TwoLevelModel::<f64>::new(0.0, 1.0, 1e-3, 8e-3, base * decade, 0.69).unwrap();
            let [slow, _] = decay_eigenmodes(&model);
            let err = (slow.rate - model.mean_rate()).abs() / model.mean_rate();
            assert!(err < prev_err / 5.0, "decade {decade}: {err} vs {prev_err}");
            prev_err = err;
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            TwoLevelModel::<f64>::new(1.0, 0.5, 1e-3, 8e-3, 1.0, 1.0),
            Err(KineticsError::NonPositiveSplitting(_))
        ));
        assert!(TwoLevelModel::<f64>::new(0.0, 1.0, -1e-3, 8e-3, 1.0, 1.0).is_err());
        // a width so small it underflows to Gamma = 0
        let flat = Resonance::from_wavenumber(1, num_complex::Complex::new(1e-200, -1e-200)).unwrap();
        assert_eq!(flat.gamma(), 0.0);
        assert!(matches!(thermal_average_lifetime(&[flat], 1.0), Err(KineticsError::ZeroRate)));
        assert!(thermal_weights::<f64>(&[], 1.0).is_err());
    }
}
