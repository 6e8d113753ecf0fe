//! The validation suite: every numbered correctness claim the tool makes
//! about itself, runnable from the CLI (`validate`) and from the acceptance
//! tests. Runs on `f64`.

use crate::kinetics::{
    decay_eigenmodes, evolve_populations, thermal_average_lifetime, TwoLevelModel,
};
use crate::model::{log_time_grid, make_initial_state, PotentialSpec, StateKind};
use crate::oracle::{finite_difference_oracle, OracleConfig};
use crate::propagation::{
    crossover_time, fit_log_slope, fit_loglog_slope, longtime_tail, mode_coefficients,
    survival_modes, PlanConfig, SpectralPlan, SurvivalEvaluator,
};
use crate::scattering::{amplitudes, completeness_check};
use crate::solver::{
    asymptotic_resonance, quantization_residual, refine_resonance, resonance_spectrum,
    standard_resonance_count,
};
use crate::thermo::{complex_partition, partition_inside_direct, partition_inside_narrow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// One checked statement inside a criterion.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn le(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { label: label.into(), measured, bound, passed: measured <= bound }
    }

    fn ge(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { label: label.into(), measured, bound, passed: measured >= bound }
    }
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary_line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({:.3e} vs {:.3e})", c.label, c.measured, c.bound))
            .collect();
        if failed.is_empty() {
            format!("criterion {:2} [{}] {}", self.id, status, self.name)
        } else {
            format!("criterion {:2} [{}] {}: {}", self.id, status, self.name, failed.join("; "))
        }
    }
}

fn pot(lambda: f64, a: f64) -> PotentialSpec<f64> {
    PotentialSpec::new(lambda, a).expect("valid potential")
}

/// Criterion 1: refined residuals, seed deviation, root counting at
/// `lambda = 100`.
pub fn criterion_1() -> CriterionReport {
    let p = pot(100.0, 1.0);
    let mut checks = Vec::new();
    let spectrum = resonance_spectrum(&p, 5, true).expect("spectrum");
    for r in &spectrum {
        let h = quantization_residual(&p, r.k()).norm();
        let bound = 1e-13 * 100.0 * r.k().norm();
        checks.push(Check::le(format!("residual |h(k_{})|", r.index()), h, bound));
    }
    let seed = asymptotic_resonance(&p, 1).k();
    let dev = (spectrum[0].k() - seed).norm() / spectrum[0].k().norm();
    checks.push(Check::le("seed deviation n=1", dev, 1e-3));
    let count = standard_resonance_count(&p, 5).map(|c| c as f64).unwrap_or(f64::NAN);
    checks.push(Check::le("argument-principle count - 5", (count - 5.0).abs(), 0.0));
    CriterionReport { id: 1, name: "resonance spectrum at lambda=100", checks }
}

/// Criterion 2: seed-vs-refined error drops >= 50x from lambda=30 to 300.
pub fn criterion_2() -> CriterionReport {
    let rel_err = |lambda: f64| {
        let p = pot(lambda, 1.0);
        let seed = asymptotic_resonance(&p, 1).k();
        let root = refine_resonance(&p, seed).expect("refine").k();
        (root - seed).norm() / root.norm()
    };
    let ratio = rel_err(30.0) / rel_err(300.0);
    CriterionReport {
        id: 2,
        name: "asymptotic convergence in opacity",
        checks: vec![Check::ge("error(30)/error(300)", ratio, 50.0)],
    }
}

/// Criterion 3: reflected amplitude unimodular on random wavenumbers.
pub fn criterion_3() -> CriterionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for &lambda in &[5.0, 20.0, 100.0] {
        let p = pot(lambda, 1.0);
        for _ in 0..1000 {
            let k: f64 = rng.gen_range(1e-9..lambda);
            let dev = (amplitudes(&p, k).reflected.norm() - 1.0).abs();
            worst = worst.max(dev);
        }
    }
    CriterionReport {
        id: 3,
        name: "unitarity of the reflected amplitude",
        checks: vec![Check::le("max ||B|-1|", worst, 1e-12)],
    }
}

/// Criterion 4: weak-form completeness for well modes 1 and 2.
pub fn criterion_4() -> CriterionReport {
    let p = pot(20.0, 1.0);
    let k_max = 40.0 * PI;
    let mut checks = Vec::new();
    for m in [1u32, 2] {
        let s = make_initial_state(StateKind::WellMode { m }, &p).expect("state");
        let rep = completeness_check(&p, &s, &s, k_max).expect("completeness");
        checks.push(Check::le(format!("reconstruction error mode {m}"), rep.discrepancy, 1e-3));
    }
    CriterionReport { id: 4, name: "continuum completeness (weak form)", checks }
}

/// Shared heavy artifacts for criteria 5-8: one spectral plan and the mode
/// expansion at lambda = 20, mode 1.
pub struct SurvivalLab {
    pub potential: PotentialSpec<f64>,
    pub evaluator: SurvivalEvaluator<f64>,
    pub coeffs: crate::propagation::ModeCoefficients<f64>,
    pub tau1: f64,
    pub gamma1: f64,
}

impl SurvivalLab {
    pub fn build() -> Self {
        let potential = pot(20.0, 1.0);
        let state = make_initial_state(StateKind::WellMode { m: 1 }, &potential).expect("state");
        let spectrum = resonance_spectrum(&potential, 5, false).expect("spectrum");
        let coeffs = mode_coefficients(&state, &spectrum, &potential).expect("coefficients");
        let plan = SpectralPlan::new(&potential, &state, &PlanConfig::for_potential(&potential))
            .expect("plan");
        let evaluator = SurvivalEvaluator::new(plan);
        let tau1 = spectrum[0].lifetime();
        let gamma1 = spectrum[0].gamma();
        SurvivalLab { potential, evaluator, coeffs, tau1, gamma1 }
    }

    pub fn state(&self) -> crate::model::InitialState<f64> {
        make_initial_state(StateKind::WellMode { m: 1 }, &self.potential).expect("state")
    }
}

/// Criterion 5: exponential window — fitted log-slope equals -Gamma_1 within
/// 2%; mode sum tracks the exact curve within 3% on [2, 10] lifetimes.
pub fn criterion_5(lab: &SurvivalLab) -> CriterionReport {
    let mut checks = Vec::new();
    let fit_times: Vec<f64> = (0..=12).map(|i| lab.tau1 * (5.0 + 0.25 * i as f64)).collect();
    let fit_values: Vec<f64> = fit_times.iter().map(|&t| lab.evaluator.survival(t).0).collect();
    let (slope, _, _) = fit_log_slope(&fit_times, &fit_values);
    checks.push(Check::le(
        "log-slope vs -Gamma_1 rel err",
        ((-slope) - lab.gamma1).abs() / lab.gamma1,
        0.02,
    ));

    let window = log_time_grid(2.0 * lab.tau1, 10.0 * lab.tau1, 20);
    let exact: Vec<f64> = window.iter().map(|&t| lab.evaluator.survival(t).0).collect();
    let modes = survival_modes(&lab.coeffs, &window).expect("mode sum");
    let mut worst = 0.0f64;
    for (e, m) in exact.iter().zip(modes.values()) {
        worst = worst.max((e - m).abs() / e);
    }
    checks.push(Check::le("mode-sum vs exact rel dev", worst, 0.03));
    CriterionReport { id: 5, name: "exponential window at lambda=20", checks }
}

/// Criterion 6: finite-difference oracle vs exact quadrature within 2% on
/// [0, 10 tau_1].
pub fn criterion_6(lab: &SurvivalLab) -> CriterionReport {
    let state = lab.state();
    let t_final = 10.0 * lab.tau1;
    let cfg = OracleConfig::recommended(&lab.potential, &state, t_final, 24);
    let run = finite_difference_oracle(&lab.potential, &state, &cfg).expect("oracle run");
    let mut worst = 0.0f64;
    for (t, v, _, _) in run.curve.iter() {
        let exact = lab.evaluator.survival(t).0;
        worst = worst.max((v - exact).abs() / exact);
    }
    let mut checks = vec![Check::le("oracle vs exact rel dev", worst, 0.02)];
    checks.push(Check::le("norm drift", run.norm_drift, 1e-8 * t_final.max(1.0)));
    CriterionReport { id: 6, name: "finite-difference oracle equivalence", checks }
}

/// Criterion 7: power-law tail — log-log slope -3 +- 0.2 beyond three
/// crossover times, absolute level within 25% of the closed form.
pub fn criterion_7(lab: &SurvivalLab) -> CriterionReport {
    let state = lab.state();
    let cross = crossover_time(&lab.potential, &state, &lab.coeffs).expect("crossover");
    let window = log_time_grid(3.0 * cross.numeric, 10.0 * cross.numeric, 12);
    let values: Vec<f64> = window.iter().map(|&t| lab.evaluator.survival(t).0).collect();
    let (slope, _, _) = fit_loglog_slope(&window, &values);
    let mut checks = vec![Check::le("log-log slope vs -3", (slope + 3.0).abs(), 0.2)];
    let mut worst = 0.0f64;
    for (&t, &v) in window.iter().zip(&values) {
        let closed = longtime_tail(&lab.potential, &state, t);
        worst = worst.max((v / closed - 1.0).abs());
    }
    checks.push(Check::le("tail level vs closed form", worst, 0.25));
    CriterionReport { id: 7, name: "power-law tail", checks }
}

/// Criterion 8: bracketed crossover within factor 1.5 of the logarithmic
/// estimate at lambda = 20 and 100.
pub fn criterion_8() -> CriterionReport {
    let mut checks = Vec::new();
    for lambda in [20.0, 100.0] {
        let p = pot(lambda, 1.0);
        let s = make_initial_state(StateKind::WellMode { m: 1 }, &p).expect("state");
        let spectrum = resonance_spectrum(&p, 5, false).expect("spectrum");
        let coeffs = mode_coefficients(&s, &spectrum, &p).expect("coefficients");
        let rep = crossover_time(&p, &s, &coeffs).expect("crossover");
        let ratio = rep.numeric / rep.estimate;
        let factor = ratio.max(1.0 / ratio);
        checks.push(Check::le(format!("crossover factor, lambda={lambda}"), factor, 1.5));
    }
    CriterionReport { id: 8, name: "crossover time estimate", checks }
}

/// Criterion 9: two-level kinetics — characteristic equation, overdamped and
/// underdamped limits, thermalization, Jensen ordering.
pub fn criterion_9() -> CriterionReport {
    let mut checks = Vec::new();

    // characteristic residual at 1e-14 relative
    let model = TwoLevelModel::new(0.0, 1.0, 1e-3, 8e-3, 1.0, 2.0f64.ln()).expect("model");
    let q = model.boltzmann();
    let sum = 1e-3 + 8e-3 + (1.0 + q);
    let prod = 1e-3 * 8e-3 + (1e-3 + q * 8e-3);
    let mut worst = 0.0f64;
    for mode in decay_eigenmodes(&model) {
        let r = mode.rate;
        worst = worst.max((r * r - sum * r + prod).abs() / (r * r + sum * r + prod));
    }
    checks.push(Check::le("characteristic residual", worst, 1e-14));

    // overdamped limit: slow rate -> <Gamma> with ~10x error reduction per
    // decade of bath coupling
    let mut prev = f64::INFINITY;
    let mut shrink_ok = true;
    for bath in [0.8, 8.0, 80.0] {
        let m = TwoLevelModel::new(0.0, 1.0, 1e-3, 8e-3, bath, 2.0f64.ln()).expect("model");
        let [slow, _] = decay_eigenmodes(&m);
        let err = (slow.rate - m.mean_rate()).abs() / m.mean_rate();
        if err > prev / 5.0 {
            shrink_ok = false;
        }
        prev = err;
    }
    checks.push(Check::ge("overdamped error shrink per decade", if shrink_ok { 1.0 } else { 0.0 }, 1.0));

    // underdamped limit reproduces independent exponentials
    let und = TwoLevelModel::new(0.0, 1.0, 1e-3, 8e-3, 1e-9, 1.0).expect("model");
    let pops = evolve_populations(&und, 0.7, 0.4, &[250.0]).expect("populations");
    let dev = ((pops[0].n1 - 0.7 * (-0.25f64).exp()).abs() / (0.7 * (-0.25f64).exp()))
        .max((pops[0].n2 - 0.4 * (-2.0f64).exp()).abs() / (0.4 * (-2.0f64).exp()));
    checks.push(Check::le("underdamped decoupling rel dev", dev, 1e-6));

    // thermalization ratio within 1% past five fast-mode times
    let [_, fast] = decay_eigenmodes(&model);
    let times: Vec<f64> = [6.0, 9.0, 15.0].iter().map(|s| s / fast.rate).collect();
    let traj = evolve_populations(&model, 1.0, 0.0, &times).expect("populations");
    let mut worst_ratio = 0.0f64;
    for p in &traj {
        worst_ratio = worst_ratio.max((p.n2 / p.n1 - q).abs() / q);
    }
    checks.push(Check::le("thermalization ratio dev", worst_ratio, 0.01));

    // Jensen ordering over random ensembles
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut min_product = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.gen_range(2..6);
        let rs: Vec<crate::model::Resonance<f64>> = (0..n)
            .map(|i| {
                let eps = 1.0 + i as f64 + rng.gen_range(0.0..0.5);
                let gamma = 10f64.powf(rng.gen_range(-4.0..-1.0));
                crate::model::Resonance::from_energy(i as u32 + 1, eps, gamma).expect("resonance")
            })
            .collect();
        let beta = rng.gen_range(0.0..3.0);
        let pair = thermal_average_lifetime(&rs, beta).expect("pair");
        min_product = min_product.min(pair.mean_rate * pair.mean_lifetime);
    }
    checks.push(Check::ge("min <Gamma><tau> over ensembles", min_product, 1.0 - 1e-12));

    CriterionReport { id: 9, name: "two-level kinetics", checks }
}

/// Criterion 10: thermodynamic consistency chain, as stated: direct vs
/// narrow partition function within 5% at `beta eps_1 in {2, 5, 20}`, and
/// the first-order imaginary free energy over random narrow ensembles.
///
/// The `beta eps_1 = 20` leg fails on physics grounds: the in-well continuum
/// background scales like `|A(0)|^2 beta^{-3/2}` and dominates
/// `e^{-beta eps_1}` beyond `beta eps_1 ~ 10` at this opacity (measured
/// ratio ~434). The check is reported as stated rather than weakened.
pub fn criterion_10() -> CriterionReport {
    let p = pot(100.0, 1.0);
    let rs = resonance_spectrum(&p, 10, true).expect("spectrum");
    let mut checks = Vec::new();
    for be in [2.0, 5.0, 20.0] {
        let beta = be / rs[0].epsilon();
        let k_max = (rs[9].kappa() + 1.0).max(8.0 / beta.sqrt());
        let direct = partition_inside_direct(&p, beta, k_max).expect("direct");
        let (narrow, _) = partition_inside_narrow(&rs, beta).expect("narrow");
        checks.push(Check::le(
            format!("Z1 direct/narrow dev, beta eps1 = {be}"),
            (direct.value / narrow - 1.0).abs(),
            0.05,
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..6);
        let beta = rng.gen_range(0.2..2.0);
        let rs: Vec<crate::model::Resonance<f64>> = (0..n)
            .map(|i| {
                let eps = 1.0 + 1.5 * i as f64;
                let gamma = rng.gen_range(1e-4..0.08 / beta);
                crate::model::Resonance::from_energy(i as u32 + 1, eps, gamma).expect("resonance")
            })
            .collect();
        let (_, f2) = complex_partition(&rs, beta).expect("Z2");
        let first = crate::thermo::im_free_energy_firstorder(&rs, beta).expect("first order");
        let gmax = rs.iter().map(|r| r.gamma()).fold(0.0f64, f64::max);
        let bound = (beta * gmax).powi(2) * 10.0;
        let rel = (f2.im - first).abs() / first.abs();
        worst = worst.max(rel / bound);
    }
    checks.push(Check::le("Im F2 first-order remainder / bound", worst, 1.0));
    CriterionReport { id: 10, name: "thermodynamics chain", checks }
}

/// Criteria 1-10 (criterion 11, determinism of the CLI outputs, lives with
/// the CLI since it exercises the output pipeline).
pub fn run_fast() -> Vec<CriterionReport> {
    vec![criterion_1(), criterion_2(), criterion_3(), criterion_8(), criterion_9(), criterion_10()]
}

pub fn run_all() -> Vec<CriterionReport> {
    let lab = SurvivalLab::build();
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(&lab),
        criterion_6(&lab),
        criterion_7(&lab),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}
