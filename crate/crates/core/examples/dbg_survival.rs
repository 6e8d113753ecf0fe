use gamow_core::model::{make_initial_state, PotentialSpec, StateKind};
use gamow_core::propagation::*;
use gamow_core::solver::resonance_spectrum;
use std::time::Instant;

fn main() {
    let p = PotentialSpec::<f64>::new(20.0, 1.0).unwrap();
    let s = make_initial_state(StateKind::WellMode { m: 1 }, &p).unwrap();
    let spec = resonance_spectrum(&p, 5, false).unwrap();
    let tau = spec[0].lifetime();
    let gamma = spec[0].gamma();
    println!("tau1 = {tau:.6}, Gamma1 = {gamma:.8}");

    let t0 = Instant::now();
    let cfg = PlanConfig::for_potential(&p);
    let plan = match SpectralPlan::new(&p, &s, &cfg) {
        Ok(pl) => pl,
        Err(e) => { println!("plan error: {e}"); return; }
    };
    println!("plan: {} panels, est err {:.3e}, built in {:?}", plan.panel_count(), plan.error_bound(), t0.elapsed());

    let t0 = Instant::now();
    let ev = SurvivalEvaluator::new(plan);
    println!("evaluator built in {:?}", t0.elapsed());

    let t0 = Instant::now();
    let (p0, e0) = ev.survival(0.0);
    println!("P(0) = {p0:.8} (est err {e0:.2e})  [{:?}]", t0.elapsed());

    // psi(x=0.5, 0) should be sqrt(2) sin(pi/2) = 1.41421
    let psi0 = ev.plan().psi(0.5, 0.0);
    println!("psi(0.5, 0) = {psi0:?} vs sqrt2 = {}", 2f64.sqrt());

    // decay at one lifetime: |psi(0.5, tau)|^2 ~ e^-1 |psi(0.5,0)|^2
    let psit = ev.plan().psi(0.5, tau);
    println!("|psi(0.5,tau)|^2 / |psi(0.5,0)|^2 = {} vs e^-1 = {}", psit.norm_sqr()/psi0.norm_sqr(), (-1f64).exp());

    // exponential window
    let times: Vec<f64> = (0..=12).map(|i| tau * (5.0 + 0.25 * i as f64)).collect();
    let t0 = Instant::now();
    let vals: Vec<f64> = times.iter().map(|&t| ev.survival(t).0).collect();
    println!("13 window samples in {:?}", t0.elapsed());
    let (slope, _, res) = fit_log_slope(&times, &vals);
    println!("window slope = {:.8} vs -Gamma1 = {:.8}  rel dev {:.4e}  (fit res {:.2e})", slope, -gamma, ((-slope)-gamma).abs()/gamma, res);

    // mode sum comparison at 2tau and 10tau
    let mc = mode_coefficients(&s, &spec, &p).unwrap();
    for f in [2.0, 6.0, 10.0] {
        let t = f * tau;
        let ex = ev.survival(t).0;
        let ms: f64 = mc.resonances().iter().zip(mc.c()).map(|(r, c)| c.norm_sqr() * (-r.gamma() * t).exp()).sum();
        println!("t={f}tau: exact {ex:.6e} modes {ms:.6e} rel {:.4}", (ex - ms).abs() / ex);
    }

    // tail
    let cross = crossover_time(&p, &s, &mc).unwrap();
    println!("crossover: {:.3} tau (estimate {:.3} tau), P = {:.3e}", cross.numeric/tau, cross.estimate/tau, cross.p_at_crossover);
    for f in [3.0, 5.0, 10.0] {
        let t = f * cross.numeric;
        let t0 = Instant::now();
        let (ex, ee) = ev.survival(t);
        let tail = longtime_tail(&p, &s, t);
        println!("t={f}x cross: exact {ex:.4e} (err {ee:.1e}) tail {tail:.4e} ratio {:.4}  [{:?}]", ex/tail, t0.elapsed());
    }
}
