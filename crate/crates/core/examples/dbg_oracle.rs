use gamow_core::model::{make_initial_state, PotentialSpec, StateKind};
use gamow_core::oracle::*;
use gamow_core::propagation::*;
use gamow_core::solver::resonance_spectrum;
use std::time::Instant;

fn main() {
    let p = PotentialSpec::<f64>::new(20.0, 1.0).unwrap();
    let s = make_initial_state(StateKind::WellMode { m: 1 }, &p).unwrap();
    let spec = resonance_spectrum(&p, 5, false).unwrap();
    let tau = spec[0].lifetime();

    let plan = SpectralPlan::new(&p, &s, &PlanConfig::for_potential(&p)).unwrap();
    let ev = SurvivalEvaluator::new(plan);

    let t_final = 10.0 * tau;
    let cfg = OracleConfig::recommended(&p, &s, t_final, 24);
    println!("oracle cfg: L={:.1} dx={:.4} dt={:.5} ({} nodes, {} steps)",
        cfg.box_length, cfg.dx, cfg.dt, (cfg.box_length/cfg.dx) as usize, (t_final/cfg.dt) as usize);
    let t0 = Instant::now();
    let run = finite_difference_oracle(&p, &s, &cfg).unwrap();
    println!("oracle run in {:?}; norm drift {:.2e}; boundary mass {:.2e}", t0.elapsed(), run.norm_drift, run.boundary_mass);
    let mut worst = 0.0f64; let mut worst_t = 0.0;
    for (t, v, _, _) in run.curve.iter() {
        let ex = ev.survival(t).0;
        let rel = (v - ex).abs() / ex;
        if rel > worst { worst = rel; worst_t = t; }
        if t == 0.0 || rel > 0.02 { println!("  t={t:9.3} fd={v:.6e} exact={ex:.6e} rel={rel:.4}"); }
    }
    println!("worst rel dev {:.4} at t={:.2}", worst, worst_t);

    // outside-well cross-check
    let mc = mode_coefficients(&s, &spec, &p).unwrap();
    let t = 30.0;
    let kap = spec[0].kappa();
    for xfac in [0.5f64, 0.8, 1.0] {
        let x = kap * t * xfac;
        if x <= 1.0 { continue; }
        let t0 = Instant::now();
        let exact = wavefunction_outside(&p, &s, x, t, 40.0 * std::f64::consts::PI).unwrap();
        let gam = gamow_outside(&mc, x, t);
        match gam {
            Ok(g) => println!("x={x:7.2} t={t}: |exact|={:.5e} |gamow|={:.5e} rel {:.3} front_ok={} [{:?}]",
                exact.norm(), g.value.norm(), (exact - g.value).norm() / exact.norm(), g.modes[0].front_ok, t0.elapsed()),
            Err(e) => println!("x={x:7.2}: gamow err {e} (|exact|={:.4e})", exact.norm()),
        }
    }
    // causality: t -> 0+, x > a
    let psi = wavefunction_outside(&p, &s, 1.3, 1e-4, 40.0 * std::f64::consts::PI).unwrap();
    println!("causality |psi(1.3, 1e-4)|^2 = {:.3e}", psi.norm_sqr());
    // continuity at the barrier at moderate t
    let plan2 = SpectralPlan::new(&p, &s, &PlanConfig::for_potential(&p)).unwrap();
    let t = 5.0;
    let inside = plan2.psi(1.0 - 1e-9, t);
    let outside = wavefunction_outside(&p, &s, 1.0 + 1e-9, t, 40.0 * std::f64::consts::PI).unwrap();
    println!("continuity at a, t=5: inside {:.6e} outside {:.6e} diff {:.2e}", inside.norm(), outside.norm(), (inside-outside).norm());
}
