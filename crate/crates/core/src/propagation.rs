//! Time evolution of a packet released in the well: exact propagator
//! quadrature inside and outside, the decaying-mode expansion, survival
//! probability, the long-time power-law tail and the crossover estimate.
//!
//! The inside propagator
//!
//! ```text
//! psi(x, t) = (1/2pi) int_0^inf dk e^{-i k^2 t/2} |A(k)|^2 sin(kx) g(k)
//! ```
//!
//! is evaluated in the energy variable, where the kernel `e^{-iEt}` has
//! linear phase: panels carry Legendre expansions of the (t-independent)
//! amplitude and the oscillatory moments are exact for any `t`. Panel layout
//! follows the resonance Lorentzians plus a geometrically graded zone at
//! `E -> 0` that owns the power-law tail.

use crate::filon::{oscillatory_moments, LegendreProjector};
use crate::model::{
    InitialState, Method, ModelError, PotentialSpec, Resonance, StateKind, SurvivalCurve,
};
use crate::num::{imag_unit, pairwise_sum, Real, C};
use crate::quad::{gauss_legendre, gk21, integrate_adaptive, QuadError};
use crate::scattering::{amplitudes, resonance_breakpoints};
use crate::solver::SolverError;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("spectral plan did not reach tolerance: estimate {estimate:e} with {panels} panels")]
    PlanTolerance { estimate: f64, panels: usize },
    #[error("all modes outside the outgoing-wave validity window: {details}")]
    OutsideValidity { details: String },
    #[error("no exponential/tail crossing inside the bracket [{lo}, {hi}] (in units of tau_1)")]
    NoCrossing { lo: f64, hi: f64 },
    #[error("empty resonance set")]
    EmptySpectrum,
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Sine overlap `g(k) = int_0^a psi(x, 0) sin(kx) dx`.
///
/// Closed form for well modes (written through `sin(z)/z` so the removable
/// point `k = m pi / a` is regular); fixed sigma-scaled panels for gaussian
/// states so the result is smooth in `k` to quadrature precision.
pub fn overlap<T: Real>(state: &InitialState<T>, k: T) -> C<T> {
    let a = state.well_width();
    let v = match state.kind() {
        StateKind::WellMode { m } => {
            let q = T::of(m as f64) * T::PI() / a;
            let delta = k - q;
            let num = if delta.abs() < T::epsilon().sqrt() {
                // sin(delta a)/delta -> a (1 - (delta a)^2/6)
                a * (T::one() - (delta * a).powi(2) / T::of(6.0))
            } else {
                (delta * a).sin() / delta
            };
            (T::of(2.0) / a).sqrt() * q * num / (q + k)
        }
        StateKind::Gaussian { .. } => {
            let f = |x: T| state.amplitude(x) * (k * x).sin();
            sigma_scaled_integral(state, f)
        }
    };
    C::new(v, T::zero())
}

/// First moment `int_0^a x psi(x, 0) dx` (enters the power-law tail).
pub fn moment_x<T: Real>(state: &InitialState<T>) -> T {
    let a = state.well_width();
    match state.kind() {
        StateKind::WellMode { m } => {
            // int x sqrt(2/a) sin(m pi x/a) dx = sqrt(2/a) a^2 (-1)^(m+1)/(m pi)
            let sign = if m % 2 == 1 { T::one() } else { -T::one() };
            (T::of(2.0) / a).sqrt() * sign * a * a / (T::of(m as f64) * T::PI())
        }
        StateKind::Gaussian { .. } => sigma_scaled_integral(state, |x| x * state.amplitude(x)),
    }
}

/// Deterministic composite quadrature over `[0, a]` with panel edges at
/// sigma spacings around the gaussian center.
fn sigma_scaled_integral<T: Real, F: Fn(T) -> T>(state: &InitialState<T>, f: F) -> T {
    let a = state.well_width();
    let (x0, sigma) = match state.kind() {
        StateKind::Gaussian { x0, sigma } => (x0, sigma),
        StateKind::WellMode { .. } => (a * T::of(0.5), a * T::of(0.125)),
    };
    let mut edges: Vec<T> = vec![T::zero()];
    for i in -8..=8 {
        let e = x0 + sigma * T::of(i as f64);
        if e > T::zero() && e < a {
            edges.push(e);
        }
    }
    edges.push(a);
    edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
    edges.dedup();
    let mut acc = T::zero();
    for w in edges.windows(2) {
        let (v, _) = gk21(&f, w[0], w[1]);
        acc += v;
    }
    acc
}

/// Decaying-mode expansion data: resonances with projection coefficients
/// `c_n` (inside) and `d_n` (outgoing superposition).
#[derive(Debug, Clone)]
pub struct ModeCoefficients<T> {
    resonances: Vec<Resonance<T>>,
    c: Vec<C<T>>,
    d: Vec<C<T>>,
}

impl<T: Real> ModeCoefficients<T> {
    pub fn resonances(&self) -> &[Resonance<T>] {
        &self.resonances
    }
    pub fn c(&self) -> &[C<T>] {
        &self.c
    }
    pub fn d(&self) -> &[C<T>] {
        &self.d
    }
    /// `sum |c_n|^2`; near 1 for smooth states (coefficient completeness).
    pub fn coefficient_completeness(&self) -> T {
        let sq: Vec<T> = self.c.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&sq)
    }
}

/// Project the initial state on the decaying modes built from the exact
/// resonance positions: `c_n = sqrt(2/a) g(kappa_n)` and
/// `d_n = -i kappa_n g(kappa_n) / (2 pi lambda)`.
///
/// The mode functions are the unit-normalized `sqrt(2/a) sin(kappa_n x)`;
/// the raw residue prefactor deviates from unit norm by O(1/lambda) and
/// would spoil coefficient completeness at moderate opacity.
pub fn mode_coefficients<T: Real>(
    state: &InitialState<T>,
    spectrum: &[Resonance<T>],
    potential: &PotentialSpec<T>,
) -> Result<ModeCoefficients<T>, PropagationError> {
    if spectrum.is_empty() {
        return Err(PropagationError::EmptySpectrum);
    }
    let a = potential.width();
    let lam = potential.lambda();
    let mut c = Vec::with_capacity(spectrum.len());
    let mut d = Vec::with_capacity(spectrum.len());
    for r in spectrum {
        let g = overlap(state, r.kappa());
        c.push(g * (T::of(2.0) / a).sqrt());
        d.push(g * C::new(T::zero(), -r.kappa() / (T::of(2.0) * T::PI() * lam)));
    }
    Ok(ModeCoefficients { resonances: spectrum.to_vec(), c, d })
}

/// Construction parameters for the spectral plan.
#[derive(Debug, Clone, Copy)]
pub struct PlanConfig<T> {
    /// Wavenumber cutoff of the continuum integral.
    pub k_max: T,
    /// Target for the integrated amplitude-interpolation bound; this bounds
    /// the absolute error of every `psi(x, t)` the plan produces.
    pub tol: T,
    pub max_panels: usize,
}

impl<T: Real> PlanConfig<T> {
    pub fn for_potential(potential: &PotentialSpec<T>) -> Self {
        PlanConfig {
            k_max: T::of(40.0) * T::PI() / potential.width(),
            tol: T::of(1e-11),
            max_panels: 60_000,
        }
    }
}

const PLAN_DEGREE: usize = 15;

struct Panel<T> {
    center: T,
    half: T,
    /// `k` at each Legendre node (kept to evaluate `sin(k x)` per x).
    k_nodes: Vec<T>,
    /// Amplitude `w(E) = |A|^2 g / (2 pi k)` at each node.
    w_nodes: Vec<T>,
    /// Interpolation-tail estimate, `2 h * tail`.
    est: T,
    splittable: bool,
}

/// Panelized continuum integral for one (potential, state, k_max) triple.
/// Building the plan is the expensive step; evaluating `psi` or `P(t)`
/// afterwards costs the same for any `t`.
pub struct SpectralPlan<T> {
    a: T,
    k_max: T,
    proj: LegendreProjector<T>,
    panels: Vec<Panel<T>>,
    est_err: T,
}

impl<T: Real> SpectralPlan<T> {
    pub fn new(
        potential: &PotentialSpec<T>,
        state: &InitialState<T>,
        config: &PlanConfig<T>,
    ) -> Result<Self, PropagationError> {
        let a = potential.width();
        let proj = LegendreProjector::new(PLAN_DEGREE);
        let e_max = config.k_max * config.k_max * T::of(0.5);
        let e_floor = e_max * T::of(1e-15);

        // Panel edges in k: resonance structure plus a uniform fill.
        let mut k_edges = resonance_breakpoints(potential, config.k_max);
        let fill = T::PI() / (T::of(2.0) * a);
        let mut k = fill;
        while k < config.k_max {
            k_edges.push(k);
            k += fill;
        }
        k_edges.push(config.k_max);
        k_edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
        k_edges.dedup();

        let mut e_edges: Vec<T> = k_edges
            .into_iter()
            .filter(|&k| k > T::zero())
            .map(|k| k * k * T::of(0.5))
            .collect();
        // Geometric grading toward E = 0: the power-law tail of P(t) lives
        // entirely in this endpoint region.
        let mut e = e_edges[0];
        while e > e_floor {
            e = e * T::of(0.5);
            e_edges.push(e);
        }
        e_edges.push(T::zero());
        e_edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
        e_edges.dedup();

        let eval = |lo: T, hi: T| Self::make_panel(potential, state, &proj, lo, hi, e_floor);
        let mut panels: Vec<Panel<T>> = e_edges.windows(2).map(|w| eval(w[0], w[1])).collect();

        // Refine worst panels until the summed bound meets the target.
        loop {
            let total = pairwise_sum(&panels.iter().map(|p| p.est).collect::<Vec<_>>());
            if total <= config.tol {
                break;
            }
            let (idx, _) = panels
                .iter()
                .enumerate()
                .filter(|(_, p)| p.splittable)
                .max_by(|(i, p), (j, q)| {
                    p.est
                        .partial_cmp(&q.est)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then_with(|| j.cmp(i))
                })
                .ok_or(PropagationError::PlanTolerance {
                    estimate: total.to_f64().unwrap_or(f64::NAN),
                    panels: panels.len(),
                })?;
            if panels.len() + 1 > config.max_panels {
                return Err(PropagationError::PlanTolerance {
                    estimate: total.to_f64().unwrap_or(f64::NAN),
                    panels: panels.len(),
                });
            }
            let p = panels.swap_remove(idx);
            let lo = p.center - p.half;
            let hi = p.center + p.half;
            let mid = p.center;
            panels.push(eval(lo, mid));
            panels.push(eval(mid, hi));
        }
        panels.sort_by(|p, q| p.center.partial_cmp(&q.center).unwrap());
        let est_err = pairwise_sum(&panels.iter().map(|p| p.est).collect::<Vec<_>>());
        Ok(SpectralPlan { a, k_max: config.k_max, proj, panels, est_err })
    }

    fn make_panel(
        potential: &PotentialSpec<T>,
        state: &InitialState<T>,
        proj: &LegendreProjector<T>,
        lo: T,
        hi: T,
        e_floor: T,
    ) -> Panel<T> {
        let center = (lo + hi) * T::of(0.5);
        let half = (hi - lo) * T::of(0.5);
        let a = state.well_width();
        let mut k_nodes = Vec::with_capacity(proj.nodes.len());
        let mut w_nodes = Vec::with_capacity(proj.nodes.len());
        for &u in &proj.nodes {
            let e = center + half * u;
            let k = (e * T::of(2.0)).sqrt().max(T::min_positive_value());
            let w = if e <= T::zero() {
                T::zero()
            } else {
                let a2 = amplitudes(potential, k).inside.norm_sqr();
                a2 * overlap(state, k).re / (T::of(2.0) * T::PI() * k)
            };
            k_nodes.push(k);
            w_nodes.push(w);
        }
        let splittable = lo >= e_floor;
        let est = if splittable {
            // Tail of the Legendre expansion for the two probe amplitudes
            // w(E) and w(E) sin(k a) (worst in-well oscillation).
            let cw = proj.coefficients(&w_nodes);
            let ws: Vec<T> =
                w_nodes.iter().zip(&k_nodes).map(|(&w, &k)| w * (k * a).sin()).collect();
            let cs = proj.coefficients(&ws);
            let tail = |c: &[T]| {
                let n = c.len();
                c[n - 3].abs() + c[n - 2].abs() + c[n - 1].abs()
            };
            T::of(2.0) * half * tail(&cw).max(tail(&cs))
        } else {
            // Endpoint panel at E ~ 0: never split, budget its whole mass.
            let peak = w_nodes.iter().fold(T::zero(), |m, &w| m.max(w.abs()));
            T::of(2.0) * half * peak
        };
        Panel { center, half, k_nodes, w_nodes, est, splittable }
    }

    /// Absolute error bound on any `psi(x, t)` computed from this plan
    /// (amplitude-interpolation tails; the oscillatory kernel is exact).
    pub fn error_bound(&self) -> T {
        self.est_err
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    pub fn k_max(&self) -> T {
        self.k_max
    }

    /// `psi(x, t)` inside the well.
    pub fn psi(&self, x: T, t: T) -> C<T> {
        assert!(t >= T::zero() && x >= T::zero() && x <= self.a);
        let deg = PLAN_DEGREE;
        let mut acc: Vec<C<T>> = Vec::with_capacity(self.panels.len());
        let mut values = vec![T::zero(); deg + 1];
        for p in &self.panels {
            for (v, (&w, &k)) in values.iter_mut().zip(p.w_nodes.iter().zip(&p.k_nodes)) {
                *v = w * (k * x).sin();
            }
            let coeff = self.proj.coefficients(&values);
            let m = oscillatory_moments(deg, p.half * t);
            let mut s = C::new(T::zero(), T::zero());
            for (&a_j, m_j) in coeff.iter().zip(&m) {
                s = s + m_j.scale(a_j);
            }
            let phase = (-imag_unit::<T>() * (p.center * t)).exp();
            acc.push(phase * s.scale(p.half));
        }
        crate::num::pairwise_sum_c(&acc)
    }
}

/// `psi(x, t)` inside the well by direct propagator quadrature. Convenience
/// wrapper that builds a throwaway plan; reuse [`SpectralPlan`] or
/// [`SurvivalEvaluator`] for more than a handful of points.
pub fn wavefunction_inside<T: Real>(
    potential: &PotentialSpec<T>,
    state: &InitialState<T>,
    x: T,
    t: T,
) -> Result<C<T>, PropagationError> {
    let plan = SpectralPlan::new(potential, state, &PlanConfig::for_potential(potential))?;
    Ok(plan.psi(x, t))
}

/// Survival-probability evaluator: a spectral plan plus cached per-panel
/// coefficient matrices on two nested composite Gauss–Legendre x-rules
/// (the coarse rule provides the error estimate).
pub struct SurvivalEvaluator<T> {
    plan: SpectralPlan<T>,
    fine: XRule<T>,
    coarse: XRule<T>,
}

struct XRule<T> {
    weights: Vec<T>,
    /// `coeffs[p][j * n_x + i]`: Legendre coefficient j of panel p at x_i.
    coeffs: Vec<Vec<T>>,
    n_x: usize,
}

fn composite_gl_nodes<T: Real>(a: T, panels: usize, order: usize) -> (Vec<T>, Vec<T>) {
    let (u, w) = gauss_legendre::<T>(order);
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    let h = a / T::of(panels as f64);
    for p in 0..panels {
        let c = h * (T::of(p as f64) + T::of(0.5));
        for (&ui, &wi) in u.iter().zip(&w) {
            xs.push(c + h * T::of(0.5) * ui);
            ws.push(wi * h * T::of(0.5));
        }
    }
    (xs, ws)
}

impl<T: Real> SurvivalEvaluator<T> {
    pub fn new(plan: SpectralPlan<T>) -> Self {
        let fine = Self::build_rule(&plan, 6, 16);
        let coarse = Self::build_rule(&plan, 4, 16);
        SurvivalEvaluator { plan, fine, coarse }
    }

    fn build_rule(plan: &SpectralPlan<T>, x_panels: usize, order: usize) -> XRule<T> {
        let (xs, weights) = composite_gl_nodes(plan.a, x_panels, order);
        let n_x = xs.len();
        let deg = PLAN_DEGREE;
        let mut coeffs = Vec::with_capacity(plan.panels.len());
        let mut values = vec![T::zero(); deg + 1];
        for p in &plan.panels {
            let mut mat = vec![T::zero(); (deg + 1) * n_x];
            for (i, &x) in xs.iter().enumerate() {
                for (v, (&w, &k)) in values.iter_mut().zip(p.w_nodes.iter().zip(&p.k_nodes)) {
                    *v = w * (k * x).sin();
                }
                let c = plan.proj.coefficients(&values);
                for (j, &cj) in c.iter().enumerate() {
                    mat[j * n_x + i] = cj;
                }
            }
            coeffs.push(mat);
        }
        XRule { weights, coeffs, n_x }
    }

    pub fn plan(&self) -> &SpectralPlan<T> {
        &self.plan
    }

    /// `P(t) = int_0^a |psi(x, t)|^2 dx` with an error estimate combining the
    /// nested x-rules and the plan's amplitude bound.
    pub fn survival(&self, t: T) -> (T, T) {
        let p_fine = self.integrate_rule(&self.fine, t);
        let p_coarse = self.integrate_rule(&self.coarse, t);
        let x_err = (p_fine - p_coarse).abs();
        let psi_err = self.plan.est_err;
        let err = x_err + T::of(2.0) * p_fine.max(T::zero()).sqrt() * psi_err * self.plan.a.sqrt();
        (p_fine, err)
    }

    fn integrate_rule(&self, rule: &XRule<T>, t: T) -> T {
        let deg = PLAN_DEGREE;
        let n_x = rule.n_x;
        let mut psi = vec![C::new(T::zero(), T::zero()); n_x];
        for (p, mat) in self.plan.panels.iter().zip(&rule.coeffs) {
            let m = oscillatory_moments(deg, p.half * t);
            let phase = (-imag_unit::<T>() * (p.center * t)).exp().scale(p.half);
            for (j, m_j) in m.iter().enumerate() {
                let f = *m_j * phase;
                if f.norm_sqr() < T::min_positive_value() {
                    continue;
                }
                let row = &mat[j * n_x..(j + 1) * n_x];
                for (s, &c) in psi.iter_mut().zip(row) {
                    *s = *s + f.scale(c);
                }
            }
        }
        let terms: Vec<T> =
            psi.iter().zip(&rule.weights).map(|(s, &w)| s.norm_sqr() * w).collect();
        pairwise_sum(&terms)
    }
}

/// Exact survival probability on a time grid (builds a plan, evaluates every
/// sample; samples are independent and evaluated in parallel).
pub fn survival_exact<T: Real>(
    potential: &PotentialSpec<T>,
    state: &InitialState<T>,
    times: &[T],
    config: &PlanConfig<T>,
) -> Result<SurvivalCurve<T>, PropagationError> {
    let plan = SpectralPlan::new(potential, state, config)?;
    let eval = SurvivalEvaluator::new(plan);
    let samples: Vec<(T, T)> = times.par_iter().map(|&t| eval.survival(t)).collect();
    let (values, errors): (Vec<T>, Vec<T>) = samples.into_iter().unzip();
    Ok(SurvivalCurve::new(
        times.to_vec(),
        values,
        vec![Method::ExactQuadrature; times.len()],
        errors,
    )?)
}

/// Mode-sum survival `P(t) = sum_n |c_n|^2 e^{-Gamma_n t}`.
pub fn survival_modes<T: Real>(
    coeffs: &ModeCoefficients<T>,
    times: &[T],
) -> Result<SurvivalCurve<T>, PropagationError> {
    let values: Vec<T> = times
        .iter()
        .map(|&t| {
            let terms: Vec<T> = coeffs
                .resonances
                .iter()
                .zip(&coeffs.c)
                .map(|(r, c)| c.norm_sqr() * (-r.gamma() * t).exp())
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(SurvivalCurve::new(
        times.to_vec(),
        values,
        vec![Method::ModeSum; times.len()],
        vec![T::zero(); times.len()],
    )?)
}

/// `psi(x, t)` outside the well by direct quadrature of the propagator
/// (no pole approximation):
///
/// ```text
/// psi = (1/2pi) int_0^kmax dk e^{-ik^2 t/2} [e^{ikx} + B*(k) e^{-ikx}] A(k) g(k)
/// ```
///
/// Panels are pre-split so each carries at most ~pi of phase; cost grows
/// with `x + k_max t`, so this route is for moderate times (the mode form
/// [`gamow_outside`] covers the wavefront regime).
pub fn wavefunction_outside<T: Real>(
    potential: &PotentialSpec<T>,
    state: &InitialState<T>,
    x: T,
    t: T,
    k_max: T,
) -> Result<C<T>, PropagationError> {
    assert!(x > potential.width(), "outside evaluation requires x > a");
    assert!(t > T::zero());
    let integrand = |k: T| {
        if k <= T::zero() {
            return C::new(T::zero(), T::zero());
        }
        let amp = amplitudes(potential, k);
        let g = overlap(state, k).re;
        let phase_t = -k * k * t * T::of(0.5);
        let plus = (imag_unit::<T>() * (k * x + phase_t)).exp();
        let minus = (imag_unit::<T>() * (-k * x + phase_t)).exp() * amp.reflected.conj();
        (plus + minus) * amp.inside.scale(g / (T::of(2.0) * T::PI()))
    };
    // Mandatory edges: resonance structure plus a phase-limited walk.
    let mut bps = resonance_breakpoints(potential, k_max);
    let mut k = T::zero();
    let cap = T::PI() / (T::of(2.0) * potential.width());
    while k < k_max {
        let rate = x + k * t + T::one();
        let step = (T::PI() / rate).min(cap);
        k += step;
        if k < k_max {
            bps.push(k);
        }
    }
    let r = integrate_adaptive(&integrand, T::zero(), k_max, &bps, T::of(1e-11), T::of(1e-7), 2_000_000)?;
    Ok(r.value)
}

/// One mode's validity bookkeeping for the outgoing-wave form.
#[derive(Debug, Clone, Copy)]
pub struct ModeValidity<T> {
    pub n: u32,
    /// wavefront condition `kappa_n t - x < 3 sqrt(t)`
    pub front_ok: bool,
    /// settling condition `t > 10 / eps_n`
    pub settled: bool,
    pub kappa_t_minus_x: T,
}

#[derive(Debug, Clone)]
pub struct GamowOutside<T> {
    pub value: C<T>,
    pub modes: Vec<ModeValidity<T>>,
}

/// Superposition of outgoing decaying waves outside the well:
/// `psi(x, t) ~ -2 pi i sum_n d_n e^{-i E_n t + i k_n x}`, valid per mode
/// while the observation point rides the wavefront.
pub fn gamow_outside<T: Real>(
    coeffs: &ModeCoefficients<T>,
    x: T,
    t: T,
) -> Result<GamowOutside<T>, PropagationError> {
    assert!(t > T::zero());
    let mut value = C::new(T::zero(), T::zero());
    let mut modes = Vec::with_capacity(coeffs.resonances.len());
    let mut any_valid = false;
    for (r, d) in coeffs.resonances.iter().zip(&coeffs.d) {
        let advance = r.kappa() * t - x;
        let front_ok = advance < T::of(3.0) * t.sqrt();
        let settled = t > T::of(10.0) / r.epsilon();
        any_valid = any_valid || (front_ok && settled);
        modes.push(ModeValidity { n: r.index(), front_ok, settled, kappa_t_minus_x: advance });
        let phase = -imag_unit::<T>() * r.energy() * t + imag_unit::<T>() * r.k() * x;
        value = value + *d * phase.exp();
    }
    value = value * C::new(T::zero(), -(T::of(2.0) * T::PI()));
    if !any_valid {
        let details = modes
            .iter()
            .map(|m| {
                format!(
                    "n={}: front {} (kappa t - x = {:.3e}), settled {}",
                    m.n,
                    m.front_ok,
                    m.kappa_t_minus_x.to_f64().unwrap_or(f64::NAN),
                    m.settled
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        return Err(PropagationError::OutsideValidity { details });
    }
    Ok(GamowOutside { value, modes })
}

/// Closed-form long-time tail
/// `P(t) ~ a^3 / (24 pi lambda^4 t^3) |int_0^a x psi(x,0) dx|^2`.
pub fn longtime_tail<T: Real>(potential: &PotentialSpec<T>, state: &InitialState<T>, t: T) -> T {
    assert!(t > T::zero());
    let a = potential.width();
    let lam = potential.lambda();
    let m = moment_x(state);
    a.powi(3) / (T::of(24.0) * T::PI() * lam.powi(4) * t.powi(3)) * m * m
}

#[derive(Debug, Clone, Copy)]
pub struct CrossoverReport<T> {
    /// Bisection solution of `|c_1|^2 e^{-t/tau_1} = tail(t)`.
    pub numeric: T,
    /// Order-of-magnitude estimate `tau_1 (10 ln lambda + 3 ln ln lambda)`.
    pub estimate: T,
    /// Probability remaining at the crossover.
    pub p_at_crossover: T,
}

/// Where exponential decay hands over to the power-law tail.
pub fn crossover_time<T: Real>(
    potential: &PotentialSpec<T>,
    state: &InitialState<T>,
    coeffs: &ModeCoefficients<T>,
) -> Result<CrossoverReport<T>, PropagationError> {
    if coeffs.resonances.is_empty() {
        return Err(PropagationError::EmptySpectrum);
    }
    let r1 = &coeffs.resonances[0];
    let tau = r1.lifetime();
    let c1sq = coeffs.c[0].norm_sqr();
    let lam = potential.lambda();

    let f = |t: T| (c1sq.ln() - t / tau) - longtime_tail(potential, state, t).ln();
    let (mut lo, mut hi) = (tau, T::of(200.0) * tau);
    if !(f(lo) > T::zero() && f(hi) < T::zero()) {
        return Err(PropagationError::NoCrossing { lo: 1.0, hi: 200.0 });
    }
    // Bisection to 1e-3 relative.
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < T::of(1e-3) * T::of(0.1) {
            break;
        }
    }
    let numeric = (lo + hi) * T::of(0.5);
    let estimate = tau * (T::of(10.0) * lam.ln() + T::of(3.0) * lam.ln().ln());
    Ok(CrossoverReport {
        numeric,
        estimate,
        p_at_crossover: c1sq * (-numeric / tau).exp(),
    })
}

/// Least-squares slope and intercept of `ln(values)` against `times`, with
/// RMS residual (used to extract decay rates from survival curves).
pub fn fit_log_slope<T: Real>(times: &[T], values: &[T]) -> (T, T, T) {
    assert!(times.len() == values.len() && times.len() >= 2);
    let n = T::of(times.len() as f64);
    let logs: Vec<T> = values.iter().map(|v| v.ln()).collect();
    let sx = pairwise_sum(times);
    let sy = pairwise_sum(&logs);
    let sxx = pairwise_sum(&times.iter().map(|&t| t * t).collect::<Vec<_>>());
    let sxy = pairwise_sum(&times.iter().zip(&logs).map(|(&t, &y)| t * y).collect::<Vec<_>>());
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let res: Vec<T> = times
        .iter()
        .zip(&logs)
        .map(|(&t, &y)| {
            let d = y - (slope * t + intercept);
            d * d
        })
        .collect();
    (slope, intercept, (pairwise_sum(&res) / n).sqrt())
}

/// As [`fit_log_slope`] but in log-log axes (power-law exponent).
pub fn fit_loglog_slope<T: Real>(times: &[T], values: &[T]) -> (T, T, T) {
    let lt: Vec<T> = times.iter().map(|t| t.ln()).collect();
    fit_log_slope(&lt, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_initial_state, PotentialSpec, StateKind};
    use crate::solver::resonance_spectrum;
    use std::f64::consts::PI;

    fn pot(lambda: f64, a: f64) -> PotentialSpec<f64> {
        PotentialSpec::new(lambda, a).unwrap()
    }

    fn mode1(p: &PotentialSpec<f64>) -> InitialState<f64> {
        make_initial_state(StateKind::WellMode { m: 1 }, p).unwrap()
    }

    #[test]
    fn overlap_closed_form_against_quadrature() {
        let p = pot(20.0, 1.0);
        let s = mode1(&p);
        for k in [0.3, PI, 2.0 * PI, 7.7, PI + 1e-9] {
            let direct = integrate_adaptive(
                &|x: f64| s.amplitude(x) * (k * x).sin(),
                0.0,
                1.0,
                &[],
                1e-13,
                1e-13,
                400,
            )
            .unwrap()
            .value;
            assert!((overlap(&s, k).re - direct).abs() < 1e-11, "k={k}");
        }
        // at k = pi: exactly 1/sqrt(2); at k = 2 pi: exactly 0
        assert!((overlap(&s, PI).re - 1.0 / 2.0f64.sqrt()).abs() < 1e-14);
        assert!(overlap(&s, 2.0 * PI).re.abs() < 1e-14);
        // small-k linear coefficient: g(k)/k -> int x psi = sqrt(2)/pi
        let k = 1e-6;
        assert!((overlap(&s, k).re / k - 2.0f64.sqrt() / PI).abs() < 1e-9);
    }

    #[test]
    fn overlap_gaussian_against_quadrature() {
        let p = pot(20.0, 1.0);
        let s = make_initial_state(StateKind::Gaussian { x0: 0.5, sigma: 0.05 }, &p).unwrap();
        for k in [0.7, 4.0, 21.0] {
            let direct = integrate_adaptive(
                &|x: f64| s.amplitude(x) * (k * x).sin(),
                0.0,
                1.0,
                &[],
                1e-13,
                1e-13,
                400,
            )
            .unwrap()
            .value;
            assert!((overlap(&s, k).re - direct).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn moment_matches_analytic() {
        let p = pot(20.0, 1.0);
        assert!((moment_x(&mode1(&p)) - 2.0f64.sqrt() / PI).abs() < 1e-13);
        let m2 = make_initial_state(StateKind::WellMode { m: 2 }, &p).unwrap();
        assert!((moment_x(&m2) + 2.0f64.sqrt() / (2.0 * PI)).abs() < 1e-13);
    }

    #[test]
    fn coefficients_near_unity_for_well_modes() {
        let p = pot(100.0, 1.0);
        let spec = resonance_spectrum(&p, 5, true).unwrap();
        let s = mode1(&p);
        let mc = mode_coefficients(&s, &spec, &p).unwrap();
        // Frozen from an independent quadrature: c_1 = 1.0024522,
        // c_2 = 0.0067126.
        assert!((mc.c()[0].re - 1.0024522).abs() < 1e-6);
        assert!((mc.c()[1].re - 0.0067126).abs() < 1e-6);
        assert!(mc.c()[0].norm_sqr() > 0.999);
        assert!(mc.c()[1].norm() < 0.01);
        assert!(mc.coefficient_completeness() <= 1.05);
        let s2 = make_initial_state(StateKind::WellMode { m: 2 }, &p).unwrap();
        let mc2 = mode_coefficients(&s2, &spec, &p).unwrap();
        assert!(mc2.c()[1].norm_sqr() > 0.999);
        assert!(mc2.coefficient_completeness() <= 1.05);
    }

    #[test]
    fn mode_sum_closed_forms() {
        // single mode: exactly e^{-Gamma t}; two equal modes with
        // Gamma_2 = 8 Gamma_1: P(tau_1) = (e^-1 + e^-8)/2.
        let r1 = Resonance::from_energy(1, 4.7, 1e-3).unwrap();
        let r2 = Resonance::from_energy(2, 18.8, 8e-3).unwrap();
        let mc = ModeCoefficients {
            resonances: vec![r1, r2],
            c: vec![
                C::new(0.5f64.sqrt(), 0.0),
                C::new(0.5f64.sqrt(), 0.0),
            ],
            d: vec![C::new(0.0, 0.0); 2],
        };
        let tau1 = 1e3;
        let curve = survival_modes(&mc, &[tau1]).unwrap();
        let expect = ((-1.0f64).exp() + (-8.0f64).exp()) / 2.0;
        assert!((curve.values()[0] - expect).abs() < 1e-14);
        assert!((expect - 0.18411).abs() < 1e-5);

        let single = ModeCoefficients {
            resonances: vec![r1],
            c: vec![C::new(1.0, 0.0)],
            d: vec![C::new(0.0, 0.0)],
        };
        let c2 = survival_modes(&single, &[0.5e3, 2e3]).unwrap();
        assert!((c2.values()[0] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((c2.values()[1] - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn tail_scalings_exact() {
        let p20 = pot(20.0, 1.0);
        let p40 = pot(40.0, 1.0);
        let s = mode1(&p20);
        let t = 300.0;
        // t^-3 and lambda^-4 power laws
        assert!((longtime_tail(&p20, &s, 2.0 * t) / longtime_tail(&p20, &s, t) - 0.125).abs() < 1e-12);
        assert!(
            (longtime_tail(&p40, &s, t) / longtime_tail(&p20, &s, t) - 1.0 / 16.0).abs() < 1e-12
        );
        // closed form 1/(12 pi^3 lambda^4 t^3) for mode 1
        let expect = 1.0 / (12.0 * PI.powi(3) * 20.0f64.powi(4) * t.powi(3));
        assert!((longtime_tail(&p20, &s, t) - expect).abs() < 1e-15 * expect.abs().max(1e-30));
    }

    #[test]
    fn crossover_against_frozen_bisection() {
        // Frozen from an independent bisection: t_c/tau_1 = 38.9938 at
        // lambda = 20, 55.8837 at lambda = 100.
        let p = pot(20.0, 1.0);
        let s = mode1(&p);
        let spec = resonance_spectrum(&p, 5, false).unwrap();
        let mc = mode_coefficients(&s, &spec, &p).unwrap();
        let r = crossover_time(&p, &s, &mc).unwrap();
        let tau = spec[0].lifetime();
        assert!((r.numeric / tau - 38.9938).abs() < 0.01, "{}", r.numeric / tau);
        assert!(r.numeric / r.estimate < 1.5 && r.numeric / r.estimate > 1.0 / 1.5);
        assert!(r.p_at_crossover < 20.0f64.powi(-8));

        let p100 = pot(100.0, 1.0);
        let s100 = mode1(&p100);
        let spec100 = resonance_spectrum(&p100, 5, true).unwrap();
        let mc100 = mode_coefficients(&s100, &spec100, &p100).unwrap();
        let r100 = crossover_time(&p100, &s100, &mc100).unwrap();
        let tau100 = spec100[0].lifetime();
        assert!((r100.numeric / tau100 - 55.8837).abs() < 0.02);
        // growth of the crossover (in lifetimes) with opacity
        assert!(r100.numeric / tau100 > r.numeric / tau);
    }

    #[test]
    fn fit_recovers_exponential() {
        let times: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.5).collect();
        let values: Vec<f64> = times.iter().map(|&t| 3.0 * (-0.7 * t).exp()).collect();
        let (slope, intercept, res) = fit_log_slope(&times, &values);
        assert!((slope + 0.7).abs() < 1e-12);
        assert!((intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!(res < 1e-12);
        let powers: Vec<f64> = times.iter().map(|&t| 5.0 * t.powi(-3)).collect();
        let (s3, _, _) = fit_loglog_slope(&times, &powers);
        assert!((s3 + 3.0).abs() < 1e-12);
    }

    #[test]
    fn gamow_front_exponent_cancels() {
        // |psi|^2 on the wavefront x = kappa_1 t carries
        // exp(-Gamma_1 t + K_1 kappa_1 t); Gamma_n = kappa_n K_n exactly, so
        // the exponent vanishes identically.
        let p = pot(20.0, 1.0);
        let spec = resonance_spectrum(&p, 1, true).unwrap();
        let r = spec[0];
        let exponent = -r.gamma() + r.width_k() * r.kappa();
        assert!(exponent.abs() < 1e-15 * r.gamma());

        let s = mode1(&p);
        let mc = mode_coefficients(&s, &spec, &p).unwrap();
        let t = 400.0;
        let x = r.kappa() * t;
        let g = gamow_outside(&mc, x, t).unwrap();
        assert!(g.modes[0].front_ok && g.modes[0].settled);
        // magnitude |2 pi d_1| on the front, independent of t
        let expect = 2.0 * PI * mc.d()[0].norm();
        assert!((g.value.norm() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn gamow_validity_flags() {
        let p = pot(20.0, 1.0);
        let spec = resonance_spectrum(&p, 1, true).unwrap();
        let s = mode1(&p);
        let mc = mode_coefficients(&s, &spec, &p).unwrap();
        // early time: not settled (t < 1/eps_1 certainly fails t > 10/eps_1)
        let early = 0.2 / spec[0].epsilon();
        match gamow_outside(&mc, 1.5, early) {
            Err(PropagationError::OutsideValidity { .. }) => {}
            other => panic!("expected validity error, got {:?}", other.map(|g| g.value)),
        }
        // far behind the front: flag false
        let t = 400.0;
        let x = spec[0].kappa() * t - 100.0 * t.sqrt();
        assert!(matches!(gamow_outside(&mc, x, t), Err(PropagationError::OutsideValidity { .. })));
    }
}
