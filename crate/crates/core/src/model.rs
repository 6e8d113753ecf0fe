//! Domain types shared by all modules: the delta-shell well, complex
//! resonances, normalized initial states and sampled survival curves.
//!
//! Units are natural throughout: `hbar = m = 1`, energies are `k^2/2`,
//! times inverse energies, lengths in the same unit as the well width.

use crate::num::{Real, C};
use crate::quad::integrate_adaptive;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("barrier opacity must be positive, got {0}")]
    NonPositiveOpacity(f64),
    #[error("well width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("resonance wavenumber must have Im k < 0, got Im k = {0}")]
    NonDecayingRoot(f64),
    #[error("well-mode index must be >= 1")]
    ZeroModeIndex,
    #[error("gaussian center {x0} outside the open well interval (0, {a})")]
    CenterOutsideWell { x0: f64, a: f64 },
    #[error("gaussian width {sigma} too large for well of width {a} (requires sigma < a/4)")]
    WidthTooLarge { sigma: f64, a: f64 },
    #[error("state leaks {tail:e} of its norm outside the well (limit 1e-6); not normalizable on [0, a]")]
    TruncationTail { tail: f64 },
    #[error("survival curve times must be nonnegative and strictly increasing")]
    BadTimeGrid,
    #[error("survival value {value} at index {index} outside the admissible range for {method}")]
    SurvivalOutOfRange { value: f64, index: usize, method: &'static str },
    #[error("mismatched column lengths in survival curve")]
    LengthMismatch,
}

/// The delta-shell well: a hard wall at the origin and a barrier
/// `(lambda / a) * delta(x - a)` at the well edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec<T> {
    lambda: T,
    a: T,
}

impl<T: Real> PotentialSpec<T> {
    pub fn new(lambda: T, a: T) -> Result<Self, ModelError> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(ModelError::NonPositiveOpacity(lambda.to_f64().unwrap_or(f64::NAN)));
        }
        if !(a > T::zero()) || !a.is_finite() {
            return Err(ModelError::NonPositiveWidth(a.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(PotentialSpec { lambda, a })
    }

    /// Dimensionless barrier opacity.
    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Well width.
    pub fn width(&self) -> T {
        self.a
    }

    /// Whether the barrier is opaque enough (`lambda >= 10`) for the
    /// large-opacity expansions to be meaningful.
    pub fn metastable(&self) -> bool {
        self.lambda >= T::of(10.0)
    }
}

/// A decaying (Gamow) state: index `n` and complex wavenumber
/// `k = kappa - i K/2` with `Im k < 0`. Energy and lifetime are derived
/// from `k`, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance<T> {
    n: u32,
    k: C<T>,
}

impl<T: Real> Resonance<T> {
    pub fn from_wavenumber(n: u32, k: C<T>) -> Result<Self, ModelError> {
        if !(k.im < T::zero()) {
            return Err(ModelError::NonDecayingRoot(k.im.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Resonance { n, k })
    }

    /// Build from a complex energy `eps - i Gamma/2` (takes the root with
    /// `Im k < 0`).
    pub fn from_energy(n: u32, epsilon: T, gamma: T) -> Result<Self, ModelError> {
        let e = C::new(epsilon, -gamma * T::of(0.5));
        let k = (e * T::of(2.0)).sqrt();
        let k = if k.im < T::zero() { k } else { -k };
        Self::from_wavenumber(n, k)
    }

    pub fn index(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> C<T> {
        self.k
    }

    /// `kappa_n = Re k`.
    pub fn kappa(&self) -> T {
        self.k.re
    }

    /// `K_n = -2 Im k` (escape width in wavenumber).
    pub fn width_k(&self) -> T {
        -(self.k.im + self.k.im)
    }

    /// `E_n = k^2 / 2`, exactly.
    pub fn energy(&self) -> C<T> {
        self.k * self.k * T::of(0.5)
    }

    /// `eps_n = Re E_n`.
    pub fn epsilon(&self) -> T {
        self.energy().re
    }

    /// `Gamma_n = -2 Im E_n > 0`.
    pub fn gamma(&self) -> T {
        let e = self.energy();
        -(e.im + e.im)
    }

    /// `tau_n = 1 / Gamma_n`.
    pub fn lifetime(&self) -> T {
        self.gamma().recip()
    }
}

/// Descriptor for the initial wave packet, supported on `[0, a]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateKind<T> {
    /// Closed-well eigenmode `sqrt(2/a) sin(m pi x / a)`.
    WellMode { m: u32 },
    /// Gaussian `exp(-(x - x0)^2 / (4 sigma^2))`, truncated to the well and
    /// renormalized. `sigma` is the position standard deviation of `|psi|^2`.
    Gaussian { x0: T, sigma: T },
}

/// A normalized initial state. Amplitude is real, identically zero outside
/// the well, and `int_0^a |psi|^2 dx = 1` to 1e-10.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState<T> {
    kind: StateKind<T>,
    a: T,
    norm: T,
}

/// Largest admissible probability leakage of an untruncated gaussian
/// outside `[0, a]`.
const GAUSSIAN_TAIL_LIMIT: f64 = 1e-6;

/// Construct and normalize an initial state in the given well.
pub fn make_initial_state<T: Real>(
    kind: StateKind<T>,
    potential: &PotentialSpec<T>,
) -> Result<InitialState<T>, ModelError> {
    let a = potential.width();
    match kind {
        StateKind::WellMode { m } => {
            if m == 0 {
                return Err(ModelError::ZeroModeIndex);
            }
            // sqrt(2/a) sin(m pi x / a) is normalized analytically.
            Ok(InitialState { kind, a, norm: (T::of(2.0) / a).sqrt() })
        }
        StateKind::Gaussian { x0, sigma } => {
            if !(x0 > T::zero() && x0 < a) {
                return Err(ModelError::CenterOutsideWell {
                    x0: x0.to_f64().unwrap_or(f64::NAN),
                    a: a.to_f64().unwrap_or(f64::NAN),
                });
            }
            if !(sigma > T::zero() && sigma < a / T::of(4.0)) {
                return Err(ModelError::WidthTooLarge {
                    sigma: sigma.to_f64().unwrap_or(f64::NAN),
                    a: a.to_f64().unwrap_or(f64::NAN),
                });
            }
            // |psi_raw|^2 = exp(-(x-x0)^2 / (2 sigma^2)); total mass over the
            // whole line is sigma sqrt(2 pi).
            let density = |x: T| {
                let u = (x - x0) / sigma;
                (-u * u * T::of(0.5)).exp()
            };
            let inside = gaussian_well_integral(density, x0, sigma, a);
            let total = sigma * (T::of(2.0) * T::PI()).sqrt();
            let tail = (T::one() - inside / total).max(T::zero());
            if tail > T::of(GAUSSIAN_TAIL_LIMIT) {
                return Err(ModelError::TruncationTail { tail: tail.to_f64().unwrap_or(f64::NAN) });
            }
            Ok(InitialState { kind, a, norm: inside.sqrt().recip() })
        }
    }
}

/// Integrate a gaussian-localized function over `[0, a]` with panels scaled
/// to `sigma`. The fixed panel layout keeps results smooth in any external
/// parameter and reproducible.
fn gaussian_well_integral<T: Real, F: Fn(T) -> T>(f: F, x0: T, sigma: T, a: T) -> T {
    let mut edges: Vec<T> = Vec::new();
    edges.push(T::zero());
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
        let (v, _) = crate::quad::gk21(&|x| f(x), w[0], w[1]);
        acc += v;
    }
    acc
}

impl<T: Real> InitialState<T> {
    pub fn kind(&self) -> StateKind<T> {
        self.kind
    }

    /// Well width the state was built in.
    pub fn well_width(&self) -> T {
        self.a
    }

    /// Real amplitude `psi(x, 0)`; zero outside `[0, a]`.
    pub fn amplitude(&self, x: T) -> T {
        if x < T::zero() || x > self.a {
            return T::zero();
        }
        match self.kind {
            StateKind::WellMode { m } => {
                let arg = T::of(m as f64) * T::PI() * x / self.a;
                self.norm * arg.sin()
            }
            StateKind::Gaussian { x0, sigma } => {
                let u = (x - x0) / (T::of(2.0) * sigma);
                self.norm * (-u * u).exp()
            }
        }
    }

    /// Sample `(x, psi(x,0))` on a uniform grid of `n` points over `[0, a]`.
    pub fn samples(&self, n: usize) -> Vec<(T, C<T>)> {
        assert!(n >= 2);
        let step = self.a / T::of((n - 1) as f64);
        (0..n)
            .map(|i| {
                let x = step * T::of(i as f64);
                (x, C::new(self.amplitude(x), T::zero()))
            })
            .collect()
    }

    /// `int_0^a |psi|^2 dx`, recomputed by quadrature (diagnostic; equals 1
    /// to 1e-10 by construction).
    pub fn norm_check(&self) -> T {
        match self.kind {
            StateKind::WellMode { .. } => {
                let f = |x: T| self.amplitude(x) * self.amplitude(x);
                integrate_adaptive(&f, T::zero(), self.a, &[], T::of(1e-13), T::of(1e-13), 200)
                    .map(|r| r.value)
                    .unwrap_or(T::nan())
            }
            StateKind::Gaussian { x0, sigma } => {
                gaussian_well_integral(|x| self.amplitude(x) * self.amplitude(x), x0, sigma, self.a)
            }
        }
    }
}

/// How a survival-probability sample was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactQuadrature,
    ModeSum,
    TailAsymptotic,
    FiniteDifferenceOracle,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactQuadrature => "exact-quadrature",
            Method::ModeSum => "mode-sum",
            Method::TailAsymptotic => "tail-asymptotic",
            Method::FiniteDifferenceOracle => "finite-difference-oracle",
        }
    }

    /// Admissible upper bound on P for this route. Exact routes must respect
    /// unitarity to 1e-6; the approximate expansions overshoot by their own
    /// coefficient defect (sum |c_n|^2 can exceed 1 by a few percent), so
    /// they get a loose cap instead.
    fn upper_bound(&self) -> f64 {
        match self {
            Method::ExactQuadrature | Method::FiniteDifferenceOracle => 1.0 + 1e-6,
            Method::ModeSum | Method::TailAsymptotic => 1.05,
        }
    }
}

/// Sampled `P(t)` with per-sample method tags and error estimates.
#[derive(Debug, Clone)]
pub struct SurvivalCurve<T> {
    times: Vec<T>,
    values: Vec<T>,
    methods: Vec<Method>,
    errors: Vec<T>,
}

impl<T: Real> SurvivalCurve<T> {
    pub fn new(
        times: Vec<T>,
        values: Vec<T>,
        methods: Vec<Method>,
        errors: Vec<T>,
    ) -> Result<Self, ModelError> {
        if times.len() != values.len() || times.len() != methods.len() || times.len() != errors.len() {
            return Err(ModelError::LengthMismatch);
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(ModelError::BadTimeGrid);
            }
        }
        if let Some(&t0) = times.first() {
            if t0 < T::zero() {
                return Err(ModelError::BadTimeGrid);
            }
        }
        for (i, (&v, m)) in values.iter().zip(&methods).enumerate() {
            if !(v >= -T::of(1e-12)) || v > T::of(m.upper_bound()) {
                return Err(ModelError::SurvivalOutOfRange {
                    value: v.to_f64().unwrap_or(f64::NAN),
                    index: i,
                    method: m.as_str(),
                });
            }
        }
        Ok(SurvivalCurve { times, values, methods, errors })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn errors(&self) -> &[T] {
        &self.errors
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T, Method, T)> + '_ {
        (0..self.len()).map(move |i| (self.times[i], self.values[i], self.methods[i], self.errors[i]))
    }
}

/// Logarithmic time grid from `t_min` to `t_max` with a fixed number of
/// points per decade (the default sampling for survival scans).
pub fn log_time_grid<T: Real>(t_min: T, t_max: T, per_decade: usize) -> Vec<T> {
    assert!(t_min > T::zero() && t_max > t_min && per_decade >= 1);
    let l0 = t_min.log10();
    let l1 = t_max.log10();
    let n = ((l1 - l0).to_f64().unwrap() * per_decade as f64).ceil() as usize + 1;
    let step = (l1 - l0) / T::of((n - 1) as f64);
    let mut out: Vec<T> = (0..n).map(|i| T::of(10.0).powf(l0 + step * T::of(i as f64))).collect();
    // Guard the endpoints against log/pow round-trip error.
    out[0] = t_min;
    let last = out.len() - 1;
    out[last] = t_max;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pot(lambda: f64, a: f64) -> PotentialSpec<f64> {
        PotentialSpec::new(lambda, a).unwrap()
    }

    #[test]
    fn potential_validation() {
        assert!(PotentialSpec::new(-1.0, 1.0).is_err());
        assert!(PotentialSpec::new(1.0, 0.0).is_err());
        assert!(pot(100.0, 1.0).metastable());
        assert!(!pot(5.0, 1.0).metastable());
    }

    #[test]
    fn resonance_energy_is_derived_from_k() {
        let k = C::<f64>::new(3.12596786434, -0.000242958987368);
        let r = Resonance::from_wavenumber(1, k).unwrap();
        let e = r.energy();
        assert!((e - k * k * 0.5).norm() < 1e-14 * e.norm());
        assert!(r.gamma() > 0.0);
        assert!((r.lifetime() * r.gamma() - 1.0).abs() < 1e-15);
        assert!(Resonance::<f64>::from_wavenumber(1, C::new(3.0, 0.0)).is_err());
    }

    #[test]
    fn resonance_from_energy_round_trips() {
        let r = Resonance::<f64>::from_energy(1, 4.6987, 0.034745).unwrap();
        assert!((r.epsilon() - 4.6987).abs() < 1e-12);
        assert!((r.gamma() - 0.034745).abs() < 1e-12);
        assert!(r.k().im < 0.0);
    }

    #[test]
    fn well_mode_normalization_exact() {
        let p = pot(100.0, 1.0);
        let s = make_initial_state(StateKind::WellMode { m: 1 }, &p).unwrap();
        // psi(x, 0) = sqrt(2) sin(pi x)
        assert!((s.amplitude(0.5) - 2.0f64.sqrt()).abs() < 1e-14);
        assert_eq!(s.amplitude(1.2), 0.0);
        assert!((s.norm_check() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn well_mode_moment_matches_analytic() {
        // int_0^1 x sqrt(2) sin(pi x) dx = sqrt(2)/pi, quadrature oracle.
        let p = pot(100.0, 1.0);
        let s = make_initial_state(StateKind::WellMode { m: 1 }, &p).unwrap();
        let f = |x: f64| x * s.amplitude(x);
        let v = integrate_adaptive(&f, 0.0, 1.0, &[], 1e-13, 1e-13, 200).unwrap().value;
        let analytic = 2.0f64.sqrt() / std::f64::consts::PI;
        assert!((v - analytic).abs() < 1e-12);
        assert!((analytic - 0.45016).abs() < 1e-5);
    }

    #[test]
    fn gaussian_normalizes_inside_the_well() {
        let p = pot(20.0, 1.0);
        let s = make_initial_state(StateKind::Gaussian { x0: 0.5, sigma: 0.05 }, &p).unwrap();
        assert!((s.norm_check() - 1.0).abs() < 1e-10);
        assert_eq!(s.amplitude(-0.1), 0.0);
        assert_eq!(s.amplitude(1.1), 0.0);
    }

    #[test]
    fn gaussian_rejections() {
        let p = pot(20.0, 1.0);
        assert!(matches!(
            make_initial_state(StateKind::Gaussian { x0: 1.5, sigma: 0.05 }, &p),
            Err(ModelError::CenterOutsideWell { .. })
        ));
        assert!(matches!(
            make_initial_state(StateKind::Gaussian { x0: 0.5, sigma: 0.3 }, &p),
            Err(ModelError::WidthTooLarge { .. })
        ));
        // Narrow enough to pass the sigma < a/4 gate but leaking through the
        // wall: must be rejected on the truncation-tail check.
        assert!(matches!(
            make_initial_state(StateKind::Gaussian { x0: 0.05, sigma: 0.2}, &p),
            Err(ModelError::TruncationTail { .. })
        ));
        assert!(matches!(
            make_initial_state(StateKind::WellMode { m: 0 }, &p),
            Err(ModelError::ZeroModeIndex)
        ));
    }

    #[test]
    fn survival_curve_validation() {
        let c = SurvivalCurve::new(
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.5, 0.2],
            vec![Method::ExactQuadrature; 3],
            vec![0.0; 3],
        )
        .unwrap();
        assert_eq!(c.len(), 3);
        assert!(SurvivalCurve::new(
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![Method::ExactQuadrature; 2],
            vec![0.0; 2]
        )
        .is_err());
        // exact route must respect unitarity ...
        assert!(SurvivalCurve::new(
            vec![0.0],
            vec![1.01],
            vec![Method::ExactQuadrature],
            vec![0.0]
        )
        .is_err());
        // ... while the mode sum may overshoot by its coefficient defect.
        assert!(SurvivalCurve::new(vec![0.0], vec![1.02], vec![Method::ModeSum], vec![0.0]).is_ok());
    }

    #[test]
    fn log_grid_covers_endpoints() {
        let g = log_time_grid(0.1, 1000.0, 40);
        assert_eq!(g[0], 0.1);
        assert_eq!(*g.last().unwrap(), 1000.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.len(), 4 * 40 + 1);
    }
}
