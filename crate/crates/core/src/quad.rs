//! Adaptive Gauss–Kronrod quadrature with user-supplied breakpoints, plus
//! Gauss–Legendre node generation for the fixed composite rules used by the
//! propagator.
//!
//! The integrators return an error estimate alongside the value; callers that
//! promise a tolerance check it and surface a [`QuadError`] on failure.

use crate::num::{pairwise_sum, Real, C};
use std::collections::BinaryHeap;
use thiserror::Error;

/// Values an integrand may produce (real or complex), with enough structure
/// for error estimation.
pub trait QuadValue<T>:
    Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + num_traits::Zero
{
    fn scale(self, s: T) -> Self;
    fn magnitude(self) -> T;
}

impl QuadValue<f64> for f64 {
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue<f32> for f32 {
    fn scale(self, s: f32) -> Self {
        self * s
    }
    fn magnitude(self) -> f32 {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for C<T> {
    fn scale(self, s: T) -> Self {
        C::new(self.re * s, self.im * s)
    }
    fn magnitude(self) -> T {
        self.norm()
    }
}

/// Why an adaptive integration gave up.
#[derive(Debug, Error)]
pub enum QuadError {
    #[error("requested tolerance not reached: estimated error {error} after {panels} panels (value magnitude {value})")]
    ToleranceNotReached { error: f64, value: f64, panels: usize },
    #[error("integrand produced a non-finite value")]
    NonFinite,
    #[error("invalid integration range")]
    BadRange,
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V, T> {
    pub value: V,
    pub error: T,
    pub panels: usize,
}

// 21-point Gauss–Kronrod pair (10-point Gauss embedded). Standard abscissae
// and weights, positive half only.
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Gauss–Kronrod panel. Returns (value, error estimate).
pub fn gk21<T: Real, V: QuadValue<T>, F: Fn(T) -> V>(f: &F, a: T, b: T) -> (V, T) {
    let center = (a + b) * T::of(0.5);
    let half = (b - a) * T::of(0.5);

    let fc = f(center);
    let mut kronrod = fc.scale(T::of(WGK21[10]));
    let mut gauss = V::zero();
    let mut resabs = fc.magnitude() * T::of(WGK21[10]);

    for j in 0..10 {
        let dx = half * T::of(XGK21[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        kronrod = kronrod + sum.scale(T::of(WGK21[j]));
        resabs += (f1.magnitude() + f2.magnitude()) * T::of(WGK21[j]);
        if j % 2 == 1 {
            gauss = gauss + sum.scale(T::of(WG10[j / 2]));
        }
    }

    let value = kronrod.scale(half);
    let raw_err = (kronrod - gauss).magnitude() * half.abs();
    // GSL-style rescaling keeps the estimate meaningful for both converged
    // and badly-resolved panels.
    let scaled = if raw_err > T::zero() && resabs > T::zero() {
        let resabs = resabs * half.abs();
        let r = (T::of(200.0) * raw_err / resabs).powf(T::of(1.5));
        if r < T::one() {
            resabs * r
        } else {
            raw_err
        }
    } else {
        raw_err
    };
    let floor = T::epsilon() * T::of(50.0) * resabs * half.abs();
    (value, scaled.max(floor))
}

struct Segment<T, V> {
    err: T,
    a: T,
    b: T,
    value: V,
}

impl<T: Real, V> PartialEq for Segment<T, V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.a == other.a
    }
}
impl<T: Real, V> Eq for Segment<T, V> {}
impl<T: Real, V> PartialOrd for Segment<T, V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real, V> Ord for Segment<T, V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap on error; tie-break on position so the split order is
        // reproducible run to run.
        self.err
            .partial_cmp(&other.err)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(std::cmp::Ordering::Equal))
    }
}

/// Adaptive integration of `f` over `[a, b]`. `breakpoints` inside the range
/// become mandatory panel edges (used for resonance peaks). Running totals
/// steer the refinement; the returned value is a deterministic pairwise sum
/// over the final panels in position order.
pub fn integrate_adaptive<T: Real, V: QuadValue<T>, F: Fn(T) -> V>(
    f: &F,
    a: T,
    b: T,
    breakpoints: &[T],
    tol_abs: T,
    tol_rel: T,
    max_panels: usize,
) -> Result<QuadResult<V, T>, QuadError> {
    if !(b > a) {
        return Err(QuadError::BadRange);
    }
    let mut edges: Vec<T> = vec![a];
    let mut pts: Vec<T> = breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    edges.extend(pts);
    edges.push(b);

    let eval = |lo: T, hi: T| -> Result<(V, T), QuadError> {
        let (v, e) = gk21(f, lo, hi);
        if !v.magnitude().is_finite() {
            return Err(QuadError::NonFinite);
        }
        Ok((v, e))
    };

    let mut heap: BinaryHeap<Segment<T, V>> = BinaryHeap::new();
    let mut settled: Vec<Segment<T, V>> = Vec::new(); // rounding-limited, never refined
    let mut total_val = V::zero();
    let mut total_err = T::zero();
    for w in edges.windows(2) {
        let (v, e) = eval(w[0], w[1])?;
        total_val = total_val + v;
        total_err += e;
        heap.push(Segment { err: e, a: w[0], b: w[1], value: v });
    }

    loop {
        let target = tol_abs.max(tol_rel * total_val.magnitude());
        if total_err <= target {
            break;
        }
        let n = heap.len() + settled.len();
        if n >= max_panels {
            return Err(QuadError::ToleranceNotReached {
                error: total_err.to_f64().unwrap_or(f64::NAN),
                value: total_val.magnitude().to_f64().unwrap_or(f64::NAN),
                panels: n,
            });
        }
        let worst = match heap.pop() {
            Some(s) if s.err > T::zero() => s,
            Some(s) => {
                settled.push(s);
                break;
            }
            None => break,
        };
        let mid = (worst.a + worst.b) * T::of(0.5);
        if mid <= worst.a || mid >= worst.b {
            // Rounding resolution reached; its error stays in the budget.
            settled.push(worst);
            continue;
        }
        total_val = total_val - worst.value;
        total_err -= worst.err;
        for (l, h) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = eval(l, h)?;
            total_val = total_val + v;
            total_err += e;
            heap.push(Segment { err: e, a: l, b: h, value: v });
        }
    }

    // Final deterministic reduction in position order.
    let mut segs: Vec<Segment<T, V>> = heap.into_vec();
    segs.append(&mut settled);
    segs.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
    let panels = segs.len();
    let value = pairwise_sum_values(&segs);
    let errs: Vec<T> = segs.iter().map(|s| s.err).collect();
    let error = pairwise_sum(&errs);
    // Allow for drift between the running totals that steered refinement
    // and the exact re-summation.
    let target = (tol_abs.max(tol_rel * value.magnitude())) * T::of(1.5);
    if error > target {
        return Err(QuadError::ToleranceNotReached {
            error: error.to_f64().unwrap_or(f64::NAN),
            value: value.magnitude().to_f64().unwrap_or(f64::NAN),
            panels,
        });
    }
    Ok(QuadResult { value, error, panels })
}

fn pairwise_sum_values<T: Real, V: QuadValue<T>>(segs: &[Segment<T, V>]) -> V {
    match segs.len() {
        0 => V::zero(),
        1 => segs[0].value,
        2 => segs[0].value + segs[1].value,
        n => {
            let mid = n / 2;
            pairwise_sum_values(&segs[..mid]) + pairwise_sum_values(&segs[mid..])
        }
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Newton iteration on the Legendre polynomial from the usual Chebyshev-like
/// initial guesses. Nodes are returned in increasing order.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::of(n as f64);
    for i in 0..n.div_ceil(2) {
        let mut x = (T::PI() * (T::of(i as f64) + T::of(0.75)) / (nf + T::of(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= T::epsilon() * T::of(4.0) * x.abs().max(T::one()) {
                break;
            }
        }
        let w = T::of(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, T::zero());
        nodes[n / 2] = T::zero();
        weights[n / 2] = T::of(2.0) / (d * d);
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    if n == 0 {
        return (p0, T::zero());
    }
    let mut p1 = x;
    for j in 2..=n {
        let jf = T::of(j as f64);
        let p2 = ((T::of(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = T::of(n as f64) * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// All Legendre polynomials `P_0(x) ... P_n(x)`.
pub fn legendre_all<T: Real>(n: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(T::one());
    if n == 0 {
        return out;
    }
    out.push(x);
    for j in 2..=n {
        let jf = T::of(j as f64);
        let p = ((T::of(2.0) * jf - T::one()) * x * out[j - 1] - (jf - T::one()) * out[j - 2]) / jf;
        out.push(p);
    }
    out
}
