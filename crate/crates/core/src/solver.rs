//! Complex resonance spectrum of the delta-shell well.
//!
//! Roots are found on the entire function
//!
//! ```text
//! h(k) = (k a + lambda sin 2ka) + i 2 lambda sin^2(ka)
//! ```
//!
//! (the denominator of the inside amplitude), which has no poles, so Newton
//! basins are clean; the cotangent form of the quantization condition blows
//! up exactly where the roots live at large opacity. Seeds come from the
//! large-opacity asymptotics and are refined to
//! `|h(k)| < 1e-13 * lambda |k| a`.

use crate::model::{ModelError, PotentialSpec, Resonance};
use crate::num::{imag_unit, Real, C};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("converged to a non-decaying root k = {re} + {im}i (Im k >= 0)")]
    SpuriousRoot { re: f64, im: f64 },
    #[error("derivative vanished at the iterate; seed too close to a degenerate direction")]
    DegenerateDerivative,
    #[error("index {n} outside the asymptotic validity window n pi < lambda/3")]
    OutsideAsymptoticWindow { n: u32 },
    #[error("strict spectrum requires n_max pi < lambda, got n_max = {n_max}, lambda = {lambda}")]
    SpectrumOutOfRange { n_max: u32, lambda: f64 },
    #[error("two seeds converged to the same root (indices {first} and {second}); spacing violated")]
    DuplicateRoot { first: u32, second: u32 },
    #[error("root with index {n} missing from its window")]
    MissingRoot { n: u32 },
    #[error("quantization function vanishes on the counting contour near k = {re} + {im}i")]
    ZeroOnContour { re: f64, im: f64 },
    #[error("contour refinement exceeded depth limit; phase tracking failed")]
    ContourTooWild,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Value of the pole-defining entire function at a trial wavenumber.
#[derive(Debug, Clone, Copy)]
pub struct QuantizationResidual<T> {
    pub k: C<T>,
    pub residual: C<T>,
}

/// `h(k)`: zero exactly at the resonance wavenumbers.
pub fn quantization_residual<T: Real>(potential: &PotentialSpec<T>, k: C<T>) -> C<T> {
    let a = potential.width();
    let lam = potential.lambda();
    let ka = k * a;
    let s = ka.sin();
    let re_part = ka + (ka + ka).sin() * lam;
    re_part + imag_unit::<T>() * (s * s * (lam + lam))
}

/// `h'(k) = a (1 + 2 lambda e^{2ika})`.
pub fn quantization_residual_derivative<T: Real>(potential: &PotentialSpec<T>, k: C<T>) -> C<T> {
    let a = potential.width();
    let lam = potential.lambda();
    let phase = (imag_unit::<T>() * (k * a) * T::of(2.0)).exp();
    (phase * (lam + lam) + T::one()) * a
}

/// Evaluate `h` at `k`, packaged with the probe point.
pub fn residual_at<T: Real>(potential: &PotentialSpec<T>, k: C<T>) -> QuantizationResidual<T> {
    QuantizationResidual { k, residual: quantization_residual(potential, k) }
}

/// Whether index `n` lies in the window where the asymptotic root formula is
/// trustworthy (`n pi < lambda / 3`).
pub fn asymptotic_valid<T: Real>(potential: &PotentialSpec<T>, n: u32) -> bool {
    T::of(n as f64) * T::PI() < potential.lambda() / T::of(3.0)
}

/// Large-opacity seed for the n-th resonance:
/// `k_n ~ (1/a) [2 n pi lambda / (1 + 2 lambda) - i (n pi / 2 lambda)^2]`,
/// with energy `k^2/2` and lifetime derived from it.
pub fn asymptotic_resonance<T: Real>(potential: &PotentialSpec<T>, n: u32) -> Resonance<T> {
    assert!(n >= 1, "resonance index starts at 1");
    let a = potential.width();
    let lam = potential.lambda();
    let npi = T::of(n as f64) * T::PI();
    let re = (npi + npi) * lam / (T::one() + lam + lam) / a;
    let im = -(npi / (lam + lam)).powi(2) / a;
    Resonance::from_wavenumber(n, C::new(re, im)).expect("asymptotic seed always has Im k < 0")
}

/// As [`asymptotic_resonance`] but rejecting indices outside the validity
/// window instead of merely degrading.
pub fn asymptotic_resonance_checked<T: Real>(
    potential: &PotentialSpec<T>,
    n: u32,
) -> Result<Resonance<T>, SolverError> {
    if !asymptotic_valid(potential, n) {
        return Err(SolverError::OutsideAsymptoticWindow { n });
    }
    Ok(asymptotic_resonance(potential, n))
}

const NEWTON_MAX_ITER: usize = 100;

/// Newton-refine a seed to a resonance root. The seed must lie within one
/// level spacing (`pi/a`) of a true root. Converged roots with `Im k >= 0`
/// (including the trivial zero at the origin) are rejected as spurious.
pub fn refine_resonance<T: Real>(
    potential: &PotentialSpec<T>,
    seed: C<T>,
) -> Result<Resonance<T>, SolverError> {
    let a = potential.width();
    let lam = potential.lambda();
    let tol = T::solver_tol(1e-13);
    let scale = |k: C<T>| (lam * k.norm() * a).max(T::min_positive_value());

    let mut k = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let h = quantization_residual(potential, k);
        if h.norm() / scale(k) < tol {
            return finish_root(potential, k);
        }
        let dh = quantization_residual_derivative(potential, k);
        if dh.norm() < T::epsilon() * a * lam {
            return Err(SolverError::DegenerateDerivative);
        }
        k = k - h / dh;
    }
    let res = quantization_residual(potential, k).norm() / scale(k);
    Err(SolverError::NonConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: res.to_f64().unwrap_or(f64::NAN),
    })
}

fn finish_root<T: Real>(potential: &PotentialSpec<T>, k: C<T>) -> Result<Resonance<T>, SolverError> {
    if !(k.im < T::zero()) {
        return Err(SolverError::SpuriousRoot {
            re: k.re.to_f64().unwrap_or(f64::NAN),
            im: k.im.to_f64().unwrap_or(f64::NAN),
        });
    }
    let lam = potential.lambda();
    let a = potential.width();
    // Recover the level index from the asymptotic spacing.
    let n_est = (k.re * a * (T::one() + lam + lam) / ((lam + lam) * T::PI()))
        .round()
        .to_f64()
        .unwrap_or(0.0);
    let n = if n_est < 1.0 { 1 } else { n_est as u32 };
    Ok(Resonance::from_wavenumber(n, k)?)
}

/// Refined spectrum for indices `1..=n_max`, sorted by `Re k`, pairwise
/// distinct. With `strict` the request must satisfy `n_max pi < lambda`;
/// otherwise higher indices are solved on a best-effort basis (their seeds
/// degrade as `n pi` approaches `lambda`).
pub fn resonance_spectrum<T: Real>(
    potential: &PotentialSpec<T>,
    n_max: u32,
    strict: bool,
) -> Result<Vec<Resonance<T>>, SolverError> {
    if strict && T::of(n_max as f64) * T::PI() >= potential.lambda() {
        return Err(SolverError::SpectrumOutOfRange {
            n_max,
            lambda: potential.lambda().to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut roots: Vec<Resonance<T>> = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let seed = asymptotic_resonance(potential, n).k();
        roots.push(refine_resonance(potential, seed)?);
    }
    roots.sort_by(|p, q| p.kappa().partial_cmp(&q.kappa()).unwrap());
    let min_sep = T::PI() / (T::of(2.0) * potential.width());
    for w in roots.windows(2) {
        if (w[1].k() - w[0].k()).norm() <= min_sep {
            return Err(SolverError::DuplicateRoot { first: w[0].index(), second: w[1].index() });
        }
    }
    for (i, r) in roots.iter().enumerate() {
        if r.index() != (i + 1) as u32 {
            return Err(SolverError::MissingRoot { n: (i + 1) as u32 });
        }
    }
    Ok(roots)
}

/// Count zeros of `h` inside a rectangle by tracking the argument of `h`
/// around the boundary (argument principle). Subdivides edges until every
/// step turns the phase by less than pi/2.
pub fn count_zeros_in_rectangle<T: Real>(
    potential: &PotentialSpec<T>,
    re_range: (T, T),
    im_range: (T, T),
) -> Result<usize, SolverError> {
    let corners = [
        C::new(re_range.0, im_range.0),
        C::new(re_range.1, im_range.0),
        C::new(re_range.1, im_range.1),
        C::new(re_range.0, im_range.1),
        C::new(re_range.0, im_range.0),
    ];
    // Pre-split below the oscillation scale of e^{2ika}, which dominates h
    // off the real axis; a coarser walk can alias whole turns away.
    let max_step = T::PI() / (T::of(8.0) * potential.width());
    let mut total = T::zero();
    for seg in corners.windows(2) {
        let len = (seg[1] - seg[0]).norm();
        let pieces = (len / max_step).ceil().to_f64().unwrap_or(1.0).max(1.0) as usize;
        for i in 0..pieces {
            let f0 = T::of(i as f64) / T::of(pieces as f64);
            let f1 = T::of((i + 1) as f64) / T::of(pieces as f64);
            let z0 = seg[0] + (seg[1] - seg[0]).scale(f0);
            let z1 = seg[0] + (seg[1] - seg[0]).scale(f1);
            total += phase_change(potential, z0, z1, 0)?;
        }
    }
    let winding = total / (T::of(2.0) * T::PI());
    Ok(winding.round().to_f64().unwrap_or(0.0).max(0.0) as usize)
}

/// Standard counting box for the first `n_max` resonances:
/// `Re(ka) in [pi/4, (n_max + 1/2) pi]`, `Im(ka) in [-pi/2, 0]`. The left
/// edge sits above the trivial zero of `h` at the origin, below the first
/// resonance for any opacity in the metastable regime.
pub fn standard_resonance_count<T: Real>(
    potential: &PotentialSpec<T>,
    n_max: u32,
) -> Result<usize, SolverError> {
    let a = potential.width();
    let left = T::PI() / (T::of(4.0) * a);
    let right = (T::of(n_max as f64) + T::of(0.5)) * T::PI() / a;
    let depth = T::PI() / (T::of(2.0) * a);
    count_zeros_in_rectangle(potential, (left, right), (-depth, T::zero()))
}

const MAX_PHASE_DEPTH: usize = 48;

fn phase_change<T: Real>(
    potential: &PotentialSpec<T>,
    z0: C<T>,
    z1: C<T>,
    depth: usize,
) -> Result<T, SolverError> {
    if depth > MAX_PHASE_DEPTH {
        return Err(SolverError::ContourTooWild);
    }
    let h0 = quantization_residual(potential, z0);
    let h1 = quantization_residual(potential, z1);
    let floor = T::min_positive_value() * T::of(1e6);
    if h0.norm() < floor || h1.norm() < floor {
        let z = if h0.norm() < floor { z0 } else { z1 };
        return Err(SolverError::ZeroOnContour {
            re: z.re.to_f64().unwrap_or(f64::NAN),
            im: z.im.to_f64().unwrap_or(f64::NAN),
        });
    }
    let delta = (h1 / h0).arg();
    if delta.abs() < T::FRAC_PI_2() {
        // A quarter-turn cap guarantees no full winding is ever hidden
        // inside one step.
        let mid = (z0 + z1) * T::of(0.5);
        if (mid - z0).norm() < T::epsilon() * z0.norm().max(T::one()) {
            return Ok(delta);
        }
        // Verify against the midpoint once; refine only when inconsistent.
        let hm = quantization_residual(potential, mid);
        if hm.norm() < floor {
            return Err(SolverError::ZeroOnContour {
                re: mid.re.to_f64().unwrap_or(f64::NAN),
                im: mid.im.to_f64().unwrap_or(f64::NAN),
            });
        }
        let d0 = (hm / h0).arg();
        let d1 = (h1 / hm).arg();
        if (d0 + d1 - delta).abs() < T::of(1e-9) {
            return Ok(delta);
        }
    }
    let mid = (z0 + z1) * T::of(0.5);
    Ok(phase_change(potential, z0, mid, depth + 1)? + phase_change(potential, mid, z1, depth + 1)?)
}
