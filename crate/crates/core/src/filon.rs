//! Oscillation-exact panel integration for kernels `exp(-i E t)`.
//!
//! On a panel `E = c + h u`, `u in [-1, 1]`, a smooth amplitude `F` is
//! projected onto Legendre polynomials and the integral
//! `int F(E) exp(-i E t) dE` becomes `h exp(-i c t) sum_j a_j m_j(h t)` with
//! the modified moments
//!
//! ```text
//! m_j(theta) = int_{-1}^{1} P_j(u) exp(-i theta u) du = 2 (-i)^j j_j(theta).
//! ```
//!
//! The moments are exact for arbitrarily fast oscillation, so panel sizes are
//! set by the amplitude alone and the cost per time sample does not grow
//! with `t`.

use crate::num::{Real, C};
use crate::quad::{gauss_legendre, legendre_all};

/// Spherical Bessel functions `j_0(x) ... j_nmax(x)` for `x >= 0`.
///
/// Upward recurrence where it is stable (`x` beyond the order), Miller's
/// downward recurrence otherwise, power series for tiny arguments.
pub fn spherical_jn<T: Real>(nmax: usize, x: T) -> Vec<T> {
    assert!(x >= T::zero());
    let mut out = vec![T::zero(); nmax + 1];
    if x < T::of(1e-2) {
        // j_n(x) = x^n / (2n+1)!! * (1 - x^2/(2(2n+3)) + x^4/(8(2n+3)(2n+5)))
        let x2 = x * x;
        let mut dfact = T::one(); // (2n+1)!!
        let mut xn = T::one(); // x^n
        for (n, slot) in out.iter_mut().enumerate() {
            if n > 0 {
                dfact = dfact * T::of((2 * n + 1) as f64);
                xn = xn * x;
            }
            let c1 = T::of((2 * n + 3) as f64);
            let c2 = T::of((2 * n + 5) as f64);
            let series = T::one() - x2 / (T::of(2.0) * c1) + x2 * x2 / (T::of(8.0) * c1 * c2);
            *slot = xn / dfact * series;
        }
        return out;
    }

    let j0 = x.sin() / x;
    if nmax == 0 {
        out[0] = j0;
        return out;
    }
    let j1 = x.sin() / (x * x) - x.cos() / x;

    if x > T::of(nmax as f64) + T::of(2.0) {
        out[0] = j0;
        out[1] = j1;
        for n in 1..nmax {
            out[n + 1] = T::of((2 * n + 1) as f64) / x * out[n] - out[n - 1];
        }
        return out;
    }

    // Miller's algorithm: run the recurrence downward from well above nmax
    // with arbitrary scale, then normalize against j0 or j1.
    let start = nmax + 16 + (x.to_f64().unwrap_or(0.0).sqrt() as usize) * 2;
    let mut jp = T::zero();
    let mut jc = T::min_positive_value().sqrt(); // tiny but scalable
    let mut stored = vec![T::zero(); nmax + 1];
    for n in (0..start).rev() {
        let jm = T::of((2 * n + 3) as f64) / x * jc - jp;
        jp = jc;
        jc = jm;
        if n <= nmax {
            stored[n] = jc;
        }
        // Rescale to avoid overflow while far above the target order.
        if jc.abs() > T::of(1e+40) {
            let s = T::of(1e-40);
            jc = jc * s;
            jp = jp * s;
            for v in stored.iter_mut() {
                *v = *v * s;
            }
        }
    }
    let scale = if j0.abs() > T::of(0.1) * j1.abs() {
        j0 / stored[0]
    } else {
        j1 / stored[1]
    };
    for (slot, v) in out.iter_mut().zip(stored) {
        *slot = v * scale;
    }
    out
}

/// Modified moments `m_j(theta) = int P_j(u) e^{-i theta u} du`,
/// `j = 0..=degree`, for `theta >= 0`.
pub fn oscillatory_moments<T: Real>(degree: usize, theta: T) -> Vec<C<T>> {
    let j = spherical_jn(degree, theta);
    let mut out = Vec::with_capacity(degree + 1);
    // (-i)^j cycles through 1, -i, -1, i.
    for (n, &jn) in j.iter().enumerate() {
        let v = T::of(2.0) * jn;
        out.push(match n % 4 {
            0 => C::new(v, T::zero()),
            1 => C::new(T::zero(), -v),
            2 => C::new(-v, T::zero()),
            _ => C::new(T::zero(), v),
        });
    }
    out
}

/// Discrete Legendre projection on Gauss–Legendre nodes: coefficients
/// `a_j = (2j+1)/2 sum_i w_i P_j(u_i) f(u_i)`, exact for polynomial `f` of
/// degree below the node count.
pub struct LegendreProjector<T> {
    /// `nodes[i]` in `[-1, 1]`, increasing.
    pub nodes: Vec<T>,
    /// `matrix[j][i]`: contribution of node `i` to coefficient `j`.
    pub matrix: Vec<Vec<T>>,
    pub degree: usize,
}

impl<T: Real> LegendreProjector<T> {
    pub fn new(degree: usize) -> Self {
        let n = degree + 1;
        let (nodes, weights) = gauss_legendre::<T>(n);
        let mut matrix = vec![vec![T::zero(); n]; n];
        for (i, (&u, &w)) in nodes.iter().zip(&weights).enumerate() {
            let p = legendre_all(degree, u);
            for (j, row) in matrix.iter_mut().enumerate() {
                row[i] = (T::of(j as f64) + T::of(0.5)) * w * p[j];
            }
        }
        LegendreProjector { nodes, matrix, degree }
    }

    /// Project sampled values (one per node) onto coefficients.
    pub fn coefficients(&self, values: &[T]) -> Vec<T> {
        self.matrix
            .iter()
            .map(|row| {
                let mut acc = T::zero();
                for (&m, &v) in row.iter().zip(values) {
                    acc += m * v;
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{gk21, integrate_adaptive};

    #[test]
    fn spherical_bessel_reference_values() {
        // j_0(1) = sin(1)/1, j_1(1), j_5(1), j_5(10), j_10(50) against
        // values computed from the defining series / recurrences.
        let j1 = spherical_jn(5, 1.0f64);
        assert!((j1[0] - 0.8414709848078965).abs() < 1e-14);
        assert!((j1[1] - 0.30116867893975674).abs() < 1e-14);
        assert!((j1[5] - 9.256115861125816e-5).abs() < 1e-17);
        let j10 = spherical_jn(5, 10.0f64);
        assert!((j10[5] - (-0.05553451162145218)).abs() < 1e-13);
        let j50 = spherical_jn(10, 50.0f64);
        assert!((j50[10] - (-0.015039221463465962)).abs() < 1e-13);
    }

    #[test]
    fn spherical_bessel_tiny_argument() {
        let j = spherical_jn(4, 1e-6f64);
        assert!((j[0] - 1.0).abs() < 1e-12);
        assert!((j[1] - 1e-6 / 3.0).abs() < 1e-18);
        assert!((j[3] - 1e-18 / 105.0).abs() < 1e-30);
    }

    #[test]
    fn moments_match_quadrature() {
        // Check m_j(theta) against direct adaptive quadrature for a few
        // (j, theta) pairs spanning the recurrence branches.
        for &theta in &[0.3f64, 2.0, 7.5, 40.0] {
            let m = oscillatory_moments(8, theta);
            for j in [0usize, 1, 4, 8] {
                let f = |u: f64| {
                    let p = legendre_all(j, u)[j];
                    C::new(p * (theta * u).cos(), -p * (theta * u).sin())
                };
                let direct = integrate_adaptive(&f, -1.0, 1.0, &[], 1e-13, 1e-13, 600).unwrap().value;
                assert!(
                    (m[j] - direct).norm() < 1e-11,
                    "j={j} theta={theta}: {:?} vs {:?}",
                    m[j],
                    direct
                );
            }
        }
    }

    #[test]
    fn projection_recovers_polynomial_integral() {
        // F(u) = u^3 - 0.2 u + 0.7 against exact int F e^{-i theta u} du.
        let proj = LegendreProjector::<f64>::new(12);
        let vals: Vec<f64> = proj.nodes.iter().map(|&u| u.powi(3) - 0.2 * u + 0.7).collect();
        let coeff = proj.coefficients(&vals);
        let theta = 13.7;
        let m = oscillatory_moments(12, theta);
        let mut filon = C::new(0.0, 0.0);
        for (a, mm) in coeff.iter().zip(&m) {
            filon += mm.scale(*a);
        }
        let f = |u: f64| {
            let fu = u.powi(3) - 0.2 * u + 0.7;
            C::new(fu * (theta * u).cos(), -fu * (theta * u).sin())
        };
        let direct = integrate_adaptive(&f, -1.0, 1.0, &[], 1e-13, 1e-13, 800).unwrap().value;
        assert!((filon - direct).norm() < 1e-12);
        // and a smooth non-polynomial amplitude
        let vals: Vec<f64> = proj.nodes.iter().map(|&u| (1.3 * u).cos() / (2.0 + u)).collect();
        let coeff = proj.coefficients(&vals);
        let mut filon = C::new(0.0, 0.0);
        for (a, mm) in coeff.iter().zip(&m) {
            filon += mm.scale(*a);
        }
        let f = |u: f64| {
            let fu = (1.3 * u).cos() / (2.0 + u);
            C::new(fu * (theta * u).cos(), -fu * (theta * u).sin())
        };
        let (direct, _) = gk21(&f, -1.0, 1.0);
        let direct_fine = integrate_adaptive(&f, -1.0, 1.0, &[], 1e-13, 1e-13, 800).unwrap().value;
        assert!((direct - direct_fine).norm() < 1e-6);
        // degree-12 interpolation of this amplitude has ~1e-8 tail
        assert!((filon - direct_fine).norm() < 1e-7, "{:?}", filon - direct_fine);
    }
}
