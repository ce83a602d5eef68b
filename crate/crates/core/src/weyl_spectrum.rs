//! Weyl matrix `M(z)` on the negative half-line and the bound states of the
//! extension, i.e. the zeros of `det(DM(z) − C)`.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extensions::{negative_count_cdstar, to_unitary, AdmissiblePair, Flux};
use crate::linalg::Matrix2;
use crate::scalar::{cis, Real};
use crate::special_fn::log_gamma_unchecked;

/// A negative eigenvalue together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct SpectralPoint<T> {
    pub z: T,
    pub multiplicity: usize,
    /// `σ_min(DM(z) − C)` at the refined root.
    pub residual: T,
}

/// Precomputed prefactors: `M(z) = diag(k₁ s^α, k₂ s^{1−α})`, `s = −z/4`.
#[derive(Debug, Clone, Copy)]
pub struct WeylMatrix<T> {
    alpha: T,
    log_k1: T,
    log_k2: T,
}

impl<T: Real> WeylMatrix<T> {
    pub fn new(alpha: Flux<T>) -> Self {
        let a = alpha.value();
        let lg = |x: T| log_gamma_unchecked(Complex::new(x, T::zero())).re;
        let pref = (T::lit(2.0) / T::PI() * alpha.sin_pi()).ln();
        Self {
            alpha: a,
            log_k1: pref + T::lit(2.0) * lg(T::one() - a),
            log_k2: pref + T::lit(2.0) * lg(a),
        }
    }

    /// Diagonal entries of `M` at `ln(−z)`; stays finite far beyond the range
    /// where `−z` itself is representable.
    pub fn entries_at_log(&self, log_minus_z: T) -> (T, T) {
        let ls = log_minus_z - T::lit(4.0).ln();
        let m1 = -(self.log_k1 + self.alpha * ls).exp();
        let m2 = -(self.log_k2 + (T::one() - self.alpha) * ls).exp();
        (m1, m2)
    }

    pub fn at_log(&self, log_minus_z: T) -> Matrix2<T> {
        let (m1, m2) = self.entries_at_log(log_minus_z);
        Matrix2::real_diag(m1, m2)
    }

    pub fn at(&self, z: T) -> Result<Matrix2<T>> {
        if !(z < T::zero()) || !z.is_finite() {
            return Err(Error::InvalidInput(format!(
                "M(z) is evaluated for negative z only, got {}",
                z
            )));
        }
        Ok(self.at_log((-z).ln()))
    }
}

/// `M(z) = −(2/π) sin(πα) · diag(Γ(1−α)²(−z/4)^α, Γ(α)²(−z/4)^{1−α})` for `z < 0`.
pub fn weyl_m<T: Real>(alpha: Flux<T>, z: T) -> Result<Matrix2<T>> {
    WeylMatrix::new(alpha).at(z)
}

/// `σ_min(DM − C)` and the scale `‖DM‖ + ‖C‖` it is measured against.
pub fn bound_state_residual<T: Real>(pair: &AdmissiblePair<T>, m: &Matrix2<T>) -> (T, T) {
    let a = pair.d * *m - pair.c;
    let (_, smin) = a.singular_values();
    (smin, (pair.d * *m).norm() + pair.c.norm())
}

/// Knobs for [`bound_states_with`].
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Successive `log10(−z)` half-widths; the next one is tried on a count mismatch.
    pub ranges: &'static [f64],
    pub points_per_decade: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            ranges: &[12.0, 100.0, 300.0],
            points_per_decade: 200,
        }
    }
}

/// Negative eigenvalues of the extension `(C, D)`, with multiplicities.
pub fn bound_states<T: Real>(
    pair: &AdmissiblePair<T>,
    alpha: Flux<T>,
) -> Result<Vec<SpectralPoint<T>>> {
    bound_states_with(pair, alpha, ScanOptions::default())
}

/// [`bound_states`] with explicit scan parameters.
///
/// With `U` the unitary of the pair, `DM − C` is singular exactly when
/// `1 + U·W(z)` is, where `W = diag(−e^{2i·atan m_j})` is the (unitary) Cayley
/// transform of `M`. The bounded functional `σ_min(1 + UW)` is sampled on a
/// uniform grid in `ln(−z)`; every interior discrete minimum is refined by
/// golden-section search (the functional is V-shaped at a root) and accepted
/// when `σ_min(DM − C) ≤ 1e−8·(‖DM‖ + ‖C‖)`. If the multiplicities do not add
/// up to the number of negative eigenvalues of `CD*`, the scan is repeated on
/// wider ranges and finally on a four times denser grid before giving up.
pub fn bound_states_with<T: Real>(
    pair: &AdmissiblePair<T>,
    alpha: Flux<T>,
    opts: ScanOptions,
) -> Result<Vec<SpectralPoint<T>>> {
    let expected = negative_count_cdstar(pair);
    if expected == 0 {
        return Ok(Vec::new());
    }
    let u = to_unitary(pair)?;
    let weyl = WeylMatrix::new(alpha);
    // Keep M representable for narrow scalar types.
    let max_decades = T::max_value().log10().as_f64() * 0.9;
    let mut found = 0;
    let mut attempts: Vec<(f64, usize)> = opts
        .ranges
        .iter()
        .map(|&r| (r.min(max_decades), opts.points_per_decade))
        .collect();
    if let Some(&(r, _)) = attempts.last() {
        attempts.push((r, opts.points_per_decade * 4));
    }
    for (half_width, density) in attempts {
        let points = scan(pair, u.matrix(), &weyl, half_width, density);
        found = points.iter().map(|p| p.multiplicity).sum();
        if found == expected {
            return Ok(points);
        }
    }
    Err(Error::CountMismatch { found, expected })
}

/// `1 + U·W(M)` with `W = diag(−e^{2i·atan m_j})`.
fn cayley_residual_matrix<T: Real>(u: &Matrix2<T>, m1: T, m2: T) -> Matrix2<T> {
    let w = |m: T| -cis(T::lit(2.0) * m.atan());
    Matrix2::identity() + *u * Matrix2::diag(w(m1), w(m2))
}

fn scan<T: Real>(
    pair: &AdmissiblePair<T>,
    u: &Matrix2<T>,
    weyl: &WeylMatrix<T>,
    half_width_decades: f64,
    per_decade: usize,
) -> Vec<SpectralPoint<T>> {
    let ln10 = std::f64::consts::LN_10;
    let n = (2.0 * half_width_decades * per_decade as f64).ceil() as usize;
    let lo = -half_width_decades * ln10;
    let h = 2.0 * half_width_decades * ln10 / n as f64;
    let at = |k: usize| T::lit(lo + h * k as f64);
    let f = |x: T| {
        let (m1, m2) = weyl.entries_at_log(x);
        cayley_residual_matrix(u, m1, m2).singular_values().1
    };
    let samples: Vec<T> = (0..=n).map(|k| f(at(k))).collect();
    let tol = T::tol(1e-8);
    let mut roots: Vec<SpectralPoint<T>> = Vec::new();
    for k in 1..n {
        if !(samples[k] <= samples[k - 1] && samples[k] < samples[k + 1]) {
            continue;
        }
        let x = golden_min(&f, at(k - 1), at(k + 1));
        let (m1, m2) = weyl.entries_at_log(x);
        let (smax_c, smin_c) = cayley_residual_matrix(u, m1, m2).singular_values();
        let m = Matrix2::real_diag(m1, m2);
        let (residual, scale) = bound_state_residual(pair, &m);
        if smin_c > tol || residual > tol * scale {
            continue;
        }
        let multiplicity = if smax_c <= tol { 2 } else { 1 };
        let z = -x.exp();
        // Neighbouring minima can bracket the same root; keep the better one.
        if let Some(prev) = roots.last_mut() {
            if ((prev.z - z) / z).abs() <= T::tol(1e-6) {
                if residual < prev.residual {
                    *prev = SpectralPoint { z, multiplicity, residual };
                }
                continue;
            }
        }
        roots.push(SpectralPoint { z, multiplicity, residual });
    }
    roots
}

/// Golden-section minimization of a unimodal function on `[a, b]`, run until
/// the bracket stops shrinking in floating point.
fn golden_min<T: Real>(f: &impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let r = T::lit(0.618_033_988_749_894_9);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if !(c > a && d < b && c < d) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix2<f64>;

    #[test]
    fn closed_form_values() {
        let a = Flux::new(0.5).unwrap();
        let m = weyl_m(a, -1.0).unwrap();
        assert!((m - M::real_diag(-1.0, -1.0)).norm() < 1e-14);
        let m = weyl_m(a, -4.0).unwrap();
        assert!((m - M::real_diag(-2.0, -2.0)).norm() < 1e-14);
        assert!(weyl_m(a, 0.0).is_err());
        assert!(weyl_m(a, 1.0).is_err());
    }

    #[test]
    fn double_root_at_minus_one() {
        let pair = AdmissiblePair::new(-M::identity(), M::identity()).unwrap();
        let pts = bound_states(&pair, Flux::new(0.5).unwrap()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].multiplicity, 2);
        assert!((pts[0].z + 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_bound_states_for_dirichlet_like_pairs() {
        let a = Flux::new(0.3).unwrap();
        let p = AdmissiblePair::new(M::identity(), M::zero()).unwrap();
        assert!(bound_states(&p, a).unwrap().is_empty());
        let p = AdmissiblePair::new(M::zero(), M::identity()).unwrap();
        assert!(bound_states(&p, a).unwrap().is_empty());
    }

    #[test]
    fn split_roots_for_general_flux() {
        // C = −I, D = I: roots of m_j(z) = −1 in each channel separately.
        let a = Flux::new(0.3).unwrap();
        let pair = AdmissiblePair::new(-M::identity(), M::identity()).unwrap();
        let pts = bound_states(&pair, a).unwrap();
        assert_eq!(pts.len(), 2);
        let w = WeylMatrix::new(a);
        for p in pts {
            let (m1, m2) = w.entries_at_log((-p.z).ln());
            assert!((m1 + 1.0).abs().min((m2 + 1.0).abs()) < 1e-12);
        }
    }
}
