//! Complex log-Gamma, digamma and phase unwrapping.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{cis, exact_sum, phase_step, Real};

/// GSL / Numerical Recipes coefficients for `g = 7`, `n = 9`.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `B_{2k}` for `k = 1..=10`.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

fn is_pole<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re <= T::zero() && z.re == z.re.round()
}

fn pole<T: Real>(z: Complex<T>) -> Error {
    Error::Pole {
        re: z.re.as_f64(),
        im: z.im.as_f64(),
    }
}

/// `log Γ(z)`, continuous off the negative real axis.
///
/// Uses the Lanczos sum in logarithmic form for `Re z ≥ 1/2` and the
/// reflection formula below that. For `Re z > 0` this is the principal
/// logarithm of `Γ`; for `Re z < 1/2` the imaginary part follows the usual
/// analytic continuation rather than being reduced into `(−π, π]`.
pub fn log_gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if is_pole(z) {
        return Err(pole(z));
    }
    Ok(log_gamma_unchecked(z))
}

pub(crate) fn log_gamma_unchecked<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    if z.re < half {
        if z.im < T::zero() {
            return log_gamma_unchecked(z.conj()).conj();
        }
        // log Γ(z) = ln π − log Γ(1−z) − log sin(πz), with
        // log sin(πz) = ln(1/2) + iπ/2 − iπz + log(1 − e^{2πiz}), |e^{2πiz}| ≤ 1.
        let pi = T::PI();
        let i = Complex::new(T::zero(), T::one());
        let q = (i * z * (pi + pi)).exp();
        let one = Complex::new(T::one(), T::zero());
        let log_sin = Complex::new(half.ln(), pi * half) - i * z * pi + (one - q).ln();
        let lg = log_gamma_unchecked(one - z);
        return Complex::new(pi.ln(), T::zero()) - lg - log_sin;
    }
    let zp = z - T::one();
    let mut acc = Complex::new(T::lit(LANCZOS[0]), T::zero());
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + Complex::new(T::lit(c), T::zero()) / (zp + T::lit(k as f64));
    }
    let t = zp + T::lit(LANCZOS_G + 0.5);
    let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
    (zp + half) * t.ln() - t + acc.ln() + half_ln_2pi
}

/// `Γ(a+ix)/Γ(a−ix) = exp(2i·Im log Γ(a+ix))`, unimodular by construction.
pub fn gamma_phase_ratio<T: Real>(a: T, x: T) -> Complex<T> {
    debug_assert!(a > T::zero());
    let lg = log_gamma_unchecked(Complex::new(a, x));
    cis(lg.im + lg.im)
}

/// `π·cot(w)` for complex `w`, written with `|q| ≤ 1` exponentials only.
fn cot<T: Real>(w: Complex<T>) -> Complex<T> {
    let i = Complex::new(T::zero(), T::one());
    let one = Complex::new(T::one(), T::zero());
    if w.im >= T::zero() {
        let q = (i * (w + w)).exp();
        i * (q + one) / (q - one)
    } else {
        let p = (-i * (w + w)).exp();
        i * (one + p) / (one - p)
    }
}

/// Digamma `ψ(z) = Γ'(z)/Γ(z)`.
pub fn digamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if is_pole(z) {
        return Err(pole(z));
    }
    Ok(digamma_unchecked(z))
}

pub(crate) fn digamma_unchecked<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    if z.re < T::lit(0.5) {
        let pi = T::PI();
        return digamma_unchecked(one - z) - cot(z * pi) * pi;
    }
    let mut z = z;
    let mut acc = Complex::new(T::zero(), T::zero());
    let eight = T::lit(8.0);
    while z.norm() < eight {
        acc = acc - one / z;
        z = z + one;
    }
    let inv = one / z;
    let inv2 = inv * inv;
    let mut series = Complex::new(T::zero(), T::zero());
    let mut pw = inv2;
    for (k, &b) in BERNOULLI.iter().enumerate() {
        let two_k = T::lit(2.0 * (k + 1) as f64);
        series = series + pw * (T::lit(b) / two_k);
        pw = pw * inv2;
    }
    acc + z.ln() - inv * T::lit(0.5) - series
}

/// Unwrapped argument of a sequence of nonzero complex samples.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseTrack<T> {
    pub samples: Vec<Complex<T>>,
    pub unwrapped_args: Vec<T>,
    steps: Vec<T>,
}

impl<T: Real> PhaseTrack<T> {
    /// Total change of the continuous argument, `last − first`.
    ///
    /// Summed exactly from the individual steps, so the reversed track
    /// reports exactly the negated value.
    pub fn variation(&self) -> T {
        exact_sum(self.steps.iter().copied())
    }

    pub fn steps(&self) -> &[T] {
        &self.steps
    }
}

/// Unwraps the argument of `samples`.
///
/// Fails with [`Error::RefinementNeeded`] at the first adjacent pair whose
/// principal phase step reaches `π/2`; the caller is expected to subdivide.
pub fn unwrap<T: Real>(samples: &[Complex<T>]) -> Result<PhaseTrack<T>> {
    if let Some(k) = samples.iter().position(|s| s.norm() == T::zero()) {
        return Err(Error::InvalidInput(format!("sample {k} is zero")));
    }
    let limit = T::FRAC_PI_2();
    let mut unwrapped = Vec::with_capacity(samples.len());
    let mut steps = Vec::with_capacity(samples.len().saturating_sub(1));
    if let Some(first) = samples.first() {
        unwrapped.push(first.arg());
    }
    for k in 1..samples.len() {
        let step = phase_step(samples[k - 1], samples[k]);
        if step.abs() >= limit {
            return Err(Error::RefinementNeeded {
                index: k - 1,
                step: step.as_f64(),
            });
        }
        steps.push(step);
        unwrapped.push(unwrapped[k - 1] + step);
    }
    Ok(PhaseTrack {
        samples: samples.to_vec(),
        unwrapped_args: unwrapped,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn log_gamma_small_values() {
        assert!(log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-15);
        assert!(log_gamma(c(2.0, 0.0)).unwrap().norm() < 1e-15);
        let lg = log_gamma(c(5.0, 0.0)).unwrap();
        assert!((lg.re - 24f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_gamma_poles() {
        for z in [0.0, -1.0, -7.0] {
            assert!(matches!(log_gamma(c(z, 0.0)), Err(Error::Pole { .. })));
            assert!(matches!(digamma(c(z, 0.0)), Err(Error::Pole { .. })));
        }
        assert!(log_gamma(c(-1.0, 1e-300)).is_ok());
    }

    #[test]
    fn reflection_matches_recurrence() {
        // log Γ(z) = log Γ(z+1) − log z, checked across the Re z = 1/2 seam.
        for &(re, im) in &[(0.3, 0.0), (0.49, 2.0), (-2.7, 0.5), (0.1, -30.0), (-0.5, 0.0)] {
            let z = c(re, im);
            let lhs = log_gamma(z).unwrap();
            let rhs = log_gamma(z + 1.0).unwrap() - z.ln();
            let d = lhs - rhs;
            // Equal up to a multiple of 2πi.
            let k = (d.im / (2.0 * std::f64::consts::PI)).round();
            assert!(d.re.abs() < 1e-12, "{z}: {d}");
            assert!((d.im - 2.0 * std::f64::consts::PI * k).abs() < 1e-12, "{z}: {d}");
        }
    }

    #[test]
    fn gamma_phase_ratio_is_unimodular_and_odd() {
        for &(a, x) in &[(0.5f64, 3.0f64), (1.0, -17.0), (0.05, 0.2), (9.0, 250.0)] {
            let r = gamma_phase_ratio(a, x);
            assert!((r.norm() - 1.0).abs() < 1e-15);
            let s = gamma_phase_ratio(a, -x);
            assert!((r - s.conj()).norm() < 1e-14);
        }
        assert_eq!(gamma_phase_ratio(0.7, 0.0), c(1.0, 0.0));
    }

    #[test]
    fn digamma_recurrence_and_reflection() {
        for z in [c(2.5, 0.0), c(0.3, 4.0), c(-3.2, 0.7), c(11.0, -2.0)] {
            let d = digamma(z + 1.0).unwrap() - digamma(z).unwrap() - c(1.0, 0.0) / z;
            assert!(d.norm() < 1e-12, "{z}: {d}");
        }
    }

    #[test]
    fn unwrap_spiral() {
        let s: Vec<C> = (0..=31).map(|k| C::from_polar(1.0, 0.4 * k as f64)).collect();
        let t = unwrap(&s).unwrap();
        assert!((t.variation() - 12.4).abs() < 1e-12);
        let big: Vec<C> = vec![c(1.0, 0.0), c(-1.0, 0.1)];
        assert!(matches!(unwrap(&big), Err(Error::RefinementNeeded { index: 0, .. })));
        assert!(unwrap(&[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }
}
