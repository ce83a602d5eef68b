//! Scalar abstraction and exact summation.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the library is generic over (`f32`, `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Tolerance calibrated for `f64`, widened for lower-precision scalars.
    ///
    /// `f64` gets `x` unchanged. Other types get `x` scaled by the square root
    /// of the epsilon ratio, floored at `64·eps`.
    fn tol(x: f64) -> Self {
        let ratio = Self::epsilon().to_f64().unwrap_or(1.0) / f64::EPSILON;
        if ratio <= 1.0 {
            Self::lit(x)
        } else {
            Self::lit(x * ratio.sqrt()).max(Self::epsilon() * Self::lit(64.0))
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{iθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Principal argument of `b · conj(a)`, written out so that swapping the
/// arguments negates the result bit-for-bit.
#[inline]
pub fn phase_step<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    let re = b.re * a.re + b.im * a.im;
    let im = b.im * a.re - b.re * a.im;
    im.atan2(re)
}

/// Shewchuk's exactly-rounded floating-point summation.
///
/// The partials represent the running sum without error, so the result does
/// not depend on the order of the inputs and negating every input negates the
/// result exactly.
#[derive(Debug, Clone, Default)]
pub struct ExactSum<T> {
    partials: Vec<T>,
}

impl<T: Real> ExactSum<T> {
    pub fn new() -> Self {
        Self {
            partials: Vec::new(),
        }
    }

    pub fn add(&mut self, mut x: T) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != T::zero() {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum<T>) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    /// Correctly rounded value of the accumulated sum.
    pub fn value(&self) -> T {
        let mut n = self.partials.len();
        if n == 0 {
            return T::zero();
        }
        n -= 1;
        let mut hi = self.partials[n];
        let mut lo = T::zero();
        while n > 0 {
            n -= 1;
            let x = hi;
            let y = self.partials[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != T::zero() {
                break;
            }
        }
        // Round-half-even correction across the boundary between partials.
        if n > 0
            && ((lo < T::zero() && self.partials[n - 1] < T::zero())
                || (lo > T::zero() && self.partials[n - 1] > T::zero()))
        {
            let y = lo + lo;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

impl<T: Real> FromIterator<T> for ExactSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Exactly rounded sum of an iterator of reals.
pub fn exact_sum<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<ExactSum<T>>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sum_recovers_cancelled_terms() {
        let xs = [1e100, 1.0, -1e100, 1e-30];
        assert_eq!(exact_sum(xs), 1.0 + 1e-30);
        assert_eq!(exact_sum([0.1f64; 10]), 1.0);
    }

    #[test]
    fn exact_sum_is_odd() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 7919) % 1013) as f64 * 1.37e-3 - 0.6).collect();
        let pos = exact_sum(xs.iter().copied());
        let neg = exact_sum(xs.iter().map(|x| -x));
        assert_eq!(pos, -neg);
        let rev = exact_sum(xs.iter().rev().copied());
        assert_eq!(pos, rev);
    }

    #[test]
    fn phase_step_is_antisymmetric() {
        let a = Complex::new(0.3_f64, -0.8);
        let b = Complex::new(-0.55, 0.1);
        assert_eq!(phase_step(a, b), -phase_step(b, a));
    }

    #[test]
    fn tolerance_scaling() {
        assert_eq!(f64::tol(1e-10), 1e-10);
        assert!(f32::tol(1e-10) > 1e-10 && f32::tol(1e-10) < 1e-3);
    }
}
