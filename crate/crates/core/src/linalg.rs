//! Dense 2×2 complex matrices.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::scalar::Real;

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Matrix2<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        Self::scalar(Complex::new(T::one(), T::zero()))
    }

    pub fn scalar(s: Complex<T>) -> Self {
        Self::diag(s, s)
    }

    pub fn diag(a: Complex<T>, d: Complex<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(a, z, z, d)
    }

    pub fn real_diag(a: T, d: T) -> Self {
        Self::diag(Complex::new(a, T::zero()), Complex::new(d, T::zero()))
    }

    /// From 8 reals `re00, im00, re01, im01, re10, im10, re11, im11`.
    pub fn from_reals(v: [T; 8]) -> Self {
        Self::new(
            Complex::new(v[0], v[1]),
            Complex::new(v[2], v[3]),
            Complex::new(v[4], v[5]),
            Complex::new(v[6], v[7]),
        )
    }

    pub fn to_reals(&self) -> [T; 8] {
        let m = &self.m;
        [
            m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im, m[1][0].re, m[1][0].im, m[1][1].re,
            m[1][1].im,
        ]
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        let m = &self.m;
        Self::new(f(m[0][0]), f(m[0][1]), f(m[1][0]), f(m[1][1]))
    }

    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn norm_sqr(&self) -> T {
        self.m.iter().flatten().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        // Rescale so that huge or tiny entries neither overflow nor underflow.
        let s = self.max_abs();
        if s == T::zero() || !s.is_finite() {
            return s;
        }
        self.scale_re(s.recip()).norm_sqr().sqrt() * s
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Inverse, computed on a rescaled copy so that the determinant of a
    /// matrix with very large or very small entries stays representable.
    /// Returns `None` if the matrix is exactly singular.
    pub fn inverse(&self) -> Option<Self> {
        let s = self.max_abs();
        if s == T::zero() || !s.is_finite() {
            return None;
        }
        let a = self.scale_re(s.recip());
        let det = a.det();
        if det.norm() == T::zero() {
            return None;
        }
        let m = &a.m;
        let inv = Self::new(m[1][1], -m[0][1], -m[1][0], m[0][0]).map(|z| z / det);
        Some(inv.scale_re(s.recip()))
    }

    /// `‖A*A − I‖_F`.
    pub fn unitarity_residual(&self) -> T {
        (self.adjoint() * *self - Self::identity()).norm()
    }

    /// `‖A − A*‖_F`.
    pub fn hermitian_residual(&self) -> T {
        (*self - self.adjoint()).norm()
    }

    /// `(A + A*)/2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_re(T::lit(0.5))
    }

    /// Eigen-decomposition of the Hermitian part of `self`, eigenvalues ascending.
    pub fn hermitian_eigen(&self) -> HermitianEigen<T> {
        let h = self.hermitian_part();
        let a = h.m[0][0].re;
        let d = h.m[1][1].re;
        let b = h.m[0][1];
        let half = T::lit(0.5);
        let mean = (a + d) * half;
        let dev = (a - d) * half;
        let r = dev.hypot(b.norm());
        let values = [mean - r, mean + r];
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        let vectors = if b.norm() == T::zero() {
            if a <= d {
                [[one, zero], [zero, one]]
            } else {
                [[zero, one], [one, zero]]
            }
        } else {
            let vec_for = |lam: T| {
                // Rows of (H − λ) are orthogonal to the eigenvector; use the
                // larger one for stability.
                let v1 = [b, Complex::new(lam - a, T::zero())];
                let v2 = [Complex::new(lam - d, T::zero()), b.conj()];
                let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
                let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
                if n1 >= n2 {
                    [v1[0] / n1, v1[1] / n1]
                } else {
                    [v2[0] / n2, v2[1] / n2]
                }
            };
            [vec_for(values[0]), vec_for(values[1])]
        };
        HermitianEigen { values, vectors }
    }

    /// Singular values `(σ_max, σ_min)`; `σ_min` is recovered as
    /// `|det|/σ_max` to keep its relative accuracy near singularity.
    pub fn singular_values(&self) -> (T, T) {
        let s = self.max_abs();
        if s == T::zero() || !s.is_finite() {
            return (s, s);
        }
        let a = self.scale_re(s.recip());
        let fro2 = a.norm_sqr();
        let det = a.det().norm();
        let disc = (fro2 * fro2 - T::lit(4.0) * det * det).max(T::zero()).sqrt();
        let smax = ((fro2 + disc) * T::lit(0.5)).sqrt();
        let smin = if smax > T::zero() { det / smax } else { T::zero() };
        (smax * s, smin * s)
    }

    /// Unit vector spanning the kernel of a (numerically) rank-one matrix,
    /// orthogonal to the dominant row. Falls back to `e₁` for the zero matrix.
    pub fn null_vector(&self) -> [Complex<T>; 2] {
        let r = if self.m[0][0].norm_sqr() + self.m[0][1].norm_sqr()
            >= self.m[1][0].norm_sqr() + self.m[1][1].norm_sqr()
        {
            self.m[0]
        } else {
            self.m[1]
        };
        let n = r[0].norm().hypot(r[1].norm());
        if n == T::zero() {
            return [Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero())];
        }
        [r[1] / n, -r[0] / n]
    }

    pub fn apply(&self, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
        let m = &self.m;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Orthogonal projection `v v*` onto the span of a unit vector.
    pub fn projector(v: [Complex<T>; 2]) -> Self {
        Self::new(
            v[0] * v[0].conj(),
            v[0] * v[1].conj(),
            v[1] * v[0].conj(),
            v[1] * v[1].conj(),
        )
    }
}

/// Eigenpairs of a Hermitian 2×2 matrix; `vectors[k]` belongs to `values[k]`.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen<T> {
    pub values: [T; 2],
    pub vectors: [[Complex<T>; 2]; 2],
}

/// Fixes the phase of a unit vector: first component with modulus above
/// `tol` becomes real and positive.
pub fn fix_phase<T: Real>(v: [Complex<T>; 2], tol: T) -> [Complex<T>; 2] {
    let pivot = if v[0].norm() > tol { v[0] } else { v[1] };
    let n = pivot.norm();
    if n == T::zero() {
        return v;
    }
    let ph = pivot.conj() / n;
    [v[0] * ph, v[1] * ph]
}

impl<T: Real> Add for Matrix2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl<T: Real> Sub for Matrix2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl<T: Real> Neg for Matrix2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl<T: Real> Mul for Matrix2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Real + Serialize> Serialize for Matrix2<T> {
    /// `[[re, im], …]`, four entries in row-major order.
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(4))?;
        for z in self.m.iter().flatten() {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix2<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn inverse_survives_extreme_scales() {
        let a = M::new(c(1.0, 0.0), c(0.3, 0.1), c(0.0, 0.2), c(0.5, 0.0)).scale_re(1e200);
        let inv = a.inverse().unwrap();
        let r = (a * inv - M::identity()).norm();
        assert!(r < 1e-14, "{r}");
        let tiny = a.scale_re(1e-300);
        assert!(tiny.inverse().is_some());
        assert!(M::zero().inverse().is_none());
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let h = M::new(c(0.7, 0.0), c(-0.2, 1.1), c(-0.2, -1.1), c(-2.3, 0.0));
        let e = h.hermitian_eigen();
        assert!(e.values[0] < e.values[1]);
        for k in 0..2 {
            let v = e.vectors[k];
            let hv = h.apply(v);
            for i in 0..2 {
                assert!((hv[i] - v[i] * e.values[k]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_values_of_rank_one() {
        let u = [c(0.6, 0.0), c(0.0, 0.8)];
        let v = [c(0.0, 1.0), c(0.0, 0.0)];
        let a = M::new(u[0] * v[0].conj(), u[0] * v[1].conj(), u[1] * v[0].conj(), u[1] * v[1].conj())
            .scale_re(3.0);
        let (smax, smin) = a.singular_values();
        assert!((smax - 3.0).abs() < 1e-14);
        assert!(smin < 1e-15);
        let k = a.null_vector();
        assert!(k[0].norm() < 1e-14 && (k[1].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn serializes_row_major_pairs() {
        let a = M::new(c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0));
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0],[5.0,6.0],[7.0,8.0]]");
    }

    #[test]
    fn fixed_phase_is_real_positive() {
        let v = fix_phase([c(0.0, -0.6), c(0.8, 0.0)], 1e-12);
        assert!((v[0] - c(0.6, 0.0)).norm() < 1e-15);
        let w = fix_phase([c(0.0, 0.0), c(0.0, -1.0)], 1e-12);
        assert!((w[1] - c(1.0, 0.0)).norm() < 1e-15);
    }
}
