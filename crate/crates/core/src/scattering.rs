//! Channel symbols `φ⁻_m`, `φ̃_m`, the scattering matrix `S(κ)` with its
//! endpoint values, and the four edge functions `Γ₁..Γ₄`.

use std::cmp::Ordering;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extensions::{to_unitary, AdmissiblePair, Flux, Kernel, DECISION_TOL};
use crate::linalg::Matrix2;
use crate::scalar::{cis, Real};
use crate::special_fn::{gamma_phase_ratio, log_gamma_unchecked};

type C<T> = Complex<T>;

/// `δ_m = (π/2)(|m| − |m + α|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ChannelPhase<T> {
    pub m: i64,
    pub alpha: T,
    pub delta: T,
}

impl<T: Real> ChannelPhase<T> {
    pub fn new(m: i64, alpha: Flux<T>) -> Self {
        let a = alpha.value();
        let mm = T::lit(m as f64);
        Self {
            m,
            alpha: a,
            delta: T::FRAC_PI_2() * (mm.abs() - (mm + a).abs()),
        }
    }
}

/// `φ⁻_m(x) = e^{iδ_m} · Γ(½(|m|+1+ix))/Γ(½(|m|+1−ix)) · Γ(½(|m+α|+1−ix))/Γ(½(|m+α|+1+ix))`.
///
/// `x = ±∞` returns the limits `1` and `e^{2iδ_m}`.
pub fn phi_minus<T: Real>(m: i64, alpha: Flux<T>, x: T) -> C<T> {
    let delta = ChannelPhase::new(m, alpha).delta;
    if x == T::neg_infinity() {
        return C::new(T::one(), T::zero());
    }
    if x == T::infinity() {
        return cis(delta + delta);
    }
    let half = T::lit(0.5);
    let mm = T::lit(m as f64);
    let r1 = gamma_phase_ratio(half * (mm.abs() + T::one()), half * x);
    let r2 = gamma_phase_ratio(half * ((mm + alpha.value()).abs() + T::one()), half * x).conj();
    cis(delta) * r1 * r2
}

/// `φ̃_m(x)` for `m ∈ {0, −1}`, with `φ̃(−∞) = 0` and `φ̃(+∞) = 1`.
///
/// The Gamma pair `Γ(½(1+c−ix))Γ(½(1−c−ix))`, `c = |m+α|`, is folded with the
/// reflection formula into `π·(ratio)/sin(a + ib)`, `a = π(1+c)/2`,
/// `b = πx/2`, and `e^{b}/(2 sin(a+ib))` is evaluated with decaying
/// exponentials only, so nothing overflows for any finite `x`.
pub fn phi_tilde<T: Real>(m: i64, alpha: Flux<T>, x: T) -> Result<C<T>> {
    if m != 0 && m != -1 {
        return Err(Error::UnsupportedChannel(m));
    }
    if x == T::neg_infinity() {
        return Ok(C::new(T::zero(), T::zero()));
    }
    if x == T::infinity() {
        return Ok(C::new(T::one(), T::zero()));
    }
    let half = T::lit(0.5);
    let mm = T::lit(m as f64);
    let c = (mm + alpha.value()).abs();
    let r1 = gamma_phase_ratio(half * (mm.abs() + T::one()), half * x);
    let r2 = gamma_phase_ratio(half * (c + T::one()), half * x).conj();
    let a = T::FRAC_PI_2() * (T::one() + c);
    let b = T::FRAC_PI_2() * x;
    let i = C::new(T::zero(), T::one());
    let f = if b > T::zero() {
        i / (cis(a) * (-(b + b)).exp() - cis(-a))
    } else {
        let e = (b + b).exp();
        i * e / (cis(a) - cis(-a) * e)
    };
    Ok(cis(-T::FRAC_PI_2() * mm.abs()) * r1 * r2 * f)
}

/// `diag(e^{−iπα}, e^{iπα})`, the free part of `S`.
pub fn free_part<T: Real>(alpha: Flux<T>) -> Matrix2<T> {
    let pa = T::PI() * alpha.value();
    Matrix2::diag(cis(-pa), cis(pa))
}

/// `B(κ) = diag(Γ(1−α)(κ/2)^α, Γ(α)(κ/2)^{1−α})`.
pub fn b_factor<T: Real>(alpha: Flux<T>, kappa: T) -> Matrix2<T> {
    let (l1, l2) = log_b(alpha, kappa.ln());
    Matrix2::real_diag(l1.exp(), l2.exp())
}

fn log_b<T: Real>(alpha: Flux<T>, ln_kappa: T) -> (T, T) {
    let a = alpha.value();
    let lg = |x: T| log_gamma_unchecked(C::new(x, T::zero())).re;
    let lk = ln_kappa - T::LN_2();
    (lg(T::one() - a) + a * lk, lg(a) + (T::one() - a) * lk)
}

/// `Φ = diag(e^{−iπα/2}, e^{−iπ(1−α)/2})`.
pub fn phi_factor<T: Real>(alpha: Flux<T>) -> Matrix2<T> {
    let a = alpha.value();
    Matrix2::diag(
        cis(-T::FRAC_PI_2() * a),
        cis(-T::FRAC_PI_2() * (T::one() - a)),
    )
}

/// `J = diag(1, −1)`.
pub fn j_factor<T: Real>() -> Matrix2<T> {
    Matrix2::real_diag(T::one(), -T::one())
}

/// `L = π C / (2 sin πα)`.
pub fn l_factor<T: Real>(pair: &AdmissiblePair<T>, alpha: Flux<T>) -> Matrix2<T> {
    pair.c.scale_re(T::PI() / (T::lit(2.0) * alpha.sin_pi()))
}

/// `S̃(κ) = 2i sin(πα) · BΦ (DB²Φ² + L)⁻¹ D BΦ J`, evaluated literally.
///
/// The bracket is rearranged as `BΦ(DB²Φ² + L)⁻¹ = (DBΦ + L(BΦ)⁻¹)⁻¹` so no
/// `κ²`-sized intermediate is formed. This is the direct route; [`s_matrix`]
/// uses [`ScatteringMatrix`], which stays accurate for extreme `κ` as well.
pub fn s_tilde<T: Real>(pair: &AdmissiblePair<T>, alpha: Flux<T>, kappa: T) -> Result<Matrix2<T>> {
    if !(kappa > T::zero()) || !kappa.is_finite() {
        return Err(Error::InvalidInput(format!("kappa must be positive and finite, got {kappa}")));
    }
    if pair.d.max_abs() == T::zero() {
        return Ok(Matrix2::zero());
    }
    let k = b_factor(alpha, kappa) * phi_factor(alpha);
    let k_inv = Matrix2::diag(
        C::new(T::one(), T::zero()) / k.m[0][0],
        C::new(T::one(), T::zero()) / k.m[1][1],
    );
    let bracket = pair.d * k + l_factor(pair, alpha) * k_inv;
    let inv = bracket
        .inverse()
        .ok_or(Error::SingularBracket(kappa.as_f64()))?;
    let two_i_s = C::new(T::zero(), T::lit(2.0) * alpha.sin_pi());
    Ok((inv * pair.d * k * j_factor()).scale(two_i_s))
}

/// `S(κ)` through the Cayley form `Φ(X + i sin πα)(X − i sin πα)⁻¹ΦJ`,
/// `X = B⁻¹LB⁻¹ + cos(πα)J`, after normalizing to `D = 1`.
///
/// Only defined for invertible `D`; used as an independent check.
pub fn s_matrix_cayley<T: Real>(
    pair: &AdmissiblePair<T>,
    alpha: Flux<T>,
    kappa: T,
) -> Result<Matrix2<T>> {
    let dinv = pair
        .d
        .inverse()
        .ok_or(Error::KernelDimension(1))?;
    let e = (dinv * pair.c).hermitian_part();
    let normalized = AdmissiblePair::new_unchecked(e, Matrix2::identity());
    let b = b_factor(alpha, kappa);
    let b_inv = Matrix2::real_diag(T::one() / b.m[0][0].re, T::one() / b.m[1][1].re);
    let x = b_inv * l_factor(&normalized, alpha) * b_inv + j_factor().scale_re(alpha.cos_pi());
    let is = Matrix2::scalar(C::new(T::zero(), alpha.sin_pi()));
    let phi = phi_factor(alpha);
    let den = (x - is)
        .inverse()
        .ok_or(Error::SingularBracket(kappa.as_f64()))?;
    Ok(phi * (x + is) * den * phi * j_factor())
}

/// `κ ∈ {0, +∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Zero,
    Infinity,
}

/// Limit of `S(κ)` at `κ = 0` or `κ = ∞`, clause by clause.
///
/// At `∞` the clause is chosen by `ker D`, at `0` by `ker C`, with rank
/// decisions made at the same relative tolerance as the case classifier.
pub fn s_asymptotic<T: Real>(pair: &AdmissiblePair<T>, alpha: Flux<T>, end: End) -> Result<Matrix2<T>> {
    let pa = T::PI() * alpha.value();
    let scale = pair.scale();
    let tau = T::tol(DECISION_TOL);
    let (m, free_like, swapped) = match end {
        End::Infinity => (&pair.d, free_part(alpha), free_part(alpha).adjoint()),
        End::Zero => (&pair.c, free_part(alpha).adjoint(), free_part(alpha)),
    };
    let kernel = Kernel::of(m, scale);
    let p = match kernel {
        // i) D = 0        a) C = 0
        Kernel::Full => return Ok(free_like),
        // ii) det D ≠ 0   b) det C ≠ 0
        Kernel::Trivial => return Ok(swapped),
        Kernel::Line(p) => p,
    };
    let sigma = Matrix2::diag(C::new(T::zero(), T::one()), C::new(T::zero(), -T::one()));
    let first_axis = p[1].norm() <= tau; // kernel = (ℂ, 0)
    let second_axis = p[0].norm() <= tau; // kernel = (0, ℂ)
    let (low, high) = match end {
        End::Infinity => (cis(-pa), cis(pa)),
        End::Zero => (cis(pa), cis(-pa)),
    };
    let scalar = |z: C<T>| Ok(Matrix2::scalar(z));
    match end {
        End::Infinity => {
            if first_axis {
                return scalar(low); // iv)
            }
            if second_axis {
                return scalar(high); // v)
            }
        }
        End::Zero => {
            if second_axis {
                return scalar(high); // d)
            }
            if first_axis {
                return scalar(low); // e)
            }
        }
    }
    match alpha.cmp_half() {
        Ordering::Equal => {
            // Projection onto the orthogonal complement of the kernel.
            let proj = Matrix2::identity() - Matrix2::projector(p);
            let two_p_minus_one = proj.scale_re(T::lit(2.0)) - Matrix2::identity();
            Ok(match end {
                End::Infinity => two_p_minus_one * sigma, // iii)
                End::Zero => (-two_p_minus_one) * sigma,  // c)
            })
        }
        Ordering::Less => scalar(low),
        Ordering::Greater => scalar(high),
    }
}

/// Rational, cancellation-free evaluator for `S(κ)`.
///
/// With `F = 1 + U`, `G = 1 − U` and `t_k = 1/b_k²` (`b_k` the entries of `B`),
/// `S = P⁻¹(F + GR)⁻¹(F + GR')P·diag(e^{iπα}, e^{−iπα})` where
/// `R = diag(−iλ φ̄_k² t_k)`, `R' = diag(−iλ φ_k² t_k)`, `λ = π/(2 sin πα)`.
/// Expanding the 2×2 inverse leaves ratios of the bilinear polynomial
/// `det(F + G diag(r₁, r₂)) = det F + r₁ det[G₁,F₂] + r₂ det[F₁,G₂] + r₁r₂ det G`.
/// Its coefficients are computed once from `U`, and those within the decision
/// tolerance of zero are set to zero, so that exactly singular `C` or `D`
/// keep their limits at any `κ` instead of being swamped by rounding.
#[derive(Debug, Clone, Copy)]
pub struct ScatteringMatrix<T> {
    alpha: Flux<T>,
    lambda: T,
    /// `[det F, det[G₁,F₂], det[F₁,G₂], det G]`.
    poly: [C<T>; 4],
    f12: C<T>,
    f21: C<T>,
    phi_sq: [C<T>; 2],
    phi_ratio: C<T>,
    free: [C<T>; 2],
}

impl<T: Real> ScatteringMatrix<T> {
    pub fn new(pair: &AdmissiblePair<T>, alpha: Flux<T>) -> Result<Self> {
        let u = *to_unitary(pair)?.matrix();
        let one = Matrix2::identity();
        let f = one + u;
        let g = one - u;
        let snap = |z: C<T>| {
            if z.norm() <= T::tol(DECISION_TOL) * T::lit(4.0) {
                C::new(T::zero(), T::zero())
            } else {
                z
            }
        };
        let col_det = |a: &Matrix2<T>, i: usize, b: &Matrix2<T>, j: usize| {
            a.m[0][i] * b.m[1][j] - b.m[0][j] * a.m[1][i]
        };
        let poly = [
            snap(f.det()),
            snap(col_det(&g, 0, &f, 1)),
            snap(col_det(&f, 0, &g, 1)),
            snap(g.det()),
        ];
        let phi = phi_factor(alpha);
        let (p1, p2) = (phi.m[0][0], phi.m[1][1]);
        let pa = T::PI() * alpha.value();
        Ok(Self {
            alpha,
            lambda: T::PI() / (T::lit(2.0) * alpha.sin_pi()),
            poly,
            f12: snap(f.m[0][1]),
            f21: snap(f.m[1][0]),
            phi_sq: [p1 * p1, p2 * p2],
            phi_ratio: p2 / p1,
            free: [cis(pa), cis(-pa)],
        })
    }

    /// `S(κ)` for `κ = e^{ln_kappa}`; usable far outside the range of `κ` itself.
    pub fn at_log(&self, ln_kappa: T) -> Matrix2<T> {
        let (lb1, lb2) = log_b(self.alpha, ln_kappa);
        // t_k = e^{−2 ln b_k}; normalize by m_k = max(1, λ t_k) in log space.
        let two = T::lit(2.0);
        let ln_lambda = self.lambda.ln();
        let part = |lb: T| {
            let ln_t = -two * lb;
            let ln_m = (ln_lambda + ln_t).max(T::zero());
            // (t/m, 1/m, √t/m)
            ((ln_t - ln_m).exp(), (-ln_m).exp(), (ln_t / two - ln_m).exp())
        };
        let (t1, inv1, s1) = part(lb1);
        let (t2, inv2, s2) = part(lb2);
        let ml = C::new(T::zero(), -self.lambda);
        let r = |k: usize, t: T| ml * self.phi_sq[k].conj() * t;
        let rp = |k: usize, t: T| ml * self.phi_sq[k] * t;
        let [c0, c1, c2, c3] = self.poly;
        // P(r₁, r₂)/(m₁m₂) with r_k already divided by m_k.
        let poly = |x1: C<T>, x2: C<T>| c0 * (inv1 * inv2) + c1 * x1 * inv2 + c2 * x2 * inv1 + c3 * x1 * x2;
        let (r1, r2) = (r(0, t1), r(1, t2));
        let det = poly(r1, r2);
        let s11 = poly(rp(0, t1), r2) / det * self.free[0];
        let s22 = poly(r1, rp(1, t2)) / det * self.free[1];
        let two_pi = T::PI() * two;
        let off = (s1 * s2) * two_pi;
        let s12 = self.f12 * self.phi_ratio * self.free[1] * off / det;
        let s21 = self.f21 / self.phi_ratio * self.free[0] * off / det;
        Matrix2::new(s11, s12, s21, s22)
    }

    pub fn at(&self, kappa: T) -> Matrix2<T> {
        self.at_log(kappa.ln())
    }
}

/// `S(κ) = diag(e^{−iπα}, e^{iπα}) + S̃(κ)`; `κ = 0` and `κ = ∞` return the
/// clause values of [`s_asymptotic`].
pub fn s_matrix<T: Real>(pair: &AdmissiblePair<T>, alpha: Flux<T>, kappa: T) -> Result<Matrix2<T>> {
    if kappa == T::zero() {
        return s_asymptotic(pair, alpha, End::Zero);
    }
    if kappa == T::infinity() {
        return s_asymptotic(pair, alpha, End::Infinity);
    }
    if !(kappa > T::zero()) {
        return Err(Error::InvalidInput(format!("kappa must be nonnegative, got {kappa}")));
    }
    Ok(ScatteringMatrix::new(pair, alpha)?.at(kappa))
}

/// Which of the four boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Edge {
    B1,
    B2,
    B3,
    B4,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::B1, Edge::B2, Edge::B3, Edge::B4];

    pub fn index(self) -> usize {
        self as usize + 1
    }
}

/// The four edge functions of one extension.
///
/// `Γ₁(x) = diag(φ⁻₀, φ⁻₋₁)(x) + diag(φ̃₀, φ̃₋₁)(x)·S̃(0)`, `Γ₂(κ) = S(κ)`,
/// `Γ₃(x)` as `Γ₁` with `S̃(∞)`, `Γ₄ ≡ 1`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeFunctionSet<T> {
    alpha: Flux<T>,
    s_tilde_zero: Matrix2<T>,
    s_tilde_inf: Matrix2<T>,
    s_zero: Matrix2<T>,
    s_inf: Matrix2<T>,
    s: ScatteringMatrix<T>,
}

/// Builds the [`EdgeFunctionSet`] of `(pair, α)`.
pub fn gamma_edges<T: Real>(pair: &AdmissiblePair<T>, alpha: Flux<T>) -> Result<EdgeFunctionSet<T>> {
    EdgeFunctionSet::new(pair, alpha)
}

impl<T: Real> EdgeFunctionSet<T> {
    pub fn new(pair: &AdmissiblePair<T>, alpha: Flux<T>) -> Result<Self> {
        let s_zero = s_asymptotic(pair, alpha, End::Zero)?;
        let s_inf = s_asymptotic(pair, alpha, End::Infinity)?;
        let free = free_part(alpha);
        Ok(Self {
            alpha,
            s_tilde_zero: s_zero - free,
            s_tilde_inf: s_inf - free,
            s_zero,
            s_inf,
            s: ScatteringMatrix::new(pair, alpha)?,
        })
    }

    pub fn alpha(&self) -> Flux<T> {
        self.alpha
    }

    fn x_edge(&self, x: T, st: &Matrix2<T>) -> Matrix2<T> {
        let a = self.alpha;
        let minus = Matrix2::diag(phi_minus(0, a, x), phi_minus(-1, a, x));
        let tilde = Matrix2::diag(
            phi_tilde(0, a, x).expect("supported channel"),
            phi_tilde(-1, a, x).expect("supported channel"),
        );
        minus + tilde * *st
    }

    /// `Γ₁(x)`, `x ∈ [−∞, ∞]`.
    pub fn gamma1(&self, x: T) -> Matrix2<T> {
        self.x_edge(x, &self.s_tilde_zero)
    }

    /// `Γ₂(κ) = S(κ)`, `κ ∈ [0, ∞]`.
    pub fn gamma2(&self, kappa: T) -> Matrix2<T> {
        if kappa == T::zero() {
            self.s_zero
        } else if kappa == T::infinity() {
            self.s_inf
        } else {
            self.s.at(kappa)
        }
    }

    /// `Γ₂` at `κ = e^{v}`, with `v = ±∞` mapped to the endpoint values.
    pub fn gamma2_log(&self, v: T) -> Matrix2<T> {
        if v == T::neg_infinity() {
            self.s_zero
        } else if v == T::infinity() {
            self.s_inf
        } else {
            self.s.at_log(v)
        }
    }

    /// `Γ₃(x)`, `x ∈ [−∞, ∞]`.
    pub fn gamma3(&self, x: T) -> Matrix2<T> {
        self.x_edge(x, &self.s_tilde_inf)
    }

    /// `Γ₄(κ) = 1`.
    pub fn gamma4(&self, _kappa: T) -> Matrix2<T> {
        Matrix2::identity()
    }

    /// Edge `e` at its own parameter (`x` for B1/B3, `κ` for B2/B4).
    pub fn eval(&self, edge: Edge, t: T) -> Matrix2<T> {
        match edge {
            Edge::B1 => self.gamma1(t),
            Edge::B2 => self.gamma2(t),
            Edge::B3 => self.gamma3(t),
            Edge::B4 => self.gamma4(t),
        }
    }

    /// `S(0)` and `S(∞)`.
    pub fn endpoints(&self) -> (Matrix2<T>, Matrix2<T>) {
        (self.s_zero, self.s_inf)
    }

    /// Largest mismatch between the two formulas meeting at each corner:
    /// `Γ₁(+∞) = Γ₂(0)`, `Γ₂(∞) = Γ₃(+∞)`, `Γ₃(−∞) = Γ₄ = 1`, `Γ₄ = Γ₁(−∞)`.
    pub fn corner_residual(&self) -> T {
        let inf = T::infinity();
        let one = Matrix2::identity();
        let free = free_part(self.alpha);
        // The x-edge limits are taken from the channel functions, the κ-edge
        // values from the clause table, so the comparison is not circular.
        let g1_plus = Matrix2::diag(phi_minus(0, self.alpha, inf), phi_minus(-1, self.alpha, inf))
            + self.s_tilde_zero;
        let g3_plus = Matrix2::diag(phi_minus(0, self.alpha, inf), phi_minus(-1, self.alpha, inf))
            + self.s_tilde_inf;
        [
            (g1_plus - self.gamma2(T::zero())).max_abs(),
            (self.gamma2(inf) - g3_plus).max_abs(),
            (self.gamma3(-inf) - one).max_abs(),
            (self.gamma1(-inf) - one).max_abs(),
            (free + self.s_tilde_zero - self.s_zero).max_abs(),
        ]
        .into_iter()
        .fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix2<f64>;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn channel_limits() {
        let a = Flux::new(0.3).unwrap();
        for m in [-3, -1, 0, 2] {
            let d = ChannelPhase::new(m, a).delta;
            assert_eq!(phi_minus(m, a, f64::NEG_INFINITY), c(1.0, 0.0));
            assert!((phi_minus(m, a, 0.0) - cis(d)).norm() < 1e-15);
            assert!((phi_minus(m, a, 1e7) - cis(2.0 * d)).norm() < 1e-3);
        }
        assert!((ChannelPhase::new(0, a).delta + 0.15 * std::f64::consts::PI).abs() < 1e-15);
        assert!((ChannelPhase::new(-1, a).delta - 0.15 * std::f64::consts::PI).abs() < 1e-15);
        for m in [0, -1] {
            assert!(phi_tilde(m, a, -80.0).unwrap().norm() < 1e-50);
            assert!((phi_tilde(m, a, 1e4).unwrap() - c(1.0, 0.0)).norm() < 1e-2);
            assert!(phi_tilde(m, a, 1e300).unwrap().is_finite());
            assert!(phi_tilde(m, a, -1e300).unwrap().is_finite());
        }
        assert_eq!(phi_tilde(1, a, 0.0), Err(Error::UnsupportedChannel(1)));
    }

    #[test]
    fn phi_tilde_at_origin() {
        let v = phi_tilde(0, Flux::new(0.5).unwrap(), 0.0).unwrap();
        assert!((v - c(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn scalar_coupling_fixture() {
        let pair = AdmissiblePair::new(-M::identity(), M::identity()).unwrap();
        let a = Flux::new(0.5).unwrap();
        let want = M::diag(c(-0.8, 0.6), c(0.8, -0.6));
        let s = s_matrix(&pair, a, 2.0).unwrap();
        assert!((s - want).max_abs() < 1e-14, "{s:?}");
        let s = s_matrix_cayley(&pair, a, 2.0).unwrap();
        assert!((s - want).max_abs() < 1e-14, "{s:?}");
        let st = s_tilde(&pair, a, 2.0).unwrap();
        assert!((st + free_part(a) - want).max_abs() < 1e-14);
    }

    #[test]
    fn d_zero_gives_free_part() {
        let pair = AdmissiblePair::new(M::identity(), M::zero()).unwrap();
        let a = Flux::new(0.3).unwrap();
        for k in [1e-6, 1.0, 1e6] {
            assert_eq!(s_tilde(&pair, a, k).unwrap(), M::zero());
            assert!((s_matrix(&pair, a, k).unwrap() - free_part(a)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn projection_clause_at_half_flux() {
        // ker D = span((1, 1)/√2): (2P − 1) diag(i, −i) with P = 1 − pp*.
        let s = 0.5f64.sqrt();
        let p = [c(s, 0.0), c(s, 0.0)];
        let proj = M::identity() - M::projector(p);
        let want = (proj.scale_re(2.0) - M::identity()) * M::diag(c(0.0, 1.0), c(0.0, -1.0));
        let d = M::new(c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0));
        let pair = AdmissiblePair::new(M::identity(), d).unwrap();
        let got = s_asymptotic(&pair, Flux::new(0.5).unwrap(), End::Infinity).unwrap();
        assert!((got - want).max_abs() < 1e-15);
    }
}
