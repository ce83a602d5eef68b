//! Self-adjoint extension parameters `(C, D)` / `U ∈ U(2)` and the case analysis
//! that predicts the per-edge phases of the wave-operator symbol.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{fix_phase, Matrix2};
use crate::scalar::Real;

/// Relative tolerance for rank, sign and zero decisions.
pub const DECISION_TOL: f64 = 1e-9;

/// Magnetic flux `α ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Flux<T>(T);

impl<T: Real> Flux<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if alpha > T::zero() && alpha < T::one() {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidFlux(alpha.as_f64()))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    pub fn sin_pi(self) -> T {
        (T::PI() * self.0).sin()
    }

    pub fn cos_pi(self) -> T {
        (T::PI() * self.0).cos()
    }

    /// Position of `α` relative to `1/2`, with `|α − 1/2| ≤ tol` counted as equal.
    pub fn cmp_half(self) -> Ordering {
        let d = self.0 - T::lit(0.5);
        if d.abs() <= T::tol(DECISION_TOL) {
            Ordering::Equal
        } else if d < T::zero() {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl<T: Real + Serialize> Serialize for Flux<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Residuals of the two admissibility conditions.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct Admissibility<T> {
    pub admissible: bool,
    /// `‖CD* − DC*‖`.
    pub hermitian_residual: T,
    /// `|det(CC* + DD*)|`.
    pub gram_det: T,
}

/// Checks that `CD*` is self-adjoint and `CC* + DD*` is invertible.
pub fn is_admissible<T: Real>(c: &Matrix2<T>, d: &Matrix2<T>) -> Admissibility<T> {
    let cd = *c * d.adjoint();
    let hermitian_residual = cd.hermitian_residual();
    let gram_det = (*c * c.adjoint() + *d * d.adjoint()).det().norm();
    let tol = T::tol(1e-10);
    let finite = c.is_finite() && d.is_finite();
    let admissible = finite
        && hermitian_residual <= tol * (T::one() + c.norm() * d.norm())
        && gram_det > tol;
    Admissibility {
        admissible,
        hermitian_residual,
        gram_det,
    }
}

/// Boundary-condition matrices `(C, D)` of one self-adjoint extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct AdmissiblePair<T> {
    #[serde(rename = "C")]
    pub c: Matrix2<T>,
    #[serde(rename = "D")]
    pub d: Matrix2<T>,
}

impl<T: Real> AdmissiblePair<T> {
    pub fn new(c: Matrix2<T>, d: Matrix2<T>) -> Result<Self> {
        let a = is_admissible(&c, &d);
        if a.admissible {
            Ok(Self { c, d })
        } else {
            Err(Error::NotAdmissible {
                hermitian: a.hermitian_residual.as_f64(),
                gram: a.gram_det.as_f64(),
            })
        }
    }

    /// Wraps a pair without checking it; for callers that already know it is admissible.
    pub fn new_unchecked(c: Matrix2<T>, d: Matrix2<T>) -> Self {
        Self { c, d }
    }

    /// `CD*`.
    pub fn cd_star(&self) -> Matrix2<T> {
        self.c * self.d.adjoint()
    }

    /// Overall size of the pair; absolute tolerances are taken relative to it.
    pub fn scale(&self) -> T {
        self.c.norm().max(self.d.norm())
    }

    /// `(VC, VD)`, which describes the same extension for invertible `V`.
    pub fn gauge(&self, v: &Matrix2<T>) -> Self {
        Self {
            c: *v * self.c,
            d: *v * self.d,
        }
    }

    pub fn admissibility(&self) -> Admissibility<T> {
        is_admissible(&self.c, &self.d)
    }
}

/// A point `U ∈ U(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ExtensionPoint<T> {
    #[serde(rename = "U")]
    u: Matrix2<T>,
}

impl<T: Real> ExtensionPoint<T> {
    pub fn new(u: Matrix2<T>) -> Result<Self> {
        let r = u.unitarity_residual();
        if r <= T::tol(1e-12) {
            Ok(Self { u })
        } else {
            Err(Error::NonUnitary(r.as_f64()))
        }
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix2<T> {
        &self.u
    }
}

/// `C(U) = (1 − U)/2`, `D(U) = i(1 + U)/2`.
pub fn from_unitary<T: Real>(u: &ExtensionPoint<T>) -> AdmissiblePair<T> {
    let one = Matrix2::identity();
    let half = T::lit(0.5);
    AdmissiblePair {
        c: (one - u.u).scale_re(half),
        d: (one + u.u).scale(Complex::new(T::zero(), half)),
    }
}

/// Inverse of [`from_unitary`]: `U = −(C − iD)⁻¹(C + iD)`.
///
/// The expression is invariant under `(C, D) → (VC, VD)`, and `C − iD` is
/// invertible for every admissible pair because
/// `(C − iD)(C − iD)* = CC* + DD*` when `CD*` is self-adjoint.
pub fn to_unitary<T: Real>(pair: &AdmissiblePair<T>) -> Result<ExtensionPoint<T>> {
    let i = Complex::new(T::zero(), T::one());
    let minus = pair.c - pair.d.scale(i);
    let plus = pair.c + pair.d.scale(i);
    let inv = minus
        .inverse()
        .ok_or_else(|| Error::InvalidInput("C - iD is singular".into()))?;
    let u = -(inv * plus);
    // Project back onto U(2) against rounding in the inverse.
    let r = u.unitarity_residual();
    if r > T::tol(1e-8) {
        return Err(Error::NonUnitary(r.as_f64()));
    }
    Ok(ExtensionPoint { u: polar_unitary(&u) })
}

/// Unitary factor of the polar decomposition of a nearly unitary matrix
/// (one Newton step `U ← (U + U^{-*})/2` is enough at this distance).
fn polar_unitary<T: Real>(u: &Matrix2<T>) -> Matrix2<T> {
    match u.inverse() {
        Some(inv) => (*u + inv.adjoint()).scale_re(T::lit(0.5)),
        None => *u,
    }
}

fn negative_count<T: Real>(h: &Matrix2<T>) -> usize {
    let e = h.hermitian_eigen();
    let tau = T::tol(1e-10) * (T::one() + h.norm());
    e.values.iter().filter(|&&v| v < -tau).count()
}

/// Number of negative eigenvalues of `CD*`, i.e. the number of bound states.
pub fn negative_count_cdstar<T: Real>(pair: &AdmissiblePair<T>) -> usize {
    negative_count(&pair.cd_star())
}

/// Same count through `CD* = i(U − U*)/4`.
pub fn negative_count_unitary<T: Real>(u: &ExtensionPoint<T>) -> usize {
    let m = u.u - u.u.adjoint();
    negative_count(&m.scale(Complex::new(T::zero(), T::lit(0.25))))
}

/// Seeded unitary from Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary<T: Real>(rng: &mut impl rand::Rng) -> ExtensionPoint<T> {
    let mut g = || -> Complex<T> {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(T::lit(re), T::lit(im))
    };
    let (a, b, c, d) = (g(), g(), g(), g());
    let n1 = (a.norm_sqr() + c.norm_sqr()).sqrt();
    let (a, c) = (a / n1, c / n1);
    let proj = a.conj() * b + c.conj() * d;
    let (b, d) = (b - a * proj, d - c * proj);
    let n2 = (b.norm_sqr() + d.norm_sqr()).sqrt();
    ExtensionPoint {
        u: Matrix2::new(a, b / n2, c, d / n2),
    }
}

/// Deterministic admissible pair for a seed, via [`random_unitary`] and [`from_unitary`].
pub fn random_pair<T: Real>(seed: u64) -> AdmissiblePair<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    from_unitary(&random_unitary(&mut rng))
}

/// Row labels of the case tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[rustfmt::skip]
pub enum Case {
    I, III,
    II1, II2, II3, II4, II5, II6,
    II7a, II7b, II8a, II8b, II9a, II9b, II10a, II10b, II11, II12,
    IV1, IV2, IV3, IV4, IV5, IV6, IV7, IV8, IV9a, IV9b,
    IV10, IV11, IV12, IV13, IV14, IV15a, IV15b,
}

/// A phase `π·(pi + pi_alpha·α)`, kept symbolic so predictions are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseLaw {
    pub pi: i8,
    pub pi_alpha: i8,
}

const fn law(pi: i8, pi_alpha: i8) -> PhaseLaw {
    PhaseLaw { pi, pi_alpha }
}

impl PhaseLaw {
    pub fn eval<T: Real>(self, alpha: T) -> T {
        T::PI() * (T::lit(self.pi as f64) + T::lit(self.pi_alpha as f64) * alpha)
    }
}

impl Case {
    #[rustfmt::skip]
    pub const ALL: [Case; 35] = [
        Case::I, Case::III,
        Case::II1, Case::II2, Case::II3, Case::II4, Case::II5, Case::II6,
        Case::II7a, Case::II7b, Case::II8a, Case::II8b, Case::II9a, Case::II9b,
        Case::II10a, Case::II10b, Case::II11, Case::II12,
        Case::IV1, Case::IV2, Case::IV3, Case::IV4, Case::IV5, Case::IV6, Case::IV7,
        Case::IV8, Case::IV9a, Case::IV9b, Case::IV10, Case::IV11, Case::IV12,
        Case::IV13, Case::IV14, Case::IV15a, Case::IV15b,
    ];

    pub fn name(self) -> &'static str {
        use Case::*;
        match self {
            I => "I", III => "III",
            II1 => "II.1", II2 => "II.2", II3 => "II.3", II4 => "II.4", II5 => "II.5",
            II6 => "II.6", II7a => "II.7.a", II7b => "II.7.b", II8a => "II.8.a",
            II8b => "II.8.b", II9a => "II.9.a", II9b => "II.9.b", II10a => "II.10.a",
            II10b => "II.10.b", II11 => "II.11", II12 => "II.12",
            IV1 => "IV.1", IV2 => "IV.2", IV3 => "IV.3", IV4 => "IV.4", IV5 => "IV.5",
            IV6 => "IV.6", IV7 => "IV.7", IV8 => "IV.8", IV9a => "IV.9.a", IV9b => "IV.9.b",
            IV10 => "IV.10", IV11 => "IV.11", IV12 => "IV.12", IV13 => "IV.13",
            IV14 => "IV.14", IV15a => "IV.15.a", IV15b => "IV.15.b",
        }
    }

    /// Table row: `(φ₁, φ₂, φ₃)` and the number of bound states.
    #[rustfmt::skip]
    pub fn row(self) -> ([PhaseLaw; 3], usize) {
        use Case::*;
        let z = law(0, 0);
        match self {
            I => ([z, z, z], 0),
            III => ([law(2, 0), z, law(-2, 0)], 0),
            II1 => ([z, law(2, 0), law(-2, 0)], 0),
            II2 | II4 | II5 | II6 => ([z, z, law(-2, 0)], 1),
            II3 => ([z, law(-2, 0), law(-2, 0)], 2),
            II7a | II7b => ([law(0, 2), law(2, -2), law(-2, 0)], 0),
            II8a | II8b => ([law(0, 2), law(0, -2), law(-2, 0)], 1),
            II9a | II9b => ([law(2, -2), law(0, 2), law(-2, 0)], 0),
            II10a | II10b => ([law(2, -2), law(-2, 2), law(-2, 0)], 1),
            II11 => ([law(1, 0), law(1, 0), law(-2, 0)], 0),
            II12 => ([law(1, 0), law(-1, 0), law(-2, 0)], 1),
            IV1 => ([z, law(1, 0), law(-1, 0)], 0),
            IV2 => ([law(1, 0), z, law(-1, 0)], 0),
            IV3 => ([z, law(-1, 0), law(-1, 0)], 1),
            IV4 | IV11 => ([z, law(0, -2), law(-2, 2)], 1),
            IV5 | IV10 => ([z, law(-2, 2), law(0, -2)], 1),
            IV6 | IV13 => ([z, law(2, -2), law(-2, 2)], 0),
            IV7 | IV12 => ([z, law(0, 2), law(0, -2)], 0),
            IV8 => ([law(0, 2), law(2, -4), law(-2, 2)], 0),
            IV9a | IV15a => ([law(0, 2), z, law(0, -2)], 0),
            IV9b | IV15b => ([law(2, -2), z, law(-2, 2)], 0),
            IV14 => ([law(2, -2), law(-2, 4), law(0, -2)], 0),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Case {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Table row together with the auxiliary quantities that selected it.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct CaseLabel<T> {
    pub case: Case,
    /// `E = D⁻¹C` (self-adjoint part) when `D` is invertible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<Matrix2<T>>,
    /// Coupling `ℓ` when `dim ker D = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<T>,
    /// Unit vector spanning `ker D` when `dim ker D = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<[Complex<T>; 2]>,
    /// Unit vector spanning `ker C` when `dim ker C = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ker_c: Option<[Complex<T>; 2]>,
}

/// Result of [`classify`].
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct Classification<T> {
    pub label: CaseLabel<T>,
    pub alpha: T,
    /// Predicted `(φ₁, φ₂, φ₃)` in radians.
    pub phases: [T; 3],
    pub laws: [PhaseLaw; 3],
    pub bound_states: usize,
}

impl<T: Real> Classification<T> {
    pub fn case(&self) -> Case {
        self.label.case
    }

    /// Predicted `Σφ_j` (with `φ₄ = 0`).
    pub fn total(&self) -> T {
        self.phases[0] + self.phases[1] + self.phases[2]
    }
}

/// Rank structure of a 2×2 matrix relative to an external scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel<T> {
    /// Invertible.
    Trivial,
    /// One-dimensional kernel spanned by the given unit vector.
    Line([Complex<T>; 2]),
    /// The zero matrix.
    Full,
}

impl<T: Real> Kernel<T> {
    pub fn of(m: &Matrix2<T>, scale: T) -> Self {
        let tau = T::tol(DECISION_TOL) * scale;
        let (smax, smin) = m.singular_values();
        if smax <= tau {
            Kernel::Full
        } else if smin > tau {
            Kernel::Trivial
        } else {
            Kernel::Line(fix_phase(m.null_vector(), T::tol(DECISION_TOL)))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::Trivial => 0,
            Kernel::Line(_) => 1,
            Kernel::Full => 2,
        }
    }
}

fn sign_of<T: Real>(x: T, eps: T) -> Ordering {
    if x.abs() <= eps {
        Ordering::Equal
    } else if x < T::zero() {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// `(ℓ, p)` for a pair with `dim ker D = 1`.
///
/// `p` spans `ker D` with its first nonzero component real and positive.
/// `ℓ = −π/(2 sin πα) · tan(θ/2)`, where `e^{iθ} = −det U` is the eigenvalue
/// of `U` other than `−1`.
pub fn ell_and_kernel<T: Real>(
    pair: &AdmissiblePair<T>,
    alpha: Flux<T>,
) -> Result<(T, [Complex<T>; 2])> {
    let p = match Kernel::of(&pair.d, pair.scale()) {
        Kernel::Line(p) => p,
        k => return Err(Error::KernelDimension(k.dim())),
    };
    let u = to_unitary(pair)?;
    let w = -u.u.det();
    let w = w / w.norm();
    // tan(θ/2) = sin θ / (1 + cos θ); θ = π would mean a second eigenvalue −1.
    let tan_half = w.im / (T::one() + w.re);
    let ell = -(T::PI() / (T::lit(2.0) * alpha.sin_pi())) * tan_half;
    Ok((ell, p))
}

/// Selects the table row for `(C, D, α)` and returns the predicted phases.
///
/// When `D` is invertible the pair is first normalized to `(D⁻¹C, 1)`.
/// Quantities within the relative band [`DECISION_TOL`] of zero are treated as
/// zero; combinations that match no row raise [`Error::DegenerateCase`].
pub fn classify<T: Real>(pair: &AdmissiblePair<T>, alpha: Flux<T>) -> Result<Classification<T>> {
    let scale = pair.scale();
    let tau = T::tol(DECISION_TOL);
    let ker_c = match Kernel::of(&pair.c, scale) {
        Kernel::Line(v) => Some(v),
        _ => None,
    };
    let mut label = CaseLabel {
        case: Case::I,
        e: None,
        ell: None,
        p: None,
        ker_c,
    };
    label.case = match Kernel::of(&pair.d, scale) {
        Kernel::Full => Case::I,
        Kernel::Trivial if matches!(Kernel::of(&pair.c, scale), Kernel::Full) => Case::III,
        Kernel::Trivial => {
            let dinv = pair
                .d
                .inverse()
                .ok_or_else(|| Error::DegenerateCase("D is numerically singular".into()))?;
            let e_raw = dinv * pair.c;
            let en = e_raw.norm();
            if e_raw.hermitian_residual() > T::tol(1e-6) * (T::one() + en) {
                return Err(Error::DegenerateCase("D^-1 C is not self-adjoint".into()));
            }
            let e = e_raw.hermitian_part();
            label.e = Some(e);
            case_two(&e, alpha, tau)?
        }
        Kernel::Line(_) => {
            let (ell, p) = ell_and_kernel(pair, alpha)?;
            label.ell = Some(ell);
            label.p = Some(p);
            // ℓ·2 sin(πα)/π = −tan(θ/2) is compared against the band.
            let t = ell * T::lit(2.0) * alpha.sin_pi() / T::PI();
            case_four(sign_of(t, tau), p[0].norm() > tau, p[1].norm() > tau, alpha)
        }
    };
    let (laws, bound_states) = label.case.row();
    let a = alpha.value();
    Ok(Classification {
        label,
        alpha: a,
        phases: [laws[0].eval(a), laws[1].eval(a), laws[2].eval(a)],
        laws,
        bound_states,
    })
}

fn case_two<T: Real>(e: &Matrix2<T>, alpha: Flux<T>, tau: T) -> Result<Case> {
    use Ordering::*;
    let en = e.norm();
    let (e11, e22) = (e.m[0][0].re, e.m[1][1].re);
    let det = e11 * e22 - e.m[0][1].norm_sqr();
    let tr = e11 + e22;
    let z11 = e11.abs() <= tau * en;
    let z22 = e22.abs() <= tau * en;
    let det_s = sign_of(det, tau * en * en);
    let tr_s = sign_of(tr, tau * en);
    let degenerate = |what: &str| Err(Error::DegenerateCase(format!("case II: {what}")));
    if det_s != Equal {
        if z11 && z22 {
            return if det_s == Less { Ok(Case::II5) } else { degenerate("e11 = e22 = 0 with det E > 0") };
        }
        if !z11 && !z22 && (e11 < T::zero()) != (e22 < T::zero()) {
            return Ok(Case::II6);
        }
        return match (tr_s, det_s) {
            (Greater, Greater) => Ok(Case::II1),
            (Greater, Less) => Ok(Case::II2),
            (Less, Greater) => Ok(Case::II3),
            (Less, Less) => Ok(Case::II4),
            _ => degenerate("tr E = 0"),
        };
    }
    // det E = 0, E ≠ 0.
    if z11 && z22 {
        return degenerate("E = 0 within tolerance");
    }
    if tr_s == Equal {
        return degenerate("tr E = 0 with det E = 0");
    }
    let pos = tr_s == Greater;
    if z11 {
        return Ok(if pos { Case::II7a } else { Case::II8a });
    }
    if z22 {
        return Ok(if pos { Case::II9a } else { Case::II10a });
    }
    if (e11 < T::zero()) != (e22 < T::zero()) {
        return degenerate("e11 e22 < 0 with det E = 0");
    }
    Ok(match (alpha.cmp_half(), pos) {
        (Less, true) => Case::II7b,
        (Less, false) => Case::II8b,
        (Greater, true) => Case::II9b,
        (Greater, false) => Case::II10b,
        (Equal, true) => Case::II11,
        (Equal, false) => Case::II12,
    })
}

fn case_four<T: Real>(ell: Ordering, p1: bool, p2: bool, alpha: Flux<T>) -> Case {
    use Ordering::*;
    match alpha.cmp_half() {
        Equal => match ell {
            Greater => Case::IV1,
            Equal => Case::IV2,
            Less => Case::IV3,
        },
        Less => match (ell, p1, p2) {
            (Less, true, _) => Case::IV4,
            (Less, false, _) => Case::IV5,
            (Greater, true, _) => Case::IV6,
            (Greater, false, _) => Case::IV7,
            (Equal, true, true) => Case::IV8,
            (Equal, false, _) => Case::IV9a,
            (Equal, true, false) => Case::IV9b,
        },
        Greater => match (ell, p1, p2) {
            (Less, _, true) => Case::IV10,
            (Less, _, false) => Case::IV11,
            (Greater, _, true) => Case::IV12,
            (Greater, _, false) => Case::IV13,
            (Equal, true, true) => Case::IV14,
            (Equal, false, _) => Case::IV15a,
            (Equal, true, false) => Case::IV15b,
        },
    }
}

/// One constructed pair per table row, placed in the interior of its case.
#[derive(Debug, Clone, Copy)]
pub struct TableFixture<T> {
    pub case: Case,
    pub pair: AdmissiblePair<T>,
    pub alpha: Flux<T>,
}

/// `U = V diag(−1, e^{iθ}) V*` with first column of `V` equal to `p`.
fn unitary_with_kernel<T: Real>(p: [Complex<T>; 2], theta: T) -> ExtensionPoint<T> {
    let v = Matrix2::new(p[0], -p[1].conj(), p[1], p[0].conj());
    let mid = Matrix2::diag(
        Complex::new(-T::one(), T::zero()),
        Complex::new(theta.cos(), theta.sin()),
    );
    ExtensionPoint {
        u: polar_unitary(&(v * mid * v.adjoint())),
    }
}

/// Fixtures for every row of the case tables.
pub fn table_fixtures<T: Real>() -> Vec<TableFixture<T>> {
    use Case::*;
    let r = |x: f64| Complex::new(T::lit(x), T::zero());
    let herm = |a: f64, b: f64, d: f64| Matrix2::new(r(a), r(b), r(b), r(d));
    let one = Matrix2::<T>::identity();
    let flux = |a: f64| Flux::new(T::lit(a)).expect("fixture flux");
    let two = |case, e: Matrix2<T>, a: f64| TableFixture {
        case,
        pair: AdmissiblePair::new_unchecked(e, one),
        alpha: flux(a),
    };
    let generic_p = [
        Complex::new(T::lit(0.8_f64.cos()), T::zero()),
        Complex::from_polar(T::lit(0.8_f64.sin()), T::lit(0.3)),
    ];
    let e1 = [r(1.0), r(0.0)];
    let e2 = [r(0.0), r(1.0)];
    let half_pi = T::FRAC_PI_2();
    let four = |case, p: [Complex<T>; 2], ell_sign: i32, a: f64| {
        // ℓ has the sign opposite to θ.
        let theta = match ell_sign {
            1 => -half_pi,
            -1 => half_pi,
            _ => T::zero(),
        };
        TableFixture {
            case,
            pair: from_unitary(&unitary_with_kernel(p, theta)),
            alpha: flux(a),
        }
    };
    let g = generic_p;
    vec![
        TableFixture { case: I, pair: AdmissiblePair::new_unchecked(one, Matrix2::zero()), alpha: flux(0.3) },
        TableFixture { case: III, pair: AdmissiblePair::new_unchecked(Matrix2::zero(), one), alpha: flux(0.3) },
        two(II1, herm(1.0, 0.5, 2.0), 0.3),
        two(II2, herm(1.0, 2.0, 1.0), 0.3),
        two(II3, herm(-1.0, 0.0, -1.0), 0.3),
        two(II4, herm(-1.0, 2.0, -1.0), 0.3),
        two(II5, herm(0.0, 1.0, 0.0), 0.3),
        two(II6, herm(1.0, 0.5, -2.0), 0.3),
        two(II7a, herm(0.0, 0.0, 1.0), 0.3),
        two(II7b, herm(1.0, 1.0, 1.0), 0.3),
        two(II8a, herm(0.0, 0.0, -1.0), 0.3),
        two(II8b, herm(-1.0, 1.0, -1.0), 0.3),
        two(II9a, herm(1.0, 0.0, 0.0), 0.7),
        two(II9b, herm(1.0, 1.0, 1.0), 0.7),
        two(II10a, herm(-1.0, 0.0, 0.0), 0.7),
        two(II10b, herm(-1.0, 1.0, -1.0), 0.7),
        two(II11, herm(1.0, 1.0, 1.0), 0.5),
        two(II12, herm(-1.0, 1.0, -1.0), 0.5),
        four(IV1, g, 1, 0.5),
        four(IV2, g, 0, 0.5),
        four(IV3, g, -1, 0.5),
        four(IV4, g, -1, 0.3),
        four(IV5, e2, -1, 0.3),
        four(IV6, g, 1, 0.3),
        four(IV7, e2, 1, 0.3),
        four(IV8, g, 0, 0.3),
        four(IV9a, e2, 0, 0.3),
        four(IV9b, e1, 0, 0.3),
        four(IV10, g, -1, 0.7),
        four(IV11, e1, -1, 0.7),
        four(IV12, g, 1, 0.7),
        four(IV13, e1, 1, 0.7),
        four(IV14, g, 0, 0.7),
        four(IV15a, e2, 0, 0.7),
        four(IV15b, e1, 0, 0.7),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix2<f64>;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(&M::identity(), &M::zero()).admissible);
        assert!(is_admissible(&-M::identity(), &M::identity()).admissible);
        let c_bad = M::diag(c(1.0, 0.0), c(0.0, 1.0));
        assert!(!is_admissible(&c_bad, &M::identity()).admissible);
        assert!(!is_admissible(&M::zero(), &M::zero()).admissible);
    }

    #[test]
    fn from_unitary_examples() {
        let p = from_unitary(&ExtensionPoint::new(-M::identity()).unwrap());
        assert_eq!(p.c, M::identity());
        assert_eq!(p.d, M::zero());
        let p = from_unitary(&ExtensionPoint::new(M::identity()).unwrap());
        assert_eq!(p.c, M::zero());
        assert_eq!(p.d, M::scalar(c(0.0, 1.0)));
        let u = M::diag(c(0.0, -1.0), c(0.0, 1.0));
        let p = from_unitary(&ExtensionPoint::new(u).unwrap());
        assert!((p.c - M::diag(c(0.5, 0.5), c(0.5, -0.5))).norm() < 1e-16);
        assert!((p.d - M::diag(c(0.5, 0.5), c(-0.5, 0.5))).norm() < 1e-16);
    }

    #[test]
    fn to_unitary_inverts_and_is_gauge_invariant() {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary::<f64>(&mut rng);
            let pair = from_unitary(&u);
            let back = to_unitary(&pair).unwrap();
            assert!((*back.matrix() - *u.matrix()).norm() < 1e-12);
            let v = M::new(c(2.0, 0.1), c(-0.3, 0.7), c(0.2, 0.0), c(1.1, -0.4));
            let gauged = to_unitary(&pair.gauge(&v)).unwrap();
            assert!((*gauged.matrix() - *u.matrix()).norm() < 1e-11);
        }
    }

    #[test]
    fn counts() {
        let p = |cc: M, d: M| AdmissiblePair::new(cc, d).unwrap();
        assert_eq!(negative_count_cdstar(&p(M::identity(), M::zero())), 0);
        assert_eq!(negative_count_cdstar(&p(-M::identity(), M::identity())), 2);
        assert_eq!(negative_count_cdstar(&p(M::zero(), M::identity())), 0);
    }

    #[test]
    fn classify_examples() {
        let a = Flux::new(0.3).unwrap();
        let pair = AdmissiblePair::new(-M::identity(), M::identity()).unwrap();
        let cl = classify(&pair, a).unwrap();
        assert_eq!(cl.case(), Case::II3);
        assert_eq!(cl.bound_states, 2);
        let pi = std::f64::consts::PI;
        assert_eq!(cl.phases, [0.0, -2.0 * pi, -2.0 * pi]);
        let pair = AdmissiblePair::new(M::zero(), M::identity()).unwrap();
        let cl = classify(&pair, a).unwrap();
        assert_eq!(cl.case(), Case::III);
        assert_eq!(cl.phases, [2.0 * pi, 0.0, -2.0 * pi]);
        let theta = 1.2;
        let u = ExtensionPoint::new(M::diag(c(-1.0, 0.0), Complex::from_polar(1.0, theta))).unwrap();
        let cl = classify(&from_unitary(&u), Flux::new(0.5).unwrap()).unwrap();
        assert_eq!(cl.case(), Case::IV3);
        assert_eq!(cl.bound_states, 1);
    }

    #[test]
    fn ell_examples() {
        let half = Flux::new(0.5).unwrap();
        let pi = std::f64::consts::PI;
        let u = ExtensionPoint::new(M::diag(c(-1.0, 0.0), c(0.0, 1.0))).unwrap();
        let (ell, p) = ell_and_kernel(&from_unitary(&u), half).unwrap();
        assert!((ell + pi / 2.0).abs() < 1e-14);
        assert!((p[0] - c(1.0, 0.0)).norm() < 1e-15 && p[1].norm() < 1e-15);
        let u = ExtensionPoint::new(M::diag(c(-1.0, 0.0), c(1.0, 0.0))).unwrap();
        let (ell, _) = ell_and_kernel(&from_unitary(&u), half).unwrap();
        assert_eq!(ell, 0.0);
        let u = ExtensionPoint::new(M::diag(c(0.0, -1.0), c(-1.0, 0.0))).unwrap();
        let (ell, p) = ell_and_kernel(&from_unitary(&u), half).unwrap();
        assert!((ell - pi / 2.0).abs() < 1e-14);
        assert!((p[1] - c(1.0, 0.0)).norm() < 1e-15);
        let pair = AdmissiblePair::new(-M::identity(), M::identity()).unwrap();
        assert_eq!(ell_and_kernel(&pair, half), Err(Error::KernelDimension(0)));
    }

    #[test]
    fn fixtures_classify_to_their_rows() {
        let fx = table_fixtures::<f64>();
        assert_eq!(fx.len(), Case::ALL.len());
        for f in &fx {
            assert!(f.pair.admissibility().admissible, "{}", f.case);
            let cl = classify(&f.pair, f.alpha).unwrap();
            assert_eq!(cl.case(), f.case);
            assert_eq!(negative_count_cdstar(&f.pair), cl.bound_states, "{}", f.case);
            let sum = cl.total();
            let want = -2.0 * std::f64::consts::PI * cl.bound_states as f64;
            assert!((sum - want).abs() < 1e-12, "{}: {sum} vs {want}", f.case);
        }
    }

    #[test]
    fn random_pairs_are_deterministic_and_cover_all_counts() {
        assert_eq!(random_pair::<f64>(42), random_pair::<f64>(42));
        let mut seen = [0usize; 3];
        for seed in 0..1000 {
            let p = random_pair::<f64>(seed);
            assert!(p.admissibility().admissible);
            seen[negative_count_cdstar(&p)] += 1;
        }
        assert!(seen.iter().all(|&n| n > 0), "{seen:?}");
    }
}
