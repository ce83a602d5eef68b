//! The sphere `X ⊂ U(2)` of unitaries with fixed spectrum `{λ₁, λ₂}`: its
//! bound-state line bundle, whose Chern number is computed three ways, and
//! the degree-3 trace pairing over `X × □`.
//!
//! Points of `X` are `U(ρ, φ) = V diag(λ₁, λ₂) V*` with
//! `V = [[ρ, −√(1−ρ²)e^{iφ}], [√(1−ρ²)e^{−iφ}, ρ]]`. Each such `U` has exactly
//! one bound state, at the `z < 0` where `G = M(z) + T` is singular,
//! `T = i(1 − U)/(1 + U) = V diag(r₁, r₂) V*`, `r_k = tan(arg λ_k / 2)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extensions::{from_unitary, AdmissiblePair, ExtensionPoint, Flux};
use crate::linalg::Matrix2;
use crate::scalar::{cis, phase_step, ExactSum, Real};
use crate::scattering::{free_part, phi_minus, phi_tilde, EdgeFunctionSet};
use crate::weyl_spectrum::WeylMatrix;

type C<T> = Complex<T>;

/// `λ₁`, `λ₂` with `Im λ₁ < 0 < Im λ₂`, and the flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ManifoldSpec<T> {
    lambda1: C<T>,
    lambda2: C<T>,
    alpha: T,
    r1: T,
    r2: T,
}

impl<T: Real> ManifoldSpec<T> {
    pub fn new(lambda1: C<T>, lambda2: C<T>, alpha: Flux<T>) -> Result<Self> {
        for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !l.re.is_finite() || !l.im.is_finite() || (l.norm() - T::one()).abs() > T::tol(1e-12) {
                return Err(Error::InvalidInput(format!("{name} must have modulus 1, got {l}")));
            }
        }
        if !(lambda1.im < T::zero() && lambda2.im > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "need Im lambda1 < 0 < Im lambda2, got {lambda1} and {lambda2}"
            )));
        }
        let half = T::lit(0.5);
        Ok(Self {
            lambda1,
            lambda2,
            alpha: alpha.value(),
            r1: (lambda1.arg() * half).tan(),
            r2: (lambda2.arg() * half).tan(),
        })
    }

    /// `λ₁ = e^{iθ₁}`, `λ₂ = e^{iθ₂}`.
    pub fn from_angles(theta1: T, theta2: T, alpha: Flux<T>) -> Result<Self> {
        Self::new(cis(theta1), cis(theta2), alpha)
    }

    /// `λ₁ = −i`, `λ₂ = i`, `α = ½`.
    pub fn reference() -> Self {
        let i = C::new(T::zero(), T::one());
        Self::new(-i, i, Flux::new(T::lit(0.5)).expect("valid flux")).expect("valid spec")
    }

    pub fn lambdas(&self) -> (C<T>, C<T>) {
        (self.lambda1, self.lambda2)
    }

    pub fn alpha(&self) -> Flux<T> {
        Flux::new(self.alpha).expect("validated on construction")
    }

    /// `(r₁, r₂)`, with `r₁ < 0 < r₂`.
    pub fn r(&self) -> (T, T) {
        (self.r1, self.r2)
    }
}

/// Coordinates `(ρ, φ)`; `φ` is reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ManifoldPoint<T> {
    pub rho: T,
    pub phi: T,
}

/// Which coordinate singularity a point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    /// `ρ = 0`, `U = diag(λ₂, λ₁)`.
    South,
    /// `ρ = 1`, `U = diag(λ₁, λ₂)`.
    North,
}

impl<T: Real> ManifoldPoint<T> {
    pub fn new(rho: T, phi: T) -> Result<Self> {
        if !(rho >= T::zero() && rho <= T::one()) || !phi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "need rho in [0, 1] and finite phi, got ({rho}, {phi})"
            )));
        }
        let mut phi = phi % T::TAU();
        if phi < T::zero() {
            phi = phi + T::TAU();
        }
        if phi >= T::TAU() {
            phi = T::zero();
        }
        Ok(Self { rho, phi })
    }

    /// `ρ = sin β`, exact at the poles `β ∈ {0, π/2}`.
    fn from_beta(beta: T, exact: Option<Pole>, phi: T) -> Self {
        let rho = match exact {
            Some(Pole::South) => T::zero(),
            Some(Pole::North) => T::one(),
            None => beta.sin(),
        };
        Self { rho, phi }
    }

    /// `(ρ, √(1−ρ²))`, with both exact at the poles.
    fn rho_pair(&self) -> (T, T) {
        match self.pole() {
            Some(Pole::South) => (T::zero(), T::one()),
            Some(Pole::North) => (T::one(), T::zero()),
            None => (self.rho, ((T::one() - self.rho) * (T::one() + self.rho)).sqrt()),
        }
    }

    pub fn pole(&self) -> Option<Pole> {
        if self.rho == T::zero() {
            Some(Pole::South)
        } else if self.rho == T::one() {
            Some(Pole::North)
        } else {
            None
        }
    }
}

/// The entries of `T(U)`: `a = ρ²r₁ + (1−ρ²)r₂`, `b = (1−ρ²)r₁ + ρ²r₂`, and
/// `f = ρ√(1−ρ²)(r₁ − r₂)`; the off-diagonal is `f e^{±iφ}`.
fn cayley_entries<T: Real>(spec: &ManifoldSpec<T>, pt: &ManifoldPoint<T>) -> (T, T, T) {
    let (rho, co) = pt.rho_pair();
    let (p, q) = (rho * rho, co * co);
    (
        p * spec.r1 + q * spec.r2,
        q * spec.r1 + p * spec.r2,
        rho * co * (spec.r1 - spec.r2),
    )
}

/// `U(ρ, φ)`.
pub fn manifold_unitary<T: Real>(spec: &ManifoldSpec<T>, pt: &ManifoldPoint<T>) -> ExtensionPoint<T> {
    let (l1, l2) = (spec.lambda1, spec.lambda2);
    let (rho, co) = pt.rho_pair();
    let (p, q) = (rho * rho, co * co);
    let off = (l1 - l2) * (rho * co);
    let u = Matrix2::new(
        l1 * p + l2 * q,
        off * cis(pt.phi),
        off * cis(-pt.phi),
        l1 * q + l2 * p,
    );
    ExtensionPoint::new(u).expect("conjugate of a unitary diagonal")
}

/// The boundary condition `(C(U), D(U))` at a point of `X`.
pub fn manifold_pair<T: Real>(spec: &ManifoldSpec<T>, pt: &ManifoldPoint<T>) -> AdmissiblePair<T> {
    from_unitary(&manifold_unitary(spec, pt))
}

/// The unique `z < 0` with `(M₁₁(z) + a)(M₂₂(z) + b) = f²`.
///
/// `det G` runs from `r₁r₂ < 0` at `z = 0⁻` to `+∞`, crossing zero once; it
/// is bisected in `ln(−z)` on `−z ∈ [1e−14, 1e14]` down to floating-point
/// resolution.
pub fn solve_z<T: Real>(spec: &ManifoldSpec<T>, pt: &ManifoldPoint<T>) -> Result<T> {
    let weyl = WeylMatrix::new(spec.alpha());
    Ok(-solve_log(spec, pt, &weyl)?.exp())
}

fn solve_log<T: Real>(spec: &ManifoldSpec<T>, pt: &ManifoldPoint<T>, weyl: &WeylMatrix<T>) -> Result<T> {
    let (a, b, f) = cayley_entries(spec, pt);
    let det = |x: T| {
        let (m1, m2) = weyl.entries_at_log(x);
        (m1 + a) * (m2 + b) - f * f
    };
    let (lo_z, hi_z) = (1e-14, 1e14);
    let (mut lo, mut hi) = (T::lit(lo_z).ln(), T::lit(hi_z).ln());
    if !(det(lo) < T::zero() && det(hi) > T::zero()) {
        return Err(Error::BracketFailure { lo: lo_z, hi: hi_z });
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if det(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// `G(ρ, φ) = M(z(ρ, φ)) + T(U(ρ, φ))`, Hermitian of rank one.
pub fn g_matrix<T: Real>(spec: &ManifoldSpec<T>, pt: &ManifoldPoint<T>) -> Result<Matrix2<T>> {
    let weyl = WeylMatrix::new(spec.alpha());
    g_matrix_with(spec, pt, &weyl)
}

fn g_matrix_with<T: Real>(
    spec: &ManifoldSpec<T>,
    pt: &ManifoldPoint<T>,
    weyl: &WeylMatrix<T>,
) -> Result<Matrix2<T>> {
    let x = solve_log(spec, pt, weyl)?;
    let (m1, m2) = weyl.entries_at_log(x);
    let (a, b, f) = cayley_entries(spec, pt);
    Ok(Matrix2::new(
        C::new(m1 + a, T::zero()),
        cis(pt.phi) * f,
        cis(-pt.phi) * f,
        C::new(m2 + b, T::zero()),
    ))
}

/// Unit vector spanning `ker G`; exactly `e₁` at `ρ = 0` and `e₂` at `ρ = 1`.
pub fn kernel_vector<T: Real>(spec: &ManifoldSpec<T>, pt: &ManifoldPoint<T>) -> Result<[C<T>; 2]> {
    kernel_vector_with(spec, pt, &WeylMatrix::new(spec.alpha()))
}

fn kernel_vector_with<T: Real>(
    spec: &ManifoldSpec<T>,
    pt: &ManifoldPoint<T>,
    weyl: &WeylMatrix<T>,
) -> Result<[C<T>; 2]> {
    let (zero, one) = (C::new(T::zero(), T::zero()), C::new(T::one(), T::zero()));
    match pt.pole() {
        Some(Pole::South) => Ok([one, zero]),
        Some(Pole::North) => Ok([zero, one]),
        None => Ok(g_matrix_with(spec, pt, weyl)?.null_vector()),
    }
}

/// How a Chern number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChernMethod {
    BoundaryIntegral,
    LatticePlaquette,
    CurvatureGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct ChernResult<T> {
    pub value: T,
    pub method: ChernMethod,
    pub grid: String,
    /// `|value − round(value)|`.
    pub integer_residual: T,
}

impl<T: Real> ChernResult<T> {
    fn new(value: T, method: ChernMethod, grid: String) -> Self {
        Self {
            value,
            method,
            grid,
            integer_residual: (value - value.round()).abs(),
        }
    }

    pub fn rounded(&self) -> i64 {
        self.value.round().as_f64() as i64
    }
}

/// Default radii for [`chern_boundary`].
pub const DEFAULT_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Nodes of the trapezoid rule on the circle `ρ = ε`.
pub const BOUNDARY_NODES: usize = 256;

/// `ch(E) = −ch(H) = lim_{ε→0} (1/2π)∫₀^{2π} f²/(f² + g²) dφ` at `ρ = ε`.
///
/// Since `g·h = f²` with `h` bounded away from zero, the integrand is
/// `1 − O(ε²)`; the values for the given radii are Richardson-extrapolated
/// in `ε²` (Neville), and the last two diagonal entries must agree to `1e−4`.
pub fn chern_boundary<T: Real>(spec: &ManifoldSpec<T>, eps: &[T]) -> Result<ChernResult<T>> {
    if eps.len() < 2 {
        return Err(Error::InvalidInput("need at least two radii".into()));
    }
    for w in eps.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidInput("radii must be strictly decreasing".into()));
        }
    }
    if !(eps[0] <= T::lit(0.2) && eps[eps.len() - 1] > T::zero()) {
        return Err(Error::InvalidInput("radii must lie in (0, 0.2]".into()));
    }
    let weyl = WeylMatrix::new(spec.alpha());
    let n = BOUNDARY_NODES;
    let mut values = Vec::with_capacity(eps.len());
    for &e in eps {
        let ratios = (0..n)
            .into_par_iter()
            .map(|j| {
                let phi = T::TAU() * T::lit(j as f64 / n as f64);
                let pt = ManifoldPoint::new(e, phi)?;
                let g = g_matrix_with(spec, &pt, &weyl)?;
                let f2 = g.m[0][1].norm_sqr();
                let g11 = g.m[0][0].re;
                Ok(f2 / (f2 + g11 * g11))
            })
            .collect::<Result<Vec<T>>>()?;
        // Periodic trapezoid: (1/2π)·(2π/n)·Σ.
        let mean = ratios.into_iter().collect::<ExactSum<T>>().value() / T::lit(n as f64);
        values.push(mean);
    }
    let h: Vec<T> = eps.iter().map(|&e| e * e).collect();
    let mut table = values.clone();
    let mut diag = vec![table[0]];
    for k in 1..eps.len() {
        // After step k, table[k − j] holds the order-j extrapolant ending at k.
        for j in 1..=k {
            let i = k - j;
            table[i] = table[i + 1] + (table[i + 1] - table[i]) * h[k] / (h[i] - h[k]);
        }
        diag.push(table[0]);
    }
    let last = diag[diag.len() - 1];
    let prev = diag[diag.len() - 2];
    if (last - prev).abs() > T::lit(1e-4) {
        return Err(Error::NonConvergence(format!(
            "boundary extrapolation not Cauchy: {} vs {}",
            prev, last
        )));
    }
    let radii: Vec<String> = eps.iter().map(|e| format!("{e}")).collect();
    Ok(ChernResult::new(
        last,
        ChernMethod::BoundaryIntegral,
        format!("eps=[{}];nodes={n}", radii.join(",")),
    ))
}

/// Traversal sense of the `φ` circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Standard,
    /// `φ → −φ`.
    Reversed,
}

/// Plaquette fluxes summed in the `(ρ, φ)` orientation give `−2π·ch(E)`;
/// this factor fixes the sign so that the reference sphere reports `+1`.
const LATTICE_SIGN: f64 = -1.0;

/// Same pin for `(1/2π)∫ i·tr(P[∂_β P, ∂_φ P]) dβ dφ`.
const CURVATURE_SIGN: f64 = 1.0;

/// Flux through one plaquette, located by its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct PlaquetteFlux<T> {
    pub rho: T,
    pub phi: T,
    pub flux: T,
}

/// Site `β_i = (π/2)·i/n_ρ` (`ρ = sin β`) at angle `φ`.
fn site<T: Real>(i: usize, n_rho: usize, phi: T) -> ManifoldPoint<T> {
    let pole = if i == 0 {
        Some(Pole::South)
    } else if i == n_rho {
        Some(Pole::North)
    } else {
        None
    };
    let beta = T::FRAC_PI_2() * T::lit(i as f64 / n_rho as f64);
    ManifoldPoint::from_beta(beta, pole, phi)
}

fn lattice_phi<T: Real>(j: usize, n_phi: usize, orientation: Orientation) -> T {
    let j = match orientation {
        Orientation::Standard => j,
        Orientation::Reversed => (n_phi - j) % n_phi,
    };
    T::TAU() * T::lit(j as f64 / n_phi as f64)
}

/// Kernel vectors of `G` on the `(n_ρ + 1) × n_φ` site grid.
///
/// At the poles the whole `φ` circle is one point of `X` and carries the exact
/// pole vector, so the grid closes into a sphere.
pub fn kernel_field<T: Real>(
    spec: &ManifoldSpec<T>,
    n_rho: usize,
    n_phi: usize,
    orientation: Orientation,
) -> Result<Vec<Vec<[C<T>; 2]>>> {
    let weyl = WeylMatrix::new(spec.alpha());
    (0..=n_rho)
        .into_par_iter()
        .map(|i| {
            (0..n_phi)
                .map(|j| {
                    let pt = site(i, n_rho, lattice_phi(j, n_phi, orientation));
                    kernel_vector_with(spec, &pt, &weyl)
                })
                .collect()
        })
        .collect()
}

fn link<T: Real>(a: &[C<T>; 2], b: &[C<T>; 2]) -> C<T> {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// Total plaquette flux `Σ arg(U_ρ U_φ U_ρ⁻¹ U_φ⁻¹)` of a line field on a
/// `rows × cols` grid that is periodic in the second index, together with the
/// individual fluxes (row-major). Only phases of the links enter.
pub fn lattice_flux<T: Real>(field: &[Vec<[C<T>; 2]>]) -> Result<(T, Vec<T>)> {
    let rows = field.len();
    let cols = field.first().map_or(0, |r| r.len());
    let mut fluxes = Vec::with_capacity(rows.saturating_sub(1) * cols);
    let limit = T::PI() - T::lit(0.1);
    for i in 0..rows.saturating_sub(1) {
        for j in 0..cols {
            let jn = (j + 1) % cols;
            let u1 = link(&field[i][j], &field[i + 1][j]);
            let u2 = link(&field[i + 1][j], &field[i + 1][jn]);
            let u3 = link(&field[i + 1][jn], &field[i][jn]);
            let u4 = link(&field[i][jn], &field[i][j]);
            let loop_ = u1 * u2 * u3 * u4;
            let flux = phase_step(C::new(T::one(), T::zero()), loop_);
            if !(flux.abs() < limit) || loop_.norm() <= T::epsilon() {
                return Err(Error::VortexOnPlaquette {
                    i,
                    j,
                    flux: flux.as_f64(),
                });
            }
            fluxes.push(flux);
        }
    }
    let total = fluxes.iter().copied().collect::<ExactSum<T>>().value();
    Ok((total, fluxes))
}

/// Chern number of the bound-state bundle from plaquette fluxes of its
/// kernel-vector field (gauge invariant, integer for any admissible grid).
pub fn chern_lattice<T: Real>(spec: &ManifoldSpec<T>, n_rho: usize, n_phi: usize) -> Result<ChernResult<T>> {
    Ok(chern_lattice_with(spec, n_rho, n_phi, Orientation::Standard)?.0)
}

/// [`chern_lattice`] with an orientation, also returning every plaquette flux.
pub fn chern_lattice_with<T: Real>(
    spec: &ManifoldSpec<T>,
    n_rho: usize,
    n_phi: usize,
    orientation: Orientation,
) -> Result<(ChernResult<T>, Vec<PlaquetteFlux<T>>)> {
    if n_rho < 32 || n_phi < 32 {
        return Err(Error::InvalidInput(format!(
            "lattice needs at least 32x32 sites, got {n_rho}x{n_phi}"
        )));
    }
    let field = kernel_field(spec, n_rho, n_phi, orientation)?;
    let (total, fluxes) = lattice_flux(&field)?;
    let value = T::lit(LATTICE_SIGN) * total / T::TAU();
    let plaquettes = fluxes
        .iter()
        .enumerate()
        .map(|(k, &flux)| {
            let (i, j) = (k / n_phi, k % n_phi);
            let beta = T::FRAC_PI_2() * T::lit((i as f64 + 0.5) / n_rho as f64);
            let phi = T::TAU() * T::lit((j as f64 + 0.5) / n_phi as f64);
            let phi = match orientation {
                Orientation::Standard => phi,
                Orientation::Reversed => T::TAU() - phi,
            };
            PlaquetteFlux {
                rho: beta.sin(),
                phi,
                flux: flux * T::lit(LATTICE_SIGN),
            }
        })
        .collect();
    Ok((
        ChernResult::new(value, ChernMethod::LatticePlaquette, format!("{n_rho}x{n_phi}")),
        plaquettes,
    ))
}

/// Chern number from the curvature `i·tr(P[∂_β P, ∂_φ P])` of the kernel
/// projector, with central differences and the trapezoid rule. Not an exact
/// integer; the residual measures the discretization error.
pub fn chern_curvature<T: Real>(spec: &ManifoldSpec<T>, n_rho: usize, n_phi: usize) -> Result<ChernResult<T>> {
    if n_rho < 2 || n_phi < 3 {
        return Err(Error::InvalidInput("curvature grid too small".into()));
    }
    let field = kernel_field(spec, n_rho, n_phi, Orientation::Standard)?;
    let proj: Vec<Vec<Matrix2<T>>> = field
        .iter()
        .map(|row| row.iter().map(|&v| Matrix2::projector(v)).collect())
        .collect();
    let hb = T::FRAC_PI_2() / T::lit(n_rho as f64);
    let hp = T::TAU() / T::lit(n_phi as f64);
    let mut sum = ExactSum::new();
    for i in 0..=n_rho {
        // One-sided at the poles, central inside.
        let (lo, hi, wb) = if i == 0 {
            (0, 1, hb * T::lit(0.5))
        } else if i == n_rho {
            (n_rho - 1, n_rho, hb * T::lit(0.5))
        } else {
            (i - 1, i + 1, hb)
        };
        let db_scale = (hb * T::lit((hi - lo) as f64)).recip();
        for j in 0..n_phi {
            let jp = (j + 1) % n_phi;
            let jm = (j + n_phi - 1) % n_phi;
            let db = (proj[hi][j] - proj[lo][j]).scale_re(db_scale);
            let dp = (proj[i][jp] - proj[i][jm]).scale_re((hp + hp).recip());
            let p = proj[i][j];
            let comm = db * dp - dp * db;
            // i·tr(P[A, B]) is real for Hermitian P, A, B.
            let val = -(p * comm).trace().im;
            sum.add(val * wb * hp);
        }
    }
    let value = T::lit(CURVATURE_SIGN) * sum.value() / T::TAU();
    Ok(ChernResult::new(value, ChernMethod::CurvatureGrid, format!("{n_rho}x{n_phi}")))
}

/// Site counts for [`trace3_degree`]: intervals in `β` (`ρ = sin β`), in
/// `φ`, and in the parameter `t ∈ [0, 1]` of each of the four edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Trace3Grid {
    pub n_rho: usize,
    pub n_phi: usize,
    pub n_t: usize,
}

impl Trace3Grid {
    pub fn doubled(self) -> Self {
        Self {
            n_rho: self.n_rho * 2,
            n_phi: self.n_phi * 2,
            n_t: self.n_t * 2,
        }
    }
}

impl Default for Trace3Grid {
    fn default() -> Self {
        Self {
            n_rho: 48,
            n_phi: 48,
            n_t: 96,
        }
    }
}

impl fmt::Display for Trace3Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x4x{}", self.n_rho, self.n_phi, self.n_t)
    }
}

/// `"NρxNφxNt"` or `"NρxNφx4xNt"` (the `4` being the number of edges).
impl FromStr for Trace3Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(['x', 'X'])
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("bad grid '{s}'")))?;
        let (n_rho, n_phi, n_t) = match parts[..] {
            [a, b, c] => (a, b, c),
            [a, b, 4, c] => (a, b, c),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "grid must be NrhoxNphixNt or NrhoxNphix4xNt, got '{s}'"
                )))
            }
        };
        if n_rho < 2 || n_phi < 3 || n_t < 2 {
            return Err(Error::InvalidInput(format!("grid '{s}' is too coarse")));
        }
        Ok(Self { n_rho, n_phi, n_t })
    }
}

/// Direction in which `□` is traversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Traversal {
    /// `B₁ → B₂ → B₃ → B₄`, as in the boundary loop.
    #[default]
    Forward,
    Reversed,
}

#[derive(Debug, Clone, Copy)]
pub struct Trace3Options {
    pub grid: Trace3Grid,
    pub traversal: Traversal,
    /// Recompute on the doubled grid and require agreement to `0.02`.
    pub check_doubling: bool,
}

impl Default for Trace3Options {
    fn default() -> Self {
        Self {
            grid: Trace3Grid::default(),
            traversal: Traversal::Forward,
            check_doubling: true,
        }
    }
}

/// The raw integral in coordinates `(ρ, φ, t)` has this sign relative to the
/// reported degree; fixed by the reference sphere, which reports `+1`.
const TRACE3_SIGN: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct Trace3Report<T> {
    /// `(1/24π²)∫ tr[Γ* dΓ ∧ dΓ* ∧ dΓ]` with the pinned orientation.
    pub value: T,
    /// Same integral in the coordinate order `(ρ, φ, t)`.
    pub raw_value: T,
    pub orientation: &'static str,
    pub traversal: Traversal,
    /// Contributions of `X × B_j`, same orientation as `value`.
    pub per_edge: [T; 4],
    pub grid: String,
    pub integer_residual: T,
    /// Value on the doubled grid, when checked.
    pub refined: Option<T>,
}

/// `ε^{abc} tr[Γ* ∂_aΓ (∂_bΓ)* ∂_cΓ]`, the coefficient of `dρ∧dφ∧dt`.
pub fn trace3_integrand<T: Real>(g: &Matrix2<T>, d: &[Matrix2<T>; 3]) -> C<T> {
    let gs = g.adjoint();
    let ds = [d[0].adjoint(), d[1].adjoint(), d[2].adjoint()];
    const PERMS: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([0, 2, 1], -1.0),
        ([2, 1, 0], -1.0),
        ([1, 0, 2], -1.0),
    ];
    let mut acc = C::new(T::zero(), T::zero());
    for (p, s) in PERMS {
        let t = (gs * d[p[0]] * ds[p[1]] * d[p[2]]).trace();
        acc = acc + t * T::lit(s);
    }
    acc
}

/// `−ε^{abc} tr[(Γ*∂_aΓ)(Γ*∂_bΓ)(Γ*∂_cΓ)]`, equal to [`trace3_integrand`]
/// for unitary `Γ` because `dΓ* = −Γ* dΓ Γ*`.
pub fn trace3_integrand_cubic<T: Real>(g: &Matrix2<T>, d: &[Matrix2<T>; 3]) -> C<T> {
    let gs = g.adjoint();
    let a = [gs * d[0], gs * d[1], gs * d[2]];
    let tr = |i: usize, j: usize, k: usize| (a[i] * a[j] * a[k]).trace();
    // tr is cyclic, so the six permutations collapse to two classes.
    let even = tr(0, 1, 2) * T::lit(3.0);
    let odd = tr(0, 2, 1) * T::lit(3.0);
    -(even - odd)
}

/// Degree-3 pairing `(1/24π²)∫_{X×□} tr[Γ* dΓ ∧ dΓ* ∧ dΓ]` on the default options.
pub fn trace3_degree<T: Real>(spec: &ManifoldSpec<T>, grid: Trace3Grid) -> Result<Trace3Report<T>> {
    trace3_degree_with(
        spec,
        Trace3Options {
            grid,
            ..Trace3Options::default()
        },
    )
}

/// The pairing on an explicit grid.
///
/// `Γ(ρ, φ, t)` is the edge function of `U(ρ, φ)` on the edge containing `t`:
/// `x = 4 tan(π(t − ½))` on `B₁`, `κ = (t/(1−t))²` on `B₂`, `x = −4 tan(π(t − ½))`
/// on `B₃`, and `Γ₄ ≡ 1`. Derivatives are central differences (one-sided at
/// the poles and the edge ends), the measure is the trapezoid product rule,
/// and the sum is exact, so reversing the traversal negates the value
/// bit-for-bit.
pub fn trace3_degree_with<T: Real>(spec: &ManifoldSpec<T>, opts: Trace3Options) -> Result<Trace3Report<T>> {
    let (raw, per_edge) = trace3_sum(spec, opts.grid, opts.traversal)?;
    let sign = T::lit(TRACE3_SIGN);
    let value = raw * sign;
    let refined = if opts.check_doubling {
        let (r2, _) = trace3_sum(spec, opts.grid.doubled(), opts.traversal)?;
        let v2 = r2 * sign;
        if (v2 - value).abs() > T::lit(0.02) {
            return Err(Error::NonConvergence(format!(
                "3-trace moved from {} to {} under grid doubling",
                value, v2
            )));
        }
        Some(v2)
    } else {
        None
    };
    Ok(Trace3Report {
        value,
        raw_value: raw,
        orientation: "(-rho, phi, t)",
        traversal: opts.traversal,
        per_edge: per_edge.map(|e| e * sign),
        grid: opts.grid.to_string(),
        integer_residual: (value - value.round()).abs(),
        refined,
    })
}

/// Per-`t` data shared by every site: `diag(φ⁻)` and `diag(φ̃)` at the nodes
/// of the two `x` edges, and `ln κ` at the nodes of `B₂`.
struct EdgeNodes<T> {
    b1: Vec<(Matrix2<T>, Matrix2<T>)>,
    b3: Vec<(Matrix2<T>, Matrix2<T>)>,
    b2: Vec<T>,
}

impl<T: Real> EdgeNodes<T> {
    fn new(alpha: Flux<T>, n_t: usize) -> Self {
        let diags = |x: T| {
            (
                Matrix2::diag(phi_minus(0, alpha, x), phi_minus(-1, alpha, x)),
                Matrix2::diag(
                    phi_tilde(0, alpha, x).expect("supported channel"),
                    phi_tilde(-1, alpha, x).expect("supported channel"),
                ),
            )
        };
        let x_of = |k: usize| T::lit(4.0) * (T::PI() * (T::lit(k as f64 / n_t as f64) - T::lit(0.5))).tan();
        let mut b1 = Vec::with_capacity(n_t + 1);
        let mut b3 = Vec::with_capacity(n_t + 1);
        let mut b2 = Vec::with_capacity(n_t + 1);
        for k in 0..=n_t {
            if k == 0 || k == n_t {
                // Ends use the analytic corner values; placeholders only.
                b1.push((Matrix2::zero(), Matrix2::zero()));
                b3.push((Matrix2::zero(), Matrix2::zero()));
                b2.push(T::zero());
                continue;
            }
            let x = x_of(k);
            b1.push(diags(x));
            b3.push(diags(-x));
            let t = T::lit(k as f64 / n_t as f64);
            b2.push(T::lit(2.0) * (t / (T::one() - t)).ln());
        }
        Self { b1, b3, b2 }
    }
}

/// `Γ` at every `t` node of the four edges, for one site of `X`.
fn site_values<T: Real>(
    spec: &ManifoldSpec<T>,
    pt: &ManifoldPoint<T>,
    nodes: &EdgeNodes<T>,
    n_t: usize,
    traversal: Traversal,
) -> Result<[Vec<Matrix2<T>>; 4]> {
    let alpha = spec.alpha();
    let set = EdgeFunctionSet::new(&manifold_pair(spec, pt), alpha)?;
    let (s0, sinf) = set.endpoints();
    let free = free_part(alpha);
    let (st0, stinf) = (s0 - free, sinf - free);
    let one = Matrix2::identity();
    let x_edge = |tab: &[(Matrix2<T>, Matrix2<T>)], st: &Matrix2<T>, start: Matrix2<T>, end: Matrix2<T>| {
        (0..=n_t)
            .map(|k| {
                if k == 0 {
                    start
                } else if k == n_t {
                    end
                } else {
                    tab[k].0 + tab[k].1 * *st
                }
            })
            .collect::<Vec<_>>()
    };
    let b1 = x_edge(&nodes.b1, &st0, one, s0);
    let b3 = x_edge(&nodes.b3, &stinf, sinf, one);
    let b2: Vec<_> = (0..=n_t)
        .map(|k| {
            if k == 0 {
                s0
            } else if k == n_t {
                sinf
            } else {
                set.gamma2_log(nodes.b2[k])
            }
        })
        .collect();
    let b4 = vec![one; n_t + 1];
    let mut out = [b1, b2, b3, b4];
    if traversal == Traversal::Reversed {
        for e in out.iter_mut() {
            e.reverse();
        }
    }
    Ok(out)
}

type Slab<T> = Vec<[Vec<Matrix2<T>>; 4]>;

/// Raw `(ρ, φ, t)`-oriented integral and its per-edge parts.
fn trace3_sum<T: Real>(spec: &ManifoldSpec<T>, grid: Trace3Grid, traversal: Traversal) -> Result<(T, [T; 4])> {
    let Trace3Grid { n_rho, n_phi, n_t } = grid;
    let nodes = EdgeNodes::new(spec.alpha(), n_t);
    let slab = |i: usize| -> Result<Slab<T>> {
        (0..n_phi)
            .into_par_iter()
            .map(|j| {
                let phi = T::TAU() * T::lit(j as f64 / n_phi as f64);
                site_values(spec, &site(i, n_rho, phi), &nodes, n_t, traversal)
            })
            .collect()
    };
    let hb = T::FRAC_PI_2() / T::lit(n_rho as f64);
    let hp = T::TAU() / T::lit(n_phi as f64);
    let ht = T::one() / T::lit(n_t as f64);
    let half = T::lit(0.5);
    let mut sums: [ExactSum<T>; 4] = Default::default();
    let mut prev: Option<Slab<T>> = None;
    let mut cur = slab(0)?;
    let mut next = if n_rho >= 1 { Some(slab(1)?) } else { None };
    for i in 0..=n_rho {
        let wb = if i == 0 || i == n_rho { hb * half } else { hb };
        let d_beta = |j: usize, e: usize, k: usize| -> Matrix2<T> {
            match (&prev, &next) {
                (Some(p), Some(n)) => (n[j][e][k] - p[j][e][k]).scale_re((hb + hb).recip()),
                (None, Some(n)) => (n[j][e][k] - cur[j][e][k]).scale_re(hb.recip()),
                (Some(p), None) => (cur[j][e][k] - p[j][e][k]).scale_re(hb.recip()),
                (None, None) => Matrix2::zero(),
            }
        };
        let partial: Vec<[ExactSum<T>; 4]> = (0..n_phi)
            .into_par_iter()
            .map(|j| {
                let jp = (j + 1) % n_phi;
                let jm = (j + n_phi - 1) % n_phi;
                let mut acc: [ExactSum<T>; 4] = Default::default();
                for (e, acc_e) in acc.iter_mut().enumerate() {
                    let vals = &cur[j][e];
                    for k in 0..=n_t {
                        let wt = if k == 0 || k == n_t { ht * half } else { ht };
                        let dt = if k == 0 {
                            (vals[1] - vals[0]).scale_re(ht.recip())
                        } else if k == n_t {
                            (vals[n_t] - vals[n_t - 1]).scale_re(ht.recip())
                        } else {
                            (vals[k + 1] - vals[k - 1]).scale_re((ht + ht).recip())
                        };
                        let dp = (cur[jp][e][k] - cur[jm][e][k]).scale_re((hp + hp).recip());
                        let d = [d_beta(j, e, k), dp, dt];
                        let w = trace3_integrand(&vals[k], &d).re;
                        acc_e.add(w * (wb * hp * wt));
                    }
                }
                acc
            })
            .collect();
        for acc in &partial {
            for (s, a) in sums.iter_mut().zip(acc) {
                s.merge(a);
            }
        }
        prev = Some(cur);
        cur = match next.take() {
            Some(n) => n,
            None => break,
        };
        next = if i + 2 <= n_rho { Some(slab(i + 2)?) } else { None };
    }
    let norm = (T::lit(24.0) * T::PI() * T::PI()).recip();
    let per_edge = [
        sums[0].value() * norm,
        sums[1].value() * norm,
        sums[2].value() * norm,
        sums[3].value() * norm,
    ];
    let mut total = ExactSum::new();
    for s in &sums {
        total.merge(s);
    }
    Ok((total.value() * norm, per_edge))
}

/// Number of `κ` samples used by [`continuity_modulus`], endpoints included.
pub const CONTINUITY_SAMPLES: usize = 1000;

/// `max_κ max_{ij} |S^U(κ)_{ij} − S^{U′}(κ)_{ij}|` over a log grid of
/// `κ ∈ [1e−8, 1e8]` plus `κ = 0` and `κ = ∞`.
pub fn continuity_modulus<T: Real>(
    spec: &ManifoldSpec<T>,
    pt: &ManifoldPoint<T>,
    pt2: &ManifoldPoint<T>,
) -> Result<T> {
    let alpha = spec.alpha();
    let a = EdgeFunctionSet::new(&manifold_pair(spec, pt), alpha)?;
    let b = EdgeFunctionSet::new(&manifold_pair(spec, pt2), alpha)?;
    let n = CONTINUITY_SAMPLES - 2;
    let span = 8.0 * std::f64::consts::LN_10;
    let mut vs = vec![T::neg_infinity(), T::infinity()];
    vs.extend((0..n).map(|k| T::lit(-span + 2.0 * span * k as f64 / (n - 1) as f64)));
    Ok(vs
        .into_iter()
        .map(|v| (a.gamma2_log(v) - b.gamma2_log(v)).max_abs())
        .fold(T::zero(), |m, x| m.max(x)))
}
