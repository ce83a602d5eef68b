//! Self-adjoint extensions of the two-channel Aharonov–Bohm operator:
//! classification of boundary conditions `(C, D)`, bound states, the
//! scattering matrix `S(κ)`, the boundary winding behind Levinson's theorem,
//! and the higher-degree pairings over the sphere of extensions with fixed
//! spectrum.
//!
//! Everything is generic over the scalar ([`scalar::Real`], implemented for
//! `f32` and `f64`); the aliases below fix `f64`.

pub mod chern;
pub mod error;
pub mod extensions;
pub mod linalg;
pub mod scalar;
pub mod scattering;
pub mod special_fn;
pub mod weyl_spectrum;
pub mod winding;

pub use error::{Error, ErrorClass, Result};

pub type Complex64 = num_complex::Complex<f64>;
pub type Mat2 = linalg::Matrix2<f64>;
pub type Pair = extensions::AdmissiblePair<f64>;
pub type Unitary = extensions::ExtensionPoint<f64>;
pub type Alpha = extensions::Flux<f64>;
pub type Edges = scattering::EdgeFunctionSet<f64>;
pub type Manifold = chern::ManifoldSpec<f64>;
