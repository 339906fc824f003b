//! Desk-scale Morse homology engine for quasilinear elliptic energy
//! functionals.
//!
//! The crate discretizes energies of the form
//! `f(u) = int Psi(grad u) - int G(x, u)` (Galerkin P1 or explicit
//! finite-dimensional backends), locates critical points by deflated damped
//! Newton iteration, classifies them through the generalized eigensplitting
//! of the second differential relative to the weak metric, certifies
//! non-degeneracy by hyperbolic-operator Lyapunov sampling, integrates the
//! gradient-like flow to count connecting orbits mod 2, and assembles the
//! resulting chain complex over GF(2).
//!
//! All numerics are generic over the scalar type (`f32`/`f64`) through the
//! [`scalar::Real`] trait; the `*64` aliases at the crate root fix the
//! default double-precision instantiation.

pub mod cerami;
pub mod config;
pub mod critical;
pub mod error;
pub mod fd;
pub mod flow;
pub mod functionals;
pub mod homology;
pub mod linalg;
pub mod nondeg;
pub mod rng;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

/// Dynamic vector over the working scalar.
pub type DVec<T> = nalgebra::DVector<T>;
/// Dynamic matrix over the working scalar.
pub type DMat<T> = nalgebra::DMatrix<T>;

// Concrete double-precision aliases for the main artifacts.
pub type GalerkinFunctional64 = functionals::GalerkinFunctional<f64>;
pub type ExplicitFunctional64 = functionals::ExplicitFunctional<f64>;
pub type PsiModel64 = functionals::PsiModel<f64>;
pub type GModel64 = functionals::GModel<f64>;
pub type Mesh64 = functionals::Mesh<f64>;
pub type CriticalPoint64 = critical::CriticalPoint<f64>;
pub type Splitting64 = spectral::Splitting<f64>;
pub type HyperbolicOperator64 = nondeg::HyperbolicOperator<f64>;
pub type NondegCertificate64 = nondeg::NondegCertificate<f64>;
pub type FlowField64<'a> = flow::FlowField<'a, f64>;
pub type Trajectory64 = flow::Trajectory<f64>;
pub type MorseComplex = homology::MorseComplex;
