//! Evaluatable discrete energy functionals.
//!
//! Two backends share one interface: a Galerkin discretization of the
//! quasilinear energy on a P1 mesh, and explicit finite-dimensional
//! functionals given by closed-form evaluators.

pub mod explicit;
pub mod galerkin;
pub mod gmodel;
pub mod mesh;
pub mod psi;
pub mod truncated;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use explicit::ExplicitFunctional;
pub use galerkin::GalerkinFunctional;
pub use gmodel::{CustomG, GModel, PowerTerm};
pub use mesh::{Domain, Element, Mesh};
pub use psi::{psi_derivatives, CustomPsi, PsiJet, PsiModel};
pub use truncated::TruncatedSequenceFunctional;

/// Which discretization produced a functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Galerkin,
    Explicit,
}

/// An evaluatable objective: value, gradient, Hessian, and the Gram matrix of
/// the weak inner product used as the spectral metric.
pub trait Functional<T: Real> {
    /// Degrees of freedom.
    fn dim(&self) -> usize;

    fn backend(&self) -> Backend;

    fn eval_f(&self, u: &DVector<T>) -> Result<T>;

    fn eval_grad(&self, u: &DVector<T>) -> Result<DVector<T>>;

    /// Exactly symmetric Hessian (symmetrized on assembly).
    fn eval_hess(&self, u: &DVector<T>) -> Result<DMatrix<T>>;

    /// Gram matrix of the weak metric at `ubar`; must be positive definite.
    fn h_gram(&self, ubar: &DVector<T>) -> Result<DMatrix<T>>;

    /// Sobolev conjugate exponent; `None` encodes infinity.
    fn sobolev_conjugate(&self) -> Option<T> {
        None
    }

    /// Threshold exponent below which the lower-order term stays twice
    /// differentiable on the Hilbert extension; `None` encodes infinity.
    fn critical_exponent_c2(&self) -> Option<T> {
        None
    }

    fn check_dim(&self, u: &DVector<T>) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "coefficient vector has length {}, functional has {} dofs",
                u.len(),
                self.dim()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient vector".into()));
        }
        Ok(())
    }
}

/// Sobolev conjugate `p* = np/(n-p)` for `p < n`, infinity otherwise.
pub fn sobolev_conjugate<T: Real>(p: T, n: usize) -> Option<T> {
    let nf = T::of(n as f64);
    if p < nf {
        Some(nf * p / (nf - p))
    } else {
        None
    }
}

/// `p*_{C^2} = 2 p* / n`, infinity when `p*` is.
pub fn critical_exponent_c2<T: Real>(p: T, n: usize) -> Option<T> {
    sobolev_conjugate(p, n).map(|ps| T::of(2.0) * ps / T::of(n as f64))
}

/// Auxiliary diagnostic functional
/// `t_eps(u) = (eps/p) int |grad u|^p - beta/(p*(p*-1)) int |u|^{p*}`,
/// evaluated with an explicit conjugate exponent (the built-in meshes have
/// `p >= n`, where the exponent is infinite and the term is undefined).
pub fn t_epsilon_diagnostic<T: Real>(
    f: &GalerkinFunctional<T>,
    u: &DVector<T>,
    eps: T,
    beta: T,
    p_star: T,
) -> Result<T> {
    if p_star <= T::of(2.0) {
        return Err(Error::InvalidInput("diagnostic needs p* > 2".into()));
    }
    f.check_dim(u)?;
    let p = f.psi().p;
    let mut grad_term = T::zero();
    let mut low_term = T::zero();
    for e in f.mesh().elements.iter() {
        let grad_u = galerkin::element_gradient(e, u);
        let gnorm = grad_u.iter().fold(T::zero(), |a, &g| a + g * g).sqrt();
        grad_term += e.measure * gnorm.powf(p);
        for (qi, w) in e.quad_weights.iter().enumerate() {
            let uq = galerkin::element_value(e, u, qi);
            low_term += *w * uq.abs().powf(p_star);
        }
    }
    Ok(eps / p * grad_term - beta / (p_star * (p_star - T::one())) * low_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn assert_shareable<T: Send + Sync>() {}

    #[test]
    fn auxiliary_diagnostic_matches_hand_quadrature() {
        // Two cells on (0, 1), single hat: |grad u| = 2c piecewise, u linear.
        let psi = PsiModel::area_kappa(3.0f64, 1.0).unwrap();
        let mesh = Mesh::interval(0.0, 1.0, 2, 8).unwrap();
        let f = GalerkinFunctional::assemble(psi, GModel::zero(), mesh).unwrap();
        let c = 0.7f64;
        let u = DVector::from_vec(vec![c]);
        let (eps, beta, p_star) = (0.3f64, 1.1f64, 4.0f64);
        // (eps/p) int |u'|^p = (eps/3) (2c)^3; int |u|^4 = 2 * c^4/(4+1) * (1/2).
        let grad_term = eps / 3.0 * (2.0 * c).powi(3);
        let low_term = beta / (p_star * (p_star - 1.0)) * (c.powi(4) / 5.0);
        let got = t_epsilon_diagnostic(&f, &u, eps, beta, p_star).unwrap();
        assert_relative_eq!(got, grad_term - low_term, epsilon = 1e-12);
        assert!(t_epsilon_diagnostic(&f, &u, eps, beta, 1.0).is_err());
    }

    #[test]
    fn evaluators_are_shareable_across_threads() {
        assert_shareable::<GalerkinFunctional<f64>>();
        assert_shareable::<ExplicitFunctional<f64>>();
        assert_shareable::<TruncatedSequenceFunctional>();
        assert_shareable::<PsiModel<f64>>();
        assert_shareable::<GModel<f64>>();
    }
}
