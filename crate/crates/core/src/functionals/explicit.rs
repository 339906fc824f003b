//! Explicit finite-dimensional backend: closed-form objectives used as cheap
//! fixtures and oracles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::scalar::Real;

use super::{Backend, Functional};

type ValueFn<T> = Box<dyn Fn(&DVector<T>) -> T + Send + Sync>;
type GradFn<T> = Box<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;
type HessFn<T> = Box<dyn Fn(&DVector<T>) -> DMatrix<T> + Send + Sync>;

/// A functional given by explicit evaluators. The weak metric defaults to the
/// identity Gram matrix and can be overridden per problem.
pub struct ExplicitFunctional<T: Real> {
    n: usize,
    value: ValueFn<T>,
    grad: GradFn<T>,
    hess: HessFn<T>,
    gram: Option<DMatrix<T>>,
}

impl<T: Real> ExplicitFunctional<T> {
    pub fn new(n: usize, value: ValueFn<T>, grad: GradFn<T>, hess: HessFn<T>) -> Self {
        Self {
            n,
            value,
            grad,
            hess,
            gram: None,
        }
    }

    /// Overrides the identity weak metric.
    pub fn with_gram(mut self, gram: DMatrix<T>) -> Self {
        self.gram = Some(gram);
        self
    }
}

impl<T: Real> Functional<T> for ExplicitFunctional<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn backend(&self) -> Backend {
        Backend::Explicit
    }

    fn eval_f(&self, u: &DVector<T>) -> Result<T> {
        self.check_dim(u)?;
        Ok((self.value)(u))
    }

    fn eval_grad(&self, u: &DVector<T>) -> Result<DVector<T>> {
        self.check_dim(u)?;
        Ok((self.grad)(u))
    }

    fn eval_hess(&self, u: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(u)?;
        let mut h = (self.hess)(u);
        symmetrize(&mut h);
        Ok(h)
    }

    fn h_gram(&self, ubar: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(ubar)?;
        match &self.gram {
            Some(g) => {
                let smallest = crate::linalg::smallest_symmetric_eigenvalue(g);
                if smallest <= 0.0 {
                    return Err(Error::Assembly {
                        reason: "explicit Gram override not positive definite".into(),
                        smallest_eig: smallest,
                    });
                }
                Ok(g.clone())
            }
            None => Ok(DMatrix::identity(self.n, self.n)),
        }
    }
}

/// Ready-made explicit fixtures.
pub mod fixtures {
    use super::*;

    /// `(x^2 - 1)^2 + y^2`: two minima at `(+-1, 0)`, a saddle at the origin.
    pub fn double_well<T: Real>() -> ExplicitFunctional<T> {
        let four = T::of(4.0);
        let two = T::of(2.0);
        let twelve = T::of(12.0);
        ExplicitFunctional::new(
            2,
            Box::new(move |u: &DVector<T>| {
                let w = u[0] * u[0] - T::one();
                w * w + u[1] * u[1]
            }),
            Box::new(move |u: &DVector<T>| {
                DVector::from_vec(vec![four * u[0] * (u[0] * u[0] - T::one()), two * u[1]])
            }),
            Box::new(move |u: &DVector<T>| {
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[twelve * u[0] * u[0] - four, T::zero(), T::zero(), two],
                )
            }),
        )
    }

    /// `x^2 - y^2`: a single non-degenerate saddle at the origin.
    pub fn saddle<T: Real>() -> ExplicitFunctional<T> {
        let two = T::of(2.0);
        ExplicitFunctional::new(
            2,
            Box::new(move |u: &DVector<T>| u[0] * u[0] - u[1] * u[1]),
            Box::new(move |u: &DVector<T>| DVector::from_vec(vec![two * u[0], -(two * u[1])])),
            Box::new(move |_u: &DVector<T>| {
                DMatrix::from_row_slice(2, 2, &[two, T::zero(), T::zero(), -two])
            }),
        )
    }

    /// `x^4 - y^2`: degenerate in `x` at the origin; the positive-direction
    /// estimate of the non-degeneracy criterion must fail here.
    pub fn quartic_saddle<T: Real>() -> ExplicitFunctional<T> {
        let two = T::of(2.0);
        let four = T::of(4.0);
        let twelve = T::of(12.0);
        ExplicitFunctional::new(
            2,
            Box::new(move |u: &DVector<T>| {
                let x2 = u[0] * u[0];
                x2 * x2 - u[1] * u[1]
            }),
            Box::new(move |u: &DVector<T>| {
                DVector::from_vec(vec![four * u[0] * u[0] * u[0], -(two * u[1])])
            }),
            Box::new(move |u: &DVector<T>| {
                DMatrix::from_row_slice(2, 2, &[twelve * u[0] * u[0], T::zero(), T::zero(), -two])
            }),
        )
    }

    /// 1D `x^4`: degenerate minimum admitted by the Lyapunov definition.
    pub fn quartic_1d<T: Real>() -> ExplicitFunctional<T> {
        let four = T::of(4.0);
        let twelve = T::of(12.0);
        ExplicitFunctional::new(
            1,
            Box::new(move |u: &DVector<T>| {
                let x2 = u[0] * u[0];
                x2 * x2
            }),
            Box::new(move |u: &DVector<T>| DVector::from_vec(vec![four * u[0] * u[0] * u[0]])),
            Box::new(move |u: &DVector<T>| DMatrix::from_row_slice(1, 1, &[twelve * u[0] * u[0]])),
        )
    }

    /// 1D `x^2 / 2`: negative-gradient field `-x`, the exact-flow oracle.
    pub fn half_square_1d<T: Real>() -> ExplicitFunctional<T> {
        ExplicitFunctional::new(
            1,
            Box::new(move |u: &DVector<T>| u[0] * u[0] * T::of(0.5)),
            Box::new(move |u: &DVector<T>| DVector::from_vec(vec![u[0]])),
            Box::new(move |_u: &DVector<T>| DMatrix::from_row_slice(1, 1, &[T::one()])),
        )
    }

    /// 1D `f(x) = x`: no critical points; every trajectory escapes.
    pub fn linear_drift_1d<T: Real>() -> ExplicitFunctional<T> {
        ExplicitFunctional::new(
            1,
            Box::new(move |u: &DVector<T>| u[0]),
            Box::new(move |_u: &DVector<T>| DVector::from_vec(vec![T::one()])),
            Box::new(move |_u: &DVector<T>| DMatrix::from_row_slice(1, 1, &[T::zero()])),
        )
    }

    /// `(x^2 - 1)^2 + (y^2 - 1)^2`: four minima, four index-1 saddles, one
    /// index-2 maximum-like point at the origin.
    pub fn quad_well<T: Real>() -> ExplicitFunctional<T> {
        let four = T::of(4.0);
        let twelve = T::of(12.0);
        ExplicitFunctional::new(
            2,
            Box::new(move |u: &DVector<T>| {
                let a = u[0] * u[0] - T::one();
                let b = u[1] * u[1] - T::one();
                a * a + b * b
            }),
            Box::new(move |u: &DVector<T>| {
                DVector::from_vec(vec![
                    four * u[0] * (u[0] * u[0] - T::one()),
                    four * u[1] * (u[1] * u[1] - T::one()),
                ])
            }),
            Box::new(move |u: &DVector<T>| {
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        twelve * u[0] * u[0] - four,
                        T::zero(),
                        T::zero(),
                        twelve * u[1] * u[1] - four,
                    ],
                )
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn double_well_jet_at_minimum() {
        let f = double_well::<f64>();
        let u = DVector::from_vec(vec![1.0, 0.0]);
        assert_relative_eq!(f.eval_f(&u).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(f.eval_grad(&u).unwrap().norm(), 0.0, epsilon = 1e-15);
        let h = f.eval_hess(&u).unwrap();
        assert_relative_eq!(h[(0, 0)], 8.0, epsilon = 1e-13);
        assert_relative_eq!(h[(1, 1)], 2.0, epsilon = 1e-13);
    }

    #[test]
    fn identity_gram_by_default() {
        let f = saddle::<f64>();
        let gram = f.h_gram(&DVector::zeros(2)).unwrap();
        assert_eq!(gram, DMatrix::identity(2, 2));
    }

    #[test]
    fn gram_override_must_be_spd() {
        let f = saddle::<f64>().with_gram(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]));
        assert!(f.h_gram(&DVector::zeros(2)).is_err());
    }
}
