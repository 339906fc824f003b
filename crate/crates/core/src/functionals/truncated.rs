//! Truncation of the sequence-space functional
//! `phi(v) = sum_{n=1}^{N} cos(n v_n) / n^4`.
//!
//! Its nonzero stationary points approach the origin as the truncation order
//! grows, which is the isolation-failure phenomenon the engine demonstrates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Backend, Functional};

/// Truncated sequence functional with analytic gradient and diagonal Hessian.
pub struct TruncatedSequenceFunctional {
    order: usize,
}

impl TruncatedSequenceFunctional {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("truncation order must be >= 1".into()));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The nonzero stationary point of minimal Euclidean norm and its
    /// distance to the origin: all coordinates zero except `v_N = pi / N`.
    pub fn nearest_nonzero_critical<T: Real>(&self) -> (DVector<T>, T) {
        let n = self.order;
        let mut v = DVector::zeros(n);
        let dist = T::pi() / T::of(n as f64);
        v[n - 1] = dist;
        (v, dist)
    }
}

impl<T: Real> Functional<T> for TruncatedSequenceFunctional {
    fn dim(&self) -> usize {
        self.order
    }

    fn backend(&self) -> Backend {
        Backend::Explicit
    }

    fn eval_f(&self, u: &DVector<T>) -> Result<T> {
        self.check_dim(u)?;
        let mut total = T::zero();
        for k in 0..self.order {
            let n = T::of((k + 1) as f64);
            total += (n * u[k]).cos() / n.powi(4);
        }
        Ok(total)
    }

    fn eval_grad(&self, u: &DVector<T>) -> Result<DVector<T>> {
        self.check_dim(u)?;
        Ok(DVector::from_fn(self.order, |k, _| {
            let n = T::of((k + 1) as f64);
            -(n * u[k]).sin() / n.powi(3)
        }))
    }

    fn eval_hess(&self, u: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(u)?;
        let diag = DVector::from_fn(self.order, |k, _| {
            let n = T::of((k + 1) as f64);
            -(n * u[k]).cos() / n.powi(2)
        });
        Ok(DMatrix::from_diagonal(&diag))
    }

    fn h_gram(&self, ubar: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(ubar)?;
        Ok(DMatrix::identity(self.order, self.order))
    }
}

/// Convenience constructor mirroring the operation vocabulary.
pub fn build_truncated(order: usize) -> Result<TruncatedSequenceFunctional> {
    TruncatedSequenceFunctional::new(order)
}
