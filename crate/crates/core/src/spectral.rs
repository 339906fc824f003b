//! Spectral splitting of the second differential relative to the weak metric:
//! generalized eigendecomposition, Morse index, injectivity margin, and the
//! accumulation-at-one diagnostic.

use nalgebra::{DMatrix, DVector};

use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::linalg::generalized_symmetric_eigen;
use crate::scalar::Real;

/// Options for the eigensplitting.
#[derive(Clone, Copy, Debug)]
pub struct SplitOptions<T> {
    /// Relative threshold (times `max |mu|`) below which an eigenvalue counts
    /// as zero.
    pub zero_tol_rel: T,
}

impl<T: Real> Default for SplitOptions<T> {
    fn default() -> Self {
        Self {
            zero_tol_rel: T::of(1e-6),
        }
    }
}

/// Eigensplitting of the Hessian pencil `(A, Hgram)` at a critical point.
#[derive(Clone, Debug)]
pub struct Splitting<T: Real> {
    /// Generalized eigenvalues, ascending.
    pub eigenvalues: DVector<T>,
    /// H-orthonormal eigenvectors as columns, same order.
    pub eigenvectors: DMatrix<T>,
    /// Count of eigenvalues below `-zero_tol`.
    pub morse_index: usize,
    /// Count of eigenvalues within `zero_tol` of zero.
    pub null_count: usize,
    /// H-orthogonal projector onto the negative eigenspace.
    pub projector_minus: DMatrix<T>,
    /// H-orthogonal projector onto the positive eigenspace.
    pub projector_plus: DMatrix<T>,
    /// Absolute zero threshold used for the counts.
    pub zero_tol: T,
    /// The metric Gram matrix the decomposition is orthonormal against.
    pub gram: DMatrix<T>,
}

impl<T: Real> Splitting<T> {
    /// Co-index at the discrete level (informational).
    pub fn co_index(&self) -> usize {
        self.eigenvalues.len() - self.morse_index - self.null_count
    }

    pub fn is_degenerate(&self) -> bool {
        self.null_count > 0
    }

    /// Smallest absolute eigenvalue: the margin to non-injectivity.
    pub fn injectivity_margin(&self) -> T {
        self.eigenvalues
            .iter()
            .map(|m| m.abs())
            .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a })
    }

    /// Smallest eigenvalue strictly above the zero threshold, if any.
    pub fn smallest_positive(&self) -> Option<T> {
        self.eigenvalues
            .iter()
            .copied()
            .find(|&m| m > self.zero_tol)
    }

    /// H-orthonormal basis of the negative eigenspace (columns).
    pub fn minus_basis(&self) -> DMatrix<T> {
        self.eigenvectors.columns(0, self.morse_index).into_owned()
    }

    /// H-orthonormal basis of the positive eigenspace (columns).
    pub fn plus_basis(&self) -> DMatrix<T> {
        let start = self.morse_index + self.null_count;
        self.eigenvectors
            .columns(start, self.eigenvalues.len() - start)
            .into_owned()
    }

    /// Eigenvalues restricted to the positive eigenspace.
    pub fn plus_eigenvalues(&self) -> Vec<T> {
        let start = self.morse_index + self.null_count;
        self.eigenvalues.iter().skip(start).copied().collect()
    }

    /// Reinterprets near-zero modes as positive directions, producing a
    /// *claimed* hyperbolic splitting with `null_count = 0`. The claim is not
    /// certified; it exists so the non-degeneracy criterion can falsify it.
    pub fn claim_nulls_positive(mut self) -> Self {
        self.null_count = 0;
        let (pm, pp) = projectors(&self.eigenvectors, &self.gram, self.morse_index, 0);
        self.projector_minus = pm;
        self.projector_plus = pp;
        self
    }

    fn near_zero_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .filter(|m| m.abs() <= self.zero_tol)
            .map(|m| m.to_f64_lossy())
            .collect()
    }

    /// Error naming the near-zero eigenvalues, for refusal paths.
    pub fn degenerate_error(&self) -> Error {
        Error::Degenerate {
            near_zero: self.near_zero_eigenvalues(),
        }
    }
}

fn projectors<T: Real>(
    vectors: &DMatrix<T>,
    gram: &DMatrix<T>,
    morse_index: usize,
    null_count: usize,
) -> (DMatrix<T>, DMatrix<T>) {
    let minus = vectors.columns(0, morse_index);
    let start = morse_index + null_count;
    let plus = vectors.columns(start, vectors.ncols() - start);
    let pm = minus * minus.transpose() * gram;
    let pp = plus * plus.transpose() * gram;
    (pm, pp)
}

/// Full generalized symmetric eigendecomposition of the Hessian at a critical
/// point relative to the weak metric.
pub fn splitting_with<T: Real>(
    f: &dyn Functional<T>,
    cp: &CriticalPoint<T>,
    opts: &SplitOptions<T>,
) -> Result<Splitting<T>> {
    let a = f.eval_hess(&cp.coefficients)?;
    let gram = f.h_gram(&cp.coefficients)?;
    let ge = generalized_symmetric_eigen(&a, &gram)?;
    let max_abs = ge
        .values
        .iter()
        .map(|m| m.abs())
        .fold(T::zero(), |x, y| if y > x { y } else { x });
    let zero_tol = opts.zero_tol_rel
        * if max_abs > T::zero() {
            max_abs
        } else {
            T::one()
        };
    let morse_index = ge.values.iter().filter(|&&m| m < -zero_tol).count();
    let null_count = ge.values.iter().filter(|m| m.abs() <= zero_tol).count();
    let (projector_minus, projector_plus) = projectors(&ge.vectors, &gram, morse_index, null_count);
    Ok(Splitting {
        eigenvalues: ge.values,
        eigenvectors: ge.vectors,
        morse_index,
        null_count,
        projector_minus,
        projector_plus,
        zero_tol,
        gram,
    })
}

/// [`splitting_with`] under default options.
pub fn splitting<T: Real>(f: &dyn Functional<T>, cp: &CriticalPoint<T>) -> Result<Splitting<T>> {
    splitting_with(f, cp, &SplitOptions::default())
}

/// Morse index of a splitting.
pub fn morse_index<T: Real>(s: &Splitting<T>) -> usize {
    s.morse_index
}

/// Injectivity margin of a splitting.
pub fn injectivity_margin<T: Real>(s: &Splitting<T>) -> T {
    s.injectivity_margin()
}

/// Fraction of eigenvalues within `window` of one: the compact-perturbation
/// diagnostic (the continuum spectrum accumulates at one).
pub fn accumulation_check<T: Real>(s: &Splitting<T>, window: T) -> T {
    let n = s.eigenvalues.len();
    if n == 0 {
        return T::zero();
    }
    let close = s
        .eigenvalues
        .iter()
        .filter(|&&m| (m - T::one()).abs() < window)
        .count();
    T::of(close as f64) / T::of(n as f64)
}
