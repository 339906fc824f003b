//! Dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Result of the generalized symmetric eigenproblem `A x = mu B x`.
pub struct GeneralizedEigen<T: Real> {
    /// Eigenvalues sorted ascending.
    pub values: DVector<T>,
    /// Matching eigenvectors as columns, B-orthonormal (`x_i' B x_j = delta_ij`).
    pub vectors: DMatrix<T>,
}

/// Solves `A x = mu B x` for symmetric `A` and symmetric positive definite `B`
/// by reduction through the Cholesky factor of `B`.
pub fn generalized_symmetric_eigen<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
) -> Result<GeneralizedEigen<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "eigenproblem shape mismatch: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let chol = nalgebra::Cholesky::new(b.clone()).ok_or_else(|| Error::Assembly {
        reason: "metric Gram matrix is not positive definite".into(),
        smallest_eig: smallest_symmetric_eigenvalue(b),
    })?;
    let l = chol.l();
    // C = L^-1 A L^-T, restored to exact symmetry before the eigensolve.
    let mut c = l.solve_lower_triangular(a).ok_or_else(|| {
        Error::Numerical("singular Cholesky factor in generalized eigensolve".into())
    })?;
    c.transpose_mut();
    let mut c = l.solve_lower_triangular(&c).ok_or_else(|| {
        Error::Numerical("singular Cholesky factor in generalized eigensolve".into())
    })?;
    symmetrize(&mut c);
    let eig = c.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("finite eigenvalues")
    });
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    let lt = l.transpose();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let y = eig.eigenvectors.column(src).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Numerical("back-substitution failure in eigensolve".into()))?;
        vectors.set_column(dst, &x);
    }
    Ok(GeneralizedEigen { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix, reported as `f64` for diagnostics.
pub fn smallest_symmetric_eigenvalue<T: Real>(m: &DMatrix<T>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .map(|v| v.to_f64_lossy())
        .fold(f64::INFINITY, f64::min)
}

/// Replaces `m` by its symmetric part `(m + m')/2`.
pub fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let half = T::of(0.5);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let s = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

/// Euclidean-orthonormalizes the columns of `basis` by modified Gram-Schmidt.
pub fn orthonormalize_columns<T: Real>(basis: &mut DMatrix<T>) {
    let cols = basis.ncols();
    for j in 0..cols {
        for i in 0..j {
            let proj = basis.column(i).dot(&basis.column(j));
            let vi = basis.column(i).into_owned();
            let mut vj = basis.column_mut(j);
            vj.axpy(-proj, &vi, T::one());
        }
        let norm = basis.column(j).norm();
        if norm > T::zero() {
            basis.column_mut(j).scale_mut(T::one() / norm);
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Computed by Newton iteration on the Legendre recurrence in `f64`, then
/// converted to the working scalar; exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "quadrature rule needs at least one point");
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence.
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (
        nodes.iter().map(|&x| T::of(x)).collect(),
        weights.iter().map(|&w| T::of(w)).collect(),
    )
}

/// Draws a vector uniformly distributed on the unit sphere of dimension `n`.
pub fn random_unit_vector<T: Real, R: rand::Rng>(n: usize, rng: &mut R) -> DVector<T> {
    use rand_distr::StandardNormal;
    loop {
        let v = DVector::from_fn(n, |_, _| {
            let g: f64 = rng.sample(StandardNormal);
            T::of(g)
        });
        let norm = v.norm();
        if norm > T::of(1e-12) {
            return v / norm;
        }
    }
}
