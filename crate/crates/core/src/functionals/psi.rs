//! Gradient-part integrands: the map `xi -> Psi(xi)` with first and second
//! derivatives, plus the convexity-sandwich constants that pin it between
//! scaled copies of the reference integrand.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scalar::Real;

/// Value, gradient and Hessian of `Psi` at a point, fixed spatial dimension.
#[derive(Clone, Debug)]
pub struct PsiJet<T: Real, const D: usize> {
    pub value: T,
    pub gradient: SVector<T, D>,
    pub hessian: SMatrix<T, D, D>,
}

/// Evaluator of a scalar quantity at a gradient point.
pub type ScalarFn<T> = Box<dyn Fn(&[T]) -> T + Send + Sync>;
/// Evaluator of a vector/matrix quantity (row-major) at a gradient point.
pub type ArrayFn<T> = Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Closure bundle backing the `custom` kind.
pub struct CustomPsi<T: Real> {
    pub value: ScalarFn<T>,
    pub gradient: ArrayFn<T>,
    pub hessian: ArrayFn<T>,
}

enum PsiKind<T: Real> {
    /// `(1/p) [ (kappa^2 + |xi|^2)^{p/2} - kappa^p ]`.
    AreaKappa,
    /// `|xi|^p / p + |xi|^2 / 2`.
    PPowerPlusQuadratic,
    /// Caller-supplied evaluators (row-major Hessian).
    Custom(CustomPsi<T>),
}

/// The integrand of the gradient part of the energy, with its convexity
/// sandwich constants `0 < mu1 <= mu2` relative to the reference integrand.
pub struct PsiModel<T: Real> {
    kind: PsiKind<T>,
    /// Growth exponent, strictly greater than 2.
    pub p: T,
    /// Regularization parameter of the reference integrand.
    pub kappa: T,
    pub mu1: T,
    pub mu2: T,
}

impl<T: Real> PsiModel<T> {
    /// Reference integrand `Psi_kappa` itself; sandwich constants are 1.
    pub fn area_kappa(p: T, kappa: T) -> Result<Self> {
        let m = Self {
            kind: PsiKind::AreaKappa,
            p,
            kappa,
            mu1: T::one(),
            mu2: T::one(),
        };
        m.validate_params()?;
        Ok(m)
    }

    /// `|xi|^p/p + |xi|^2/2`, the solitary-wave integrand. The sandwich
    /// constants are declared by the caller (they depend on `p`).
    pub fn p_power_plus_quadratic(p: T, mu1: T, mu2: T) -> Result<Self> {
        let m = Self {
            kind: PsiKind::PPowerPlusQuadratic,
            p,
            kappa: T::one(),
            mu1,
            mu2,
        };
        m.validate_params()?;
        Ok(m)
    }

    /// Caller-supplied integrand with declared constants.
    pub fn custom(custom: CustomPsi<T>, p: T, kappa: T, mu1: T, mu2: T) -> Result<Self> {
        let m = Self {
            kind: PsiKind::Custom(custom),
            p,
            kappa,
            mu1,
            mu2,
        };
        m.validate_params()?;
        Ok(m)
    }

    fn validate_params(&self) -> Result<()> {
        if self.p <= T::of(2.0) {
            return Err(Error::InvalidInput(format!(
                "exponent p must satisfy p > 2, got {:e}",
                self.p.to_f64_lossy()
            )));
        }
        if self.kappa <= T::zero() {
            return Err(Error::InvalidInput("kappa must be positive".into()));
        }
        if self.mu1 <= T::zero() || self.mu1 > self.mu2 {
            return Err(Error::InvalidInput(
                "sandwich constants must satisfy 0 < mu1 <= mu2".into(),
            ));
        }
        Ok(())
    }

    /// Value, gradient and Hessian at `xi`.
    pub fn jet<const D: usize>(&self, xi: &SVector<T, D>) -> Result<PsiJet<T, D>> {
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite xi".into()));
        }
        Ok(match &self.kind {
            PsiKind::AreaKappa => area_kappa_jet(self.p, self.kappa, xi),
            PsiKind::PPowerPlusQuadratic => p_quad_jet(self.p, xi),
            PsiKind::Custom(c) => {
                let coords: Vec<T> = xi.iter().copied().collect();
                let g = (c.gradient)(&coords);
                let h = (c.hessian)(&coords);
                PsiJet {
                    value: (c.value)(&coords),
                    gradient: SVector::from_fn(|i, _| g[i]),
                    hessian: SMatrix::from_fn(|i, j| h[i * D + j]),
                }
            }
        })
    }

    /// Jet of the reference integrand `Psi_kappa` with this model's `p`, `kappa`.
    pub fn reference_jet<const D: usize>(&self, xi: &SVector<T, D>) -> PsiJet<T, D> {
        area_kappa_jet(self.p, self.kappa, xi)
    }

    /// Checks the structural requirements on sampled points: `Psi(0) = 0`,
    /// `grad Psi(0) = 0`, and the Hessian sandwich
    /// `mu1 Psi_kappa'' <= Psi'' <= mu2 Psi_kappa''` as quadratic forms.
    pub fn validate_sampled<const D: usize>(&self, seed: u64, samples: usize) -> Result<()> {
        let origin = self.jet(&SVector::<T, D>::zeros())?;
        let tol = T::of(1e-12);
        if origin.value.abs() > tol || origin.gradient.norm() > tol {
            return Err(Error::InvalidInput(
                "integrand must vanish to first order at the origin".into(),
            ));
        }
        let mut rng = substream(seed, "psi/sandwich");
        let slack = T::of(-1e-10);
        for k in 0..samples {
            let scale = T::of(10.0f64.powi((k % 5) as i32 - 2));
            let xi = crate::linalg::random_unit_vector::<T, _>(D, &mut rng).map(|x| x * scale);
            let xi = SVector::<T, D>::from_fn(|i, _| xi[i]);
            let jet = self.jet(&xi)?;
            let reference = self.reference_jet(&xi);
            let lower = jet.hessian - reference.hessian * self.mu1;
            let upper = reference.hessian * self.mu2 - jet.hessian;
            for (name, m) in [("mu1", lower), ("mu2", upper)] {
                let dynm = DMatrix::from_fn(D, D, |i, j| m[(i, j)]);
                let min_eig = dynm
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a });
                if min_eig < slack {
                    return Err(Error::InvalidInput(format!(
                        "convexity sandwich ({name}) violated at |xi| = {:e}: eigenvalue {:e}",
                        scale.to_f64_lossy(),
                        min_eig.to_f64_lossy()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn area_kappa_jet<T: Real, const D: usize>(p: T, kappa: T, xi: &SVector<T, D>) -> PsiJet<T, D> {
    let two = T::of(2.0);
    let s = kappa * kappa + xi.norm_squared();
    let value = (s.powf(p / two) - kappa.powf(p)) / p;
    let a = s.powf((p - two) / two);
    let b = (p - two) * s.powf((p - two * two) / two);
    let gradient = xi * a;
    let hessian = SMatrix::<T, D, D>::identity() * a + xi * xi.transpose() * b;
    PsiJet {
        value,
        gradient,
        hessian,
    }
}

fn p_quad_jet<T: Real, const D: usize>(p: T, xi: &SVector<T, D>) -> PsiJet<T, D> {
    let two = T::of(2.0);
    let r2 = xi.norm_squared();
    let half = T::of(0.5);
    let value = r2.powf(p / two) / p + r2 * half;
    if r2 == T::zero() {
        // Limits for p > 2: the power part vanishes to second order.
        return PsiJet {
            value: T::zero(),
            gradient: SVector::zeros(),
            hessian: SMatrix::identity(),
        };
    }
    let a = r2.powf((p - two) / two);
    let b = (p - two) * r2.powf((p - two * two) / two);
    let gradient = xi * (a + T::one());
    let hessian = SMatrix::<T, D, D>::identity() * (a + T::one()) + xi * xi.transpose() * b;
    PsiJet {
        value,
        gradient,
        hessian,
    }
}

/// Dynamic-dimension wrapper around [`PsiModel::jet`] for 1D/2D points.
pub fn psi_derivatives<T: Real>(
    model: &PsiModel<T>,
    xi: &[T],
) -> Result<(T, DVector<T>, DMatrix<T>)> {
    match xi.len() {
        1 => {
            let jet = model.jet(&SVector::<T, 1>::new(xi[0]))?;
            Ok((
                jet.value,
                DVector::from_row_slice(jet.gradient.as_slice()),
                DMatrix::from_row_slice(1, 1, jet.hessian.as_slice()),
            ))
        }
        2 => {
            let jet = model.jet(&SVector::<T, 2>::new(xi[0], xi[1]))?;
            let mut h = DMatrix::zeros(2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    h[(i, j)] = jet.hessian[(i, j)];
                }
            }
            Ok((
                jet.value,
                DVector::from_iterator(2, jet.gradient.iter().copied()),
                h,
            ))
        }
        d => Err(Error::InvalidInput(format!(
            "unsupported spatial dimension {d}"
        ))),
    }
}
