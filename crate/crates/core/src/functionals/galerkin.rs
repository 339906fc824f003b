//! Galerkin discretization of `f(u) = int Psi(grad u) - int G(x, u)` on a P1
//! mesh with homogeneous Dirichlet boundary.

use nalgebra::{DMatrix, DVector, SVector};

use crate::error::{Error, Result};
use crate::linalg::{smallest_symmetric_eigenvalue, symmetrize};
use crate::scalar::Real;

use super::mesh::{Element, Mesh};
use super::{critical_exponent_c2, sobolev_conjugate, Backend, Functional, GModel, PsiModel};

/// The discrete energy functional on mesh coefficients (interior nodes only).
pub struct GalerkinFunctional<T: Real> {
    psi: PsiModel<T>,
    g: GModel<T>,
    mesh: Mesh<T>,
}

impl<T: Real> GalerkinFunctional<T> {
    /// Assembles the evaluatable objective. Fails on meshes without interior
    /// nodes.
    pub fn assemble(psi: PsiModel<T>, g: GModel<T>, mesh: Mesh<T>) -> Result<Self> {
        mesh.validate()?;
        if mesh.dofs() == 0 {
            return Err(Error::EmptySpace);
        }
        Ok(Self { psi, g, mesh })
    }

    pub fn psi(&self) -> &PsiModel<T> {
        &self.psi
    }

    pub fn g_model(&self) -> &GModel<T> {
        &self.g
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    /// Nodal interpolation of a function of the space variable onto the
    /// interior degrees of freedom.
    pub fn interpolate(&self, f: impl Fn(&[T]) -> T) -> DVector<T> {
        DVector::from_iterator(
            self.mesh.interior.len(),
            self.mesh.interior.iter().map(|&n| f(&self.mesh.nodes[n])),
        )
    }

    fn with_jets<R>(
        &self,
        u: &DVector<T>,
        mut per_element: impl FnMut(&Element<T>, &ElementJet<T>) -> R,
    ) -> Result<Vec<R>> {
        let mut out = Vec::with_capacity(self.mesh.elements.len());
        for e in &self.mesh.elements {
            let jet = element_jet(&self.psi, e, u)?;
            out.push(per_element(e, &jet));
        }
        Ok(out)
    }
}

/// Psi evaluated at the (constant) element gradient.
struct ElementJet<T> {
    value: T,
    gradient: Vec<T>,
    hessian: Vec<T>, // row-major dim x dim
}

/// Constant gradient of the P1 interpolant on an element.
pub fn element_gradient<T: Real>(e: &Element<T>, u: &DVector<T>) -> Vec<T> {
    let dim = e.grad_basis[0].len();
    let mut g = vec![T::zero(); dim];
    for (local, dof) in e.dofs.iter().enumerate() {
        if let Some(d) = dof {
            for k in 0..dim {
                g[k] += u[*d] * e.grad_basis[local][k];
            }
        }
    }
    g
}

/// Value of the P1 interpolant at quadrature point `qi`.
pub fn element_value<T: Real>(e: &Element<T>, u: &DVector<T>, qi: usize) -> T {
    let mut v = T::zero();
    for (local, dof) in e.dofs.iter().enumerate() {
        if let Some(d) = dof {
            v += u[*d] * e.basis_at[qi][local];
        }
    }
    v
}

fn element_jet<T: Real>(
    psi: &PsiModel<T>,
    e: &Element<T>,
    u: &DVector<T>,
) -> Result<ElementJet<T>> {
    let g = element_gradient(e, u);
    match g.len() {
        1 => {
            let jet = psi.jet(&SVector::<T, 1>::new(g[0]))?;
            Ok(ElementJet {
                value: jet.value,
                gradient: vec![jet.gradient[0]],
                hessian: vec![jet.hessian[(0, 0)]],
            })
        }
        2 => {
            let jet = psi.jet(&SVector::<T, 2>::new(g[0], g[1]))?;
            Ok(ElementJet {
                value: jet.value,
                gradient: vec![jet.gradient[0], jet.gradient[1]],
                hessian: vec![
                    jet.hessian[(0, 0)],
                    jet.hessian[(0, 1)],
                    jet.hessian[(1, 0)],
                    jet.hessian[(1, 1)],
                ],
            })
        }
        d => Err(Error::InvalidInput(format!("unsupported dimension {d}"))),
    }
}

fn hess_apply<T: Real>(h: &[T], dim: usize, v: &[T]) -> Vec<T> {
    (0..dim)
        .map(|i| (0..dim).fold(T::zero(), |acc, j| acc + h[i * dim + j] * v[j]))
        .collect()
}

impl<T: Real> Functional<T> for GalerkinFunctional<T> {
    fn dim(&self) -> usize {
        self.mesh.dofs()
    }

    fn backend(&self) -> Backend {
        Backend::Galerkin
    }

    fn eval_f(&self, u: &DVector<T>) -> Result<T> {
        self.check_dim(u)?;
        let parts = self.with_jets(u, |e, jet| {
            let mut acc = jet.value * e.measure;
            for (qi, w) in e.quad_weights.iter().enumerate() {
                let uq = element_value(e, u, qi);
                acc -= *w * self.g.antiderivative(&e.quad_points[qi], uq);
            }
            acc
        })?;
        Ok(parts.into_iter().fold(T::zero(), |a, b| a + b))
    }

    fn eval_grad(&self, u: &DVector<T>) -> Result<DVector<T>> {
        self.check_dim(u)?;
        let mut grad = DVector::zeros(self.dim());
        self.with_jets(u, |e, jet| {
            let dim = e.grad_basis[0].len();
            for (local, dof) in e.dofs.iter().enumerate() {
                let Some(d) = dof else { continue };
                let mut dot = T::zero();
                for k in 0..dim {
                    dot += jet.gradient[k] * e.grad_basis[local][k];
                }
                grad[*d] += dot * e.measure;
                for (qi, w) in e.quad_weights.iter().enumerate() {
                    let uq = element_value(e, u, qi);
                    grad[*d] -= *w * self.g.g(&e.quad_points[qi], uq) * e.basis_at[qi][local];
                }
            }
        })?;
        Ok(grad)
    }

    fn eval_hess(&self, u: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(u)?;
        let n = self.dim();
        let mut hess = DMatrix::zeros(n, n);
        self.with_jets(u, |e, jet| {
            let dim = e.grad_basis[0].len();
            let n_local = e.dofs.len();
            for a in 0..n_local {
                let Some(da) = e.dofs[a] else { continue };
                let ha = hess_apply(&jet.hessian, dim, &e.grad_basis[a]);
                for b in a..n_local {
                    let Some(db) = e.dofs[b] else { continue };
                    let mut entry = T::zero();
                    for k in 0..dim {
                        entry += ha[k] * e.grad_basis[b][k];
                    }
                    entry *= e.measure;
                    for (qi, w) in e.quad_weights.iter().enumerate() {
                        let uq = element_value(e, u, qi);
                        entry -= *w
                            * self.g.dg_ds(&e.quad_points[qi], uq)
                            * e.basis_at[qi][a]
                            * e.basis_at[qi][b];
                    }
                    hess[(da, db)] += entry;
                    if da != db {
                        hess[(db, da)] += entry;
                    }
                }
            }
        })?;
        symmetrize(&mut hess);
        Ok(hess)
    }

    fn h_gram(&self, ubar: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(ubar)?;
        let n = self.dim();
        let mut gram = DMatrix::zeros(n, n);
        self.with_jets(ubar, |e, jet| {
            let dim = e.grad_basis[0].len();
            let n_local = e.dofs.len();
            for a in 0..n_local {
                let Some(da) = e.dofs[a] else { continue };
                let ha = hess_apply(&jet.hessian, dim, &e.grad_basis[a]);
                for b in a..n_local {
                    let Some(db) = e.dofs[b] else { continue };
                    let mut entry = T::zero();
                    for k in 0..dim {
                        entry += ha[k] * e.grad_basis[b][k];
                    }
                    entry *= e.measure;
                    gram[(da, db)] += entry;
                    if da != db {
                        gram[(db, da)] += entry;
                    }
                }
            }
        })?;
        symmetrize(&mut gram);
        let smallest = smallest_symmetric_eigenvalue(&gram);
        if smallest <= 0.0 {
            return Err(Error::Assembly {
                reason: "weak-metric Gram matrix not positive definite".into(),
                smallest_eig: smallest,
            });
        }
        Ok(gram)
    }

    fn sobolev_conjugate(&self) -> Option<T> {
        sobolev_conjugate(self.psi.p, self.mesh.dim)
    }

    fn critical_exponent_c2(&self) -> Option<T> {
        critical_exponent_c2(self.psi.p, self.mesh.dim)
    }
}

/// Independently assembled Dirichlet stiffness matrix (`int grad v . grad w`),
/// used by tests as the reference for `h_gram` at zero with `kappa = 1`.
pub fn dirichlet_stiffness<T: Real>(mesh: &Mesh<T>) -> DMatrix<T> {
    let n = mesh.dofs();
    let mut k = DMatrix::zeros(n, n);
    for e in &mesh.elements {
        let dim = e.grad_basis[0].len();
        for (a, da) in e.dofs.iter().enumerate() {
            let Some(da) = da else { continue };
            for (b, db) in e.dofs.iter().enumerate() {
                let Some(db) = db else { continue };
                let mut dot = T::zero();
                for kk in 0..dim {
                    dot += e.grad_basis[a][kk] * e.grad_basis[b][kk];
                }
                k[(*da, *db)] += dot * e.measure;
            }
        }
    }
    k
}

/// Independently assembled mass matrix (`int v w`).
pub fn mass_matrix<T: Real>(mesh: &Mesh<T>) -> DMatrix<T> {
    let n = mesh.dofs();
    let mut m = DMatrix::zeros(n, n);
    for e in &mesh.elements {
        for (a, da) in e.dofs.iter().enumerate() {
            let Some(da) = da else { continue };
            for (b, db) in e.dofs.iter().enumerate() {
                let Some(db) = db else { continue };
                for (qi, w) in e.quad_weights.iter().enumerate() {
                    m[(*da, *db)] += *w * e.basis_at[qi][a] * e.basis_at[qi][b];
                }
            }
        }
    }
    m
}
