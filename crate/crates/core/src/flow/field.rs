//! The negative gradient-like vector field: exactly linear near critical
//! points, metric steepest descent in the far field, smoothly blended in
//! between.

use nalgebra::{Cholesky, DVector, Dyn};

use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::nondeg::HyperbolicOperator;
use crate::scalar::Real;

/// Smooth cutoff used to blend the linear and far fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlendProfile {
    /// `t^2 (3 - 2t)`, C1.
    Cubic,
    /// `t^3 (10 - 15t + 6t^2)`, C2.
    Quintic,
    /// Exponential bump quotient, C-infinity.
    Exp,
}

impl BlendProfile {
    fn chi<T: Real>(self, t: T) -> T {
        let t = t.max(T::zero()).min(T::one());
        match self {
            BlendProfile::Cubic => t * t * (T::of(3.0) - T::of(2.0) * t),
            BlendProfile::Quintic => {
                t * t * t * (T::of(10.0) - T::of(15.0) * t + T::of(6.0) * t * t)
            }
            BlendProfile::Exp => {
                let f = |x: T| {
                    if x <= T::zero() {
                        T::zero()
                    } else {
                        (-(T::one() / x)).exp()
                    }
                };
                let a = f(t);
                let b = f(T::one() - t);
                a / (a + b)
            }
        }
    }
}

/// One critical point with its linearization data.
#[derive(Clone)]
pub struct FlowNode<T: Real> {
    pub id: usize,
    pub center: DVector<T>,
    pub operator: HyperbolicOperator<T>,
    pub morse_index: usize,
    /// Neighborhood radius: the field is exactly linear inside `radius / 2`.
    pub radius: T,
}

/// Options for field construction.
#[derive(Clone, Copy, Debug)]
pub struct FieldOptions<T> {
    /// Cap on neighborhood radii.
    pub max_radius: T,
    pub blend: BlendProfile,
}

impl<T: Real> Default for FieldOptions<T> {
    fn default() -> Self {
        Self {
            max_radius: T::of(0.5),
            blend: BlendProfile::Quintic,
        }
    }
}

/// The assembled field.
pub struct FlowField<'a, T: Real> {
    pub functional: &'a dyn Functional<T>,
    pub nodes: Vec<FlowNode<T>>,
    pub blend: BlendProfile,
    /// Cholesky factor of the fixed weak metric used for the far field.
    gram_chol: Option<Cholesky<T, Dyn>>,
}

/// Builds the gradient-like field from classified critical points. The far
/// field descends in the weak metric anchored at the lowest critical point;
/// neighborhood radii are shrunk until pairwise disjoint.
pub fn gradient_like_field<'a, T: Real>(
    f: &'a dyn Functional<T>,
    crits: &[(CriticalPoint<T>, HyperbolicOperator<T>)],
    opts: &FieldOptions<T>,
) -> Result<FlowField<'a, T>> {
    let mut nodes: Vec<FlowNode<T>> = Vec::with_capacity(crits.len());
    for (cp, op) in crits {
        if op.dim() != f.dim() {
            return Err(Error::InvalidInput("operator dimension mismatch".into()));
        }
        let mut radius = opts.max_radius;
        for (other, _) in crits {
            let d = (&other.coefficients - &cp.coefficients).norm();
            if d > T::of(1e-12) {
                let quarter = d * T::of(0.25);
                if quarter < radius {
                    radius = quarter;
                }
            }
        }
        nodes.push(FlowNode {
            id: cp.id,
            center: cp.coefficients.clone(),
            operator: op.clone(),
            morse_index: cp.morse_index.unwrap_or(0),
            radius,
        });
    }
    // Shrink until neighborhoods are pairwise disjoint (ten attempts).
    let mut attempts = 0;
    loop {
        let mut overlap = false;
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                let d = (&nodes[i].center - &nodes[j].center).norm();
                if nodes[i].radius + nodes[j].radius >= d {
                    overlap = true;
                }
            }
        }
        if !overlap {
            break;
        }
        attempts += 1;
        if attempts > 10 {
            return Err(Error::FlowConstruction(
                "neighborhoods still overlap after 10 shrinks".into(),
            ));
        }
        for n in &mut nodes {
            n.radius *= T::of(0.5);
        }
    }
    // Fixed far-field metric: the weak Gram matrix at the lowest point.
    let gram_chol = nodes
        .iter()
        .min_by(|a, b| {
            let fa = f.eval_f(&a.center).unwrap_or_else(|_| T::zero());
            let fb = f.eval_f(&b.center).unwrap_or_else(|_| T::zero());
            fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .and_then(|n| f.h_gram(&n.center).ok())
        .and_then(Cholesky::new);
    Ok(FlowField {
        functional: f,
        nodes,
        blend: opts.blend,
        gram_chol,
    })
}

impl<'a, T: Real> FlowField<'a, T> {
    /// Weak-metric steepest descent `-B^{-1} df`. It satisfies the
    /// pseudo-gradient bound `df(z)[V(z)] = -|df(z)|_*^2` with constant one
    /// in the dual metric norm, and its linearization stays O(1) instead of
    /// inheriting the stiffness-scale spectrum of the raw gradient.
    fn far_field(&self, grad: &DVector<T>) -> DVector<T> {
        match &self.gram_chol {
            Some(chol) => -chol.solve(grad),
            None => -grad.clone(),
        }
    }

    /// The raw (un-normalized) field value.
    pub fn velocity(&self, x: &DVector<T>) -> Result<DVector<T>> {
        // Nearest node owns the point; neighborhoods are disjoint.
        let mut owner: Option<(&FlowNode<T>, T)> = None;
        for n in &self.nodes {
            let d = (x - &n.center).norm();
            if d < n.radius {
                match &owner {
                    Some((_, best)) if *best <= d => {}
                    _ => owner = Some((n, d)),
                }
            }
        }
        match owner {
            Some((n, d)) => {
                let h = x - &n.center;
                let linear = n.operator.apply(&h);
                let half = n.radius * T::of(0.5);
                if d < half {
                    Ok(linear)
                } else {
                    let t = (d - half) / half;
                    let chi = self.blend.chi(t);
                    let grad = self.functional.eval_grad(x)?;
                    let far = self.far_field(&grad);
                    Ok(linear * (T::one() - chi) + far * chi)
                }
            }
            None => {
                let grad = self.functional.eval_grad(x)?;
                Ok(self.far_field(&grad))
            }
        }
    }

    /// The bounded field `V / sqrt(1 + |V|^2)` that trajectories integrate.
    pub fn normalized_velocity(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let v = self.velocity(x)?;
        let scale = (T::one() + v.norm_squared()).sqrt();
        Ok(v / scale)
    }

    pub fn node(&self, id: usize) -> Option<&FlowNode<T>> {
        self.nodes.iter().find(|n| n.id == id)
    }
}
