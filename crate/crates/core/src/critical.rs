//! Critical-point location: damped Newton iteration on the gradient with
//! deflation against already-found points.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::scalar::Real;

/// A stationary coefficient vector accepted at the solver tolerance.
#[derive(Clone, Debug)]
pub struct CriticalPoint<T: Real> {
    pub id: usize,
    pub coefficients: DVector<T>,
    pub value: T,
    /// Gradient norm at acceptance.
    pub residual: T,
    /// Filled by the spectral stage.
    pub morse_index: Option<usize>,
    /// Newton iterations spent.
    pub iterations: usize,
}

/// Options for the damped Newton iteration.
#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Armijo contraction factor.
    pub contraction: T,
    pub max_backtracks: usize,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-10),
            max_iter: 100,
            contraction: T::of(0.5),
            max_backtracks: 30,
        }
    }
}

/// Merge radius below which two points are considered the same root.
pub fn merge_radius<T: Real>(u: &DVector<T>) -> T {
    T::of(1e-6) * (T::one() + u.norm())
}

/// Deflation factor `prod_k (1 / |u - ubar_k| + 1)` and the coefficient of
/// its logarithmic gradient, used to rescale the Newton step.
fn deflation<T: Real>(u: &DVector<T>, known: &[DVector<T>]) -> (T, DVector<T>) {
    let n = u.len();
    let mut m = T::one();
    let mut grad_log = DVector::zeros(n);
    for k in known {
        let d = u - k;
        let r = d.norm();
        if r <= T::of(1e-14) {
            // On top of a known root: enormous deflation, flat direction.
            return (T::of(1e28), DVector::zeros(n));
        }
        let mk = T::one() / r + T::one();
        m *= mk;
        // grad m_k / m_k = -d / (r^3 m_k)
        grad_log.axpy(-(T::one() / (r * r * r * mk)), &d, T::one());
    }
    (m, grad_log)
}

fn deflated_residual_norm<T: Real>(
    f: &dyn Functional<T>,
    u: &DVector<T>,
    known: &[DVector<T>],
) -> Result<T> {
    let g = f.eval_grad(u)?;
    let (m, _) = deflation(u, known);
    Ok(g.norm() * m)
}

/// Damped Newton iteration on the gradient, optionally deflated against a set
/// of known roots. Accepts when the *plain* gradient norm drops below `tol`
/// away from every known root.
fn newton_core<T: Real>(
    f: &dyn Functional<T>,
    u0: &DVector<T>,
    opts: &NewtonOptions<T>,
    known: &[DVector<T>],
) -> Result<(DVector<T>, usize)> {
    f.check_dim(u0)?;
    if opts.tol <= T::zero() {
        return Err(Error::InvalidInput(
            "newton tolerance must be positive".into(),
        ));
    }
    let mut u = u0.clone();
    for iter in 0..opts.max_iter {
        let grad = f.eval_grad(&u)?;
        let gnorm = grad.norm();
        let clear_of_known = known.iter().all(|k| (&u - k).norm() > merge_radius(k));
        if gnorm <= opts.tol && (known.is_empty() || clear_of_known) {
            return Ok((u, iter));
        }
        let hess = f.eval_hess(&u)?;
        let newton_step = hess.lu().solve(&grad).map(|s| -s);
        let mut step = match newton_step {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            // Singular Newton system: steepest descent direction.
            _ => -grad.clone() * (T::one() / (T::one() + gnorm)),
        };
        if !known.is_empty() {
            // Deflated Newton step is the plain step scaled by
            // 1 / (1 - grad(log M) . step); guard the denominator.
            let (_, grad_log_m) = deflation(&u, known);
            let theta = grad_log_m.dot(&step);
            let denom = T::one() - theta;
            let tau = if denom > T::of(0.1) {
                T::one() / denom
            } else {
                T::of(10.0)
            };
            step *= tau;
        }
        // Armijo backtracking on the (deflated) residual norm squared.
        let merit0 = if known.is_empty() {
            gnorm
        } else {
            deflated_residual_norm(f, &u, known)?
        };
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..opts.max_backtracks {
            let trial = &u + &step * alpha;
            let merit = if known.is_empty() {
                f.eval_grad(&trial)?.norm()
            } else {
                deflated_residual_norm(f, &trial, known)?
            };
            if merit.is_finite()
                && merit * merit <= merit0 * merit0 * (T::one() - T::of(1e-4) * alpha)
            {
                u = trial;
                accepted = true;
                break;
            }
            alpha *= opts.contraction;
        }
        if !accepted {
            // Try a plain gradient step before giving up.
            let mut alpha = T::one() / (T::one() + gnorm);
            let mut moved = false;
            for _ in 0..opts.max_backtracks {
                let trial = &u - &grad * alpha;
                let merit = if known.is_empty() {
                    f.eval_grad(&trial)?.norm()
                } else {
                    deflated_residual_norm(f, &trial, known)?
                };
                if merit < merit0 {
                    u = trial;
                    moved = true;
                    break;
                }
                alpha *= opts.contraction;
            }
            if !moved {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: gnorm.to_f64_lossy(),
                    last: u.iter().map(|x| x.to_f64_lossy()).collect(),
                });
            }
        }
    }
    let residual = f.eval_grad(&u)?.norm();
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: residual.to_f64_lossy(),
        last: u.iter().map(|x| x.to_f64_lossy()).collect(),
    })
}

/// Refines a single starting point to a critical point at tolerance
/// `opts.tol` (no deflation).
pub fn newton_refine<T: Real>(
    f: &dyn Functional<T>,
    u0: &DVector<T>,
    opts: &NewtonOptions<T>,
) -> Result<CriticalPoint<T>> {
    let (u, iterations) = newton_core(f, u0, opts, &[])?;
    let residual = f.eval_grad(&u)?.norm();
    Ok(CriticalPoint {
        id: 0,
        value: f.eval_f(&u)?,
        residual,
        coefficients: u,
        morse_index: None,
        iterations,
    })
}

/// Runs deflated Newton from every seed, deduplicates by the merge radius,
/// re-verifies plain residuals post hoc, and orders the survivors by value.
pub fn deflated_search<T: Real>(
    f: &dyn Functional<T>,
    seeds: &[DVector<T>],
    opts: &NewtonOptions<T>,
) -> Result<Vec<CriticalPoint<T>>> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput(
            "deflated search needs at least one seed".into(),
        ));
    }
    let mut roots: Vec<DVector<T>> = Vec::new();
    let mut iteration_counts: Vec<usize> = Vec::new();
    for seed in seeds {
        // From each seed, keep mining until no further root is reachable
        // (capped so that near-continua of critical points terminate).
        for _ in 0..32 {
            match newton_core(f, seed, opts, &roots) {
                Ok((u, iters)) => {
                    let fresh = roots.iter().all(|r| (&u - r).norm() > merge_radius(r));
                    // Post-hoc re-check without deflation.
                    if fresh && f.eval_grad(&u)?.norm() <= opts.tol {
                        roots.push(u);
                        iteration_counts.push(iters);
                    } else {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
    }
    let mut points: Vec<CriticalPoint<T>> = Vec::with_capacity(roots.len());
    for (u, iterations) in roots.into_iter().zip(iteration_counts) {
        let residual = f.eval_grad(&u)?.norm();
        points.push(CriticalPoint {
            id: 0,
            value: f.eval_f(&u)?,
            residual,
            coefficients: u,
            morse_index: None,
            iterations,
        });
    }
    points.sort_by(|a, b| {
        // Values agreeing to solver precision tie-break lexicographically.
        let scale = T::one() + a.value.abs().max(b.value.abs());
        if (a.value - b.value).abs() <= T::of(1e-9) * scale {
            compare_lex(&a.coefficients, &b.coefficients)
        } else {
            a.value.partial_cmp(&b.value).unwrap()
        }
    });
    for (i, p) in points.iter_mut().enumerate() {
        p.id = i;
    }
    Ok(points)
}

fn compare_lex<T: Real>(a: &DVector<T>, b: &DVector<T>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::explicit::fixtures;
    use crate::functionals::{GModel, GalerkinFunctional, Mesh, PsiModel};
    use approx::assert_relative_eq;

    fn opts() -> NewtonOptions<f64> {
        NewtonOptions::default()
    }

    #[test]
    fn double_well_minimum_from_nearby_start() {
        let f = fixtures::double_well::<f64>();
        let cp = newton_refine(&f, &DVector::from_vec(vec![0.9, 0.1]), &opts()).unwrap();
        assert_relative_eq!(cp.coefficients[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(cp.coefficients[1], 0.0, epsilon = 1e-10);
        assert!(cp.residual <= 1e-10);
    }

    #[test]
    fn double_well_saddle_from_its_stable_side() {
        let f = fixtures::double_well::<f64>();
        let cp = newton_refine(&f, &DVector::from_vec(vec![0.01, 0.5]), &opts()).unwrap();
        assert!(
            cp.coefficients.norm() < 1e-8,
            "converged to {}",
            cp.coefficients
        );
        assert!(cp.residual <= 1e-10);
    }

    #[test]
    fn galerkin_zero_solution_found_from_small_start() {
        let psi = PsiModel::area_kappa(3.0, 1.0).unwrap();
        let mesh = Mesh::interval(0.0, 1.0, 16, 4).unwrap();
        let f = GalerkinFunctional::assemble(psi, GModel::linear(5.0), mesh).unwrap();
        let mut u0 = DVector::zeros(f.dim());
        for i in 0..u0.len() {
            u0[i] = 1e-3 * ((i * 7 % 5) as f64 - 2.0);
        }
        let cp = newton_refine(&f, &u0, &opts()).unwrap();
        assert!(cp.coefficients.norm() < 1e-9);
    }

    #[test]
    fn deflated_search_enumerates_double_well_points() {
        let f = fixtures::double_well::<f64>();
        let mut seeds = Vec::new();
        for i in -1..=1 {
            for j in -1..=1 {
                seeds.push(DVector::from_vec(vec![2.0 * i as f64, 2.0 * j as f64]));
            }
        }
        let points = deflated_search(&f, &seeds, &opts()).unwrap();
        assert_eq!(points.len(), 3);
        // Ordered by value: the two minima first, then the saddle.
        assert_relative_eq!(points[0].value, 0.0, epsilon = 1e-12);
        assert_relative_eq!(points[1].value, 0.0, epsilon = 1e-12);
        assert_relative_eq!(points[2].value, 1.0, epsilon = 1e-12);
        assert_relative_eq!(points[0].coefficients[0], -1.0, epsilon = 1e-8);
        assert_relative_eq!(points[1].coefficients[0], 1.0, epsilon = 1e-8);
        assert!(points[2].coefficients.norm() < 1e-8);
    }

    #[test]
    fn identical_seeds_are_idempotent() {
        let f = fixtures::double_well::<f64>();
        let seed = DVector::from_vec(vec![0.9, 0.2]);
        let single = deflated_search(&f, std::slice::from_ref(&seed), &opts()).unwrap();
        let triple = deflated_search(&f, &[seed.clone(), seed.clone(), seed], &opts()).unwrap();
        assert_eq!(single.len(), triple.len());
        for (a, b) in single.iter().zip(&triple) {
            assert_relative_eq!(
                (&a.coefficients - &b.coefficients).norm(),
                0.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn convex_galerkin_problem_has_single_point() {
        let psi = PsiModel::area_kappa(3.0, 1.0).unwrap();
        let mesh = Mesh::interval(0.0, 1.0, 12, 4).unwrap();
        // lambda = 5 < pi^2: strictly convex discrete energy.
        let f = GalerkinFunctional::assemble(psi, GModel::linear(5.0), mesh).unwrap();
        let n = f.dim();
        let mut seeds = Vec::new();
        for s in [-1.0f64, -0.3, 0.3, 1.0] {
            seeds.push(DVector::from_fn(n, |i, _| {
                s * ((i + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).sin()
            }));
        }
        let points = deflated_search(&f, &seeds, &opts()).unwrap();
        assert_eq!(points.len(), 1);
        assert!(points[0].coefficients.norm() < 1e-8);
    }

    #[test]
    fn pairwise_separation_of_results() {
        let f = fixtures::quad_well::<f64>();
        let mut seeds = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                seeds.push(DVector::from_vec(vec![i as f64, j as f64]));
            }
        }
        let points = deflated_search(&f, &seeds, &opts()).unwrap();
        assert_eq!(points.len(), 9);
        for a in 0..points.len() {
            for b in (a + 1)..points.len() {
                let d = (&points[a].coefficients - &points[b].coefficients).norm();
                assert!(d > merge_radius(&points[a].coefficients));
            }
        }
    }

    #[test]
    fn drift_without_stationary_points_reports_no_convergence() {
        let f = fixtures::linear_drift_1d::<f64>();
        match newton_refine(&f, &DVector::from_vec(vec![0.3]), &opts()) {
            Err(crate::error::Error::NoConvergence { last, residual, .. }) => {
                assert_eq!(last.len(), 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected no-convergence, got {other:?}"),
        }
    }

    #[test]
    fn determinism_of_search() {
        let f = fixtures::quad_well::<f64>();
        let seeds: Vec<_> = (0..9)
            .map(|k| DVector::from_vec(vec![(k % 3) as f64 - 1.0, (k / 3) as f64 - 1.0]))
            .collect();
        let a = deflated_search(&f, &seeds, &opts()).unwrap();
        let b = deflated_search(&f, &seeds, &opts()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.coefficients, y.coefficients);
        }
    }
}
