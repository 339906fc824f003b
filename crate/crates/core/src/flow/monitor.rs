//! Compactness diagnostics: the Cerami quantity along trajectories, sampled
//! band minima, and the closed-form containment radius.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::linalg::random_unit_vector;
use crate::rng::substream;
use crate::scalar::Real;

use super::ode::Trajectory;

/// Containment diagnostics for one value band.
#[derive(Clone, Debug)]
pub struct CeramiReport<T: Real> {
    pub r0: T,
    /// Sampled lower bound of `(1 + |y|) |df(y)|` on the band outside `B_r0`.
    pub epsilon: T,
    pub a: T,
    pub b: T,
    /// Containment radius from the closed form.
    pub radius: T,
    /// Largest norm observed along band-confined trajectory segments.
    pub empirical_max_norm: T,
}

/// Closed-form containment radius
/// `R = (r0 + (b - a)/(2 eps)) * exp((b - a)/(2 eps))`.
pub fn gronwall_radius<T: Real>(r0: T, epsilon: T, a: T, b: T) -> Result<T> {
    if epsilon <= T::zero() {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if r0 <= T::zero() {
        return Err(Error::InvalidInput("r0 must be positive".into()));
    }
    if b < a {
        return Err(Error::InvalidInput("band needs b >= a".into()));
    }
    let w = (b - a) / (T::of(2.0) * epsilon);
    Ok((r0 + w) * w.exp())
}

/// Minimum of `(1 + |u|) |df(u)|` along a trajectory.
pub fn cerami_monitor<T: Real>(f: &dyn Functional<T>, traj: &Trajectory<T>) -> Result<T> {
    if traj.states.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let mut min = T::of(f64::INFINITY);
    for u in &traj.states {
        let g = f.eval_grad(u)?;
        let c = (T::one() + u.norm()) * g.norm();
        if c < min {
            min = c;
        }
    }
    Ok(min)
}

/// Sampled lower-bound estimate of the band constant: the minimum of
/// `(1 + |u|) |df(u)|` over points with `f(u)` in `[a, b]` and `|u| >= r0`,
/// drawn uniformly from the annulus `r0 <= |u| <= r_max`.
pub fn estimate_epsilon<T: Real>(
    f: &dyn Functional<T>,
    a: T,
    b: T,
    r0: T,
    r_max: T,
    n_samples: usize,
    seed: u64,
) -> Result<T> {
    if b <= a {
        return Err(Error::InvalidInput("band needs b > a".into()));
    }
    if r_max <= r0 || r0 <= T::zero() {
        return Err(Error::InvalidInput("annulus needs 0 < r0 < r_max".into()));
    }
    let n = f.dim();
    let mut rng = substream(seed, "flow/epsilon");
    let mut min: Option<T> = None;
    let exponent = T::one() / T::of(n as f64);
    for _ in 0..n_samples {
        let dir = random_unit_vector::<T, _>(n, &mut rng);
        let t: T = T::of(rand::Rng::gen::<f64>(&mut rng));
        // Radius distributed like volume in the annulus.
        let rn =
            r0.powf(T::of(n as f64)) + t * (r_max.powf(T::of(n as f64)) - r0.powf(T::of(n as f64)));
        let r = rn.powf(exponent);
        let u: DVector<T> = dir * r;
        let value = f.eval_f(&u)?;
        if value < a || value > b {
            continue;
        }
        let g = f.eval_grad(&u)?;
        let c = (T::one() + u.norm()) * g.norm();
        min = Some(match min {
            Some(m) if m < c => m,
            _ => c,
        });
    }
    min.ok_or_else(|| {
        Error::Numerical(format!(
            "no samples landed in f^-1([{:e}, {:e}]) outside B_{:e}",
            a.to_f64_lossy(),
            b.to_f64_lossy(),
            r0.to_f64_lossy()
        ))
    })
}

/// Largest norm along the segment of a trajectory whose values lie in the
/// band (infinity-free; zero when the trajectory never visits the band).
pub fn band_confined_max_norm<T: Real>(traj: &Trajectory<T>, a: T, b: T) -> T {
    let mut max = T::zero();
    for (u, v) in traj.states.iter().zip(&traj.values) {
        if *v >= a && *v <= b {
            let n = u.norm();
            if n > max {
                max = n;
            }
        }
    }
    max
}
