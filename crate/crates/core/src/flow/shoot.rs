//! Connecting-orbit counting: shoot from the unstable sphere of the upper
//! point, classify terminal minima, and count mod 2 the components of the
//! sphere set flowing to the lower point.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::orthonormalize_columns;
use crate::scalar::Real;
use crate::spectral::Splitting;

use super::field::FlowField;
use super::ode::{integrate, IntegrateOptions, Terminal, Trajectory};

/// Options for orbit counting.
#[derive(Clone, Copy, Debug)]
pub struct ShootOptions<T> {
    pub sphere_radius: Option<T>,
    pub n_shoot: usize,
    pub integrate: IntegrateOptions<T>,
    /// Angular resolution floor for boundary bisection.
    pub angle_tol: T,
}

impl<T: Real> Default for ShootOptions<T> {
    fn default() -> Self {
        Self {
            sphere_radius: None,
            n_shoot: 64,
            integrate: IntegrateOptions::default(),
            angle_tol: T::of(1e-10),
        }
    }
}

/// Outcome of shooting between one index-gap-1 pair.
#[derive(Clone, Debug)]
pub struct ShootReport<T: Real> {
    pub hi: usize,
    pub lo: usize,
    /// Number of connected components of sphere points flowing to `lo`.
    pub count: usize,
    pub parity: u8,
    /// Set when classification stayed ambiguous after refinement.
    pub unreliable: bool,
    /// Terminal label per sample (sphere parameter, captured id).
    pub labels: Vec<(T, Option<usize>)>,
    pub radius: T,
}

fn terminal_label<T: Real>(traj: &Trajectory<T>) -> Option<usize> {
    match traj.terminal {
        Terminal::Converged(id) => Some(id),
        _ => None,
    }
}

/// Euclidean-orthonormal basis of the descending eigenspace.
fn unstable_basis<T: Real>(s: &Splitting<T>) -> DMatrix<T> {
    let mut basis = s.minus_basis();
    orthonormalize_columns(&mut basis);
    basis
}

/// Counts connecting orbits between critical points whose Morse indices
/// differ by one. For an index-1 upper point the unstable sphere is two
/// points; for index 2 it is a circle sampled at `n_shoot` angles, with label
/// boundaries refined by bisection and attributed to the index-1 point whose
/// neighborhood the boundary trajectory approaches most closely.
pub fn connecting_orbit_count<T: Real>(
    field: &FlowField<'_, T>,
    hi: usize,
    hi_splitting: &Splitting<T>,
    lo: usize,
    opts: &ShootOptions<T>,
) -> Result<ShootReport<T>> {
    let hi_node = field
        .node(hi)
        .ok_or_else(|| Error::InvalidInput(format!("unknown critical point id {hi}")))?;
    let lo_node = field
        .node(lo)
        .ok_or_else(|| Error::InvalidInput(format!("unknown critical point id {lo}")))?;
    if hi_splitting.null_count > 0 {
        return Err(hi_splitting.degenerate_error());
    }
    let d = hi_node.morse_index;
    if lo_node.morse_index + 1 != d {
        return Err(Error::InvalidInput(format!(
            "index gap must be one: indices {} and {}",
            d, lo_node.morse_index
        )));
    }
    let radius = opts.sphere_radius.unwrap_or(hi_node.radius * T::of(0.45));
    let basis = unstable_basis(hi_splitting);
    if basis.ncols() != d {
        return Err(Error::Numerical(
            "unstable basis does not match the Morse index".into(),
        ));
    }
    let mut int_opts = opts.integrate;
    int_opts.source = Some(hi);

    match d {
        1 => {
            let dir = basis.column(0).into_owned();
            let mut count = 0;
            let mut unreliable = false;
            let mut labels = Vec::with_capacity(2);
            for (param, sgn) in [(T::zero(), T::one()), (T::pi(), -T::one())] {
                let start = &hi_node.center + &dir * (radius * sgn);
                let traj = integrate(field, &start, &int_opts)?;
                let label = terminal_label(&traj);
                if label.is_none() {
                    unreliable = true;
                }
                if label == Some(lo) {
                    count += 1;
                }
                labels.push((param, label));
            }
            Ok(ShootReport {
                hi,
                lo,
                count,
                parity: (count % 2) as u8,
                unreliable,
                labels,
                radius,
            })
        }
        2 => shoot_circle(field, hi, lo, hi_node, &basis, radius, &int_opts, opts),
        other => Err(Error::InvalidInput(format!(
            "unstable spheres of dimension {} not supported (index {other})",
            other.saturating_sub(1)
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn shoot_circle<T: Real>(
    field: &FlowField<'_, T>,
    hi: usize,
    lo: usize,
    hi_node: &super::field::FlowNode<T>,
    basis: &DMatrix<T>,
    radius: T,
    int_opts: &IntegrateOptions<T>,
    opts: &ShootOptions<T>,
) -> Result<ShootReport<T>> {
    let n_shoot = opts.n_shoot.max(8);
    let b0 = basis.column(0).into_owned();
    let b1 = basis.column(1).into_owned();
    let start_at = |theta: T| -> DVector<T> {
        &hi_node.center + (&b0 * theta.cos() + &b1 * theta.sin()) * radius
    };
    let two_pi = T::of(2.0) * T::pi();
    let mut labels: Vec<(T, Option<usize>)> = Vec::with_capacity(n_shoot);
    let mut unreliable = false;
    for k in 0..n_shoot {
        let theta = two_pi * T::of(k as f64) / T::of(n_shoot as f64);
        let traj = integrate(field, &start_at(theta), int_opts)?;
        let label = terminal_label(&traj);
        if label.is_none() {
            unreliable = true;
        }
        labels.push((theta, label));
    }

    // Direct hits: circular runs of samples already captured by `lo`.
    let mut count = 0usize;
    let n = labels.len();
    for k in 0..n {
        let prev = labels[(k + n - 1) % n].1;
        if labels[k].1 == Some(lo) && prev != Some(lo) {
            count += 1;
        }
    }

    // Boundaries between differently-labeled arcs (neither side `lo`): the
    // crossing trajectory rides the stable manifold of some index-1 point.
    for k in 0..n {
        let (ta, la) = labels[k];
        let (tb_raw, lb) = labels[(k + 1) % n];
        if la == lb || la == Some(lo) || lb == Some(lo) {
            continue;
        }
        let tb = if (k + 1) % n == 0 {
            tb_raw + two_pi
        } else {
            tb_raw
        };
        let (mut ta, mut tb) = (ta, tb);
        while tb - ta > opts.angle_tol {
            let mid = (ta + tb) * T::of(0.5);
            let traj = integrate(field, &start_at(mid), int_opts)?;
            match terminal_label(&traj) {
                Some(id) if Some(id) == la => ta = mid,
                // Any other outcome (including undecided) moves the right end.
                _ => tb = mid,
            }
        }
        // Attribute the boundary to the index-1 node the near-boundary
        // trajectory approaches most closely (relative to its radius).
        let traj = integrate(field, &start_at((ta + tb) * T::of(0.5)), int_opts)?;
        let mut best: Option<(usize, T)> = None;
        for node in &field.nodes {
            if node.morse_index + 1 != hi_node.morse_index || node.id == hi {
                continue;
            }
            let closest = traj
                .states
                .iter()
                .map(|u| (u - &node.center).norm() / node.radius)
                .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a });
            match best {
                Some((_, d)) if d <= closest => {}
                _ => best = Some((node.id, closest)),
            }
        }
        match best {
            Some((id, closeness)) => {
                if closeness > T::one() {
                    // Never even entered a candidate neighborhood.
                    unreliable = true;
                }
                if id == lo {
                    count += 1;
                }
            }
            None => unreliable = true,
        }
    }

    Ok(ShootReport {
        hi,
        lo,
        count,
        parity: (count % 2) as u8,
        unreliable,
        labels,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::{deflated_search, NewtonOptions};
    use crate::flow::field::{gradient_like_field, FieldOptions};
    use crate::functionals::explicit::fixtures;
    use crate::functionals::Functional;
    use crate::nondeg::HyperbolicOperator;
    use crate::spectral::splitting;

    struct Setup<'a> {
        field: FlowField<'a, f64>,
        splittings: Vec<(usize, Splitting<f64>)>,
    }

    fn setup<'a>(f: &'a dyn Functional<f64>, seeds: Vec<DVector<f64>>) -> Setup<'a> {
        let mut crits = Vec::new();
        let mut splittings = Vec::new();
        for mut cp in deflated_search(f, &seeds, &NewtonOptions::default()).unwrap() {
            let s = splitting(f, &cp).unwrap();
            cp.morse_index = Some(s.morse_index);
            let op = HyperbolicOperator::from_splitting(&s).unwrap();
            splittings.push((cp.id, s));
            crits.push((cp, op));
        }
        let field = gradient_like_field(f, &crits, &FieldOptions::default()).unwrap();
        Setup { field, splittings }
    }

    fn split_of<'s>(setup: &'s Setup<'_>, id: usize) -> &'s Splitting<f64> {
        &setup.splittings.iter().find(|(i, _)| *i == id).unwrap().1
    }

    #[test]
    fn double_well_saddle_connects_once_to_each_minimum() {
        let f = fixtures::double_well::<f64>();
        let s = setup(
            &f,
            vec![
                DVector::from_vec(vec![-2.0, 0.5]),
                DVector::from_vec(vec![2.0, -0.5]),
                DVector::from_vec(vec![0.1, 0.4]),
            ],
        );
        let saddle = s
            .field
            .nodes
            .iter()
            .find(|n| n.morse_index == 1)
            .unwrap()
            .id;
        for min_node in s.field.nodes.iter().filter(|n| n.morse_index == 0) {
            let report = connecting_orbit_count(
                &s.field,
                saddle,
                split_of(&s, saddle),
                min_node.id,
                &ShootOptions::default(),
            )
            .unwrap();
            assert_eq!(report.count, 1, "to minimum {}", min_node.center);
            assert_eq!(report.parity, 1);
            assert!(!report.unreliable);
        }
    }

    #[test]
    fn equal_index_pair_is_rejected() {
        let f = fixtures::double_well::<f64>();
        let s = setup(
            &f,
            vec![
                DVector::from_vec(vec![-2.0, 0.5]),
                DVector::from_vec(vec![2.0, -0.5]),
                DVector::from_vec(vec![0.1, 0.4]),
            ],
        );
        let minima: Vec<usize> = s
            .field
            .nodes
            .iter()
            .filter(|n| n.morse_index == 0)
            .map(|n| n.id)
            .collect();
        let err = connecting_orbit_count(
            &s.field,
            minima[0],
            split_of(&s, minima[0]),
            minima[1],
            &ShootOptions::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn parity_stable_under_doubled_shooting() {
        let f = fixtures::double_well::<f64>();
        let s = setup(
            &f,
            vec![
                DVector::from_vec(vec![-2.0, 0.5]),
                DVector::from_vec(vec![2.0, -0.5]),
                DVector::from_vec(vec![0.1, 0.4]),
            ],
        );
        let saddle = s
            .field
            .nodes
            .iter()
            .find(|n| n.morse_index == 1)
            .unwrap()
            .id;
        let lo = s
            .field
            .nodes
            .iter()
            .find(|n| n.morse_index == 0)
            .unwrap()
            .id;
        let base = ShootOptions::default();
        let doubled = ShootOptions {
            n_shoot: base.n_shoot * 2,
            ..base
        };
        let a = connecting_orbit_count(&s.field, saddle, split_of(&s, saddle), lo, &base).unwrap();
        let b =
            connecting_orbit_count(&s.field, saddle, split_of(&s, saddle), lo, &doubled).unwrap();
        assert_eq!(a.parity, b.parity);
    }

    #[test]
    fn quad_well_peak_connects_once_to_each_saddle() {
        let f = fixtures::quad_well::<f64>();
        let mut seeds = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                seeds.push(DVector::from_vec(vec![i as f64 * 0.9, j as f64 * 0.9]));
            }
        }
        let s = setup(&f, seeds);
        assert_eq!(s.field.nodes.len(), 9);
        let peak = s
            .field
            .nodes
            .iter()
            .find(|n| n.morse_index == 2)
            .unwrap()
            .id;
        let saddles: Vec<usize> = s
            .field
            .nodes
            .iter()
            .filter(|n| n.morse_index == 1)
            .map(|n| n.id)
            .collect();
        assert_eq!(saddles.len(), 4);
        for lo in saddles {
            let report = connecting_orbit_count(
                &s.field,
                peak,
                split_of(&s, peak),
                lo,
                &ShootOptions {
                    n_shoot: 32,
                    ..ShootOptions::default()
                },
            )
            .unwrap();
            assert_eq!(report.count, 1, "peak -> saddle {lo}");
            assert_eq!(report.parity, 1);
        }
    }
}
