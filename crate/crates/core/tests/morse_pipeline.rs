//! End-to-end library pipeline on explicit and quasilinear fixtures:
//! critical points -> splittings -> certificates -> flow -> orbit parities ->
//! chain complex -> Betti numbers.

use std::collections::BTreeMap;

use morsehom::critical::{deflated_search, CriticalPoint, NewtonOptions};
use morsehom::flow::{
    connecting_orbit_count, gradient_like_field, integrate, BlendProfile, FieldOptions,
    IntegrateOptions, ShootOptions, Terminal,
};
use morsehom::functionals::explicit::fixtures;
use morsehom::functionals::{Functional, GModel, GalerkinFunctional, Mesh, PsiModel};
use morsehom::homology::{betti, build_morse_complex, d_squared_zero, Generator, PSpec};
use morsehom::nondeg::HyperbolicOperator;
use morsehom::spectral::{splitting, Splitting};
use nalgebra::DVector;

struct Classified {
    points: Vec<CriticalPoint<f64>>,
    splittings: Vec<Splitting<f64>>,
    operators: Vec<HyperbolicOperator<f64>>,
}

fn classify(f: &dyn Functional<f64>, seeds: &[DVector<f64>]) -> Classified {
    let mut points = deflated_search(f, seeds, &NewtonOptions::default()).unwrap();
    let mut splittings = Vec::new();
    let mut operators = Vec::new();
    for cp in &mut points {
        let s = splitting(f, cp).unwrap();
        cp.morse_index = Some(s.morse_index);
        operators.push(HyperbolicOperator::from_splitting(&s).unwrap());
        splittings.push(s);
    }
    Classified {
        points,
        splittings,
        operators,
    }
}

fn full_complex(
    f: &dyn Functional<f64>,
    classified: &Classified,
    blend: BlendProfile,
    n_shoot: usize,
) -> Vec<usize> {
    let crits: Vec<_> = classified
        .points
        .iter()
        .cloned()
        .zip(classified.operators.iter().cloned())
        .collect();
    let field = gradient_like_field(
        f,
        &crits,
        &FieldOptions {
            blend,
            ..FieldOptions::default()
        },
    )
    .unwrap();
    let mut parities = BTreeMap::new();
    for (hi, s) in classified.points.iter().zip(&classified.splittings) {
        for lo in &classified.points {
            if s.morse_index != lo.morse_index.unwrap() + 1 {
                continue;
            }
            let report = connecting_orbit_count(
                &field,
                hi.id,
                s,
                lo.id,
                &ShootOptions {
                    n_shoot,
                    ..ShootOptions::default()
                },
            )
            .unwrap();
            assert!(!report.unreliable, "pair {} -> {}", hi.id, lo.id);
            parities.insert((hi.id, lo.id), report.parity);
        }
    }
    let generators: Vec<Generator> = classified
        .points
        .iter()
        .map(|p| Generator {
            id: p.id,
            index: p.morse_index.unwrap(),
            value: p.value,
        })
        .collect();
    let mc = build_morse_complex(&generators, &parities, PSpec::Empty).unwrap();
    assert!(d_squared_zero(&mc));
    betti(&mc)
}

fn double_well_seeds() -> Vec<DVector<f64>> {
    vec![
        DVector::from_vec(vec![-2.0, 0.5]),
        DVector::from_vec(vec![2.0, -0.5]),
        DVector::from_vec(vec![0.1, 0.4]),
    ]
}

#[test]
fn double_well_homology_is_point_homology() {
    let f = fixtures::double_well::<f64>();
    let classified = classify(&f, &double_well_seeds());
    assert_eq!(classified.points.len(), 3);
    let b = full_complex(&f, &classified, BlendProfile::Quintic, 64);
    assert_eq!(b, vec![1, 0]);
}

#[test]
fn betti_invariant_under_blending_and_shoot_count() {
    let f = fixtures::double_well::<f64>();
    let classified = classify(&f, &double_well_seeds());
    let reference = full_complex(&f, &classified, BlendProfile::Quintic, 64);
    for blend in [BlendProfile::Cubic, BlendProfile::Exp] {
        assert_eq!(full_complex(&f, &classified, blend, 64), reference);
    }
    assert_eq!(
        full_complex(&f, &classified, BlendProfile::Quintic, 128),
        reference
    );
}

#[test]
fn quad_well_complex_from_orbit_counts() {
    let f = fixtures::quad_well::<f64>();
    let mut seeds = Vec::new();
    for i in -2..=2 {
        for j in -2..=2 {
            seeds.push(DVector::from_vec(vec![i as f64 * 0.9, j as f64 * 0.9]));
        }
    }
    let classified = classify(&f, &seeds);
    assert_eq!(classified.points.len(), 9);
    let b = full_complex(&f, &classified, BlendProfile::Quintic, 32);
    assert_eq!(b, vec![1, 0, 0]);
}

#[test]
fn single_well_quasilinear_homology() {
    // lambda = 5 below the first Dirichlet eigenvalue: one minimum at zero.
    let psi = PsiModel::area_kappa(3.0, 1.0).unwrap();
    let g = GModel::linear(5.0);
    let mesh = Mesh::interval(0.0, 1.0, 16, 4).unwrap();
    let f = GalerkinFunctional::assemble(psi, g, mesh).unwrap();
    let n = f.dim();
    let mut seeds = vec![DVector::zeros(n)];
    for s in [-0.8f64, 0.6] {
        seeds.push(DVector::from_fn(n, |i, _| {
            s * ((i + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).sin()
        }));
    }
    let classified = classify(&f, &seeds);
    assert_eq!(classified.points.len(), 1);
    assert_eq!(classified.points[0].morse_index, Some(0));
    let b = full_complex(&f, &classified, BlendProfile::Quintic, 16);
    assert_eq!(b, vec![1]);
}

#[test]
fn capture_requires_residual_and_radius() {
    let f = fixtures::double_well::<f64>();
    let classified = classify(&f, &double_well_seeds());
    let crits: Vec<_> = classified
        .points
        .iter()
        .cloned()
        .zip(classified.operators.iter().cloned())
        .collect();
    let field = gradient_like_field(&f, &crits, &FieldOptions::default()).unwrap();
    let traj = integrate(
        &field,
        &DVector::from_vec(vec![0.7, 0.9]),
        &IntegrateOptions::default(),
    )
    .unwrap();
    let Terminal::Converged(id) = traj.terminal else {
        panic!("expected capture, got {:?}", traj.terminal)
    };
    let node = field.node(id).unwrap();
    let last = traj.last_state();
    assert!((last - &node.center).norm() < node.radius * 0.25);
    assert!(f.eval_grad(last).unwrap().norm() < 1e-6);
}

#[test]
fn cerami_monitor_vanishes_at_rest_and_not_along_connections() {
    use morsehom::flow::cerami_monitor;
    let f = fixtures::double_well::<f64>();
    let classified = classify(&f, &double_well_seeds());
    let crits: Vec<_> = classified
        .points
        .iter()
        .cloned()
        .zip(classified.operators.iter().cloned())
        .collect();
    let field = gradient_like_field(&f, &crits, &FieldOptions::default()).unwrap();
    // Constant trajectory at a critical point.
    let rest = morsehom::flow::Trajectory {
        times: vec![0.0],
        states: vec![DVector::from_vec(vec![1.0, 0.0])],
        values: vec![0.0],
        cerami: vec![0.0],
        terminal: Terminal::Horizon,
        cerami_min: 0.0,
    };
    assert_eq!(cerami_monitor(&f, &rest).unwrap(), 0.0);
    // A saddle-to-minimum connection keeps a positive minimum (the monitor
    // is evaluated away from the endpoints on the sampled path).
    let saddle = classified
        .points
        .iter()
        .find(|p| p.morse_index == Some(1))
        .unwrap();
    let dir = classified
        .splittings
        .iter()
        .zip(&classified.points)
        .find(|(_, p)| p.id == saddle.id)
        .map(|(s, _)| s.minus_basis().column(0).into_owned())
        .unwrap();
    let start = &saddle.coefficients + dir * 0.1;
    let traj = integrate(&field, &start, &IntegrateOptions::default()).unwrap();
    assert!(matches!(traj.terminal, Terminal::Converged(_)));
    let min_on_path = cerami_monitor(&f, &traj).unwrap();
    assert!(min_on_path > 0.0);
}

/// Quad well rotated by 0.5 rad: the unstable circle of the top point is no
/// longer axis-aligned, so every shot lands in a minimum and the saddle
/// attributions must come from boundary bisection.
#[test]
fn rotated_quad_well_complex() {
    use morsehom::functionals::ExplicitFunctional;
    use nalgebra::{DMatrix, Matrix2, Vector2};

    let theta = 0.5f64;
    let rot = Matrix2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos());
    let rot_t = rot.transpose();
    let well = |w: Vector2<f64>| {
        let a = w[0] * w[0] - 1.0;
        let b = w[1] * w[1] - 1.0;
        a * a + b * b
    };
    let grad_w = |w: Vector2<f64>| {
        Vector2::new(
            4.0 * w[0] * (w[0] * w[0] - 1.0),
            4.0 * w[1] * (w[1] * w[1] - 1.0),
        )
    };
    let hess_w = |w: Vector2<f64>| {
        Matrix2::new(12.0 * w[0] * w[0] - 4.0, 0.0, 0.0, 12.0 * w[1] * w[1] - 4.0)
    };
    let f = ExplicitFunctional::new(
        2,
        Box::new(move |u: &DVector<f64>| well(rot * Vector2::new(u[0], u[1]))),
        Box::new(move |u: &DVector<f64>| {
            let g = rot_t * grad_w(rot * Vector2::new(u[0], u[1]));
            DVector::from_vec(vec![g[0], g[1]])
        }),
        Box::new(move |u: &DVector<f64>| {
            let h = rot_t * hess_w(rot * Vector2::new(u[0], u[1])) * rot;
            DMatrix::from_row_slice(2, 2, &[h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]])
        }),
    );
    let mut seeds = Vec::new();
    for i in -2..=2 {
        for j in -2..=2 {
            seeds.push(DVector::from_vec(vec![i as f64 * 0.9, j as f64 * 0.9]));
        }
    }
    let classified = classify(&f, &seeds);
    assert_eq!(classified.points.len(), 9);
    let b = full_complex(&f, &classified, BlendProfile::Quintic, 48);
    assert_eq!(b, vec![1, 0, 0]);
}

/// Full nontrivial quasilinear complex: two symmetric minimizers, two
/// mountain passes, and the index-2 zero solution of the lambda = 50
/// problem assemble into point homology.
#[test]
fn lambda_fifty_full_complex() {
    let psi = PsiModel::area_kappa(3.0, 1.0).unwrap();
    let mesh = Mesh::interval(0.0, 1.0, 16, 4).unwrap();
    let f = GalerkinFunctional::assemble(psi, GModel::linear(50.0), mesh).unwrap();
    let n = f.dim();
    let mut seeds = vec![DVector::zeros(n)];
    for k in 1..=3usize {
        for amp in [-4.0f64, -2.0, -1.0, 1.0, 2.0, 4.0] {
            seeds.push(DVector::from_fn(n, |i, _| {
                amp * ((i + 1) as f64 * k as f64 * std::f64::consts::PI / (n + 1) as f64).sin()
            }));
        }
    }
    let mut points = deflated_search(&f, &seeds, &NewtonOptions::default()).unwrap();
    assert_eq!(points.len(), 5);
    let mut crits = Vec::new();
    let mut splittings = Vec::new();
    for cp in &mut points {
        let s = splitting(&f, cp).unwrap();
        cp.morse_index = Some(s.morse_index);
        crits.push((cp.clone(), HyperbolicOperator::from_splitting(&s).unwrap()));
        splittings.push(s);
    }
    let mut by_index = [0usize; 3];
    for cp in &points {
        by_index[cp.morse_index.unwrap()] += 1;
    }
    assert_eq!(by_index, [2, 2, 1]);
    // The minimizers are the symmetric pair; the passes sit just below zero.
    assert!((points[0].value - points[1].value).abs() < 1e-9);
    assert!(points[2].value < 0.0 && points[3].value < 0.0);

    let field = gradient_like_field(&f, &crits, &FieldOptions::default()).unwrap();
    let fast = morsehom::flow::IntegrateOptions {
        rtol: 1e-6,
        atol: 1e-8,
        // Basin classification only needs the right capture ball.
        capture_tol: 1e-4,
        ..morsehom::flow::IntegrateOptions::default()
    };
    // The angular bisection must stay tight: the boundary shot has to ride
    // the stable manifold all the way into the pass's small neighborhood.
    let opts = morsehom::flow::ShootOptions {
        n_shoot: 8,
        integrate: fast,
        ..morsehom::flow::ShootOptions::default()
    };
    let mut parities = BTreeMap::new();
    for (hi, s) in points.iter().zip(&splittings) {
        for lo in &points {
            if s.morse_index != lo.morse_index.unwrap() + 1 {
                continue;
            }
            let r = connecting_orbit_count(&field, hi.id, s, lo.id, &opts).unwrap();
            assert!(!r.unreliable, "pair {} -> {}", hi.id, lo.id);
            assert_eq!(r.parity, 1, "pair {} -> {}", hi.id, lo.id);
            parities.insert((hi.id, lo.id), r.parity);
        }
    }
    assert_eq!(parities.len(), 6);
    let generators: Vec<Generator> = points
        .iter()
        .map(|p| Generator {
            id: p.id,
            index: p.morse_index.unwrap(),
            value: p.value,
        })
        .collect();
    let mc = build_morse_complex(&generators, &parities, PSpec::Empty).unwrap();
    assert!(d_squared_zero(&mc));
    assert_eq!(betti(&mc), vec![1, 0, 0]);

    // Index stability under refinement: the same five points at twice the
    // resolution carry the same inertia profile.
    let psi = PsiModel::area_kappa(3.0, 1.0).unwrap();
    let mesh = Mesh::interval(0.0, 1.0, 32, 4).unwrap();
    let f2 = GalerkinFunctional::assemble(psi, GModel::linear(50.0), mesh).unwrap();
    let n2 = f2.dim();
    let mut seeds2 = vec![DVector::zeros(n2)];
    for k in 1..=3usize {
        for amp in [-4.0f64, -1.0, 1.0, 4.0] {
            seeds2.push(DVector::from_fn(n2, |i, _| {
                amp * ((i + 1) as f64 * k as f64 * std::f64::consts::PI / (n2 + 1) as f64)
                    .sin()
            }));
        }
    }
    let points2 = deflated_search(&f2, &seeds2, &NewtonOptions::default()).unwrap();
    assert_eq!(points2.len(), 5);
    let mut profile2: Vec<usize> = points2
        .iter()
        .map(|cp| splitting(&f2, cp).unwrap().morse_index)
        .collect();
    profile2.sort_unstable();
    assert_eq!(profile2, vec![0, 0, 1, 1, 2]);
}
