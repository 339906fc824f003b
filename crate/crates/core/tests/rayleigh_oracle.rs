//! Independent Rayleigh-quotient oracle for the first p-Laplacian Dirichlet
//! eigenvalue, checked against the shooting implementation.

use morsehom::cerami::plaplace_spectrum_1d;
use morsehom::linalg::gauss_legendre;

/// Minimizes `int |u'|^p / int |u|^p` over P1 functions on (0, 1) with a
/// projected gradient descent. Entirely independent of the shooting path.
fn rayleigh_min_p(p: f64, cells: usize, iters: usize) -> f64 {
    let n = cells - 1; // interior nodes
    let h = 1.0 / cells as f64;
    let (qx, qw) = gauss_legendre::<f64>(8);
    // Nodal values, boundary pinned to zero.
    let mut u: Vec<f64> = (1..cells)
        .map(|i| (std::f64::consts::PI * i as f64 * h).sin())
        .collect();

    let value_at = |u: &[f64], e: usize, t: f64| -> f64 {
        let left = if e == 0 { 0.0 } else { u[e - 1] };
        let right = if e == cells - 1 { 0.0 } else { u[e] };
        left + (right - left) * t
    };

    let energies = |u: &[f64]| -> (f64, f64, Vec<f64>, Vec<f64>) {
        let mut a = 0.0;
        let mut b = 0.0;
        let mut grad_a = vec![0.0; n];
        let mut grad_b = vec![0.0; n];
        for e in 0..cells {
            let left = if e == 0 { 0.0 } else { u[e - 1] };
            let right = if e == cells - 1 { 0.0 } else { u[e] };
            let slope = (right - left) / h;
            a += h * slope.abs().powf(p);
            let da = p * slope.abs().powf(p - 1.0) * slope.signum();
            if e > 0 {
                grad_a[e - 1] += -da;
            }
            if e < cells - 1 {
                grad_a[e] += da;
            }
            for (x, w) in qx.iter().zip(&qw) {
                let t = 0.5 * (x + 1.0);
                let weight = 0.5 * h * w;
                let v = value_at(u, e, t);
                b += weight * v.abs().powf(p);
                let db = p * v.abs().powf(p - 1.0) * v.signum();
                if e > 0 {
                    grad_b[e - 1] += weight * db * (1.0 - t);
                }
                if e < cells - 1 {
                    grad_b[e] += weight * db * t;
                }
            }
        }
        (a, b, grad_a, grad_b)
    };

    // Thomas solve with the Dirichlet stiffness (2, -1)/h as preconditioner;
    // plain descent would need O(1/h^2) iterations.
    let precondition = |rhs: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let diag = 2.0 / h;
        let off = -1.0 / h;
        c[0] = off / diag;
        d[0] = rhs[0] / diag;
        for i in 1..n {
            let m = diag - off * c[i - 1];
            c[i] = off / m;
            d[i] = (rhs[i] - off * d[i - 1]) / m;
        }
        let mut z = vec![0.0; n];
        z[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            z[i] = d[i] - c[i] * z[i + 1];
        }
        z
    };

    let mut step = 1.0;
    let (mut a, mut b, mut ga, mut gb) = energies(&u);
    for _ in 0..iters {
        let quotient = a / b;
        let grad: Vec<f64> = ga
            .iter()
            .zip(&gb)
            .map(|(x, y)| (x - quotient * y) / b)
            .collect();
        let dir = precondition(&grad);
        let trial: Vec<f64> = u.iter().zip(&dir).map(|(x, g)| x - step * g).collect();
        let (ta, tb, tga, tgb) = energies(&trial);
        if ta / tb < quotient {
            u = trial;
            a = ta;
            b = tb;
            ga = tga;
            gb = tgb;
            step *= 1.3;
        } else {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }
    a / b
}

#[test]
fn shooting_matches_rayleigh_oracle_for_cubic_case() {
    let oracle = rayleigh_min_p(3.0, 1000, 4000);
    let shooting = plaplace_spectrum_1d(3.0f64, 1.0, 1).unwrap()[0];
    let rel = (shooting - oracle).abs() / oracle;
    assert!(
        rel <= 1e-4,
        "shooting {shooting:.8} vs oracle {oracle:.8} (rel {rel:e})"
    );
}

#[test]
fn rayleigh_oracle_reproduces_classical_eigenvalue() {
    let oracle = rayleigh_min_p(2.0, 800, 3000);
    let exact = std::f64::consts::PI.powi(2);
    let rel = (oracle - exact).abs() / exact;
    assert!(rel <= 1e-4, "oracle {oracle:.8} vs pi^2 (rel {rel:e})");
}
