//! Adaptive Dormand-Prince 5(4) integration of the normalized gradient-like
//! field, with capture/escape event handling.

use nalgebra::DVector;

use crate::error::Result;
use crate::scalar::Real;

use super::field::FlowField;

/// Terminal classification of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terminal {
    /// Captured by the critical point with this id.
    Converged(usize),
    /// Left the configured escape ball.
    Escaped,
    /// Ran to the time horizon unclassified.
    Horizon,
    /// Adaptive step size underflowed; the trajectory is partial.
    StepUnderflow,
}

/// An integrated trajectory sampled at accepted steps.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
    /// Objective values along the path.
    pub values: Vec<T>,
    /// `(1 + |u|) |df(u)|` along the path.
    pub cerami: Vec<T>,
    pub terminal: Terminal,
    /// Minimum of the Cerami quantity along the path.
    pub cerami_min: T,
}

impl<T: Real> Trajectory<T> {
    pub fn last_state(&self) -> &DVector<T> {
        self.states
            .last()
            .expect("trajectory has at least the start state")
    }

    pub fn max_norm(&self) -> T {
        self.states
            .iter()
            .map(|u| u.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Integration options.
#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub horizon: T,
    /// Gradient-norm bound required to declare capture.
    pub capture_tol: T,
    /// Relative bound on the unstable component for capture at saddles.
    pub unstable_tol: T,
    pub escape_bound: T,
    pub max_steps: usize,
    /// Node whose neighborhood must be exited before capture applies (the
    /// shooting source).
    pub source: Option<usize>,
}

impl<T: Real> Default for IntegrateOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::of(1e-8),
            atol: T::of(1e-10),
            horizon: T::of(1e3),
            capture_tol: T::of(1e-6),
            unstable_tol: T::of(1e-6),
            escape_bound: T::of(1e6),
            max_steps: 500_000,
            source: None,
        }
    }
}

/// Dormand-Prince coefficients (5th order with embedded 4th).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Upper bound on stored samples; longer runs are thinned by doubling the
/// keep-stride so memory stays flat while endpoints survive exactly.
const STORE_CAP: usize = 16_384;

struct Recorder<T: Real> {
    times: Vec<T>,
    states: Vec<DVector<T>>,
    values: Vec<T>,
    cerami: Vec<T>,
    cerami_min: T,
    stride: usize,
    seen: usize,
    pending: Option<(T, DVector<T>, T, T)>,
}

impl<T: Real> Recorder<T> {
    fn new() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            values: Vec::new(),
            cerami: Vec::new(),
            cerami_min: T::of(f64::INFINITY),
            stride: 1,
            seen: 0,
            pending: None,
        }
    }

    fn push(&mut self, field: &FlowField<'_, T>, t: T, u: &DVector<T>) -> Result<()> {
        let value = field.functional.eval_f(u)?;
        let grad = field.functional.eval_grad(u)?;
        let cerami = (T::one() + u.norm()) * grad.norm();
        if cerami < self.cerami_min {
            self.cerami_min = cerami;
        }
        if self.seen % self.stride == 0 {
            self.times.push(t);
            self.states.push(u.clone());
            self.values.push(value);
            self.cerami.push(cerami);
            self.pending = None;
            if self.times.len() > STORE_CAP {
                self.thin();
            }
        } else {
            self.pending = Some((t, u.clone(), value, cerami));
        }
        self.seen += 1;
        Ok(())
    }

    fn thin(&mut self) {
        let keep = |k: usize| k % 2 == 0;
        let mut idx = 0;
        self.times.retain(|_| {
            let k = keep(idx);
            idx += 1;
            k
        });
        idx = 0;
        self.states.retain(|_| {
            let k = keep(idx);
            idx += 1;
            k
        });
        idx = 0;
        self.values.retain(|_| {
            let k = keep(idx);
            idx += 1;
            k
        });
        idx = 0;
        self.cerami.retain(|_| {
            let k = keep(idx);
            idx += 1;
            k
        });
        // Stored entries sat at multiples of the old stride; after dropping
        // every second one they sit at multiples of the doubled stride, so
        // the phase of future keeps stays consistent.
        self.stride *= 2;
    }

    fn finish(mut self, terminal: Terminal) -> Trajectory<T> {
        // The terminal state always survives decimation.
        if let Some((t, u, value, cerami)) = self.pending.take() {
            self.times.push(t);
            self.states.push(u);
            self.values.push(value);
            self.cerami.push(cerami);
        }
        Trajectory {
            times: self.times,
            states: self.states,
            values: self.values,
            cerami: self.cerami,
            terminal,
            cerami_min: self.cerami_min,
        }
    }
}

/// Capture test against every node: inside a quarter radius, gradient small,
/// and (at saddles) negligible unstable component.
fn captured_by<T: Real>(
    field: &FlowField<'_, T>,
    u: &DVector<T>,
    opts: &IntegrateOptions<T>,
    source_armed: bool,
) -> Result<Option<usize>> {
    for n in &field.nodes {
        if Some(n.id) == opts.source && !source_armed {
            continue;
        }
        let h = u - &n.center;
        let d = h.norm();
        if d >= n.radius * T::of(0.25) {
            continue;
        }
        let grad = field.functional.eval_grad(u)?;
        if grad.norm() >= opts.capture_tol {
            continue;
        }
        if n.morse_index > 0 {
            let unstable = &n.operator.projector_minus * &h;
            if unstable.norm() > opts.unstable_tol * d.max(T::of(1e-300)) {
                continue;
            }
        }
        return Ok(Some(n.id));
    }
    Ok(None)
}

/// Integrates `du/dt = V(u)/sqrt(1 + |V(u)|^2)` from `u0` until capture,
/// escape, or the horizon.
pub fn integrate<T: Real>(
    field: &FlowField<'_, T>,
    u0: &DVector<T>,
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T>> {
    field.functional.check_dim(u0)?;
    let mut rec = Recorder::new();
    let mut t = T::zero();
    let mut u = u0.clone();
    rec.push(field, t, &u)?;

    // Source neighborhood must be exited before its capture re-arms.
    let mut source_armed = match opts.source.and_then(|id| field.node(id)) {
        Some(n) => (&u - &n.center).norm() >= n.radius,
        None => true,
    };

    if let Some(id) = captured_by(field, &u, opts, source_armed)? {
        return Ok(rec.finish(Terminal::Converged(id)));
    }

    let min_node_radius = field
        .nodes
        .iter()
        .map(|n| n.radius)
        .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a });
    let h_max = if min_node_radius.is_finite() {
        (min_node_radius * T::of(0.125)).min(T::of(10.0))
    } else {
        T::of(10.0)
    };
    let mut h = h_max * T::of(0.01);
    let h_floor = T::of(1e-14);
    let mut k: Vec<DVector<T>> = vec![DVector::zeros(u.len()); 7];

    for _ in 0..opts.max_steps {
        if t >= opts.horizon {
            return Ok(rec.finish(Terminal::Horizon));
        }
        if t + h > opts.horizon {
            h = opts.horizon - t;
        }
        k[0] = field.normalized_velocity(&u)?;
        for stage in 0..6 {
            let mut y = u.clone();
            for (j, kj) in k.iter().take(stage + 1).enumerate() {
                let aij = T::of(A[stage][j]);
                if aij != T::zero() {
                    y.axpy(h * aij, kj, T::one());
                }
            }
            k[stage + 1] = field.normalized_velocity(&y)?;
        }
        let mut u5 = u.clone();
        let mut u4 = u.clone();
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                u5.axpy(h * T::of(B5[j]), kj, T::one());
            }
            if B4[j] != 0.0 {
                u4.axpy(h * T::of(B4[j]), kj, T::one());
            }
        }
        // Weighted RMS error norm.
        let mut err_sq = T::zero();
        for i in 0..u.len() {
            let sc = opts.atol + opts.rtol * u[i].abs().max(u5[i].abs());
            let e = (u5[i] - u4[i]) / sc;
            err_sq += e * e;
        }
        let err = (err_sq / T::of(u.len() as f64)).sqrt();
        if err <= T::one() {
            t += h;
            u = u5;
            rec.push(field, t, &u)?;
            if u.norm() > opts.escape_bound {
                return Ok(rec.finish(Terminal::Escaped));
            }
            if let Some(src) = opts.source.and_then(|id| field.node(id)) {
                if !source_armed && (&u - &src.center).norm() >= src.radius {
                    source_armed = true;
                }
            }
            if let Some(id) = captured_by(field, &u, opts, source_armed)? {
                return Ok(rec.finish(Terminal::Converged(id)));
            }
        }
        // PI-free step controller with the usual safety clamp.
        let factor = if err > T::zero() {
            let f = T::of(0.9) * err.powf(T::of(-0.2));
            f.max(T::of(0.2)).min(T::of(5.0))
        } else {
            T::of(5.0)
        };
        h *= factor;
        if h > h_max {
            h = h_max;
        }
        if h < h_floor {
            return Ok(rec.finish(Terminal::StepUnderflow));
        }
    }
    Ok(rec.finish(Terminal::Horizon))
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
    use approx::assert_relative_eq;

    fn field_for<'a>(
        f: &'a dyn Functional<f64>,
        seeds: Vec<DVector<f64>>,
    ) -> crate::flow::FlowField<'a, f64> {
        let found = if seeds.is_empty() {
            Vec::new()
        } else {
            deflated_search(f, &seeds, &NewtonOptions::default()).unwrap()
        };
        let mut crits = Vec::new();
        for mut cp in found {
            let s = splitting(f, &cp).unwrap();
            cp.morse_index = Some(s.morse_index);
            let op = HyperbolicOperator::from_splitting(&s).unwrap();
            crits.push((cp, op));
        }
        gradient_like_field(f, &crits, &FieldOptions::default()).unwrap()
    }

    /// Fixed-step RK4 oracle for the 1D normalized flow `r' = -r/sqrt(1+r^2)`.
    fn radial_oracle(r0: f64, t_end: f64, steps: usize) -> f64 {
        let h = t_end / steps as f64;
        let v = |r: f64| -r / (1.0 + r * r).sqrt();
        let mut r = r0;
        for _ in 0..steps {
            let k1 = v(r);
            let k2 = v(r + 0.5 * h * k1);
            let k3 = v(r + 0.5 * h * k2);
            let k4 = v(r + h * k3);
            r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        r
    }

    #[test]
    fn normalized_linear_flow_matches_reference() {
        // V(x) = -x on f(x) = x^2/2 (no capture nodes): the normalized field
        // is r' = -r/sqrt(1+r^2).
        let f = fixtures::half_square_1d::<f64>();
        let field = field_for(&f, vec![]);
        let opts = IntegrateOptions {
            horizon: 1.0,
            rtol: 1e-10,
            atol: 1e-12,
            ..IntegrateOptions::default()
        };
        let traj = integrate(&field, &DVector::from_vec(vec![1.0]), &opts).unwrap();
        assert_eq!(traj.terminal, Terminal::Horizon);
        let oracle = radial_oracle(1.0, 1.0, 1 << 20);
        // Reference value, frozen from an independent high-accuracy solve.
        assert_relative_eq!(oracle, 0.439_866_950_751_14, epsilon = 1e-9);
        assert_relative_eq!(traj.last_state()[0], oracle, epsilon = 1e-6);
    }

    #[test]
    fn double_well_start_on_axis_converges_to_right_minimum() {
        let f = fixtures::double_well::<f64>();
        let field = field_for(
            &f,
            vec![
                DVector::from_vec(vec![-2.0, 0.5]),
                DVector::from_vec(vec![2.0, -0.5]),
                DVector::from_vec(vec![0.1, 0.4]),
            ],
        );
        let traj = integrate(
            &field,
            &DVector::from_vec(vec![0.5, 0.0]),
            &IntegrateOptions::default(),
        )
        .unwrap();
        let min_id = field
            .nodes
            .iter()
            .find(|n| (n.center[0] - 1.0).abs() < 1e-6)
            .unwrap()
            .id;
        assert_eq!(traj.terminal, Terminal::Converged(min_id));
    }

    #[test]
    fn values_decrease_monotonically_along_trajectories() {
        let f = fixtures::double_well::<f64>();
        let field = field_for(
            &f,
            vec![
                DVector::from_vec(vec![-2.0, 0.5]),
                DVector::from_vec(vec![2.0, -0.5]),
                DVector::from_vec(vec![0.1, 0.4]),
            ],
        );
        for start in [
            DVector::from_vec(vec![0.4, 1.3]),
            DVector::from_vec(vec![-1.7, -0.6]),
        ] {
            let traj = integrate(&field, &start, &IntegrateOptions::default()).unwrap();
            for w in traj.values.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()),
                    "non-monotone: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn drift_without_critical_points_escapes() {
        let f = fixtures::linear_drift_1d::<f64>();
        let field = field_for(&f, vec![]);
        let opts = IntegrateOptions {
            escape_bound: 50.0,
            ..IntegrateOptions::default()
        };
        let traj = integrate(&field, &DVector::from_vec(vec![0.0]), &opts).unwrap();
        assert_eq!(traj.terminal, Terminal::Escaped);
    }

    #[test]
    fn local_linear_flow_reproduced_inside_neighborhood() {
        let f = fixtures::double_well::<f64>();
        let field = field_for(
            &f,
            vec![
                DVector::from_vec(vec![-2.0, 0.5]),
                DVector::from_vec(vec![2.0, -0.5]),
                DVector::from_vec(vec![0.1, 0.4]),
            ],
        );
        // Start inside the linear zone of the right minimum along its stable
        // space; the radius obeys r' = -r/sqrt(1+r^2) until capture.
        let n = field
            .nodes
            .iter()
            .find(|n| (n.center[0] - 1.0).abs() < 1e-6)
            .unwrap();
        let r0 = 0.4 * n.radius;
        let start = &n.center + DVector::from_vec(vec![0.0, r0]);
        let opts = IntegrateOptions {
            horizon: 0.2,
            capture_tol: 0.0, // never capture; watch the pure flow
            rtol: 1e-10,
            atol: 1e-12,
            ..IntegrateOptions::default()
        };
        let traj = integrate(&field, &start, &opts).unwrap();
        assert_eq!(traj.terminal, Terminal::Horizon);
        let h_end = traj.last_state() - &n.center;
        // Stays on the stable ray.
        assert!(h_end[0].abs() < 1e-10);
        let oracle = radial_oracle(r0, 0.2, 1 << 18);
        assert_relative_eq!(h_end[1], oracle, epsilon = 1e-8);
    }
}
