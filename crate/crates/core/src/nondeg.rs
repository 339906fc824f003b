//! Non-degeneracy certification: the hyperbolic operator attached to a
//! splitting, the Lyapunov sampling test, and the splitting-estimate
//! criterion. Certificates are sampled evidence: they can falsify the
//! inequalities, never prove them.

use nalgebra::{DMatrix, DVector};

use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::linalg::random_unit_vector;
use crate::rng::substream;
use crate::scalar::Real;
use crate::spectral::Splitting;

/// The involution acting as `+id` on the descending eigenspace and `-id` on
/// the ascending one; its linear flow is the model dynamics near the point.
#[derive(Clone, Debug)]
pub struct HyperbolicOperator<T: Real> {
    pub matrix: DMatrix<T>,
    pub projector_minus: DMatrix<T>,
    pub projector_plus: DMatrix<T>,
}

impl<T: Real> HyperbolicOperator<T> {
    /// Builds the operator from a splitting with no zero modes.
    pub fn from_splitting(s: &Splitting<T>) -> Result<Self> {
        if s.null_count > 0 {
            return Err(s.degenerate_error());
        }
        let matrix = &s.projector_minus - &s.projector_plus;
        Ok(Self {
            matrix,
            projector_minus: s.projector_minus.clone(),
            projector_plus: s.projector_plus.clone(),
        })
    }

    /// Builds from an explicit involution (`L^2 = id` within `tol`).
    pub fn from_matrix(l: DMatrix<T>, tol: T) -> Result<Self> {
        let n = l.nrows();
        let sq = &l * &l;
        if (sq - DMatrix::<T>::identity(n, n)).norm() > tol {
            return Err(Error::InvalidInput(
                "hyperbolic operator must be an involution".into(),
            ));
        }
        let id = DMatrix::<T>::identity(n, n);
        let half = T::of(0.5);
        let projector_minus = (&id + &l) * half;
        let projector_plus = (&id - &l) * half;
        Ok(Self {
            matrix: l,
            projector_minus,
            projector_plus,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `exp(tL) = e^t P_- + e^{-t} P_+`.
    pub fn exp(&self, t: T) -> DMatrix<T> {
        &self.projector_minus * t.exp() + &self.projector_plus * (-t).exp()
    }

    pub fn apply(&self, v: &DVector<T>) -> DVector<T> {
        &self.matrix * v
    }
}

/// Outcome of a sampled certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Sampled evidence for (or against) non-degeneracy in a ball.
#[derive(Clone, Debug)]
pub struct NondegCertificate<T: Real> {
    /// Ball radius the samples were drawn in.
    pub delta: T,
    /// Negative-direction constant (half the sampled infimum of
    /// `-d2f[v-, v-]`); zero for index-zero points.
    pub c: T,
    /// Positive-direction constant.
    pub c1: T,
    pub samples: usize,
    /// Most adverse normalized slack across all sampled inequalities;
    /// positive means every sample satisfied its inequality strictly.
    pub worst_margin: T,
    pub verdict: Verdict,
    /// A sample that violates the tested inequality, when one was found.
    pub failure_witness: Option<DVector<T>>,
}

impl<T: Real> NondegCertificate<T> {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Options shared by the two certificates.
#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions<T> {
    pub delta: T,
    pub n_samples: usize,
    pub seed: u64,
}

impl<T: Real> CertifyOptions<T> {
    pub fn new(delta: T, n_samples: usize, seed: u64) -> Self {
        Self {
            delta,
            n_samples,
            seed,
        }
    }
}

/// Radii ladder `delta * 2^{-j}`, `j = 0..4`.
fn radii<T: Real>(delta: T) -> [T; 5] {
    let half = T::of(0.5);
    let mut r = delta;
    let mut out = [T::zero(); 5];
    for slot in &mut out {
        *slot = r;
        r *= half;
    }
    out
}

/// Lyapunov sampling test: `m(u) = df(ubar + h)[L h]` must be negative on
/// spheres of shrinking radius around the critical point.
pub fn lyapunov_certificate<T: Real>(
    f: &dyn Functional<T>,
    cp: &CriticalPoint<T>,
    l: &HyperbolicOperator<T>,
    opts: &CertifyOptions<T>,
) -> Result<NondegCertificate<T>> {
    if opts.delta <= T::zero() {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    if opts.n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let n = f.dim();
    let mut rng = substream(opts.seed, "nondeg/lyapunov");
    let mut worst = T::of(f64::INFINITY);
    let mut witness: Option<DVector<T>> = None;
    let per_radius = opts.n_samples.div_ceil(5);
    let mut samples = 0;
    for r in radii(opts.delta) {
        for _ in 0..per_radius {
            let h = random_unit_vector::<T, _>(n, &mut rng) * r;
            let u = &cp.coefficients + &h;
            let m = f.eval_grad(&u)?.dot(&l.apply(&h));
            let margin = -m / (r * r);
            samples += 1;
            if margin < worst {
                worst = margin;
                if m >= T::zero() {
                    witness = Some(u.clone());
                }
            }
        }
    }
    let verdict = if worst > T::zero() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(NondegCertificate {
        delta: opts.delta,
        c: T::zero(),
        c1: T::zero(),
        samples,
        worst_margin: worst,
        verdict,
        failure_witness: if verdict == Verdict::Fail {
            witness
        } else {
            None
        },
    })
}

fn h_norm_sq<T: Real>(gram: &DMatrix<T>, v: &DVector<T>) -> T {
    (gram * v).dot(v)
}

/// Splitting-estimate criterion:
///
/// (i) `2c = inf -d2f(u)[v-, v-]` over samples `u` in the ball and H-unit
///     `v-` in the descending eigenspace; requires `c > 0`;
/// (ii) `d2f(u)[h+, h+] >= c1 |h+|_H^2 - c |h-|_H^2` for sampled `u = ubar+h`,
///     with `c1` half the smallest ascending eigenvalue at the point.
pub fn criterion_check<T: Real>(
    f: &dyn Functional<T>,
    cp: &CriticalPoint<T>,
    s: &Splitting<T>,
    opts: &CertifyOptions<T>,
) -> Result<NondegCertificate<T>> {
    if s.null_count > 0 {
        return Err(s.degenerate_error());
    }
    if opts.delta <= T::zero() {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    let n = f.dim();
    let index = s.morse_index;
    let minus = s.minus_basis();
    let plus = s.plus_basis();
    let mut rng = substream(opts.seed, "nondeg/criterion");

    // c1 from the quadratic form at the point itself: half the smallest
    // eigenvalue on the ascending eigenspace (zero when that space is empty).
    let c1 = if plus.ncols() == 0 {
        T::zero()
    } else {
        let smallest_plus = s
            .plus_eigenvalues()
            .into_iter()
            .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a });
        let c1 = smallest_plus * T::of(0.5);
        if c1 <= T::zero() {
            // Positive-direction bound already fails at the point.
            return Ok(NondegCertificate {
                delta: opts.delta,
                c: T::zero(),
                c1,
                samples: 0,
                worst_margin: c1,
                verdict: Verdict::Fail,
                failure_witness: Some(&cp.coefficients + plus.column(0).into_owned()),
            });
        }
        c1
    };

    let budget = opts.n_samples.max(1);
    let mut samples = 0;
    let mut worst = T::of(f64::INFINITY);
    let mut witness: Option<DVector<T>> = None;

    // (i) Negative-definiteness on the descending eigenspace across the ball.
    let mut c = T::zero();
    if index > 0 {
        let mut inf_neg = T::of(f64::INFINITY);
        let per_radius = budget.div_ceil(10);
        for (j, r) in radii(opts.delta).iter().enumerate() {
            for k in 0..per_radius {
                // Center point is included once: most adverse samples sit at
                // the sphere, but the point itself anchors the estimate.
                let u = if j == 0 && k == 0 {
                    cp.coefficients.clone()
                } else {
                    &cp.coefficients + random_unit_vector::<T, _>(n, &mut rng) * *r
                };
                let hess = f.eval_hess(&u)?;
                let coeffs = random_unit_vector::<T, _>(index, &mut rng);
                let v = &minus * coeffs;
                let v = &v / h_norm_sq(&s.gram, &v).sqrt();
                let q = -(&hess * &v).dot(&v);
                samples += 1;
                if q < inf_neg {
                    inf_neg = q;
                    if q <= T::zero() {
                        witness = Some(u.clone());
                    }
                }
            }
        }
        c = inf_neg * T::of(0.5);
        if c <= T::zero() {
            return Ok(NondegCertificate {
                delta: opts.delta,
                c,
                c1,
                samples,
                worst_margin: inf_neg,
                verdict: Verdict::Fail,
                failure_witness: witness,
            });
        }
        // The sampled infimum is the per-unit-H-norm slack of family (i).
        worst = c;
    }

    // (ii) Mixed estimate along stratified radii and mixture angles; vacuous
    // without ascending directions.
    let per_radius = if plus.ncols() == 0 {
        0
    } else {
        budget.div_ceil(5)
    };
    for r in radii(opts.delta) {
        for k in 0..per_radius {
            let h = if index == 0 || plus.ncols() == 0 {
                random_unit_vector::<T, _>(n, &mut rng) * r
            } else {
                // Stratified mixture angle between the two eigenspaces.
                let theta = T::of(0.5) * T::pi() * T::of(k as f64 + 0.5) / T::of(per_radius as f64);
                let vm = &minus * random_unit_vector::<T, _>(index, &mut rng);
                let vp = &plus * random_unit_vector::<T, _>(plus.ncols(), &mut rng);
                let mix = vm * theta.cos() + vp * theta.sin();
                let norm = mix.norm();
                if norm > T::zero() {
                    mix * (r / norm)
                } else {
                    continue;
                }
            };
            let u = &cp.coefficients + &h;
            let hess = f.eval_hess(&u)?;
            let h_plus = &s.projector_plus * &h;
            let h_minus = &s.projector_minus * &h;
            let lhs = (&hess * &h_plus).dot(&h_plus);
            let rhs = c1 * h_norm_sq(&s.gram, &h_plus) - c * h_norm_sq(&s.gram, &h_minus);
            let scale = h_norm_sq(&s.gram, &h);
            let margin = (lhs - rhs) / scale;
            samples += 1;
            if margin < worst {
                worst = margin;
                if lhs < rhs {
                    witness = Some(u.clone());
                }
            }
        }
    }

    let verdict = if worst > T::zero() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(NondegCertificate {
        delta: opts.delta,
        c,
        c1,
        samples,
        worst_margin: worst,
        verdict,
        failure_witness: if verdict == Verdict::Fail {
            witness
        } else {
            None
        },
    })
}

/// Result of the shrinking-radius search for a certified ball.
#[derive(Clone, Debug)]
pub struct CertifiedPoint<T: Real> {
    pub lyapunov: NondegCertificate<T>,
    pub criterion: NondegCertificate<T>,
    /// Radius at which both certificates pass.
    pub delta: T,
    pub halvings: usize,
}

/// Halves the ball radius until both certificates pass (the theory guarantees
/// existence of *some* radius, not its size). Starts from half the distance
/// to the nearest other critical point.
pub fn certify_with_search<T: Real>(
    f: &dyn Functional<T>,
    cp: &CriticalPoint<T>,
    s: &Splitting<T>,
    others: &[DVector<T>],
    n_samples: usize,
    seed: u64,
) -> Result<CertifiedPoint<T>> {
    let l = HyperbolicOperator::from_splitting(s)?;
    let nearest = others
        .iter()
        .map(|o| (o - &cp.coefficients).norm())
        .filter(|d| *d > T::of(1e-12))
        .fold(T::of(f64::INFINITY), |a, b| if b < a { b } else { a });
    let mut delta = if nearest.is_finite() {
        nearest * T::of(0.5)
    } else {
        T::of(0.5) * (T::one() + cp.coefficients.norm())
    };
    let mut last_err: Option<(NondegCertificate<T>, NondegCertificate<T>)> = None;
    for halvings in 0..=10 {
        let opts = CertifyOptions::new(delta, n_samples, seed);
        let lyap = lyapunov_certificate(f, cp, &l, &opts)?;
        let crit = criterion_check(f, cp, s, &opts)?;
        if lyap.passed() && crit.passed() {
            return Ok(CertifiedPoint {
                lyapunov: lyap,
                criterion: crit,
                delta,
                halvings,
            });
        }
        last_err = Some((lyap, crit));
        delta *= T::of(0.5);
    }
    let (lyap, crit) = last_err.expect("at least one attempt");
    Err(Error::Numerical(format!(
        "certificates still failing after 10 halvings (lyapunov {:?}, criterion {:?})",
        lyap.verdict, crit.verdict
    )))
}
