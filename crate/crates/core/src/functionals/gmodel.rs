//! The lower-order nonlinearity `g(x, s)`, its partial derivative in `s`,
//! its antiderivative `G`, and the declared growth metadata.

use crate::error::{Error, Result};
use crate::linalg::gauss_legendre;
use crate::scalar::Real;

/// A single power term `coef * |s|^exponent * s`.
#[derive(Clone, Copy, Debug)]
pub struct PowerTerm<T> {
    pub coef: T,
    pub exponent: T,
}

/// Pointwise evaluator `(x, s) -> value`.
pub type PointFn<T> = Box<dyn Fn(&[T], T) -> T + Send + Sync>;

/// Closure bundle for caller-defined nonlinearities.
pub struct CustomG<T: Real> {
    pub g: PointFn<T>,
    pub dg_ds: PointFn<T>,
    pub antiderivative: PointFn<T>,
    /// Whether the model declares exact `|s|^{p-2}` growth of `dg/ds`.
    pub declares_plap_linear: bool,
}

enum GKind<T: Real> {
    Zero,
    /// `lambda * s`.
    Linear {
        lambda: T,
    },
    /// `lambda * |s|^{p-2} s`, the exactly-`|s|^{p-2}`-growth family.
    PLaplaceLinear {
        lambda: T,
        p: T,
    },
    /// Sum of power terms `sum c_i |s|^{e_i} s`.
    PowerCombo(Vec<PowerTerm<T>>),
    /// `|s| s (2 + sin(log(1 + s^2)))`, an oscillating-ratio fixture.
    OscLog,
    Custom(CustomG<T>),
}

/// Nonlinearity model with growth metadata.
pub struct GModel<T: Real> {
    kind: GKind<T>,
    /// Growth exponent in `|dg/ds| <= c (1 + |s|^q)`.
    pub q: T,
    /// Growth constant in the same bound.
    pub c: T,
    /// Asymptotic coefficient of `g / (|s|^{p-2} s)` when it converges.
    pub lambda: Option<T>,
    /// Lower-bound constant in `G >= -alpha |s|^p`.
    pub alpha: Option<T>,
    /// Monotonicity threshold for the superlinear ratio scan.
    pub r: Option<T>,
    /// Ambrosetti-Rabinowitz constants `(mu, R)` when declared.
    pub ar_mu: Option<T>,
    pub ar_r: Option<T>,
}

impl<T: Real> GModel<T> {
    pub fn zero() -> Self {
        Self::new(GKind::Zero, T::zero(), T::of(1e-30))
    }

    /// Classical linear term `g(s) = lambda s` (so `q = 0`).
    pub fn linear(lambda: T) -> Self {
        let mut m = Self::new(GKind::Linear { lambda }, T::zero(), lambda.abs() + T::one());
        m.lambda = Some(lambda);
        m
    }

    /// `g(s) = lambda |s|^{p-2} s`: derivative grows exactly as `|s|^{p-2}`.
    pub fn plaplace_linear(lambda: T, p: T) -> Self {
        let q = p - T::of(2.0);
        let c = lambda.abs() * (p - T::one()) + T::one();
        let mut m = Self::new(GKind::PLaplaceLinear { lambda, p }, q, c);
        m.lambda = Some(lambda);
        m
    }

    /// `g(s) = sum_i c_i |s|^{e_i} s`; `q` is the largest exponent.
    pub fn power_combo(terms: Vec<PowerTerm<T>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput(
                "power combo needs at least one term".into(),
            ));
        }
        let mut q = T::zero();
        let mut c = T::zero();
        for t in &terms {
            if t.exponent < T::zero() {
                return Err(Error::InvalidInput("power exponents must be >= 0".into()));
            }
            if t.exponent > q {
                q = t.exponent;
            }
            c += t.coef.abs() * (t.exponent + T::one());
        }
        Ok(Self::new(GKind::PowerCombo(terms), q, c + T::one()))
    }

    /// `g(s) = |s| s (2 + sin(log(1 + s^2)))`: superlinear with a ratio that
    /// oscillates instead of increasing monotonically.
    pub fn oscillating_log() -> Self {
        // |dg/ds| <= 2|s|(2 + 1) + |s|^2 * 2 = 6|s| + 2|s| <= 8(1 + |s|).
        Self::new(GKind::OscLog, T::one(), T::of(8.0))
    }

    pub fn custom(custom: CustomG<T>, q: T, c: T) -> Self {
        Self::new(GKind::Custom(custom), q, c)
    }

    fn new(kind: GKind<T>, q: T, c: T) -> Self {
        Self {
            kind,
            q,
            c,
            lambda: None,
            alpha: None,
            r: None,
            ar_mu: None,
            ar_r: None,
        }
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_threshold(mut self, r: T) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_ar(mut self, mu: T, big_r: T) -> Self {
        self.ar_mu = Some(mu);
        self.ar_r = Some(big_r);
        self
    }

    /// True when the model declares `dg/ds` to grow exactly as `|s|^{p-2}`.
    pub fn declares_plap_linear(&self) -> bool {
        match &self.kind {
            GKind::PLaplaceLinear { .. } => true,
            GKind::Custom(c) => c.declares_plap_linear,
            _ => false,
        }
    }

    /// Whether the nonlinearity is identically zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.kind, GKind::Zero)
    }

    pub fn g(&self, x: &[T], s: T) -> T {
        match &self.kind {
            GKind::Zero => T::zero(),
            GKind::Linear { lambda } => *lambda * s,
            GKind::PLaplaceLinear { lambda, p } => *lambda * s.abs().powf(*p - T::of(2.0)) * s,
            GKind::PowerCombo(terms) => terms.iter().fold(T::zero(), |acc, t| {
                acc + t.coef * s.abs().powf(t.exponent) * s
            }),
            GKind::OscLog => s.abs() * s * (T::of(2.0) + (T::one() + s * s).ln().sin()),
            GKind::Custom(c) => (c.g)(x, s),
        }
    }

    pub fn dg_ds(&self, x: &[T], s: T) -> T {
        match &self.kind {
            GKind::Zero => T::zero(),
            GKind::Linear { lambda } => *lambda,
            GKind::PLaplaceLinear { lambda, p } => {
                *lambda * (*p - T::one()) * s.abs().powf(*p - T::of(2.0))
            }
            GKind::PowerCombo(terms) => terms.iter().fold(T::zero(), |acc, t| {
                acc + t.coef * (t.exponent + T::one()) * s.abs().powf(t.exponent)
            }),
            GKind::OscLog => {
                let w = T::one() + s * s;
                let phase = w.ln();
                let two = T::of(2.0);
                two * s.abs() * (two + phase.sin()) + s.abs() * s * phase.cos() * two * s / w
            }
            GKind::Custom(c) => (c.dg_ds)(x, s),
        }
    }

    /// Antiderivative `G(x, s) = int_0^s g(x, t) dt`.
    pub fn antiderivative(&self, x: &[T], s: T) -> T {
        match &self.kind {
            GKind::Zero => T::zero(),
            GKind::Linear { lambda } => *lambda * s * s / T::of(2.0),
            GKind::PLaplaceLinear { lambda, p } => *lambda * s.abs().powf(*p) / *p,
            GKind::PowerCombo(terms) => terms.iter().fold(T::zero(), |acc, t| {
                let e2 = t.exponent + T::of(2.0);
                acc + t.coef * s.abs().powf(e2) / e2
            }),
            GKind::OscLog => integrate_g(|t| self.g(x, t), s),
            GKind::Custom(c) => (c.antiderivative)(x, s),
        }
    }

    /// Checks `|dg/ds| <= c (1 + |s|^q)` and the `G`/`g` consistency on a
    /// sampled `(x, s)` grid.
    pub fn validate_on_grid(&self, xs: &[Vec<T>], svals: &[T]) -> Result<()> {
        for x in xs {
            if self.antiderivative(x, T::zero()).abs() > T::of(1e-14) {
                return Err(Error::InvalidInput("G(x, 0) must vanish".into()));
            }
            for &s in svals {
                let bound = self.c * (T::one() + s.abs().powf(self.q));
                let d = self.dg_ds(x, s).abs();
                if d > bound * (T::one() + T::of(1e-12)) {
                    return Err(Error::InvalidInput(format!(
                        "growth bound violated at s = {:e}: |dg/ds| = {:e} > {:e}",
                        s.to_f64_lossy(),
                        d.to_f64_lossy(),
                        bound.to_f64_lossy()
                    )));
                }
                let h = T::of(1e-5) * (T::one() + s.abs());
                let fd = (self.antiderivative(x, s + h) - self.antiderivative(x, s - h))
                    / (T::of(2.0) * h);
                let scale = T::one().max(self.g(x, s).abs());
                if (fd - self.g(x, s)).abs() / scale > T::of(1e-6) {
                    return Err(Error::InvalidInput(format!(
                        "antiderivative inconsistent with g at s = {:e}",
                        s.to_f64_lossy()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Composite Gauss-Legendre integration of `g` from 0 to `s`, one panel per
/// unit of arc (at least eight panels).
fn integrate_g<T: Real>(g: impl Fn(T) -> T, s: T) -> T {
    if s == T::zero() {
        return T::zero();
    }
    let panels = 8usize.max(s.abs().to_f64_lossy().ceil() as usize);
    let (nodes, weights) = gauss_legendre::<T>(16);
    let width = s / T::of(panels as f64);
    let half = T::of(0.5);
    let mut total = T::zero();
    for k in 0..panels {
        let a = width * T::of(k as f64);
        let mid = a + width * half;
        let scale = width * half;
        for (xi, wi) in nodes.iter().zip(&weights) {
            total += *wi * g(mid + scale * *xi) * scale;
        }
    }
    total
}
