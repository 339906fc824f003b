//! Growth-regime classification of the nonlinearity, the one-dimensional
//! p-Laplacian Dirichlet spectrum (for the resonance check), and the
//! structural conditions used in the superlinear regime.

use crate::error::{Error, Result};
use crate::functionals::{sobolev_conjugate, GModel};
use crate::scalar::Real;

/// Growth regime of the nonlinearity at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthTag {
    Sublinear,
    Linear,
    Superlinear,
    Unclassified,
}

/// Classification result with the thresholds it was judged against.
#[derive(Clone, Debug)]
pub struct GrowthClass<T: Real> {
    pub tag: GrowthTag,
    pub q: T,
    pub p: T,
    /// `p - 2`.
    pub threshold_low: T,
    /// `p* - 2`; `None` encodes infinity.
    pub threshold_high: Option<T>,
    pub lambda: Option<T>,
    /// Filled once a spectrum is available.
    pub resonant: Option<bool>,
}

/// Classifies the growth regime from declared metadata and confirms it with
/// a numeric scan of `|dg/ds| / |s|^{p-2}` at `s = 1e2, 1e3, 1e4`.
pub fn classify_growth<T: Real>(g: &GModel<T>, p: T, n: usize) -> Result<GrowthClass<T>> {
    if p <= T::of(2.0) {
        return Err(Error::InvalidInput("classification needs p > 2".into()));
    }
    let threshold_low = p - T::of(2.0);
    let threshold_high = sobolev_conjugate(p, n).map(|ps| ps - T::of(2.0));
    let x0 = vec![T::of(0.5); n.max(1)];
    let ratios: Vec<T> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&s| {
            let s = T::of(s);
            g.dg_ds(&x0, s).abs() / s.powf(threshold_low)
        })
        .collect();

    let tag = if g.declares_plap_linear() {
        let max = ratios.iter().copied().fold(T::zero(), T::max);
        let min = ratios.iter().copied().fold(T::of(f64::INFINITY), T::min);
        if min <= T::zero() || max / min > T::of(10.0) {
            return Err(Error::ClassificationConflict(format!(
                "declared exact |s|^(p-2) growth but scan ratios span {:e}..{:e}",
                min.to_f64_lossy(),
                max.to_f64_lossy()
            )));
        }
        GrowthTag::Linear
    } else if g.q < threshold_low {
        if ratios[2] > ratios[0] * T::of(0.1) && ratios[0] > T::of(1e-300) {
            return Err(Error::ClassificationConflict(format!(
                "declared sublinear (q = {:e}) but the derivative ratio does not decay: {:e} -> {:e}",
                g.q.to_f64_lossy(),
                ratios[0].to_f64_lossy(),
                ratios[2].to_f64_lossy()
            )));
        }
        GrowthTag::Sublinear
    } else if g.q > threshold_low && threshold_high.is_none_or(|hi| g.q < hi) {
        if ratios[2] < ratios[0] * T::of(10.0) {
            return Err(Error::ClassificationConflict(format!(
                "declared superlinear (q = {:e}) but the derivative ratio does not diverge: {:e} -> {:e}",
                g.q.to_f64_lossy(),
                ratios[0].to_f64_lossy(),
                ratios[2].to_f64_lossy()
            )));
        }
        GrowthTag::Superlinear
    } else {
        GrowthTag::Unclassified
    };

    Ok(GrowthClass {
        tag,
        q: g.q,
        p,
        threshold_low,
        threshold_high,
        // The asymptotic ratio g / (|s|^{p-2} s) converges to the declared
        // coefficient only in the exact-growth class.
        lambda: if tag == GrowthTag::Linear {
            g.lambda
        } else {
            None
        },
        resonant: None,
    })
}

/// Marks the class resonant when `lambda` sits within the relative tolerance
/// of any computed eigenvalue.
pub fn resonance_flag<T: Real>(lambda: T, spectrum: &[T], rel_tol: T) -> bool {
    spectrum
        .iter()
        .any(|&ev| (lambda - ev).abs() <= rel_tol * ev.abs())
}

/// Shooting state for the quasilinear eigenvalue ODE, written in the
/// variables `(u, w)` with `w = |u'|^{p-2} u'`:
/// `u' = |w|^{(2-p)/(p-1)} w`, `w' = -lambda |u|^{p-2} u`.
fn shoot_zero_count<T: Real>(p: T, lambda: T, length: T, steps: usize) -> usize {
    let q_exp = (T::of(2.0) - p) / (p - T::one());
    let duds = |w: T| -> T {
        if w == T::zero() {
            T::zero()
        } else {
            w.abs().powf(q_exp) * w
        }
    };
    let dwds = |u: T| -> T {
        if u == T::zero() {
            T::zero()
        } else {
            -lambda * u.abs().powf(p - T::of(2.0)) * u
        }
    };
    let h = length / T::of(steps as f64);
    let (mut u, mut w) = (T::zero(), T::one());
    let mut zeros = 0usize;
    let mut last_sign = 0i8;
    for _ in 0..steps {
        // Classic fourth-order step on the pair.
        let k1 = (duds(w), dwds(u));
        let k2 = (
            duds(w + h * T::of(0.5) * k1.1),
            dwds(u + h * T::of(0.5) * k1.0),
        );
        let k3 = (
            duds(w + h * T::of(0.5) * k2.1),
            dwds(u + h * T::of(0.5) * k2.0),
        );
        let k4 = (duds(w + h * k3.1), dwds(u + h * k3.0));
        let six = T::of(6.0);
        u += h / six * (k1.0 + T::of(2.0) * k2.0 + T::of(2.0) * k3.0 + k4.0);
        w += h / six * (k1.1 + T::of(2.0) * k2.1 + T::of(2.0) * k3.1 + k4.1);
        let sign = if u > T::zero() {
            1
        } else if u < T::zero() {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                zeros += 1;
            }
            last_sign = sign;
        }
    }
    zeros
}

fn steps_for<T: Real>(p: T, lambda: T, length: T, k: usize) -> usize {
    // Roughly 200 grid points per expected half-wave.
    let waves = (lambda.max(T::one()) / (p - T::one()))
        .powf(T::one() / p)
        .to_f64_lossy()
        * length.to_f64_lossy();
    (2000 + 200 * k + (waves * 200.0) as usize).min(2_000_000)
}

/// First `k_max` Dirichlet eigenvalues of the one-dimensional p-Laplacian on
/// `(0, length)`, located by bisection on the interior-zero count of the
/// shooting solution.
pub fn plaplace_spectrum_1d<T: Real>(p: T, length: T, k_max: usize) -> Result<Vec<T>> {
    if p <= T::one() {
        return Err(Error::InvalidInput("spectrum needs p > 1".into()));
    }
    if length <= T::zero() {
        return Err(Error::InvalidInput("spectrum needs positive length".into()));
    }
    if k_max == 0 {
        return Err(Error::InvalidInput("need k_max >= 1".into()));
    }
    let mut spectrum = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        // Bracket: zero count below k at lo, at least k at hi.
        let mut lo = T::zero();
        let mut hi = T::one();
        let mut doublings = 0;
        while shoot_zero_count(p, hi, length, steps_for(p, hi, length, k)) < k {
            hi *= T::of(2.0);
            doublings += 1;
            if doublings > 60 {
                return Err(Error::Numerical(format!(
                    "shooting bracket failure for eigenvalue {k}: zero count {} at lambda = {:e}",
                    shoot_zero_count(p, hi, length, steps_for(p, hi, length, k)),
                    hi.to_f64_lossy()
                )));
            }
        }
        for _ in 0..200 {
            if (hi - lo) <= T::of(1e-12) * hi {
                break;
            }
            let mid = (lo + hi) * T::of(0.5);
            if shoot_zero_count(p, mid, length, steps_for(p, mid, length, k)) >= k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        spectrum.push((lo + hi) * T::of(0.5));
    }
    Ok(spectrum)
}

/// Booleans reported by the superlinear structure scan.
#[derive(Clone, Copy, Debug)]
pub struct SuperlinearReport {
    /// `s -> g(s)/|s|^{p-2}s` monotone increasing for `s >= r` and
    /// decreasing for `s <= -r` on the scan grid.
    pub monotonicity: bool,
    /// `G(s) >= -alpha |s|^p` on the scan grid.
    pub lower_bound: bool,
    /// Declared Ambrosetti-Rabinowitz constants hold on the scan grid.
    pub ar_condition: bool,
    /// Whether AR constants were declared at all.
    pub ar_declared: bool,
}

/// Scans the superlinear structural conditions on a geometric grid of
/// `|s|` in `[r, 1e4]` (1000 points per sign).
pub fn superlinear_check<T: Real>(g: &GModel<T>, p: T) -> SuperlinearReport {
    let r = g.r.unwrap_or_else(|| T::one());
    let alpha = g.alpha.unwrap_or_else(T::zero);
    let x0 = vec![T::of(0.5)];
    let n_grid = 1000usize;
    let top = T::of(1e4);
    let ratio = |s: T| g.g(&x0, s) / (s.abs().powf(p - T::of(2.0)) * s);
    let grid: Vec<T> = (0..n_grid)
        .map(|i| {
            let t = T::of(i as f64) / T::of((n_grid - 1) as f64);
            r * (top / r).powf(t)
        })
        .collect();

    let slack = T::of(1e-10);
    let mut monotonicity = true;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        // Increasing on [r, inf); decreasing on (-inf, -r] means the ratio
        // grows again as s walks down from -a to -b.
        if ratio(b) < ratio(a) * (T::one() - slack) - slack {
            monotonicity = false;
        }
        if ratio(-b) < ratio(-a) * (T::one() - slack) - slack {
            monotonicity = false;
        }
    }

    let mut lower_bound = true;
    let mut ar_condition = g.ar_mu.is_some();
    let ar_declared = g.ar_mu.is_some();
    for &s in &grid {
        for s in [s, -s] {
            let antider = g.antiderivative(&x0, s);
            if antider < -alpha * s.abs().powf(p) - slack {
                lower_bound = false;
            }
            if let (Some(mu), Some(big_r)) = (g.ar_mu, g.ar_r) {
                if s.abs() >= big_r {
                    let lhs = mu * antider;
                    if lhs <= T::zero() || lhs > g.g(&x0, s) * s * (T::one() + slack) + slack {
                        ar_condition = false;
                    }
                }
            }
        }
    }

    SuperlinearReport {
        monotonicity,
        lower_bound,
        ar_condition,
        ar_declared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::PowerTerm;
    use approx::assert_relative_eq;

    #[test]
    fn classification_of_the_three_reference_nonlinearities() {
        // q = 0 at p = 3: sublinear.
        let sub = GModel::linear(1.0f64);
        assert_eq!(
            classify_growth(&sub, 3.0, 1).unwrap().tag,
            GrowthTag::Sublinear
        );
        // 5 |s| s: exact |s|^{p-2} growth with lambda = 5.
        let lin = GModel::plaplace_linear(5.0f64, 3.0);
        let class = classify_growth(&lin, 3.0, 1).unwrap();
        assert_eq!(class.tag, GrowthTag::Linear);
        assert_relative_eq!(class.lambda.unwrap(), 5.0);
        // |s|^3 s at p = 3 (q = 3 > 1): superlinear.
        let sup = GModel::power_combo(vec![PowerTerm {
            coef: 1.0f64,
            exponent: 3.0,
        }])
        .unwrap();
        assert_eq!(
            classify_growth(&sup, 3.0, 3).unwrap().tag,
            GrowthTag::Superlinear
        );
    }

    #[test]
    fn metadata_conflicts_raise() {
        // Declared q = 0 but the derivative really grows cubically.
        let mut lying = GModel::power_combo(vec![PowerTerm {
            coef: 1.0f64,
            exponent: 3.0,
        }])
        .unwrap();
        lying.q = 0.0;
        match classify_growth(&lying, 3.0, 1) {
            Err(Error::ClassificationConflict(_)) => {}
            other => panic!("expected conflict, got {other:?}"),
        }
        // Declared superlinear exponent on a bounded-derivative model.
        let mut flat = GModel::linear(2.0f64);
        flat.q = 2.0;
        match classify_growth(&flat, 3.0, 1) {
            Err(Error::ClassificationConflict(_)) => {}
            other => panic!("expected conflict, got {other:?}"),
        }
    }

    #[test]
    fn classical_laplacian_spectrum() {
        let spectrum = plaplace_spectrum_1d(2.0f64, 1.0, 5).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        for (k, ev) in spectrum.iter().enumerate() {
            let exact = ((k + 1) * (k + 1)) as f64 * pi2;
            assert_relative_eq!(*ev, exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn scaled_interval_spectrum() {
        let spectrum = plaplace_spectrum_1d(2.0f64, 2.0, 2).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert_relative_eq!(spectrum[0], pi2 / 4.0, max_relative = 1e-6);
        assert_relative_eq!(spectrum[1], pi2, max_relative = 1e-6);
    }

    #[test]
    fn cubic_spectrum_matches_closed_form_and_scaling() {
        // lambda_k = (p-1) (k pi_p)^p with pi_p = 2 pi / (p sin(pi/p)).
        let p = 3.0f64;
        let pi_p = 2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin());
        let spectrum = plaplace_spectrum_1d(p, 1.0, 3).unwrap();
        assert_relative_eq!(spectrum[0], (p - 1.0) * pi_p.powf(p), max_relative = 1e-5);
        // Homogeneity: lambda_k / lambda_1 = k^p.
        for k in [2usize, 3] {
            assert_relative_eq!(
                spectrum[k - 1] / spectrum[0],
                (k as f64).powf(p),
                max_relative = 1e-3
            );
        }
    }

    #[test]
    fn resonance_window() {
        let spectrum = plaplace_spectrum_1d(3.0f64, 1.0, 1).unwrap();
        let l1 = spectrum[0];
        assert!(resonance_flag(l1, &spectrum, 1e-3));
        assert!(!resonance_flag(l1 * 1.01, &spectrum, 1e-3));
        assert!(!resonance_flag(l1 * 0.99, &spectrum, 1e-3));
    }

    #[test]
    fn superlinear_structure_of_pure_power() {
        let g = GModel::power_combo(vec![PowerTerm {
            coef: 1.0f64,
            exponent: 3.0,
        }])
        .unwrap()
        .with_threshold(1.0)
        .with_ar(5.0, 1.0);
        let report = superlinear_check(&g, 3.0);
        assert!(report.monotonicity);
        assert!(report.lower_bound);
        assert!(report.ar_declared && report.ar_condition);
    }

    #[test]
    fn oscillating_ratio_fails_monotonicity() {
        let g = GModel::oscillating_log().with_threshold(1.0f64);
        let report = superlinear_check(&g, 3.0);
        assert!(!report.monotonicity);
        // The antiderivative stays nonnegative, so the lower bound holds.
        assert!(report.lower_bound);
    }

    #[test]
    fn shifted_power_needs_its_alpha() {
        // g = |s|^3 s - 10 |s| s: G dips negative near the origin scale.
        let g = GModel::power_combo(vec![
            PowerTerm {
                coef: 1.0f64,
                exponent: 3.0,
            },
            PowerTerm {
                coef: -10.0,
                exponent: 1.0,
            },
        ])
        .unwrap()
        .with_threshold(0.5)
        .with_alpha(10.0 / 3.0);
        let report = superlinear_check(&g, 3.0);
        assert!(report.lower_bound);
        let without = GModel::power_combo(vec![
            PowerTerm {
                coef: 1.0f64,
                exponent: 3.0,
            },
            PowerTerm {
                coef: -10.0,
                exponent: 1.0,
            },
        ])
        .unwrap()
        .with_threshold(0.5);
        let report = superlinear_check(&without, 3.0);
        assert!(!report.lower_bound);
    }
}
