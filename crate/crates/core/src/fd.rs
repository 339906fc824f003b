//! Central finite-difference probes used to cross-check analytic derivatives.

use nalgebra::DVector;

use crate::scalar::Real;

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central<T: Real>(f: impl Fn(T) -> T, x: T, h: T) -> T {
    (f(x + h) - f(x - h)) / (T::of(2.0) * h)
}

/// Directional derivative of `f` at `u` along `v` by central differences,
/// with the step scaled to the base point.
pub fn directional<T: Real>(
    f: impl Fn(&DVector<T>) -> T,
    u: &DVector<T>,
    v: &DVector<T>,
    h: T,
) -> T {
    let step = h * (T::one() + u.norm());
    let fp = f(&(u + v * step));
    let fm = f(&(u - v * step));
    (fp - fm) / (T::of(2.0) * step)
}

/// Relative error with a floor of 1 on the denominator.
pub fn rel_err<T: Real>(got: T, want: T) -> T {
    (got - want).abs() / T::one().max(want.abs())
}
