//! Softplus with sharpness `beta`: `s(z) = ln(1 + exp(beta z)) / beta`.

use crate::scalar::Real;

/// Returns `(s(z), s'(z))` using one `exp`; `s'(z)` is the logistic
/// `sigma(beta z)`. Stable for any `beta z`.
#[inline(always)]
pub fn softplus_and_slope<T: Real>(z: T, beta: T) -> (T, T) {
    let bz = beta * z;
    let e = (-bz.abs()).exp_nonpos();
    let value = (bz.max(T::zero()) + e.ln_1p_unit()) / beta;
    let inv = T::one() / (T::one() + e);
    let slope = if bz >= T::zero() { inv } else { e * inv };
    (value, slope)
}

/// `s''(z)` expressed through the slope `s'(z)`.
#[inline]
pub fn curvature_from_slope<T: Real>(slope: T, beta: T) -> T {
    beta * slope * (T::one() - slope)
}
