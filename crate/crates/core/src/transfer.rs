//! Scaled softplus `f(x) = s log(1 + exp(x / s))` and the logistic function.

use libm::{exp, log1p};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `s log(1 + exp(x / s))`, evaluated without overflow for large `|x / s|`.
#[inline]
pub fn softplus_scaled(x: f64, s: f64) -> f64 {
    debug_assert!(s > 0.0);
    let u = x / s;
    if u <= 0.0 {
        s * log1p(exp(u))
    } else {
        x + s * log1p(exp(-u))
    }
}

/// `d f / d x = sigmoid(x / s)`.
#[inline]
pub fn softplus_dx(x: f64, s: f64) -> f64 {
    sigmoid(x / s)
}

/// `d f / d s = log(1 + exp(u)) - u sigmoid(u)` with `u = x / s`.
#[inline]
pub fn softplus_ds(x: f64, s: f64) -> f64 {
    let u = x / s;
    softplus_scaled(u, 1.0) - u * sigmoid(u)
}

/// Inverse of the unit softplus, `log(exp(y) - 1)` for `y > 0`.
#[inline]
pub fn softplus_inv(y: f64) -> f64 {
    debug_assert!(y > 0.0);
    if y > 30.0 {
        y + log1p(-exp(-y))
    } else {
        libm::log(libm::expm1(y))
    }
}
