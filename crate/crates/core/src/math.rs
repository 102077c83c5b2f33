//! `f64` functions missing from `core`.
//!
//! Always routed through `libm`, with or without `std`, so results are
//! bit-identical across platforms.

pub use libm::{ceil, exp, floor, log as ln, sqrt, tanh};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

#[inline]
pub fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

/// Rounds to `digits` significant decimal digits.
///
/// The result prints (via `Display`) with at most `digits` significant
/// digits, which keeps serialized values and in-memory values identical.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let s = alloc::format!("{:.*e}", digits.saturating_sub(1), x);
    s.parse().unwrap_or(x)
}

/// [`round_sig`] at the 9 digits used by every on-disk float.
pub fn round9(x: f64) -> f64 {
    round_sig(x, 9)
}
