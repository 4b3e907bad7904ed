//! Float helpers routed through `libm` so the crate stays `no_std` and the
//! results are bit-identical across platforms.

#![allow(unused_imports)]

pub(crate) use libm::{
    atan2, ceil, cos, exp, fabs as abs, floor, hypot, log as ln, pow, round, sin, sqrt,
};

use core::f64::consts::TAU;

/// Wrap an angle into `[0, 2π)`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a < 0.0 {
        a += TAU;
    }
    // `-1e-17 % TAU` rounds to TAU itself; fold it back.
    if a >= TAU {
        a -= TAU;
    }
    a
}
