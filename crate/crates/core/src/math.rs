//! Thin wrappers over `libm` so the crate builds without `std`.

#[inline]
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn powf(x: f64, e: f64) -> f64 {
    libm::pow(x, e)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// `|x|^e` with the convention `0^e = 0` for `e > 0`.
#[inline]
pub(crate) fn abs_pow(x: f64, e: f64) -> f64 {
    let a = x.abs();
    if e == 1.0 {
        a
    } else if a == 0.0 {
        if e > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        powf(a, e)
    }
}
