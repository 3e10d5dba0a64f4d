//! Thin wrappers over `libm` so numeric code reads like `std` float code.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, e: f64) -> f64 {
    libm::pow(x, e)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// `d^e` with the convention `d^0 = 1`, including at `d = 0`.
#[inline]
pub fn pow_or_one(d: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        powf(d, e)
    }
}

/// `|g|^(r-2) g` for a scalar, zero at the origin.
#[inline]
pub fn signed_pow(g: f64, r: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        powf(g.abs(), r - 1.0).copysign(g)
    }
}
