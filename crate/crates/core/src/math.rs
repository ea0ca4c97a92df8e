//! Float helpers that work both with and without `std`.

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn exp(x: f64) -> f64 {
    x.exp()
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Half the squared Euclidean norm.
#[inline]
pub(crate) fn half_sq_norm(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &x in v {
        acc += x * x;
    }
    0.5 * acc
}
