// Thin wrappers so the numerics build identically with and without std.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// `log(sum(exp(terms)))`, ignoring `-inf` entries. Returns `-inf` when all
/// terms are `-inf` or the slice is empty.
pub(crate) fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = terms.map(|t| exp(t - m)).sum();
    m + ln(s)
}
