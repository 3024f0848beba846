use core::f64::consts::{PI, SQRT_2};

pub fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Closed-form expected improvement over `best`. With `maximize` false the
/// improvement is `best − mean`. Zero variance gives the plain improvement,
/// floored at zero.
pub fn expected_improvement(mean: f64, variance: f64, best: f64, maximize: bool) -> f64 {
    let improvement = if maximize { mean - best } else { best - mean };
    let sigma = libm::sqrt(variance.max(0.0));
    if sigma < 1e-12 {
        return improvement.max(0.0);
    }
    let z = improvement / sigma;
    (improvement * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}
