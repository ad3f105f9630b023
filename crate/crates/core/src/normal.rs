//! Standard normal distribution.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF, N(x) = ½·erfc(−x/√2).
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}
