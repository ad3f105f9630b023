//! Sample statistics for Monte Carlo estimates.

/// Sample mean and standard error of the mean (n − 1 denominator).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, libm::sqrt(ss / (n - 1.0) / n))
}

/// Sample variance (n − 1 denominator).
pub fn variance(values: &[f64]) -> f64 {
    let (_, se) = mean_stderr(values);
    se * se * values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sample() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - libm::sqrt(5.0 / 3.0 / 4.0)).abs() < 1e-15);
        assert!((variance(&[1.0, 2.0, 3.0, 4.0]) - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn constant_sample_has_zero_error() {
        assert_eq!(mean_stderr(&[0.5; 10]), (0.5, 0.0));
    }
}
