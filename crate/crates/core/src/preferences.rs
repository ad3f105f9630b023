//! Dual CRRA utility over real wealth: isoelastic with risk aversion γ_d below
//! the benchmark 𝒦 and γ_u above it, continuous at the kink.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCrraPrefs {
    pub gamma_d: f64,
    pub gamma_u: f64,
    /// Benchmark level of real wealth 𝒦.
    pub benchmark: f64,
}

impl DualCrraPrefs {
    pub fn new(gamma_d: f64, gamma_u: f64, benchmark: f64) -> Result<Self> {
        let p = Self {
            gamma_d,
            gamma_u,
            benchmark,
        };
        p.validate()?;
        Ok(p)
    }

    /// Plain CRRA with benchmark 1.
    pub fn crra(gamma: f64) -> Result<Self> {
        Self::new(gamma, gamma, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_d > 1.0 && self.gamma_u > 1.0) || !self.gamma_d.is_finite() || !self.gamma_u.is_finite() {
            return Err(Error::Config("risk aversions must exceed 1"));
        }
        if !(self.benchmark > 0.0 && self.benchmark.is_finite()) {
            return Err(Error::Config("benchmark must be positive"));
        }
        Ok(())
    }

    pub fn is_crra(&self) -> bool {
        self.gamma_d == self.gamma_u
    }

    /// Risk aversion of the branch containing real wealth `real`; the kink
    /// belongs to the down branch.
    fn gamma(&self, real: f64) -> f64 {
        if real <= self.benchmark {
            self.gamma_d
        } else {
            self.gamma_u
        }
    }
}

fn check_positive(a: f64, b: f64) -> Result<()> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("utility arguments must be positive"))
    }
}

/// U(x, π) = ((x/(𝒦π))^{1−γ} − 1)/(1−γ).
pub fn utility(x: f64, pi: f64, prefs: &DualCrraPrefs) -> Result<f64> {
    check_positive(x, pi)?;
    Ok(utility_unchecked(x / pi, prefs))
}

/// Utility of real wealth `real = x/π` without argument checks.
#[inline]
pub(crate) fn utility_unchecked(real: f64, prefs: &DualCrraPrefs) -> f64 {
    let g = prefs.gamma(real);
    let a = 1.0 - g;
    libm::expm1(a * libm::log(real / prefs.benchmark)) / a
}

/// ∂U/∂x = (x/(𝒦π))^{−γ}/(𝒦π).
pub fn marginal_utility(x: f64, pi: f64, prefs: &DualCrraPrefs) -> Result<f64> {
    check_positive(x, pi)?;
    let kp = prefs.benchmark * pi;
    let g = prefs.gamma(x / pi);
    Ok(libm::pow(x / kp, -g) / kp)
}

/// Inverse marginal utility I(y, π) = 𝒦π(y𝒦π)^{−1/γ}, down branch when y𝒦π ≥ 1.
pub fn inverse_marginal(y: f64, pi: f64, prefs: &DualCrraPrefs) -> Result<f64> {
    check_positive(y, pi)?;
    let kp = prefs.benchmark * pi;
    let g = if y * kp >= 1.0 {
        prefs.gamma_d
    } else {
        prefs.gamma_u
    };
    Ok(kp * libm::pow(y * kp, -1.0 / g))
}

/// Convex conjugate V(y, π) = U(I(y, π), π) − y·I(y, π).
pub fn conjugate(y: f64, pi: f64, prefs: &DualCrraPrefs) -> Result<f64> {
    let x = inverse_marginal(y, pi, prefs)?;
    Ok(utility(x, pi, prefs)? - y * x)
}

/// Reciprocal relative risk aversion, 1/γ of the active branch.
pub fn rra_reciprocal(x: f64, pi: f64, prefs: &DualCrraPrefs) -> f64 {
    1.0 / prefs.gamma(x / pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(gd: f64, gu: f64) -> DualCrraPrefs {
        DualCrraPrefs::new(gd, gu, 1.0).unwrap()
    }

    #[test]
    fn zero_utility_at_benchmark() {
        for k in [0.5, 1.0, 3.0] {
            let prefs = DualCrraPrefs::new(10.0, 2.0, k).unwrap();
            assert_eq!(utility(k * 1.3, 1.3, &prefs).unwrap(), 0.0);
        }
    }

    #[test]
    fn up_branch_value() {
        assert!((utility(2.0, 1.0, &p(10.0, 2.0)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn crra_reduction() {
        let prefs = p(4.0, 4.0);
        for x in [0.01, 0.3, 1.0, 2.5, 70.0] {
            let want = (libm::pow(x / 1.1, -3.0) - 1.0) / -3.0;
            assert!((utility(x, 1.1, &prefs).unwrap() - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn invalid_inputs() {
        let prefs = p(10.0, 2.0);
        assert!(utility(0.0, 1.0, &prefs).is_err());
        assert!(utility(1.0, -1.0, &prefs).is_err());
        assert!(marginal_utility(-1.0, 1.0, &prefs).is_err());
        assert!(inverse_marginal(0.0, 1.0, &prefs).is_err());
        assert!(conjugate(1.0, 0.0, &prefs).is_err());
        assert!(DualCrraPrefs::new(1.0, 2.0, 1.0).is_err());
        assert!(DualCrraPrefs::new(3.0, 0.5, 1.0).is_err());
        assert!(DualCrraPrefs::new(3.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn kink_continuity() {
        let prefs = p(10.0, 2.0);
        for pi in [0.5, 1.0, 2.0] {
            let lo = marginal_utility(pi * (1.0 - 1e-8), pi, &prefs).unwrap();
            let hi = marginal_utility(pi * (1.0 + 1e-8), pi, &prefs).unwrap();
            assert!((marginal_utility(pi, pi, &prefs).unwrap() - 1.0 / pi).abs() < 1e-15);
            assert!((lo - hi).abs() < 1e-6);
            let ulo = utility(pi * (1.0 - 1e-8), pi, &prefs).unwrap();
            let uhi = utility(pi * (1.0 + 1e-8), pi, &prefs).unwrap();
            assert!((ulo - uhi).abs() < 1e-7);
        }
        assert_eq!(inverse_marginal(1.0, 1.0, &prefs).unwrap(), 1.0);
    }

    #[test]
    fn round_trip_both_branches() {
        let prefs = p(10.0, 2.0);
        for x in [0.5, 2.0] {
            let y = marginal_utility(x, 1.0, &prefs).unwrap();
            assert!((inverse_marginal(y, 1.0, &prefs).unwrap() - x).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_examples() {
        let g = 5.0;
        let prefs = p(g, g);
        for y in [0.1, 0.7, 1.0, 4.0] {
            let want = g / (1.0 - g) * libm::pow(y, 1.0 - 1.0 / g) - 1.0 / (1.0 - g);
            assert!((conjugate(y, 1.0, &prefs).unwrap() - want).abs() < 1e-12);
        }
        assert!((conjugate(1.0, 1.0, &p(10.0, 2.0)).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn fenchel_inequality_on_grid() {
        let prefs = p(10.0, 2.0);
        for i in 0..100 {
            let x = libm::pow(10.0, -2.0 + 4.0 * i as f64 / 99.0);
            for j in 0..100 {
                let y = libm::pow(10.0, -2.0 + 4.0 * j as f64 / 99.0);
                let v = conjugate(y, 1.2, &prefs).unwrap();
                let u = utility(x, 1.2, &prefs).unwrap();
                assert!(v - (u - y * x) >= -1e-12 * (1.0 + v.abs()), "x={x} y={y}");
            }
        }
    }

    #[test]
    fn rra_branches() {
        let prefs = p(10.0, 2.0);
        assert_eq!(rra_reciprocal(0.5, 1.0, &prefs), 0.1);
        assert_eq!(rra_reciprocal(2.0, 1.0, &prefs), 0.5);
        for x in [0.1, 1.0, 9.0] {
            assert_eq!(rra_reciprocal(x, 1.0, &p(5.0, 5.0)), 0.2);
        }
    }

    #[test]
    fn shape_on_log_grid() {
        let prefs = p(10.0, 2.0);
        let mut prev = f64::INFINITY;
        for i in 0..=120 {
            let x = libm::pow(10.0, -3.0 + 6.0 * i as f64 / 120.0);
            let m = marginal_utility(x, 1.0, &prefs).unwrap();
            assert!(m > 0.0 && m.is_finite());
            assert!(m < prev);
            prev = m;
            let h = 1e-3 * x;
            let second = utility(x + h, 1.0, &prefs).unwrap() - 2.0 * utility(x, 1.0, &prefs).unwrap()
                + utility(x - h, 1.0, &prefs).unwrap();
            assert!(second < 0.0, "x={x}");
        }
        assert!(marginal_utility(1e-3, 1.0, &prefs).unwrap() > 1e29);
        assert!(marginal_utility(1e3, 1.0, &prefs).unwrap() < 1e-5);
    }

    proptest! {
        #[test]
        fn finite_difference_matches_marginal(x in 0.01f64..50.0, pi in 0.5f64..2.0) {
            let prefs = p(10.0, 2.0);
            let real = x / pi;
            prop_assume!((real - 1.0).abs() > 1e-3);
            let h = 1e-6 * x;
            let fd = (utility(x + h, pi, &prefs).unwrap() - utility(x - h, pi, &prefs).unwrap()) / (2.0 * h);
            let m = marginal_utility(x, pi, &prefs).unwrap();
            prop_assert!((fd / m - 1.0).abs() < 1e-6);
        }

        #[test]
        fn conjugate_decreasing_and_convex(y in 0.01f64..20.0, gd in 1.5f64..20.0, gu in 1.5f64..20.0) {
            let prefs = p(gd, gu);
            let h = 1e-3 * y;
            let a = conjugate(y - h, 1.0, &prefs).unwrap();
            let b = conjugate(y, 1.0, &prefs).unwrap();
            let c = conjugate(y + h, 1.0, &prefs).unwrap();
            prop_assert!(c < b && b < a);
            prop_assert!(a + c - 2.0 * b >= -1e-12 * b.abs().max(1.0));
        }
    }
}
