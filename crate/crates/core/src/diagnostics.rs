//! Evaluation layer: duality gap, compensating variation, annual loss, kernel
//! density estimates and the one-asset allocation curve.

use alloc::vec::Vec;

use crate::dual::{Branches, Controls};
use crate::normal;
use crate::preferences::{utility_unchecked, DualCrraPrefs};
use crate::primal::{blend_weight_log_eta, LowerBoundEstimate, WealthSample};
use crate::{roots, stats, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub lower: LowerBoundEstimate,
    pub upper: f64,
    pub gap: f64,
    pub cv: f64,
    pub al_bp: f64,
    pub controls_primal: Controls,
    pub controls_dual: Controls,
}

impl BoundsReport {
    /// Weak duality up to two standard errors of the lower bound.
    pub fn weak_duality_holds(&self) -> bool {
        self.gap >= -2.0 * self.lower.stderr
    }
}

pub fn duality_gap(lower: &LowerBoundEstimate, upper: f64) -> f64 {
    upper - lower.value
}

/// Lower bound of a sample whose initial endowment is scaled by `factor`.
fn scaled_value(sample: &WealthSample, prefs: &DualCrraPrefs, factor: f64) -> f64 {
    let u: Vec<f64> = sample
        .terminal_wealth
        .iter()
        .zip(&sample.terminal_price_index)
        .map(|(x, pi)| utility_unchecked(factor * x / pi, prefs))
        .collect();
    stats::mean_stderr(&u).0
}

const CV_ITERATIONS: usize = 80;
const CV_TOL: f64 = 1e-10;

/// Extra endowment `cv` with Ĵ^L(x0 + cv) = `upper`, found by bisection on
/// [0, x0] over the frozen sample.
///
/// Exposures are independent of the wealth level, so the sample at endowment
/// x0 + cv is the stored one scaled by (1 + cv/x0).
pub fn compensating_variation(
    sample: &WealthSample,
    prefs: &DualCrraPrefs,
    x0: f64,
    upper: f64,
) -> Result<f64> {
    if sample.is_empty() || !(x0 > 0.0) {
        return Err(Error::Domain("compensating variation needs a sample and x0 > 0"));
    }
    let excess = |cv: f64| scaled_value(sample, prefs, 1.0 + cv / x0) - upper;
    if excess(0.0) >= 0.0 {
        return Ok(0.0);
    }
    if excess(x0) < 0.0 {
        return Err(Error::Bracket { lo: 0.0, hi: x0 });
    }
    let (mut lo, mut hi) = (0.0, x0);
    for _ in 0..CV_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let e = excess(mid);
        if e.abs() < CV_TOL {
            return Ok(mid);
        }
        if e < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Annualized welfare loss in basis points, ((1 + cv/x0)^{1/T} − 1)·10⁴.
pub fn annual_loss(cv: f64, x0: f64, horizon: f64) -> f64 {
    libm::expm1(libm::log1p(cv / x0) / horizon) * 1e4
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Curve {
    /// Trapezoid integral of y over x.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

pub const KDE_POINTS: usize = 512;
/// Grid margin beyond the sample range, in bandwidths.
pub const KDE_MARGIN: f64 = 4.0;

/// Gaussian kernel density estimate on 512 points spanning the sample range
/// widened by four bandwidths on each side.
pub fn kde(samples: &[f64], bandwidth: f64) -> Result<Curve> {
    let (lo, hi) = sample_range(samples)?;
    kde_on_grid(samples, bandwidth, lo - KDE_MARGIN * bandwidth, hi + KDE_MARGIN * bandwidth, KDE_POINTS)
}

/// Smallest and largest finite sample value.
pub fn sample_range(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() || samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("density estimation needs finite samples"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Gaussian kernel density estimate on `n` equidistant points in [lo, hi].
pub fn kde_on_grid(samples: &[f64], bandwidth: f64, lo: f64, hi: f64, n: usize) -> Result<Curve> {
    sample_range(samples)?;
    if !(bandwidth > 0.0) || !(hi > lo) || n < 2 {
        return Err(Error::Domain("density grid needs h > 0, hi > lo and n >= 2"));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let scale = 1.0 / (samples.len() as f64 * bandwidth);
    let y = x
        .iter()
        .map(|&g| scale * samples.iter().map(|s| normal::pdf((g - s) / bandwidth)).sum::<f64>())
        .collect();
    Ok(Curve { x, y })
}

/// One risky asset with price of risk `lambda` and volatility `sigma`; zero
/// interest and inflation, unit price index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedEconomy {
    pub lambda: f64,
    pub sigma: f64,
    pub horizon: f64,
}

impl ReducedEconomy {
    pub fn figure() -> Self {
        Self {
            lambda: 0.343,
            sigma: 0.158,
            horizon: 1.0,
        }
    }
}

/// Optimal stock weight at time 0 against initial real wealth.
///
/// For each wealth level the multiplier η solves the budget Σᵢ X^{γᵢ}Nᵢ = X,
/// and the weight is λw/σ with w the branch blend.
pub fn allocation_curve(
    prefs: &DualCrraPrefs,
    economy: &ReducedEconomy,
    wealth_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    prefs.validate()?;
    if !(economy.sigma > 0.0 && economy.horizon > 0.0) {
        return Err(Error::Domain("reduced economy needs sigma > 0 and T > 0"));
    }
    let variance = economy.lambda * economy.lambda * economy.horizon;
    let mean = -0.5 * variance;
    wealth_grid
        .iter()
        .map(|&x| {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Domain("wealth grid must be positive"));
            }
            let ln_x = libm::log(x);
            let ln_eta = roots::brent(
                |le| libm::log(Branches::from_log_eta(le, prefs, 0.0, mean, variance).value()) - ln_x,
                -700.0,
                700.0,
                1e-13,
                300,
            )?;
            let w = blend_weight_log_eta(ln_eta, prefs, 0.0, mean, variance);
            Ok((x, economy.lambda * w / economy.sigma))
        })
        .collect()
}
