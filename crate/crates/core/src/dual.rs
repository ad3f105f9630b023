//! Closed-form dual side: lognormal moments of the artificial real kernel, the
//! two-equation system for (η, λ̂ᵤ), and the analytic upper bound.

use crate::market::{duration, MarketParams, PathSet};
use crate::normal;
use crate::preferences::{self, DualCrraPrefs};
use crate::{linalg, roots, stats, Error, Result};

use alloc::vec::Vec;

/// Which optimization produced a pair of controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Dual,
    Primal,
}

/// Lagrange multiplier η and constant shadow price λ̂ᵤ of non-traded risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub eta: f64,
    pub lambda_u_hat: f64,
    pub side: Side,
}

/// Moments of log(K_T/K_t), where K is the real kernel M̂ shifted by
/// ξ_u(λ_u − λ̂ᵤ)t so that K/Π deflates at the market nominal rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMoments {
    /// Mean μ_T^M of the log kernel over (t, T].
    pub mean: f64,
    pub mu_d: f64,
    pub mu_u: f64,
    pub sigma_m: f64,
    /// B_{t,T} = (σ_r/κ)(1 − e^{−κ(T−t)}).
    pub b_factor: f64,
}

/// r-independent pieces of the kernel moments at one point of the grid:
/// mean = `mean_const` − `mean_slope`·r_t.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MomentCoefficients {
    pub mean_const: f64,
    pub mean_slope: f64,
    pub variance: f64,
    pub b_factor: f64,
}

impl MomentCoefficients {
    pub fn new(t: f64, horizon: f64, params: &MarketParams, lambda_u_hat: f64) -> Result<Self> {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::Domain("moments need 0 <= t <= T"));
        }
        let delta = horizon - t;
        let q = params.kernel_variance_rate(lambda_u_hat);
        let b = duration(params.kappa, delta);
        let k = params.kappa;
        let rho_phi_r = linalg::mat_vec(&params.rho(), &params.phi)[1];
        let sr = params.sigma_r;
        let mut variance = q * delta + (sr * sr / (k * k)) * (delta - b - 0.5 * k * b * b)
            - 2.0 * (sr / k) * rho_phi_r * (delta - b);
        if variance < -1e-10 {
            return Err(Error::NegativeVariance(variance));
        }
        variance = variance.max(0.0);
        let drift = params.r_bar - params.xi_u * (params.lambda_u - lambda_u_hat) + 0.5 * q;
        Ok(Self {
            mean_const: params.r_bar * b - drift * delta,
            mean_slope: b,
            variance,
            b_factor: sr * b,
        })
    }

    pub fn mean(&self, r: f64) -> f64 {
        self.mean_const - self.mean_slope * r
    }
}

/// Lognormal moments of the kernel over (t, T] given the current real rate.
pub fn kernel_moments(
    t: f64,
    horizon: f64,
    r_t: f64,
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    lambda_u_hat: f64,
) -> Result<KernelMoments> {
    let c = MomentCoefficients::new(t, horizon, params, lambda_u_hat)?;
    let mean = c.mean(r_t);
    Ok(KernelMoments {
        mean,
        mu_d: mean + (1.0 - 1.0 / prefs.gamma_d) * c.variance,
        mu_u: mean + (1.0 - 1.0 / prefs.gamma_u) * c.variance,
        sigma_m: libm::sqrt(c.variance),
        b_factor: c.b_factor,
    })
}

/// X^{γ} = η^{−1/γ}·exp((1 − 1/γ)μ_T^M + ½(1 − 1/γ)²σ²), the value of the
/// γ-branch payoff before truncation, for benchmark 𝒦 = 1.
pub fn x_gamma(eta: f64, gamma: f64, moments: &KernelMoments) -> f64 {
    let a = 1.0 - 1.0 / gamma;
    let s2 = moments.sigma_m * moments.sigma_m;
    libm::exp(-libm::log(eta) / gamma + a * moments.mean + 0.5 * a * a * s2)
}

/// N(num/s), with the s = 0 limit assigning ties to the upper side.
#[inline]
pub(crate) fn cdf_ratio(num: f64, s: f64) -> f64 {
    if s > 0.0 {
        normal::cdf(num / s)
    } else if num >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Both branches of the dual-optimal payoff I(ηZ_T) conditional on a kernel
/// level: X^{γ_i}, the truncation probabilities N_i under the tilted measure,
/// and P_i = Prob(branch i).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Branches {
    pub x: [f64; 2],
    pub n: [f64; 2],
    pub p: [f64; 2],
}

impl Branches {
    /// `log_level` is log K_t (0 at the origin); `mean`, `variance` are the
    /// moments of log(K_T/K_t).
    pub fn new(eta: f64, prefs: &DualCrraPrefs, log_level: f64, mean: f64, variance: f64) -> Self {
        Self::from_log_eta(libm::log(eta), prefs, log_level, mean, variance)
    }

    pub fn from_log_eta(ln_eta: f64, prefs: &DualCrraPrefs, log_level: f64, mean: f64, variance: f64) -> Self {
        let ln_k = libm::log(prefs.benchmark);
        let ln_ek = ln_eta + ln_k;
        let s = libm::sqrt(variance);
        let z = ln_ek + log_level + mean;
        let mut x = [0.0; 2];
        let mut n = [0.0; 2];
        for (i, (&g, sign)) in [prefs.gamma_d, prefs.gamma_u].iter().zip([1.0, -1.0]).enumerate() {
            let a = 1.0 - 1.0 / g;
            x[i] = libm::exp(ln_k - ln_ek / g + a * (log_level + mean) + 0.5 * a * a * variance);
            n[i] = cdf_ratio(sign * (z + a * variance), s);
        }
        let pd = cdf_ratio(z, s);
        Self {
            x,
            n,
            p: [pd, 1.0 - pd],
        }
    }

    pub fn value(&self) -> f64 {
        self.x[0] * self.n[0] + self.x[1] * self.n[1]
    }

    /// Σᵢ (1/γᵢ)·X^{γᵢ}·Nᵢ.
    pub fn tolerance_weighted(&self, prefs: &DualCrraPrefs) -> f64 {
        self.x[0] * self.n[0] / prefs.gamma_d + self.x[1] * self.n[1] / prefs.gamma_u
    }
}

const ETA_BRACKET: (f64, f64) = (1e-8, 1e8);
const MAX_OUTER: usize = 200;
const DAMPING: f64 = 0.5;
const TOL: f64 = 1e-12;

/// Multiplier η that meets the budget Σᵢ X^{γᵢ}Nᵢ = x0 at a fixed shadow price.
pub fn solve_budget(
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    x0: f64,
    horizon: f64,
    lambda_u_hat: f64,
) -> Result<f64> {
    let c = MomentCoefficients::new(0.0, horizon, params, lambda_u_hat)?;
    let mean = c.mean(params.r0);
    let residual =
        |ln_eta: f64| Branches::from_log_eta(ln_eta, prefs, 0.0, mean, c.variance).value() / x0 - 1.0;
    let (lo, hi) = (libm::log(ETA_BRACKET.0), libm::log(ETA_BRACKET.1));
    let ln_eta = roots::brent(residual, lo, hi, 1e-15, 200).map_err(|e| match e {
        Error::Bracket { .. } => Error::Bracket {
            lo: ETA_BRACKET.0,
            hi: ETA_BRACKET.1,
        },
        other => other,
    })?;
    Ok(libm::exp(ln_eta))
}

/// Right-hand side of the shadow-price equation,
/// (1 − x0/Σᵢ(1/γᵢ)Nᵢ X^{γᵢ})·ξ_u, at given controls.
pub fn shadow_price_update(
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    x0: f64,
    horizon: f64,
    controls: &Controls,
) -> Result<f64> {
    let c = MomentCoefficients::new(0.0, horizon, params, controls.lambda_u_hat)?;
    let b = Branches::new(controls.eta, prefs, 0.0, c.mean(params.r0), c.variance);
    Ok((1.0 - x0 / b.tolerance_weighted(prefs)) * params.xi_u)
}

/// Solves the dual system for (η, λ̂ᵤ) by damped fixed-point iteration on λ̂ᵤ
/// with the budget equation solved for η at each step.
pub fn solve_dual(
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    x0: f64,
    horizon: f64,
) -> Result<Controls> {
    params.validate()?;
    prefs.validate()?;
    if !(x0 > 0.0 && horizon > 0.0) {
        return Err(Error::Domain("x0 and horizon must be positive"));
    }
    let mut lh = (1.0 - 0.5 * (prefs.gamma_d + prefs.gamma_u)) * params.xi_u;
    for _ in 0..MAX_OUTER {
        let eta = solve_budget(params, prefs, x0, horizon, lh)?;
        let controls = Controls {
            eta,
            lambda_u_hat: lh,
            side: Side::Dual,
        };
        let next = shadow_price_update(params, prefs, x0, horizon, &controls)?;
        if (next - lh).abs() <= TOL {
            let eta = solve_budget(params, prefs, x0, horizon, next)?;
            return Ok(Controls {
                eta,
                lambda_u_hat: next,
                side: Side::Dual,
            });
        }
        lh = (1.0 - DAMPING) * lh + DAMPING * next;
    }
    Err(Error::NoConvergence {
        iterations: MAX_OUTER,
    })
}

/// Analytic dual objective E[V(ηZ_T, Π_T)] + η·x0 at the given controls.
///
/// At the solution of [`solve_dual`] the budget term vanishes and this is the
/// expected utility of the dual-optimal payoff.
pub fn upper_bound(
    controls: &Controls,
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    x0: f64,
    horizon: f64,
) -> Result<f64> {
    if !(controls.eta > 0.0) {
        return Err(Error::Domain("eta must be positive"));
    }
    let c = MomentCoefficients::new(0.0, horizon, params, controls.lambda_u_hat)?;
    let b = Branches::new(controls.eta, prefs, 0.0, c.mean(params.r0), c.variance);
    let eta = controls.eta;
    let expected_utility = (eta * b.x[0] * b.n[0] - b.p[0]) / (1.0 - prefs.gamma_d)
        + (eta * b.x[1] * b.n[1] - b.p[1]) / (1.0 - prefs.gamma_u);
    Ok(expected_utility + eta * (x0 - b.value()))
}

/// log K_T on path `p`: the stored log M̂_T plus ξ_u(λ_u − λ̂ᵤ)T.
fn log_terminal_kernel(paths: &PathSet, p: usize, params: &MarketParams) -> f64 {
    let m = paths.n_steps();
    paths.log_kernel_path(p)[m]
        + params.xi_u * (params.lambda_u - paths.lambda_u_hat) * paths.horizon()
}

fn require_matching(paths: &PathSet, lambda_u_hat: f64) -> Result<()> {
    if paths.lambda_u_hat != lambda_u_hat {
        return Err(Error::Domain("paths were simulated under a different shadow price"));
    }
    Ok(())
}

/// Monte Carlo estimate (mean, standard error) of E[V(ηZ_T, Π_T)] + η·x0.
pub fn dual_objective_mc(
    paths: &PathSet,
    controls: &Controls,
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    x0: f64,
) -> Result<(f64, f64)> {
    require_matching(paths, controls.lambda_u_hat)?;
    let m = paths.n_steps();
    let values = (0..paths.n_paths)
        .map(|p| {
            let log_pi = paths.log_price_index_path(p)[m];
            let z = libm::exp(log_terminal_kernel(paths, p, params) - log_pi);
            let pi = libm::exp(log_pi);
            preferences::conjugate(controls.eta * z, pi, prefs).map(|v| v + controls.eta * x0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats::mean_stderr(&values))
}

/// Monte Carlo estimate of X^{γ} = E[η^{−1/γ}K_T^{1−1/γ}] (benchmark 1).
pub fn x_gamma_mc(paths: &PathSet, eta: f64, gamma: f64, params: &MarketParams) -> (f64, f64) {
    let a = 1.0 - 1.0 / gamma;
    let values: Vec<f64> = (0..paths.n_paths)
        .map(|p| libm::exp(-libm::log(eta) / gamma + a * log_terminal_kernel(paths, p, params)))
        .collect();
    stats::mean_stderr(&values)
}

/// Terminal log kernel levels log K_T across paths.
pub fn terminal_log_kernel(paths: &PathSet, params: &MarketParams) -> Vec<f64> {
    (0..paths.n_paths)
        .map(|p| log_terminal_kernel(paths, p, params))
        .collect()
}
