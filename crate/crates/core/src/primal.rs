//! Projected primal strategy: the dual-optimal portfolio rule with zero exposure
//! to the non-traded risk, simulated in log wealth to obtain a lower bound.

use alloc::vec::Vec;

use crate::dual::{cdf_ratio, Branches, Controls, MomentCoefficients, Side};
use crate::linalg::{self, Mat3, Vec3};
use crate::market::{nominal_rate, sigma_matrix, KernelStep, MarketParams, PathSet};
use crate::optimize::nelder_mead;
use crate::preferences::{utility_unchecked, DualCrraPrefs};
use crate::{stats, Error, Executor, Result};

/// Conditioning information at a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub r: f64,
    /// log M̂_t of the artificial kernel with z_u loading ξ_u − λ̂ᵤ.
    pub log_kernel: f64,
    pub log_price_index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WealthSample {
    pub terminal_wealth: Vec<f64>,
    pub terminal_price_index: Vec<f64>,
    /// Nominal state price density Z_T on each path.
    pub terminal_deflator: Vec<f64>,
    pub n_steps: usize,
    /// Portfolio weights (stock, bond 1, bond 2), `n_steps × 3` per path.
    pub weights: Option<Vec<f64>>,
    /// Wealth at every grid point, `n_steps + 1` per path.
    pub wealth_paths: Option<Vec<f64>>,
}

impl WealthSample {
    pub fn len(&self) -> usize {
        self.terminal_wealth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal_wealth.is_empty()
    }

    /// The sample obtained by scaling the initial endowment by `factor`. Exposures
    /// do not depend on the wealth level, so terminal wealth scales pathwise.
    pub fn scaled(&self, factor: f64) -> WealthSample {
        WealthSample {
            terminal_wealth: self.terminal_wealth.iter().map(|x| x * factor).collect(),
            terminal_price_index: self.terminal_price_index.clone(),
            terminal_deflator: self.terminal_deflator.clone(),
            n_steps: self.n_steps,
            weights: self.weights.clone(),
            wealth_paths: self
                .wealth_paths
                .as_ref()
                .map(|w| w.iter().map(|x| x * factor).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
}

impl LowerBoundEstimate {
    pub fn from_mean_stderr(value: f64, stderr: f64) -> Self {
        Self {
            value,
            stderr,
            ci95: (value - 1.96 * stderr, value + 1.96 * stderr),
        }
    }
}

/// Dollar exposures x̄ = Σᵀx to the traded factors at grid index `k`.
pub trait ExposureRule: Sync {
    fn exposure(&self, k: usize, state: &PathState) -> Vec3;
}

/// Holds only the money-market account.
#[derive(Debug, Clone, Copy, Default)]
pub struct MoneyMarketOnly;

impl ExposureRule for MoneyMarketOnly {
    fn exposure(&self, _k: usize, _state: &PathState) -> Vec3 {
        [0.0; 3]
    }
}

#[derive(Debug, Clone, Copy)]
struct StepCoefficients {
    moments: MomentCoefficients,
    level_shift: f64,
    hedge: Vec3,
}

/// The projected dual-optimal rule: a blend of the two branch demands,
/// x̄ = (ξ − φ)·w + A·(1 − w) with A = ξ − B_{t,T}e₂, precomputed on a grid.
#[derive(Debug, Clone)]
pub struct ProjectedRule {
    steps: Vec<StepCoefficients>,
    tangency: Vec3,
    prefs: DualCrraPrefs,
    eta: f64,
}

impl ProjectedRule {
    pub fn new(
        grid: &[f64],
        horizon: f64,
        controls: &Controls,
        params: &MarketParams,
        prefs: &DualCrraPrefs,
    ) -> Result<Self> {
        if !(controls.eta > 0.0) {
            return Err(Error::Domain("eta must be positive"));
        }
        let steps = grid
            .iter()
            .map(|&t| step_coefficients(t, horizon, controls, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            steps,
            tangency: tangency(params),
            prefs: *prefs,
            eta: controls.eta,
        })
    }

    /// Blend weight w ∈ [min 1/γ, max 1/γ] at grid index `k`.
    pub fn blend(&self, k: usize, state: &PathState) -> f64 {
        let c = &self.steps[k];
        blend_weight_raw(
            self.eta,
            &self.prefs,
            state.log_kernel + c.level_shift,
            c.moments.mean(state.r),
            c.moments.variance,
        )
    }
}

impl ExposureRule for ProjectedRule {
    fn exposure(&self, k: usize, state: &PathState) -> Vec3 {
        let w = self.blend(k, state);
        let a = &self.steps[k].hedge;
        core::array::from_fn(|i| self.tangency[i] * w + a[i] * (1.0 - w))
    }
}

fn tangency(params: &MarketParams) -> Vec3 {
    core::array::from_fn(|i| params.xi[i] - params.phi[i])
}

fn step_coefficients(
    t: f64,
    horizon: f64,
    controls: &Controls,
    params: &MarketParams,
) -> Result<StepCoefficients> {
    let moments = MomentCoefficients::new(t, horizon, params, controls.lambda_u_hat)?;
    Ok(StepCoefficients {
        moments,
        level_shift: params.xi_u * (params.lambda_u - controls.lambda_u_hat) * t,
        hedge: [params.xi[0], params.xi[1] - moments.b_factor, params.xi[2]],
    })
}

/// Σᵢ(1/γᵢ)cᵢ / Σᵢcᵢ with cᵢ = X^{γᵢ}_t N(±d_i), evaluated with one exponential.
fn blend_weight_raw(eta: f64, prefs: &DualCrraPrefs, log_level: f64, mean: f64, variance: f64) -> f64 {
    blend_weight_log_eta(libm::log(eta), prefs, log_level, mean, variance)
}

pub(crate) fn blend_weight_log_eta(
    ln_eta: f64,
    prefs: &DualCrraPrefs,
    log_level: f64,
    mean: f64,
    variance: f64,
) -> f64 {
    let (gd, gu) = (prefs.gamma_d, prefs.gamma_u);
    if prefs.is_crra() {
        return 1.0 / gd;
    }
    let ln_ek = ln_eta + libm::log(prefs.benchmark);
    let s = libm::sqrt(variance);
    let z = ln_ek + log_level + mean;
    let (ad, au) = (1.0 - 1.0 / gd, 1.0 - 1.0 / gu);
    let nd = cdf_ratio(z + ad * variance, s);
    let nu = cdf_ratio(-(z + au * variance), s);
    let log_ratio = ln_ek * (1.0 / gd - 1.0 / gu)
        + (au - ad) * (log_level + mean)
        + 0.5 * (au * au - ad * ad) * variance;
    let cu = libm::exp(log_ratio) * nu;
    let total = nd + cu;
    if !(total > 0.0) || !total.is_finite() {
        return if log_ratio > 0.0 { 1.0 / gu } else { 1.0 / gd };
    }
    (nd / gd + cu / gu) / total
}

fn check_time(t: f64, horizon: f64) -> Result<()> {
    if !(0.0..horizon).contains(&t) {
        return Err(Error::Domain("rebalancing needs 0 <= t < T"));
    }
    Ok(())
}

/// Blend weight of the two branch demands at time `t` in state `state`.
pub fn blend_weight(
    t: f64,
    state: &PathState,
    controls: &Controls,
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    horizon: f64,
) -> Result<f64> {
    check_time(t, horizon)?;
    let c = step_coefficients(t, horizon, controls, params)?;
    Ok(blend_weight_raw(
        controls.eta,
        prefs,
        state.log_kernel + c.level_shift,
        c.moments.mean(state.r),
        c.moments.variance,
    ))
}

/// Portfolio weights (stock, bond 1, bond 2) x = (Σ_tᵀ)⁻¹x̄ of the projected rule.
pub fn portfolio_weights(
    t: f64,
    state: &PathState,
    controls: &Controls,
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    horizon: f64,
) -> Result<Vec3> {
    check_time(t, horizon)?;
    let rule = ProjectedRule::new(&[t], horizon, controls, params, prefs)?;
    let xbar = rule.exposure(0, state);
    let sigma = sigma_matrix(t, params, params.maturities(horizon))?;
    linalg::solve(&linalg::transpose(&sigma), &xbar).ok_or(Error::SingularSigma { t })
}

/// Market value at `t` of the dual-optimal terminal payoff,
/// X_t = Π_t·Σᵢ X^{γᵢ}_t N(±dᵢ) / K_t.
pub fn market_value_wealth(
    t: f64,
    state: &PathState,
    controls: &Controls,
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    horizon: f64,
) -> Result<f64> {
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::Domain("valuation needs 0 <= t <= T"));
    }
    let c = step_coefficients(t, horizon, controls, params)?;
    let level = state.log_kernel + c.level_shift;
    let b = Branches::new(controls.eta, prefs, level, c.moments.mean(state.r), c.moments.variance);
    Ok(b.value() * libm::exp(state.log_price_index - level))
}

/// Inverse transposed loading matrices on the rebalancing grid.
fn weight_maps(paths: &PathSet, params: &MarketParams) -> Result<Vec<Mat3>> {
    let horizon = paths.horizon();
    params.validate_horizon(horizon)?;
    let maturities = params.maturities(horizon);
    paths.grid[..paths.n_steps()]
        .iter()
        .map(|&t| {
            let st = linalg::transpose(&sigma_matrix(t, params, maturities)?);
            let cols: [Vec3; 3] = [
                linalg::solve(&st, &[1.0, 0.0, 0.0]).ok_or(Error::SingularSigma { t })?,
                linalg::solve(&st, &[0.0, 1.0, 0.0]).ok_or(Error::SingularSigma { t })?,
                linalg::solve(&st, &[0.0, 0.0, 1.0]).ok_or(Error::SingularSigma { t })?,
            ];
            Ok(core::array::from_fn(|i| core::array::from_fn(|j| cols[j][i])))
        })
        .collect()
}

struct PathOutcome {
    log_wealth: f64,
    log_price_index: f64,
    log_deflator: f64,
    weights: Vec<f64>,
    wealth: Vec<f64>,
}

/// Log-Euler wealth recursion under an arbitrary exposure rule.
///
/// The artificial kernel is rebuilt from the stored increments under
/// `lambda_u_hat`, so one path set serves any controls. Only the three traded
/// increments enter the wealth shock.
pub fn simulate_wealth_with<E: Executor, R: ExposureRule>(
    paths: &PathSet,
    rule: &R,
    lambda_u_hat: f64,
    params: &MarketParams,
    x0: f64,
    retain: bool,
    exec: &E,
) -> Result<WealthSample> {
    if !(x0 > 0.0) {
        return Err(Error::Domain("x0 must be positive"));
    }
    let m = paths.n_steps();
    let dt = paths.dt();
    let maps = if retain { Some(weight_maps(paths, params)?) } else { None };
    let kernel = KernelStep::new(params, lambda_u_hat);
    let rho = params.rho();
    let premia = params.premia();
    let rate_shift = nominal_rate(0.0, 0.0, params, params.lambda_u);
    let terminal_shift = params.xi_u * (params.lambda_u - lambda_u_hat) * paths.horizon();
    let log_x0 = libm::log(x0);

    let outcomes = exec.map(paths.n_paths, |p| {
        let r = paths.r_path(p);
        let pi = paths.pi_path(p);
        let lp = paths.log_price_index_path(p);
        let dz = paths.dz_path(p);
        let mut lx = log_x0;
        let mut lm = 0.0;
        let mut weights = Vec::new();
        let mut wealth = Vec::new();
        if retain {
            weights.reserve(3 * m);
            wealth.reserve(m + 1);
            wealth.push(x0);
        }
        for k in 0..m {
            let state = PathState {
                r: r[k],
                log_kernel: lm,
                log_price_index: lp[k],
            };
            let d = &dz[4 * k..4 * k + 4];
            let xbar = rule.exposure(k, &state);
            let drift = r[k] + pi[k] + rate_shift + linalg::dot(&xbar, &premia)
                - 0.5 * linalg::quad_form(&rho, &xbar);
            lx += drift * dt + xbar[0] * d[0] + xbar[1] * d[1] + xbar[2] * d[2];
            lm += kernel.increment(r[k], d, dt);
            if let Some(maps) = &maps {
                weights.extend_from_slice(&linalg::mat_vec(&maps[k], &xbar));
                wealth.push(libm::exp(lx));
            }
        }
        PathOutcome {
            log_wealth: lx,
            log_price_index: lp[m],
            log_deflator: lm + terminal_shift - lp[m],
            weights,
            wealth,
        }
    });

    let mut sample = WealthSample {
        terminal_wealth: Vec::with_capacity(paths.n_paths),
        terminal_price_index: Vec::with_capacity(paths.n_paths),
        terminal_deflator: Vec::with_capacity(paths.n_paths),
        n_steps: m,
        weights: retain.then(Vec::new),
        wealth_paths: retain.then(Vec::new),
    };
    for o in outcomes {
        sample.terminal_wealth.push(libm::exp(o.log_wealth));
        sample.terminal_price_index.push(libm::exp(o.log_price_index));
        sample.terminal_deflator.push(libm::exp(o.log_deflator));
        if let Some(w) = sample.weights.as_mut() {
            w.extend(o.weights);
        }
        if let Some(w) = sample.wealth_paths.as_mut() {
            w.extend(o.wealth);
        }
    }
    Ok(sample)
}

/// Simulates the projected strategy at `controls` on a frozen path set.
pub fn simulate_wealth<E: Executor>(
    paths: &PathSet,
    controls: &Controls,
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    x0: f64,
    retain: bool,
    exec: &E,
) -> Result<WealthSample> {
    let rule = ProjectedRule::new(&paths.grid, paths.horizon(), controls, params, prefs)?;
    simulate_wealth_with(paths, &rule, controls.lambda_u_hat, params, x0, retain, exec)
}

/// Monte Carlo mean of U(X_T, Π_T) with its standard error and 95% interval.
pub fn lower_bound(sample: &WealthSample, prefs: &DualCrraPrefs) -> Result<LowerBoundEstimate> {
    if sample.is_empty() {
        return Err(Error::Domain("empty wealth sample"));
    }
    let u: Vec<f64> = sample
        .terminal_wealth
        .iter()
        .zip(&sample.terminal_price_index)
        .map(|(x, pi)| utility_unchecked(x / pi, prefs))
        .collect();
    let (value, stderr) = stats::mean_stderr(&u);
    Ok(LowerBoundEstimate::from_mean_stderr(value, stderr))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalOptimum {
    pub controls: Controls,
    pub value: LowerBoundEstimate,
    pub initial_value: LowerBoundEstimate,
    pub evaluations: usize,
    /// False when the evaluation budget ran out before the simplex collapsed.
    pub converged: bool,
}

const OPT_BUDGET: usize = 200;
const OPT_DIAMETER: f64 = 1e-6;

/// Maximizes the Monte Carlo lower bound over (λ̂ᵤ, η) with common random
/// numbers, starting from `init` (normally the dual solution).
pub fn optimize_primal<E: Executor>(
    paths: &PathSet,
    init: &Controls,
    params: &MarketParams,
    prefs: &DualCrraPrefs,
    x0: f64,
    exec: &E,
) -> Result<PrimalOptimum> {
    let evaluate = |lh: f64, eta: f64| -> Result<LowerBoundEstimate> {
        let c = Controls {
            eta,
            lambda_u_hat: lh,
            side: Side::Primal,
        };
        let sample = simulate_wealth(paths, &c, params, prefs, x0, false, exec)?;
        lower_bound(&sample, prefs)
    };
    let initial_value = evaluate(init.lambda_u_hat, init.eta)?;
    let mut failure = None;
    let result = nelder_mead(
        |v| {
            if !(v[1] > 0.0) {
                return f64::INFINITY;
            }
            match evaluate(v[0], v[1]) {
                Ok(e) => -e.value,
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::INFINITY
                }
            }
        },
        [init.lambda_u_hat, init.eta],
        [0.005, 0.02 * init.eta],
        OPT_BUDGET,
        OPT_DIAMETER,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let controls = Controls {
        eta: result.x[1],
        lambda_u_hat: result.x[0],
        side: Side::Primal,
    };
    let value = if result.x == [init.lambda_u_hat, init.eta] {
        initial_value
    } else {
        evaluate(controls.lambda_u_hat, controls.eta)?
    };
    Ok(PrimalOptimum {
        controls,
        value,
        initial_value,
        evaluations: result.evaluations,
        converged: result.converged,
    })
}
