//! The Brennan–Xia economy: Vasicek real rate and expected inflation, a price
//! index with non-traded risk, a stock and two nominal zero-coupon bonds.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{self, Mat3, Vec3};
use crate::{Error, Executor, Result};

/// Parameters of the economy. Risk factors are ordered (z_s, z_r, z_π); z_u is
/// the non-traded driver of the price index.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    pub sigma_s: f64,
    /// Quoted prices of risk (λ_s, λ_r, λ_π). The simulation prices risk with
    /// [`MarketParams::premia`], which is implied by `phi` and `xi`.
    pub lambda: Vec3,
    pub lambda_u: f64,
    pub rho_sr: f64,
    pub rho_spi: f64,
    pub rho_rpi: f64,
    pub phi: Vec3,
    pub phi_u: f64,
    pub xi: Vec3,
    pub xi_u: f64,
    pub r_bar: f64,
    pub kappa: f64,
    pub sigma_r: f64,
    pub pi_bar: f64,
    pub alpha: f64,
    pub sigma_pi: f64,
    pub r0: f64,
    pub pi0: f64,
    /// Bond maturities (T₁, T₂). `None` means horizon + 5 and horizon + 15.
    pub bond_maturities: Option<[f64; 2]>,
}

impl MarketParams {
    /// Benchmark parameters. `r0` is not quoted with the benchmark set; 0.0326
    /// reproduces the benchmark dual controls and upper bounds.
    pub fn benchmark() -> Self {
        Self {
            sigma_s: 0.158,
            lambda: [0.343, -0.209, -0.105],
            lambda_u: 0.027,
            rho_sr: -0.129,
            rho_spi: -0.024,
            rho_rpi: -0.061,
            phi: [-0.333, 0.170, 0.120],
            phi_u: -0.014,
            xi: [0.0; 3],
            xi_u: 0.013,
            r_bar: 0.012,
            kappa: 0.613,
            sigma_r: 0.026,
            pi_bar: 0.054,
            alpha: 0.027,
            sigma_pi: 0.014,
            r0: 0.0326,
            pi0: 0.054,
            bond_maturities: None,
        }
    }

    pub fn rho(&self) -> Mat3 {
        linalg::correlation_matrix(self.rho_sr, self.rho_spi, self.rho_rpi)
    }

    /// Prices of traded risk implied by the kernel, ρ(ξ − φ).
    pub fn premia(&self) -> Vec3 {
        let d = [
            self.xi[0] - self.phi[0],
            self.xi[1] - self.phi[1],
            self.xi[2] - self.phi[2],
        ];
        linalg::mat_vec(&self.rho(), &d)
    }

    /// φᵀρφ + (ξ_u − λ̂ᵤ)², the instantaneous variance of the artificial
    /// real kernel whose z_u loading is ξ_u − λ̂ᵤ.
    pub fn kernel_variance_rate(&self, lambda_u_hat: f64) -> f64 {
        let phi_u = self.xi_u - lambda_u_hat;
        linalg::quad_form(&self.rho(), &self.phi) + phi_u * phi_u
    }

    /// Instantaneous variance of the price index, ξᵀρξ + ξ_u².
    pub fn price_index_variance_rate(&self) -> f64 {
        linalg::quad_form(&self.rho(), &self.xi) + self.xi_u * self.xi_u
    }

    pub fn maturities(&self, horizon: f64) -> [f64; 2] {
        self.bond_maturities
            .unwrap_or([horizon + 5.0, horizon + 15.0])
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.sigma_s,
            self.lambda_u,
            self.phi_u,
            self.xi_u,
            self.r_bar,
            self.kappa,
            self.sigma_r,
            self.pi_bar,
            self.alpha,
            self.sigma_pi,
            self.r0,
            self.pi0,
        ]
        .iter()
        .chain(&self.lambda)
        .chain(&self.phi)
        .chain(&self.xi)
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("market parameters must be finite"));
        }
        if !(self.kappa > 0.0 && self.alpha > 0.0) {
            return Err(Error::Config("kappa and alpha must be positive"));
        }
        if !(self.sigma_r >= 0.0 && self.sigma_pi >= 0.0 && self.sigma_s > 0.0) {
            return Err(Error::Config("volatilities must be non-negative, sigma_s positive"));
        }
        for c in [self.rho_sr, self.rho_spi, self.rho_rpi] {
            if !(-1.0..=1.0).contains(&c) {
                return Err(Error::Config("correlations must lie in [-1, 1]"));
            }
        }
        linalg::correlation_factor(&self.rho())?;
        if let Some(m) = self.bond_maturities {
            if !(m[0] > 0.0 && m[1] > 0.0) || m[0] == m[1] {
                return Err(Error::Config("bond maturities must be positive and distinct"));
            }
        }
        Ok(())
    }

    /// Checks that both bonds outlive the investment horizon.
    pub fn validate_horizon(&self, horizon: f64) -> Result<()> {
        let [t1, t2] = self.maturities(horizon);
        if t1 <= horizon || t2 <= horizon {
            return Err(Error::Config("bond maturities must exceed the horizon"));
        }
        Ok(())
    }
}

/// Monte Carlo settings for one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub x0: f64,
}

impl SimConfig {
    /// Number of grid intervals M = horizon / dt.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.horizon > 0.0) {
            return Err(Error::Config("dt and horizon must be positive"));
        }
        let m = libm::round(self.horizon / self.dt);
        if m < 1.0 || (m * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(Error::Config("horizon / dt must be a positive integer"));
        }
        Ok(m as usize)
    }

    /// Grid points t_0 = 0, …, t_M = horizon.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let m = self.steps()?;
        let mut grid: Vec<f64> = (0..=m).map(|k| k as f64 * self.dt).collect();
        grid[m] = self.horizon;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.steps()?;
        if self.n_paths < 2 {
            return Err(Error::Config("n_paths must be at least 2"));
        }
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(Error::Config("x0 must be positive"));
        }
        Ok(())
    }
}

/// Nominal short rate R_f = r + π − ξᵀλ − ξ_u·λ_u.
pub fn nominal_rate(r: f64, pi: f64, params: &MarketParams, lambda_u: f64) -> f64 {
    r + pi - linalg::dot(&params.xi, &params.premia()) - params.xi_u * lambda_u
}

/// Loadings of the asset menu (stock, bond 1, bond 2) on (z_s, z_r, z_π) at `t`.
pub fn sigma_matrix(t: f64, params: &MarketParams, maturities: [f64; 2]) -> Result<Mat3> {
    let mut s = [[params.sigma_s, 0.0, 0.0], [0.0; 3], [0.0; 3]];
    for (row, &mat) in s[1..].iter_mut().zip(&maturities) {
        let tau = mat - t;
        if tau <= 0.0 {
            return Err(Error::SingularSigma { t });
        }
        row[1] = -params.sigma_r * duration(params.kappa, tau);
        row[2] = -params.sigma_pi * duration(params.alpha, tau);
    }
    let minor = s[1][1] * s[2][2] - s[1][2] * s[2][1];
    let scale = s[1][1].abs().max(s[1][2].abs()) * s[2][1].abs().max(s[2][2].abs());
    if minor.abs() <= 1e-12 * scale || scale == 0.0 {
        return Err(Error::SingularSigma { t });
    }
    Ok(s)
}

/// (1 − e^{−kτ})/k.
pub fn duration(k: f64, tau: f64) -> f64 {
    -libm::expm1(-k * tau) / k
}

/// Coefficients of the log real-kernel recursion shared by the state simulation
/// and the wealth engine.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelStep {
    pub loadings: [f64; 4],
    pub half_var: f64,
}

impl KernelStep {
    pub fn new(params: &MarketParams, lambda_u_hat: f64) -> Self {
        Self {
            loadings: [
                params.phi[0],
                params.phi[1],
                params.phi[2],
                params.xi_u - lambda_u_hat,
            ],
            half_var: 0.5 * params.kernel_variance_rate(lambda_u_hat),
        }
    }

    #[inline]
    pub fn increment(&self, r: f64, dz: &[f64], dt: f64) -> f64 {
        (-r - self.half_var) * dt
            + self.loadings[0] * dz[0]
            + self.loadings[1] * dz[1]
            + self.loadings[2] * dz[2]
            + self.loadings[3] * dz[3]
    }
}

/// Simulated state paths on an equidistant grid. Per-path arrays are stored
/// row-major with `n_steps + 1` points per path; increments have `n_steps × 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub grid: Vec<f64>,
    pub n_paths: usize,
    pub r: Vec<f64>,
    pub pi: Vec<f64>,
    pub log_price_index: Vec<f64>,
    /// log M̂_t for the artificial kernel with z_u loading ξ_u − `lambda_u_hat`.
    pub log_kernel: Vec<f64>,
    pub log_money_market: Vec<f64>,
    pub dz: Vec<f64>,
    pub lambda_u_hat: f64,
}

impl PathSet {
    pub fn n_steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn horizon(&self) -> f64 {
        self.grid[self.n_steps()]
    }

    fn row(&self, v: &'_ [f64], p: usize) -> core::ops::Range<usize> {
        let w = self.grid.len();
        debug_assert!(v.len() == self.n_paths * w);
        p * w..(p + 1) * w
    }

    pub fn r_path(&self, p: usize) -> &[f64] {
        &self.r[self.row(&self.r, p)]
    }

    pub fn pi_path(&self, p: usize) -> &[f64] {
        &self.pi[self.row(&self.pi, p)]
    }

    pub fn log_price_index_path(&self, p: usize) -> &[f64] {
        &self.log_price_index[self.row(&self.log_price_index, p)]
    }

    pub fn log_kernel_path(&self, p: usize) -> &[f64] {
        &self.log_kernel[self.row(&self.log_kernel, p)]
    }

    pub fn log_money_market_path(&self, p: usize) -> &[f64] {
        &self.log_money_market[self.row(&self.log_money_market, p)]
    }

    /// Increments of path `p`, four per step.
    pub fn dz_path(&self, p: usize) -> &[f64] {
        let w = 4 * self.n_steps();
        &self.dz[p * w..(p + 1) * w]
    }

    /// log Z_T B_T for path `p`, where Z = K/Π is the nominal state price
    /// density, K_t = M̂_t·exp(ξ_u(λ_u − λ̂ᵤ)t) and B the money-market account.
    pub fn log_deflated_money_market(&self, p: usize, params: &MarketParams) -> f64 {
        let m = self.n_steps();
        let t = self.grid[m];
        self.log_kernel_path(p)[m] + params.xi_u * (params.lambda_u - self.lambda_u_hat) * t
            - self.log_price_index_path(p)[m]
            + self.log_money_market_path(p)[m]
    }
}

struct PathBuffers {
    r: Vec<f64>,
    pi: Vec<f64>,
    log_price_index: Vec<f64>,
    log_kernel: Vec<f64>,
    log_money_market: Vec<f64>,
    dz: Vec<f64>,
}

/// Euler–Maruyama simulation of all state variables.
///
/// Path `p` draws from a ChaCha8 stream keyed by (`seed`, `p`), so the result is
/// identical for any executor. `lambda_u_hat` sets the artificial kernel's
/// shadow price; the money-market account always accrues the market rate.
pub fn simulate_states<E: Executor>(
    params: &MarketParams,
    config: &SimConfig,
    lambda_u_hat: f64,
    exec: &E,
) -> Result<PathSet> {
    params.validate()?;
    config.validate()?;
    if !lambda_u_hat.is_finite() {
        return Err(Error::Domain("shadow price must be finite"));
    }
    let m = config.steps()?;
    let dt = config.dt;
    let sqrt_dt = libm::sqrt(dt);
    let chol = linalg::correlation_factor(&params.rho())?;
    let kernel = KernelStep::new(params, lambda_u_hat);
    let half_var_pi = 0.5 * params.price_index_variance_rate();
    let rate_shift = nominal_rate(0.0, 0.0, params, params.lambda_u);
    let xi = [params.xi[0], params.xi[1], params.xi[2], params.xi_u];

    let paths = exec.map(config.n_paths, |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(p as u64);
        let mut b = PathBuffers {
            r: Vec::with_capacity(m + 1),
            pi: Vec::with_capacity(m + 1),
            log_price_index: Vec::with_capacity(m + 1),
            log_kernel: Vec::with_capacity(m + 1),
            log_money_market: Vec::with_capacity(m + 1),
            dz: Vec::with_capacity(4 * m),
        };
        let (mut r, mut pi) = (params.r0, params.pi0);
        let (mut lp, mut lm, mut lb) = (0.0, 0.0, 0.0);
        for _ in 0..m {
            b.r.push(r);
            b.pi.push(pi);
            b.log_price_index.push(lp);
            b.log_kernel.push(lm);
            b.log_money_market.push(lb);
            let e: [f64; 4] = core::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let c = linalg::mat_vec(&chol, &[e[0], e[1], e[2]]);
            let dz = [c[0] * sqrt_dt, c[1] * sqrt_dt, c[2] * sqrt_dt, e[3] * sqrt_dt];
            lm += kernel.increment(r, &dz, dt);
            lp += (pi - half_var_pi) * dt
                + xi[0] * dz[0]
                + xi[1] * dz[1]
                + xi[2] * dz[2]
                + xi[3] * dz[3];
            lb += (r + pi + rate_shift) * dt;
            let r_next = r + params.kappa * (params.r_bar - r) * dt + params.sigma_r * dz[1];
            let pi_next = pi + params.alpha * (params.pi_bar - pi) * dt + params.sigma_pi * dz[2];
            r = r_next;
            pi = pi_next;
            b.dz.extend_from_slice(&dz);
        }
        b.r.push(r);
        b.pi.push(pi);
        b.log_price_index.push(lp);
        b.log_kernel.push(lm);
        b.log_money_market.push(lb);
        b
    });

    let n = config.n_paths;
    let mut set = PathSet {
        grid: config.grid()?,
        n_paths: n,
        r: Vec::with_capacity(n * (m + 1)),
        pi: Vec::with_capacity(n * (m + 1)),
        log_price_index: Vec::with_capacity(n * (m + 1)),
        log_kernel: Vec::with_capacity(n * (m + 1)),
        log_money_market: Vec::with_capacity(n * (m + 1)),
        dz: Vec::with_capacity(n * m * 4),
        lambda_u_hat,
    };
    for b in paths {
        set.r.extend(b.r);
        set.pi.extend(b.pi);
        set.log_price_index.extend(b.log_price_index);
        set.log_kernel.extend(b.log_kernel);
        set.log_money_market.extend(b.log_money_market);
        set.dz.extend(b.dz);
    }
    Ok(set)
}
