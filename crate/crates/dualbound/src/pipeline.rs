//! The bounds pipeline per (profile, horizon) cell and the figure data.

use dualbound_core::diagnostics::{
    allocation_curve, annual_loss, compensating_variation, duality_gap, kde_on_grid,
    sample_range, BoundsReport, Curve, ReducedEconomy, KDE_MARGIN, KDE_POINTS,
};
use dualbound_core::dual::{solve_dual, upper_bound, Controls, Side};
use dualbound_core::market::{simulate_states, MarketParams, PathSet};
use dualbound_core::preferences::{utility, DualCrraPrefs};
use dualbound_core::primal::{
    lower_bound, optimize_primal, simulate_wealth, LowerBoundEstimate, WealthSample,
};
use dualbound_core::{stats, Error, Executor};
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    /// The gap is below −2 standard errors of the lower bound.
    WeakDualityFlag,
    Failed,
}

impl CellStatus {
    pub fn label(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::WeakDualityFlag => "weak_duality_flag",
            CellStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub prefs: DualCrraPrefs,
    pub horizon: f64,
    pub status: CellStatus,
    pub report: Option<BoundsReport>,
    /// Lower bound at the dual controls.
    pub injected: Option<LowerBoundEstimate>,
    /// mean and standard error of X_T·Z_T at the dual controls.
    pub budget: Option<(f64, f64)>,
    /// Terminal sample at the reported primal controls.
    pub sample: Option<WealthSample>,
    pub error: Option<Error>,
}

impl CellOutcome {
    fn failed(prefs: DualCrraPrefs, horizon: f64, error: Error) -> Self {
        Self {
            prefs,
            horizon,
            status: CellStatus::Failed,
            report: None,
            injected: None,
            budget: None,
            sample: None,
            error: Some(error),
        }
    }
}

/// Whether a sample with retained trajectories is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retain {
    TerminalOnly,
    Trajectories,
}

/// Runs one cell: dual solve, path simulation, wealth simulation at the chosen
/// primal controls, lower bound, gap, compensating variation and annual loss.
pub fn run_cell<E: Executor>(
    config: &ExperimentConfig,
    market: &MarketParams,
    prefs: &DualCrraPrefs,
    horizon: f64,
    mode: Mode,
    retain: Retain,
    exec: &E,
) -> CellOutcome {
    match try_cell(config, market, prefs, horizon, mode, retain, exec) {
        Ok(o) => o,
        Err(e) => CellOutcome::failed(*prefs, horizon, e),
    }
}

fn try_cell<E: Executor>(
    config: &ExperimentConfig,
    market: &MarketParams,
    prefs: &DualCrraPrefs,
    horizon: f64,
    mode: Mode,
    retain: Retain,
    exec: &E,
) -> Result<CellOutcome, Error> {
    let x0 = config.x0;
    let dual = solve_dual(market, prefs, x0, horizon)?;
    let upper = upper_bound(&dual, market, prefs, x0, horizon)?;
    let paths = simulate_states(market, &config.sim(horizon), dual.lambda_u_hat, exec)?;
    let keep = retain == Retain::Trajectories;
    let injected_sample = simulate_wealth(&paths, &dual, market, prefs, x0, keep, exec)?;
    let injected = lower_bound(&injected_sample, prefs)?;
    let zx: Vec<f64> = injected_sample
        .terminal_wealth
        .iter()
        .zip(&injected_sample.terminal_deflator)
        .map(|(x, z)| x * z)
        .collect();
    let budget = stats::mean_stderr(&zx);

    let (primal, sample, lower, converged) = match mode {
        Mode::InjectDual => (
            Controls {
                side: Side::Primal,
                ..dual
            },
            injected_sample,
            injected,
            true,
        ),
        Mode::OptimizePrimal => {
            let opt = optimize_primal(&paths, &dual, market, prefs, x0, exec)?;
            let sample = simulate_wealth(&paths, &opt.controls, market, prefs, x0, keep, exec)?;
            (opt.controls, sample, opt.value, opt.converged)
        }
    };
    let gap = duality_gap(&lower, upper);
    let cv = compensating_variation(&sample, prefs, x0, upper)?;
    let report = BoundsReport {
        lower,
        upper,
        gap,
        cv,
        al_bp: annual_loss(cv, x0, horizon),
        controls_primal: primal,
        controls_dual: dual,
    };
    let status = if !converged {
        CellStatus::Failed
    } else if report.weak_duality_holds() {
        CellStatus::Ok
    } else {
        CellStatus::WeakDualityFlag
    };
    Ok(CellOutcome {
        prefs: *prefs,
        horizon,
        status,
        report: Some(report),
        injected: Some(injected),
        budget: Some(budget),
        sample: Some(sample),
        error: (!converged).then_some(Error::NoConvergence { iterations: 200 }),
    })
}

/// Runs every (profile, horizon) cell, profiles varying fastest within each
/// horizon. Output order is fixed whether or not cells run concurrently.
pub fn run_bounds<E: Executor>(
    config: &ExperimentConfig,
    mode: Mode,
    retain: Retain,
    exec: &E,
) -> Result<Vec<CellOutcome>, ConfigError> {
    config.validate()?;
    let market = config.market();
    let prefs = config.preferences()?;
    let cells: Vec<(DualCrraPrefs, f64)> = config
        .horizons
        .iter()
        .flat_map(|&h| prefs.iter().map(move |p| (*p, h)))
        .collect();
    let run = |(p, h): &(DualCrraPrefs, f64)| run_cell(config, &market, p, *h, mode, retain, exec);
    Ok(if config.parallel_cells {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    })
}

/// Column data for the three figures.
#[derive(Debug, Clone)]
pub struct FigureData {
    /// Utility curves: x, CRRA(5), dual CRRA (10, 2).
    pub utility: (Vec<f64>, Vec<f64>, Vec<f64>),
    /// Stock weight against wealth: wealth, dual CRRA (10, 2), CRRA(5).
    pub allocation: (Vec<f64>, Vec<f64>, Vec<f64>),
    /// Densities of terminal real wealth on a shared grid.
    pub density: (Vec<f64>, Vec<f64>, Vec<f64>),
}

pub const FIGURE_HORIZON: f64 = 5.0;
pub const FIGURE_BANDWIDTH: f64 = 0.15;

fn figure_profiles() -> (DualCrraPrefs, DualCrraPrefs) {
    (
        DualCrraPrefs::crra(5.0).expect("valid profile"),
        DualCrraPrefs::new(10.0, 2.0, 1.0).expect("valid profile"),
    )
}

/// Utility curves, the one-asset allocation curve and terminal-wealth densities
/// for a CRRA(5) and a dual CRRA (10, 2) investor.
pub fn run_figures<E: Executor>(
    config: &ExperimentConfig,
    mode: Mode,
    exec: &E,
) -> Result<FigureData, FigureError> {
    config.validate()?;
    let (crra, dual) = figure_profiles();

    let xs: Vec<f64> = (5..=300).map(|i| i as f64 / 100.0).collect();
    let u = |p: &DualCrraPrefs| -> Result<Vec<f64>, Error> {
        xs.iter().map(|&x| utility(x, 1.0, p)).collect()
    };
    let utility_curves = (xs.clone(), u(&crra)?, u(&dual)?);

    let wealth: Vec<f64> = (0..=400)
        .map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 400.0))
        .collect();
    let economy = ReducedEconomy::figure();
    let weights = |p: &DualCrraPrefs| -> Result<Vec<f64>, Error> {
        Ok(allocation_curve(p, &economy, &wealth)?
            .into_iter()
            .map(|(_, w)| w)
            .collect())
    };
    let allocation = (wealth.clone(), weights(&dual)?, weights(&crra)?);

    let market = config.market();
    let real_wealth = |p: &DualCrraPrefs| -> Result<Vec<f64>, Error> {
        let cell = run_cell(config, &market, p, FIGURE_HORIZON, mode, Retain::TerminalOnly, exec);
        match (cell.sample, cell.error) {
            (Some(s), _) => Ok(s
                .terminal_wealth
                .iter()
                .zip(&s.terminal_price_index)
                .map(|(x, pi)| x / pi)
                .collect()),
            (None, Some(e)) => Err(e),
            (None, None) => Err(Error::Domain("cell produced no sample")),
        }
    };
    let a = real_wealth(&crra)?;
    let b = real_wealth(&dual)?;
    let (lo_a, hi_a) = sample_range(&a)?;
    let (lo_b, hi_b) = sample_range(&b)?;
    let lo = lo_a.min(lo_b) - KDE_MARGIN * FIGURE_BANDWIDTH;
    let hi = hi_a.max(hi_b) + KDE_MARGIN * FIGURE_BANDWIDTH;
    let Curve { x, y: ya } = kde_on_grid(&a, FIGURE_BANDWIDTH, lo, hi, KDE_POINTS)?;
    let yb = kde_on_grid(&b, FIGURE_BANDWIDTH, lo, hi, KDE_POINTS)?.y;

    Ok(FigureData {
        utility: utility_curves,
        allocation,
        density: (x, ya, yb),
    })
}

#[derive(Debug, thiserror::Error)]
pub enum FigureError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("figure computation failed: {0}")]
    Numerical(#[from] Error),
}

/// Paths for the first horizon under the first profile's dual shadow price.
pub fn debug_paths<E: Executor>(config: &ExperimentConfig, exec: &E) -> Result<PathSet, FigureError> {
    config.validate()?;
    let market = config.market();
    let prefs = config.preferences()?[0];
    let horizon = config.horizons[0];
    let dual = solve_dual(&market, &prefs, config.x0, horizon)?;
    Ok(simulate_states(&market, &config.sim(horizon), dual.lambda_u_hat, exec)?)
}
