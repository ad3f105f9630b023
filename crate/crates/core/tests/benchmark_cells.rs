//! Full-size cells of the benchmark economy (N = 10,000, dt = 0.05, X₀ = 1).

use dualbound_core::diagnostics::{compensating_variation, duality_gap, kde};
use dualbound_core::dual::{solve_dual, upper_bound, Controls};
use dualbound_core::market::{simulate_states, MarketParams, PathSet, SimConfig};
use dualbound_core::preferences::DualCrraPrefs;
use dualbound_core::primal::{lower_bound, optimize_primal, simulate_wealth, LowerBoundEstimate, WealthSample};
use dualbound_core::Serial;

struct Cell {
    params: MarketParams,
    prefs: DualCrraPrefs,
    dual: Controls,
    upper: f64,
    paths: PathSet,
    sample: WealthSample,
    lower: LowerBoundEstimate,
}

fn cell(gd: f64, gu: f64, horizon: f64) -> Cell {
    let params = MarketParams::benchmark();
    let prefs = DualCrraPrefs::new(gd, gu, 1.0).unwrap();
    let dual = solve_dual(&params, &prefs, 1.0, horizon).unwrap();
    let upper = upper_bound(&dual, &params, &prefs, 1.0, horizon).unwrap();
    let config = SimConfig { n_paths: 10_000, dt: 0.05, horizon, seed: 42, x0: 1.0 };
    let paths = simulate_states(&params, &config, dual.lambda_u_hat, &Serial).unwrap();
    let sample = simulate_wealth(&paths, &dual, &params, &prefs, 1.0, false, &Serial).unwrap();
    let lower = lower_bound(&sample, &prefs).unwrap();
    Cell { params, prefs, dual, upper, paths, sample, lower }
}

#[test]
fn injected_lower_bound_matches_published_cell() {
    let c = cell(10.0, 2.0, 5.0);
    assert!((c.lower.value - 0.234).abs() < 0.01, "{:?}", c.lower);
    assert!(c.lower.ci95.0 <= 0.239 && 0.229 <= c.lower.ci95.1, "{:?}", c.lower);
    let cv = compensating_variation(&c.sample, &c.prefs, 1.0, c.upper).unwrap();
    assert!((cv - 0.001).abs() <= 0.001, "cv {cv}");
}

#[test]
fn crra_gap_is_within_noise() {
    for horizon in [5.0, 10.0] {
        let c = cell(5.0, 5.0, horizon);
        let gap = duality_gap(&c.lower, c.upper);
        assert!(gap.abs() < 2.0 * c.lower.stderr, "T={horizon}: {gap} vs {:?}", c.lower);
    }
}

#[test]
fn long_horizon_gap() {
    let c = cell(15.0, 3.0, 10.0);
    let gap = duality_gap(&c.lower, c.upper);
    assert!((gap - 0.003).abs() < 2.0 * c.lower.stderr, "{gap} ± {}", c.lower.stderr);
}

#[test]
fn optimized_primal_controls() {
    let c = cell(10.0, 2.0, 5.0);
    let opt = optimize_primal(&c.paths, &c.dual, &c.params, &c.prefs, 1.0, &Serial).unwrap();
    assert!(opt.converged);
    assert!(opt.value.value >= opt.initial_value.value - 1e-12);
    // Published (−λ̂ᵤ, η) = (0.034, 0.965); per-entry tolerance 0.015.
    assert!((-opt.controls.lambda_u_hat - 0.034).abs() <= 0.015, "{:?}", opt.controls);
    assert!((opt.controls.eta - 0.965).abs() <= 0.015, "{:?}", opt.controls);
}

#[test]
fn optimizer_never_loses_value() {
    for (gd, gu) in [(5.0, 5.0), (15.0, 3.0)] {
        let c = cell(gd, gu, 5.0);
        let opt = optimize_primal(&c.paths, &c.dual, &c.params, &c.prefs, 1.0, &Serial).unwrap();
        assert!(opt.value.value >= opt.initial_value.value - 1e-12, "({gd}, {gu})");
        assert_eq!(opt.initial_value, c.lower);
    }
}

#[test]
fn cv_is_monotone_in_gap() {
    let mut rows: Vec<(f64, f64)> = [(5.0, 5.0), (10.0, 2.0), (15.0, 3.0)]
        .iter()
        .map(|&(gd, gu)| {
            let c = cell(gd, gu, 10.0);
            let gap = duality_gap(&c.lower, c.upper);
            (gap, compensating_variation(&c.sample, &c.prefs, 1.0, c.upper).unwrap())
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(rows.windows(2).all(|w| w[1].1 >= w[0].1), "{rows:?}");
}

#[test]
fn terminal_real_wealth_density_shape() {
    let c = cell(10.0, 2.0, 5.0);
    let real: Vec<f64> = c
        .sample
        .terminal_wealth
        .iter()
        .zip(&c.sample.terminal_price_index)
        .map(|(x, pi)| x / pi)
        .collect();
    let below = real.iter().filter(|x| **x < 0.8).count() as f64 / real.len() as f64;
    assert!(below < 0.1, "{below}");
    let curve = kde(&real, 0.15).unwrap();
    let (mode, _) = curve
        .x
        .iter()
        .zip(&curve.y)
        .fold((0.0, f64::MIN), |m, (x, y)| if *y > m.1 { (*x, *y) } else { m });
    assert!((0.8..1.6).contains(&mode), "mode {mode}");
    let mean = real.iter().sum::<f64>() / real.len() as f64;
    let third = real.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / real.len() as f64;
    assert!(third > 0.0, "skewness sign");
}
