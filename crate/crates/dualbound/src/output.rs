//! CSV writers. All numbers go through [`sig6`].

use std::fs;
use std::io;
use std::path::Path;

use dualbound_core::market::PathSet;
use dualbound_core::preferences::DualCrraPrefs;
use dualbound_core::primal::WealthSample;

use crate::format::sig6;
use crate::pipeline::{CellOutcome, FigureData};

pub const BOUNDS_HEADER: [&str; 14] = [
    "profile", "T", "LB", "CI_lo", "CI_hi", "UB", "gap", "CV", "AL_bp", "lambda_u_L", "eta_L",
    "lambda_u_U", "eta_U", "status",
];

/// `gamma_d_gamma_u`, with `_K<benchmark>` appended when the benchmark is not 1.
pub fn profile_label(p: &DualCrraPrefs) -> String {
    let mut s = format!("{}_{}", sig6(p.gamma_d), sig6(p.gamma_u));
    if p.benchmark != 1.0 {
        s.push_str("_K");
        s.push_str(&sig6(p.benchmark));
    }
    s
}

fn csv_writer<W: io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_bounds<W: io::Write>(w: W, cells: &[CellOutcome]) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(BOUNDS_HEADER)?;
    for c in cells {
        let mut row = vec![profile_label(&c.prefs), sig6(c.horizon)];
        match &c.report {
            Some(r) => {
                for v in [
                    r.lower.value,
                    r.lower.ci95.0,
                    r.lower.ci95.1,
                    r.upper,
                    r.gap,
                    r.cv,
                    r.al_bp,
                    r.controls_primal.lambda_u_hat,
                    r.controls_primal.eta,
                    r.controls_dual.lambda_u_hat,
                    r.controls_dual.eta,
                ] {
                    row.push(sig6(v));
                }
            }
            None => row.extend(std::iter::repeat_n(String::new(), 11)),
        }
        row.push(c.status.label().to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// State paths, at most `limit` of them.
pub fn write_paths<W: io::Write>(w: W, paths: &PathSet, limit: usize) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["path", "time", "r", "pi", "log_Pi", "log_M", "log_B"])?;
    for p in 0..paths.n_paths.min(limit) {
        let (r, pi) = (paths.r_path(p), paths.pi_path(p));
        let (lp, lm, lb) = (
            paths.log_price_index_path(p),
            paths.log_kernel_path(p),
            paths.log_money_market_path(p),
        );
        for (k, t) in paths.grid.iter().enumerate() {
            out.write_record([
                p.to_string(),
                sig6(*t),
                sig6(r[k]),
                sig6(pi[k]),
                sig6(lp[k]),
                sig6(lm[k]),
                sig6(lb[k]),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("sample was simulated without retained trajectories")]
    NotRetained,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Portfolio weights and wealth per grid point, at most `limit` paths. Weights
/// apply over the step starting at `time`, so the terminal row leaves them empty.
pub fn write_trajectories<W: io::Write>(
    w: W,
    sample: &WealthSample,
    grid: &[f64],
    limit: usize,
) -> Result<(), TrajectoryError> {
    let (Some(weights), Some(wealth)) = (&sample.weights, &sample.wealth_paths) else {
        return Err(TrajectoryError::NotRetained);
    };
    let m = sample.n_steps;
    let mut out = csv_writer(w);
    out.write_record(["path", "time", "weight_stock", "weight_bond1", "weight_bond2", "wealth"])?;
    for p in 0..sample.len().min(limit) {
        for (k, t) in grid.iter().enumerate().take(m + 1) {
            let x = sig6(wealth[p * (m + 1) + k]);
            let row = if k < m {
                let x3 = &weights[(p * m + k) * 3..(p * m + k) * 3 + 3];
                [p.to_string(), sig6(*t), sig6(x3[0]), sig6(x3[1]), sig6(x3[2]), x]
            } else {
                [p.to_string(), sig6(*t), String::new(), String::new(), String::new(), x]
            };
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// A curve file: `x` followed by one column per series.
pub fn write_curves<W: io::Write>(
    w: W,
    x: &[f64],
    series: &[(&str, &[f64])],
) -> csv::Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["x"];
    header.extend(series.iter().map(|(n, _)| *n));
    out.write_record(&header)?;
    for (i, xi) in x.iter().enumerate() {
        let mut row = vec![sig6(*xi)];
        row.extend(series.iter().map(|(_, y)| sig6(y[i])));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub const FIGURE_FILES: [&str; 3] = ["fig1_utility.csv", "fig2_allocation.csv", "fig3_density.csv"];

pub fn write_figures(dir: &Path, f: &FigureData) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let file = |name: &str| fs::File::create(dir.join(name)).map(io::BufWriter::new);
    let (x, a, b) = &f.utility;
    write_curves(file(FIGURE_FILES[0])?, x, &[("crra_5", a), ("dual_crra_10_2", b)])?;
    let (x, a, b) = &f.allocation;
    write_curves(file(FIGURE_FILES[1])?, x, &[("dual_crra_10_2", a), ("crra_5", b)])?;
    let (x, a, b) = &f.density;
    write_curves(file(FIGURE_FILES[2])?, x, &[("crra_5", a), ("dual_crra_10_2", b)])?;
    Ok(())
}
