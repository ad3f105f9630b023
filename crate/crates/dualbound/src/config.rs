//! Experiment configuration: a flat TOML file whose keys mirror the parameter
//! names of the benchmark economy. Omitted keys take benchmark values; unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use dualbound_core::market::{MarketParams, SimConfig};
use dualbound_core::preferences::DualCrraPrefs;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// How the primal controls of a cell are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Use the dual solution as primal controls.
    InjectDual,
    /// Maximize the simulated lower bound starting from the dual solution.
    OptimizePrimal,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sigma_s: f64,
    pub lambda_s: f64,
    pub lambda_r: f64,
    pub lambda_pi: f64,
    pub lambda_u: f64,
    pub rho_sr: f64,
    pub rho_spi: f64,
    pub rho_rpi: f64,
    pub phi_s: f64,
    pub phi_r: f64,
    pub phi_pi: f64,
    pub phi_u: f64,
    pub xi_s: f64,
    pub xi_r: f64,
    pub xi_pi: f64,
    pub xi_u: f64,
    pub r_bar: f64,
    pub kappa: f64,
    pub sigma_r: f64,
    pub pi_bar: f64,
    pub alpha: f64,
    pub sigma_pi: f64,
    pub r0: f64,
    pub pi0: f64,
    /// Fixed bond maturities; defaults to horizon + 5 and horizon + 15.
    pub bond_maturities: Option<[f64; 2]>,
    /// Risk profiles (γ_d, γ_u, 𝒦).
    pub profiles: Vec<[f64; 3]>,
    pub horizons: Vec<f64>,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub x0: f64,
    pub mode: Mode,
    pub outputs: PathBuf,
    /// Run cells concurrently (output is unchanged).
    pub parallel_cells: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let m = MarketParams::benchmark();
        Self {
            sigma_s: m.sigma_s,
            lambda_s: m.lambda[0],
            lambda_r: m.lambda[1],
            lambda_pi: m.lambda[2],
            lambda_u: m.lambda_u,
            rho_sr: m.rho_sr,
            rho_spi: m.rho_spi,
            rho_rpi: m.rho_rpi,
            phi_s: m.phi[0],
            phi_r: m.phi[1],
            phi_pi: m.phi[2],
            phi_u: m.phi_u,
            xi_s: m.xi[0],
            xi_r: m.xi[1],
            xi_pi: m.xi[2],
            xi_u: m.xi_u,
            r_bar: m.r_bar,
            kappa: m.kappa,
            sigma_r: m.sigma_r,
            pi_bar: m.pi_bar,
            alpha: m.alpha,
            sigma_pi: m.sigma_pi,
            r0: m.r0,
            pi0: m.pi0,
            bond_maturities: m.bond_maturities,
            profiles: vec![[5.0, 5.0, 1.0], [10.0, 2.0, 1.0], [15.0, 3.0, 1.0]],
            horizons: vec![5.0, 10.0],
            n_paths: 10_000,
            dt: 0.05,
            seed: 42,
            x0: 1.0,
            mode: Mode::InjectDual,
            outputs: PathBuf::from("out"),
            parallel_cells: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config = Self::parse(&text)?;
        Ok(config)
    }

    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn market(&self) -> MarketParams {
        MarketParams {
            sigma_s: self.sigma_s,
            lambda: [self.lambda_s, self.lambda_r, self.lambda_pi],
            lambda_u: self.lambda_u,
            rho_sr: self.rho_sr,
            rho_spi: self.rho_spi,
            rho_rpi: self.rho_rpi,
            phi: [self.phi_s, self.phi_r, self.phi_pi],
            phi_u: self.phi_u,
            xi: [self.xi_s, self.xi_r, self.xi_pi],
            xi_u: self.xi_u,
            r_bar: self.r_bar,
            kappa: self.kappa,
            sigma_r: self.sigma_r,
            pi_bar: self.pi_bar,
            alpha: self.alpha,
            sigma_pi: self.sigma_pi,
            r0: self.r0,
            pi0: self.pi0,
            bond_maturities: self.bond_maturities,
        }
    }

    pub fn preferences(&self) -> Result<Vec<DualCrraPrefs>, ConfigError> {
        self.profiles
            .iter()
            .map(|&[gd, gu, k]| {
                DualCrraPrefs::new(gd, gu, k)
                    .map_err(|e| ConfigError::Invalid(format!("profile ({gd}, {gu}, {k}): {e}")))
            })
            .collect()
    }

    pub fn sim(&self, horizon: f64) -> SimConfig {
        SimConfig {
            n_paths: self.n_paths,
            dt: self.dt,
            horizon,
            seed: self.seed,
            x0: self.x0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: dualbound_core::Error| ConfigError::Invalid(e.to_string());
        if self.profiles.is_empty() {
            return Err(ConfigError::Invalid("at least one profile is required".into()));
        }
        if self.horizons.is_empty() {
            return Err(ConfigError::Invalid("at least one horizon is required".into()));
        }
        let market = self.market();
        market.validate().map_err(invalid)?;
        self.preferences()?;
        for &h in &self.horizons {
            self.sim(h).validate().map_err(invalid)?;
            market.validate_horizon(h).map_err(invalid)?;
        }
        Ok(())
    }
}
