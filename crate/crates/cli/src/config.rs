//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [environment]
//! support = [{ family = "deterministic", k = 2 }]
//! weights = [1.0]
//!
//! [displacement]
//! mode = "iid"
//! alpha = 2.0
//! p = 1.0
//!
//! [simulation]
//! n = [10, 14]
//! replications = 500
//! ```

use std::path::{Path, PathBuf};

use brwre_core::brw_sim::DEFAULT_POPULATION_CAP;
use brwre_core::{
    DependenceMode, DisplacementModel, EnvironmentModel, LimitConfig, QMode, SimConfig, TestFunction,
    DEFAULT_GRID,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub environment: EnvironmentModel,
    pub displacement: DisplacementSection,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub limit: LimitSection,
    #[serde(default)]
    pub comparison: ComparisonSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("brwre-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSection {
    pub alpha: f64,
    /// Balance `P(X > t) / P(|X| > t)`; implied by the atoms in angular mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(flatten)]
    pub mode: DependenceMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub n: Vec<usize>,
    pub replications: u64,
    pub retain_delta: f64,
    pub top_k: usize,
    pub population_cap: u64,
    pub jump_eta: f64,
    pub condition_on_survival: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            n: Vec::new(),
            replications: 1000,
            retain_delta: 0.25,
            top_k: 5,
            population_cap: DEFAULT_POPULATION_CAP,
            jump_eta: 0.1,
            condition_on_survival: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimitSection {
    #[serde(flatten)]
    pub params: LimitConfig,
    pub q_mode: QMode,
    /// Number of limit point-process draws written by `limit` and used by
    /// `compare`.
    pub pp_draws: usize,
}

impl Default for LimitSection {
    fn default() -> Self {
        LimitSection { params: LimitConfig::default(), q_mode: QMode::Shortcut, pp_draws: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonSection {
    pub grid: Vec<f64>,
    pub ks_tol: f64,
    /// Counts of atoms above this level are compared in total variation.
    pub count_threshold: f64,
    pub tv_tol: f64,
    pub laplace: Vec<TestFunction>,
    pub laplace_tol: f64,
    /// Generations counted as late by the jump diagnostics.
    pub rho: usize,
}

impl Default for ComparisonSection {
    fn default() -> Self {
        ComparisonSection {
            grid: DEFAULT_GRID.to_vec(),
            ks_tol: 0.05,
            count_threshold: 1.0,
            tv_tol: 0.05,
            laplace: vec![TestFunction::IndicatorAbove { x: 1.0, theta: 1.0 }],
            laplace_tol: 0.05,
            rho: 3,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg_err = |m: String| Err(CliError::Config(m));
        if self.simulation.n.is_empty() {
            return cfg_err("simulation.n must list at least one horizon".into());
        }
        if self.simulation.replications == 0 {
            return cfg_err("simulation.replications must be positive".into());
        }
        self.displacement()?;
        for &n in &self.simulation.n {
            self.sim_config(n)?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.limit.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let cmp = &self.comparison;
        if cmp.grid.is_empty() || cmp.grid.iter().any(|x| !(*x > 0.0)) {
            return cfg_err("comparison.grid must be nonempty and positive".into());
        }
        for f in &cmp.laplace {
            f.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn displacement(&self) -> Result<DisplacementModel, CliError> {
        let d = &self.displacement;
        DisplacementModel::from_parts(d.alpha, d.p, d.mode.clone()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn sim_config(&self, n: usize) -> Result<SimConfig, CliError> {
        let s = &self.simulation;
        let mut cfg = SimConfig::new(n, self.environment.clone(), self.displacement()?);
        cfg.retain_delta = s.retain_delta;
        cfg.top_k = s.top_k;
        cfg.population_cap = s.population_cap;
        cfg.jump_eta = s.jump_eta;
        cfg.condition_on_survival = s.condition_on_survival;
        cfg.seed = self.seed;
        Ok(cfg)
    }

    /// SHA-256 of the canonical TOML form, in hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
