//! Optional TOML run configuration. Command-line flags override it.
//!
//! ```toml
//! seed = 7
//! threads = 4
//!
//! [scenario]        # generator settings, any subset
//! epochs = 600
//! noise_sigma = 1.5
//!
//! [solver]
//! max_iterations = 30
//!
//! [train]
//! epochs = 200
//! learning_rate = 0.0005
//!
//! [eval]
//! bw_fallback = false
//! ```

use std::path::Path;

use serde::Deserialize;
use tdl_gnss::pipeline::EvalConfig;
use tdl_gnss::synth::ScenarioConfig;
use tdl_gnss::wls::SolverConfig;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub scenario: Option<ScenarioConfig>,
    pub solver: Option<SolverConfig>,
    pub train: TrainSection,
    pub eval: Option<EvalConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub full_batch: Option<bool>,
    pub log_every: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Solver settings: the `[eval]` table's solver, then `[solver]`.
    pub fn solver(&self) -> SolverConfig {
        self.solver
            .or_else(|| self.eval.as_ref().map(|e| e.solver))
            .unwrap_or_default()
    }

    pub fn eval(&self) -> EvalConfig {
        let mut cfg = self.eval.clone().unwrap_or_default();
        cfg.solver = self.solver();
        cfg
    }
}
