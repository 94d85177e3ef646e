//! TOML run configuration shared by the command-line subcommands.
//!
//! ```toml
//! seeds = [0, 1, 2, 3, 4]
//! output_dir = "out/idm_n"
//! epsilon = 0.01
//! beta = 0.001
//! delta = [10.0, 6.0, 6.0]
//!
//! [policy]
//! kind = "constant_decel"
//! accel = -5.0
//!
//! [model]
//! name = "idm_n"
//! ```
//!
//! Relative paths are taken relative to the working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{CoveringGrid, Delta, Metric, SafeSetDump, StateBounds};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::quantifier::{required_consecutive_runs, EdgeMode, PruneMode, QuantConfig};
use crate::sim::{LeadPolicy, SimConfig};

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_bounds() -> StateBounds {
    StateBounds::car_following(100.0, 30.0).expect("valid")
}

fn default_repeats() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "SimSection::default_dt")]
    pub dt: f64,
    #[serde(default = "SimSection::default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub collision_headway: f64,
}

impl SimSection {
    fn default_dt() -> f64 {
        0.1
    }

    fn default_horizon() -> usize {
        300
    }
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: Self::default_dt(),
            horizon: Self::default_horizon(),
            collision_headway: 0.0,
        }
    }
}

/// Where quantification starts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    /// The full lattice over the bounds.
    #[default]
    Full,
    /// The active set of an earlier dump.
    Dump(PathBuf),
}

impl Init {
    /// Short label for summary tables.
    pub fn label(&self) -> String {
        match self {
            Init::Full => "full".into(),
            Init::Dump(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcapSection {
    /// Battery CSV; the bundled 48-row battery when absent.
    #[serde(default)]
    pub battery: Option<PathBuf>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

impl Default for NcapSection {
    fn default() -> Self {
        NcapSection {
            battery: None,
            repeats: default_repeats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub epsilon: f64,
    pub beta: f64,
    pub delta: [f64; 3],
    #[serde(default = "default_bounds")]
    pub bounds: StateBounds,
    #[serde(default)]
    pub sim: SimSection,
    pub policy: LeadPolicy,
    pub model: ModelSpec,
    #[serde(default)]
    pub init: Init,
    #[serde(default)]
    pub edge_mode: EdgeMode,
    #[serde(default)]
    pub prune_mode: PruneMode,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub max_total_runs: Option<usize>,
    #[serde(default)]
    pub ncap: NcapSection,
}

impl RunConfigFile {
    /// Parses and checks a configuration.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn check(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.ncap.repeats == 0 {
            return Err(Error::Config("ncap.repeats must be at least 1".into()));
        }
        required_consecutive_runs(self.epsilon, self.beta)?;
        self.quant_config(self.seeds[0]).check()?;
        // catches unknown names and missing model parameters early
        self.model.build(0)?;
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            horizon: self.sim.horizon,
            bounds: self.bounds,
            collision_headway: self.sim.collision_headway,
        }
    }

    pub fn quant_config(&self, seed: u64) -> QuantConfig {
        QuantConfig {
            epsilon: self.epsilon,
            beta: self.beta,
            delta: Delta(self.delta),
            sim: self.sim_config(),
            policy: self.policy.clone(),
            seed,
            max_total_runs: self.max_total_runs,
            edge_mode: self.edge_mode,
            prune_mode: self.prune_mode,
            metric: self.metric,
        }
    }

    /// Initial grid for quantification, honoring `init`.
    pub fn initial_grid(&self) -> Result<CoveringGrid> {
        match &self.init {
            Init::Full => self.quant_config(self.seeds[0]).initial_grid(),
            Init::Dump(path) => SafeSetDump::load(path)?.to_grid(),
        }
    }

    /// JSON echo embedded in every output.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
epsilon = 0.01
beta = 0.001
delta = [10.0, 6.0, 6.0]

[policy]
kind = "constant_decel"
accel = -5.0

[model]
name = "idm_n"
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfigFile::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.init, Init::Full);
        assert_eq!(cfg.sim_config(), SimConfig::car_following_default());
        let q = cfg.quant_config(7);
        assert_eq!(q.seed, 7);
        assert_eq!(q.required_runs().unwrap(), 688);
        assert_eq!(cfg.initial_grid().unwrap().active_len(), 45);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{MINIMAL}\n[extra]\nfoo = 1\n");
        assert!(matches!(
            RunConfigFile::from_toml_str(&text),
            Err(Error::Config(_))
        ));
        let text = MINIMAL.replace("beta = 0.001", "beta = 0.001\nbeat = 3");
        assert!(RunConfigFile::from_toml_str(&text).is_err());
    }

    #[test]
    fn rejects_zero_epsilon() {
        let text = MINIMAL.replace("epsilon = 0.01", "epsilon = 0.0");
        assert!(matches!(
            RunConfigFile::from_toml_str(&text),
            Err(Error::InvalidProbability {
                name: "epsilon",
                ..
            })
        ));
    }

    #[test]
    fn rejects_unknown_model() {
        let text = MINIMAL.replace("idm_n", "human");
        assert!(matches!(
            RunConfigFile::from_toml_str(&text),
            Err(Error::UnknownModel(_))
        ));
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
seeds = [3, 4]
output_dir = "out/x"
epsilon = 0.1
beta = 0.001
delta = [10.0, 6.0, 6.0]
edge_mode = "cascading"
prune_mode = "cell"
metric = "normalized"
max_total_runs = 1000
init = { dump = "sets/h.json" }

[bounds]
lower = [0.0, 0.0, 0.0]
upper = [100.0, 30.0, 30.0]

[sim]
dt = 0.05
horizon = 600

[policy]
kind = "piecewise_profile"
segments = [[1.0, -2.0], [2.0, 0.0]]

[model]
name = "stochastic:idm_h"
p_fail = 0.02

[ncap]
repeats = 10
"#;
        let cfg = RunConfigFile::from_toml_str(text).unwrap();
        assert_eq!(cfg.edge_mode, EdgeMode::Cascading);
        assert_eq!(cfg.prune_mode, PruneMode::Cell);
        assert_eq!(cfg.init.label(), "h");
        assert_eq!(cfg.ncap.repeats, 10);
        let back: RunConfigFile = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
