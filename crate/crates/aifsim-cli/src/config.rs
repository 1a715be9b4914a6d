//! Experiment configuration: JSON schema, name resolution, and defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use aifsim::{ClosedLoopConfig, Error, FeedbackKind, Network, Result};

/// Model reference: inline network, file path, or named preset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Preset(String),
    Inline(Network),
}

/// Controller block keyed by species names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerBlock {
    pub mu: f64,
    pub theta: f64,
    pub eta: f64,
    pub k: f64,
    #[serde(default = "default_feedback")]
    pub feedback: FeedbackKind,
    pub controlled: String,
    #[serde(default)]
    pub actuated: Option<String>,
}

fn default_feedback() -> FeedbackKind {
    FeedbackKind::None
}

impl ControllerBlock {
    pub fn resolve(&self, network: &Network) -> Result<ClosedLoopConfig> {
        let controlled = network
            .species_index(&self.controlled)
            .ok_or_else(|| Error::Config(format!("unknown controlled species '{}'", self.controlled)))?;
        let actuated = match &self.actuated {
            Some(name) => network
                .species_index(name)
                .ok_or_else(|| Error::Config(format!("unknown actuated species '{name}'")))?,
            None => 0,
        };
        Ok(ClosedLoopConfig::new(self.mu, self.theta, self.eta, self.k, controlled)
            .with_feedback(self.feedback)
            .with_actuated(actuated))
    }
}

/// Sweep grids over the integral gain and the feedback gain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepGrid {
    pub k: Vec<f64>,
    #[serde(rename = "Kp")]
    pub kp: Vec<f64>,
    /// Which feedback kind the Kp grid applies to ("on_off" or "hill").
    #[serde(default = "default_sweep_kind")]
    pub kind: String,
}

fn default_sweep_kind() -> String {
    "on_off".into()
}

/// One experiment: model, controller, run sizes, and output options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelRef,
    pub controller: ControllerBlock,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub seed: u64,
    /// Tail fraction of the grid used for stationary statistics.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Settling band around the set-point, as a fraction.
    #[serde(default = "default_band")]
    pub band: f64,
    /// Initial molecule counts by species name; absent species start at 0.
    #[serde(default)]
    pub x0: std::collections::BTreeMap<String, u64>,
    /// Initial controller counts (Z1, Z2).
    #[serde(default)]
    pub z0: (u64, u64),
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    /// Covariance pairs (by species name) to include in trajectory CSV.
    #[serde(default)]
    pub cov_pairs: Vec<(String, String)>,
}

fn default_n() -> usize {
    10_000
}
fn default_t_end() -> f64 {
    20.0
}
fn default_grid_points() -> usize {
    201
}
fn default_window() -> f64 {
    0.25
}
fn default_band() -> f64 {
    0.02
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("n must be at least 2".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config("t_end must be positive".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Config("grid_points must be at least 2".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.k.is_empty() || sweep.kp.is_empty() {
                return Err(Error::Config("sweep grids must be non-empty".into()));
            }
            if sweep.kind != "on_off" && sweep.kind != "hill" {
                return Err(Error::Config(format!(
                    "unknown sweep feedback kind '{}'",
                    sweep.kind
                )));
            }
            if sweep.k.iter().any(|&v| v <= 0.0) || sweep.kp.iter().any(|&v| v < 0.0) {
                return Err(Error::Config(
                    "sweep requires k > 0 and Kp >= 0 everywhere".into(),
                ));
            }
        }
        Ok(())
    }

    /// Materialize the model reference into a network.
    pub fn network(&self) -> Result<Network> {
        match &self.model {
            ModelRef::Inline(net) => Ok(net.clone()),
            ModelRef::Preset(name) => preset_network(name),
        }
    }

    /// Initial open-loop counts resolved against the network ordering.
    pub fn initial_counts(&self, network: &Network) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; network.dim()];
        for (name, &value) in &self.x0 {
            let idx = network
                .species_index(name)
                .ok_or_else(|| Error::Config(format!("x0 names unknown species '{name}'")))?;
            counts[idx] = value;
        }
        Ok(counts)
    }
}

/// Look up a named preset model.
pub fn preset_network(name: &str) -> Result<Network> {
    use aifsim::presets;
    match name {
        "gene" | "gene-expression" => Ok(presets::gene_network(&presets::GENE_PARAMS)),
        "maturation" => Ok(presets::maturation_network(&presets::MATURATION_PARAMS)),
        "dimerization" | "dimer" => Ok(presets::dimerization_network(&presets::DIMER_PARAMS)),
        other => Err(Error::Config(format!(
            "unknown preset model '{other}' (expected gene, maturation, or dimerization)"
        ))),
    }
}

/// A config file is either a bare [`ExperimentConfig`] or a manifest from a
/// previous run, which embeds the resolved config it was produced with.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ConfigOrManifest {
    Manifest { config: ExperimentConfig },
    Config(ExperimentConfig),
}

/// Load a config, accepting run manifests so outputs can be re-derived.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let parsed: ConfigOrManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let config = match parsed {
        ConfigOrManifest::Manifest { config } => config,
        ConfigOrManifest::Config(config) => config,
    };
    config.validate()?;
    Ok(config)
}

/// Reference config for a preset model, at desk-scale run sizes.
pub fn preset_config(model: &str) -> Result<ExperimentConfig> {
    let (controlled, t_end) = match model {
        "gene" => ("X2", 20.0),
        "maturation" => ("X3", 30.0),
        "dimerization" => ("X3", 30.0),
        other => return Err(Error::Config(format!("unknown preset '{other}'"))),
    };
    Ok(ExperimentConfig {
        model: ModelRef::Preset(model.into()),
        controller: ControllerBlock {
            mu: 10.0,
            theta: 2.0,
            eta: 100.0,
            k: 3.0,
            feedback: FeedbackKind::None,
            controlled: controlled.into(),
            actuated: Some("X1".into()),
        },
        n: 10_000,
        t_end,
        grid_points: 201,
        seed: 0,
        window: 0.25,
        band: 0.02,
        x0: Default::default(),
        z0: (0, 0),
        sweep: None,
        cov_pairs: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controller_block_round_trip() {
        let text = r#"{
            "mu": 10, "theta": 2, "eta": 100, "k": 3,
            "feedback": {"kind": "on_off", "Kp": 20},
            "controlled": "X2", "actuated": "X1"
        }"#;
        let block: ControllerBlock = serde_json::from_str(text).unwrap();
        let net = preset_network("gene").unwrap();
        let cfg = block.resolve(&net).unwrap();
        assert_eq!(cfg.controlled, 1);
        assert_eq!(cfg.actuated, 0);
        assert_eq!(cfg.feedback, FeedbackKind::OnOff { kp: 20.0 });
    }

    #[test]
    fn unknown_species_is_config_error() {
        let block = ControllerBlock {
            mu: 10.0,
            theta: 2.0,
            eta: 100.0,
            k: 3.0,
            feedback: FeedbackKind::None,
            controlled: "X9".into(),
            actuated: None,
        };
        let net = preset_network("gene").unwrap();
        assert!(matches!(block.resolve(&net), Err(Error::Config(_))));
    }

    #[test]
    fn preset_configs_validate() {
        for model in ["gene", "maturation", "dimerization"] {
            let cfg = preset_config(model).unwrap();
            cfg.validate().unwrap();
            let net = cfg.network().unwrap();
            cfg.controller.resolve(&net).unwrap();
        }
    }
}
