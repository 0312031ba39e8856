//! Experiment configuration: one TOML document that names the automaton and
//! workspace files and sets every knob of the plant, controller, tubes,
//! switching, simulation, and monitoring.
//!
//! Relative paths inside the document are resolved against the directory
//! containing it, so a config directory is self-contained and relocatable.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::automaton::{
    build_switcher, find_accepting_fragment, triplets, AutomatonError, Nba, RunFragment, Switcher,
};
use crate::controller::FunnelSettings;
use crate::disturbance::{build_disturbance, DisturbanceError, DisturbanceModel};
use crate::hybrid::{HybridController, HybridError, SwitchingPolicy};
use crate::plants::{build_plant, Dynamics, PlantError};
use crate::sim::SimParams;
use crate::tubes::SynthParams;
use crate::workspace::{LabeledWorkspace, RaTask, WorkspaceError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Disturbance(#[from] DisturbanceError),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilesConfig {
    pub automaton: PathBuf,
    pub workspace: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentConfig {
    pub initial_proposition: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    #[serde(rename = "type")]
    pub kind: String,
    pub initial_state: Vec<f64>,
    #[serde(default)]
    pub params: toml::Table,
    /// Disturbance description: a `type` key plus that model's parameters.
    /// Omitted means no disturbance.
    #[serde(default)]
    pub disturbance: toml::Table,
}

fn default_funnel() -> FunnelConfig {
    let s = FunnelSettings::default();
    FunnelConfig {
        q_rel: s.q_rel,
        q_abs: s.q_abs,
        mu: s.mu,
        rho: s.rho,
        rho_abs: s.rho_abs,
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kappa: Vec<f64>,
    #[serde(default = "default_funnel")]
    pub funnel: FunnelConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunnelConfig {
    pub q_rel: f64,
    pub q_abs: f64,
    pub mu: f64,
    pub rho: f64,
    pub rho_abs: f64,
}

impl FunnelConfig {
    pub fn settings(&self) -> FunnelSettings {
        FunnelSettings {
            q_rel: self.q_rel,
            q_abs: self.q_abs,
            mu: self.mu,
            rho: self.rho,
            rho_abs: self.rho_abs,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubesConfig {
    pub t_c: f64,
    #[serde(default = "TubesConfig::default_width_policy")]
    pub width_policy: f64,
    #[serde(default = "TubesConfig::default_delta_frac")]
    pub delta_frac: f64,
    #[serde(default = "TubesConfig::default_margin")]
    pub margin: f64,
    #[serde(default = "TubesConfig::default_dt_frac")]
    pub dt_frac: f64,
    #[serde(default = "TubesConfig::default_max_rounds")]
    pub max_rounds: usize,
    /// Per-task parameter overrides, by index in the switcher sequence.
    #[serde(default)]
    pub overrides: Vec<TubeOverride>,
}

impl TubesConfig {
    fn default_width_policy() -> f64 {
        SynthParams::default().width_policy
    }
    fn default_delta_frac() -> f64 {
        SynthParams::default().delta_frac
    }
    fn default_margin() -> f64 {
        SynthParams::default().margin
    }
    fn default_dt_frac() -> f64 {
        SynthParams::default().dt_frac
    }
    fn default_max_rounds() -> usize {
        SynthParams::default().max_rounds
    }

    fn base_params(&self) -> SynthParams {
        SynthParams {
            t_c: self.t_c,
            width_policy: self.width_policy,
            delta_frac: self.delta_frac,
            margin: self.margin,
            dt_frac: self.dt_frac,
            max_rounds: self.max_rounds,
        }
    }

    /// Resolved parameters for each of `count` tasks.
    pub fn per_task(&self, count: usize) -> Result<Vec<SynthParams>, ConfigError> {
        let mut out = vec![self.base_params(); count];
        for o in &self.overrides {
            let slot = out.get_mut(o.index).ok_or_else(|| {
                ConfigError::Invalid(format!(
                    "tube override index {} out of range (only {count} tasks)",
                    o.index
                ))
            })?;
            if let Some(v) = o.t_c {
                slot.t_c = v;
            }
            if let Some(v) = o.width_policy {
                slot.width_policy = v;
            }
            if let Some(v) = o.delta_frac {
                slot.delta_frac = v;
            }
            if let Some(v) = o.margin {
                slot.margin = v;
            }
            if let Some(v) = o.dt_frac {
                slot.dt_frac = v;
            }
            if let Some(v) = o.max_rounds {
                slot.max_rounds = v;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeOverride {
    pub index: usize,
    pub t_c: Option<f64>,
    pub width_policy: Option<f64>,
    pub delta_frac: Option<f64>,
    pub margin: Option<f64>,
    pub dt_frac: Option<f64>,
    pub max_rounds: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingConfig {
    pub depth: f64,
}

impl Default for SwitchingConfig {
    fn default() -> SwitchingConfig {
        SwitchingConfig {
            depth: SwitchingPolicy::default().depth,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    pub required_visits: usize,
}

impl Default for MonitorConfig {
    fn default() -> MonitorConfig {
        MonitorConfig { required_visits: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> OutputConfig {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub files: FilesConfig,
    pub fragment: FragmentConfig,
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub tubes: TubesConfig,
    #[serde(default)]
    pub switching: SwitchingConfig,
    pub sim: SimConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            message: e.to_string(),
        })
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A fully assembled experiment: parsed documents plus the derived
/// fragment, switcher, tasks, and per-task synthesis parameters.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub nba: Nba,
    pub workspace: LabeledWorkspace,
    pub fragment: RunFragment,
    pub switcher: Switcher,
    pub tasks: Vec<RaTask>,
    pub synth: Vec<SynthParams>,
}

impl Experiment {
    /// Load a config file and assemble everything derived from it.
    pub fn load(config_path: &Path) -> Result<Experiment, ConfigError> {
        let text = read(config_path)?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: config_path.to_path_buf(),
                message: e.to_string(),
            })?;
        let base_dir = config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Experiment::assemble(config, base_dir)
    }

    pub fn assemble(
        config: ExperimentConfig,
        base_dir: PathBuf,
    ) -> Result<Experiment, ConfigError> {
        let automaton_path = base_dir.join(&config.files.automaton);
        let workspace_path = base_dir.join(&config.files.workspace);
        let nba = Nba::from_toml(&read(&automaton_path)?)?;
        let workspace = LabeledWorkspace::from_toml(&read(&workspace_path)?)?;
        let fragment = find_accepting_fragment(&nba, &config.fragment.initial_proposition)?;
        let switcher = build_switcher(&nba, &fragment)?;
        let tasks = switcher
            .sequence
            .iter()
            .map(|t| workspace.ra_task(t))
            .collect::<Result<Vec<_>, _>>()?;
        let synth = config.tubes.per_task(tasks.len())?;
        if config.controller.kappa.is_empty() {
            return Err(ConfigError::Invalid("kappa must not be empty".into()));
        }
        if !(config.sim.dt > 0.0) || !(config.sim.horizon > 0.0) {
            return Err(ConfigError::Invalid(
                "sim horizon and dt must be positive".into(),
            ));
        }
        Ok(Experiment {
            config,
            base_dir,
            nba,
            workspace,
            fragment,
            switcher,
            tasks,
            synth,
        })
    }

    /// The triplets the switcher walks, in sequence order.
    pub fn triplets(&self) -> Result<Vec<crate::automaton::Triplet>, ConfigError> {
        Ok(triplets(&self.nba, &self.fragment)?)
    }

    pub fn build_plant(&self) -> Result<Box<dyn Dynamics>, ConfigError> {
        let plant = build_plant(&self.config.plant.kind, &self.config.plant.params)?;
        if self.config.plant.initial_state.len() != plant.state_dimension() {
            return Err(ConfigError::Invalid(format!(
                "initial state has {} components, plant `{}` expects {}",
                self.config.plant.initial_state.len(),
                plant.kind(),
                plant.state_dimension()
            )));
        }
        if plant.output_dimension() != self.workspace.dimension {
            return Err(ConfigError::Invalid(format!(
                "plant `{}` has {} outputs but the workspace has dimension {}",
                plant.kind(),
                plant.output_dimension(),
                self.workspace.dimension
            )));
        }
        if plant.stages() != self.config.controller.kappa.len() {
            return Err(ConfigError::Invalid(format!(
                "plant `{}` has {} stages but kappa lists {}",
                plant.kind(),
                plant.stages(),
                self.config.controller.kappa.len()
            )));
        }
        Ok(plant)
    }

    /// Build the disturbance model, seeded by `seed` (the CLI may override
    /// the config seed).
    pub fn build_disturbance(
        &self,
        seed: u64,
    ) -> Result<Box<dyn DisturbanceModel>, ConfigError> {
        let table = &self.config.plant.disturbance;
        if table.is_empty() {
            return Ok(build_disturbance(
                "zero",
                &toml::Table::new(),
                self.workspace.dimension,
                seed,
            )?);
        }
        let kind = table
            .get("type")
            .and_then(|v| v.as_str())
            .ok_or_else(|| {
                ConfigError::Invalid("disturbance table needs a string `type`".into())
            })?
            .to_string();
        let mut params = table.clone();
        params.remove("type");
        Ok(build_disturbance(
            &kind,
            &params,
            self.workspace.dimension,
            seed,
        )?)
    }

    pub fn funnel_settings(&self) -> FunnelSettings {
        self.config.controller.funnel.settings()
    }

    pub fn switching_policy(&self) -> SwitchingPolicy {
        SwitchingPolicy {
            depth: self.config.switching.depth,
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            horizon: self.config.sim.horizon,
            dt: self.config.sim.dt,
        }
    }

    /// Assemble the hybrid runtime, armed at the configured initial state.
    pub fn build_hybrid(&self) -> Result<HybridController, ConfigError> {
        Ok(HybridController::new(
            self.switcher.clone(),
            self.tasks.clone(),
            self.config.controller.kappa.clone(),
            self.funnel_settings(),
            self.synth.clone(),
            self.switching_policy(),
            &self.config.plant.initial_state,
            0.0,
        )?)
    }
}
