use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::mlp::MlpConfig;
use crate::rng::DEFAULT_SEED;
use crate::sampling::PointCounts;
use crate::systems::{relaxed_rows, Mode, ProblemId, RelaxType};
use crate::trainer::{default_mode, network_configs, LossWeights, TrainConfig, TrainSetup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Pinn,
    Relaxnn,
}

/// Layer widths, input to output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Networks {
    pub u: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub n_cells: usize,
    pub cfl: f64,
    /// Solver runs for the statistics of a stochastic problem.
    pub samples: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            n_cells: 2000,
            cfl: 0.5,
            samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    pub n_cells: usize,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UqConfig {
    pub mc_samples: usize,
    /// Gauss–Legendre points per stochastic dimension; 0 disables quadrature.
    pub quad_points: usize,
}

impl Default for UqConfig {
    fn default() -> Self {
        Self {
            mc_samples: 100_000,
            quad_points: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write parameter checkpoints every this many epochs (0 = never).
    pub checkpoint_every: usize,
    /// Print a progress line every this many epochs (0 = never).
    pub log_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            checkpoint_every: 10_000,
            log_every: 1000,
        }
    }
}

/// One experiment, as read from a TOML file.
///
/// ```
/// use relaxnn::harness::ExperimentConfig;
/// use relaxnn::systems::ProblemId;
///
/// let cfg = ExperimentConfig::catalog(ProblemId::EulerSod);
/// let text = cfg.to_toml().unwrap();
/// assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
/// assert!(text.contains("relax_type = 3"));
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax_type: Option<u8>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub out: PathBuf,
    pub networks: Networks,
    pub weights: LossWeights,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub points: PointCounts,
    #[serde(default)]
    pub reference: ReferenceConfig,
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub uq: UqConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl ExperimentConfig {
    /// Tuned defaults of a catalogued problem.
    pub fn catalog(id: ProblemId) -> Self {
        let mode = default_mode(id);
        let (u, v) = network_configs(id, mode).expect("catalogued problems have valid defaults");
        let spec = id.spec();
        let (mode_name, relax_type) = split_mode(mode);
        Self {
            problem: id,
            mode: mode_name,
            relax_type,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out").join(id.as_str()),
            networks: Networks {
                u: u.dims(),
                v: v.map(|v| v.dims()),
            },
            weights: LossWeights::catalog(id),
            train: TrainConfig::for_kind(spec.kind),
            points: PointCounts::default(),
            reference: ReferenceConfig::default(),
            evaluation: EvaluationConfig {
                n_cells: 400,
                times: id.figure_times(),
            },
            uq: UqConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        Ok(toml::to_string(self)?)
    }

    pub fn mode(&self) -> Result<Mode, HarnessError> {
        match (self.mode, self.relax_type) {
            (ModeName::Pinn, _) => Ok(Mode::Pinn),
            (ModeName::Relaxnn, Some(level)) => RelaxType::from_level(level)
                .map(Mode::Relax)
                .ok_or_else(|| HarnessError::Config(format!("relax_type must be 1, 2 or 3, got {level}"))),
            (ModeName::Relaxnn, None) => Ok(default_mode(self.problem)),
        }
    }

    /// Switches the loss variant. Networks that no longer fit are replaced
    /// by the catalogue shapes for the new variant.
    pub fn set_mode(&mut self, mode: Mode) -> Result<(), HarnessError> {
        let (name, level) = split_mode(mode);
        self.mode = name;
        self.relax_type = level;
        let spec = self.problem.spec();
        let relaxed = relaxed_rows(spec.kind, mode)?.len();
        let fits = |dims: &Vec<usize>| dims.last() == Some(&relaxed);
        if relaxed == 0 {
            self.networks.v = None;
        } else if !self.networks.v.as_ref().is_some_and(fits) {
            self.networks.v = network_configs(self.problem, mode)?.1.map(|c| c.dims());
        }
        Ok(())
    }

    /// The training run this config describes.
    pub fn setup(&self) -> Result<TrainSetup, HarnessError> {
        let mode = self.mode()?;
        let u_config = MlpConfig::from_dims(&self.networks.u)?;
        let v_config = self.networks.v.as_deref().map(MlpConfig::from_dims).transpose()?;
        let setup = TrainSetup {
            problem: self.problem.spec(),
            mode,
            u_config,
            v_config,
            weights: self.weights.clone(),
            train: TrainConfig {
                seed: self.seed,
                ..self.train.clone()
            },
            counts: self.points,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.setup()?;
        if self.evaluation.n_cells == 0 || self.reference.n_cells == 0 {
            return Err(HarnessError::Config("grids need at least one cell".into()));
        }
        let spec = self.problem.spec();
        if let Some(t) = self.evaluation.times.iter().find(|t| !(spec.t0..=spec.t_end).contains(*t)) {
            return Err(HarnessError::Config(format!(
                "evaluation time {t} is outside [{}, {}]",
                spec.t0, spec.t_end
            )));
        }
        Ok(())
    }
}

fn split_mode(mode: Mode) -> (ModeName, Option<u8>) {
    match mode {
        Mode::Pinn => (ModeName::Pinn, None),
        Mode::Relax(r) => (ModeName::Relaxnn, Some(r.level())),
    }
}
