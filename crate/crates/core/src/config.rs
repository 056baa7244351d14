//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [experiment]
//! name = "ortho"          # wave1 | wave2 | wave_operator | ortho | poisson
//! model = "deepokan"      # deepokan | deeponet | rbf_kan | mlp
//! seed = 1                # weight init and batch shuffling
//!
//! [architecture]
//! branch = [6, 80, 5]     # operators only
//! trunk = [2, 80, 5]      # operators only
//! # layers = [1, 8, 8, 1] # standalone networks only
//! grid_size = 5
//! grid_min = -2.0
//! grid_max = 2.0
//! learnable_centers = false
//! bias = false
//!
//! [training]
//! optimizer = "adam"      # adam | lbfgs
//! lr = 1e-3
//! epochs = 10000
//! batch_size = 64
//! gamma = 0.5             # optional step scheduler
//! step_size = 1000
//! lbfgs_iterations = 20
//!
//! [data]
//! samples = 5000
//! mesh = 32
//! seed = 0
//!
//! [output]
//! dir = "runs/ortho-medium-deepokan"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::poisson::BC_SAMPLES;
use crate::datagen::DEFAULT_TRAIN_FRACTION;
use crate::error::{Error, Result};
use crate::kan::GridSpec;
use crate::operator::FusionMode;
use crate::optim::{OptimizerKind, StepSchedule, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Wave1,
    Wave2,
    WaveOperator,
    Ortho,
    Poisson,
}

impl ExperimentKind {
    pub fn is_operator(self) -> bool {
        !matches!(self, Self::Wave1 | Self::Wave2)
    }

    pub fn is_pde(self) -> bool {
        matches!(self, Self::Ortho | Self::Poisson)
    }

    pub fn branch_dim(self) -> usize {
        match self {
            Self::Wave1 | Self::Wave2 => 1,
            Self::WaveOperator => 3,
            Self::Ortho => 6,
            Self::Poisson => BC_SAMPLES,
        }
    }

    pub fn coord_dim(self) -> usize {
        match self {
            Self::Wave1 | Self::Wave2 => 0,
            Self::WaveOperator => 1,
            Self::Ortho | Self::Poisson => 2,
        }
    }

    pub fn mode(self) -> FusionMode {
        match self {
            Self::Poisson => FusionMode::Transient { steps: BC_SAMPLES },
            _ => FusionMode::Scalar,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Deepokan,
    Deeponet,
    RbfKan,
    Mlp,
}

impl ModelFamily {
    pub fn is_operator(self) -> bool {
        matches!(self, Self::Deepokan | Self::Deeponet)
    }

    pub fn is_kan(self) -> bool {
        matches!(self, Self::Deepokan | Self::RbfKan)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Adam,
    Lbfgs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: ExperimentKind,
    pub model: ModelFamily,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunk: Option<Vec<usize>>,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_grid_min")]
    pub grid_min: f64,
    #[serde(default = "default_grid_max")]
    pub grid_max: f64,
    #[serde(default)]
    pub learnable_centers: bool,
    #[serde(default)]
    pub bias: bool,
}

fn default_grid_size() -> usize {
    5
}
fn default_grid_min() -> f64 {
    -2.0
}
fn default_grid_max() -> f64 {
    2.0
}

impl ArchitectureSection {
    pub fn grid(&self) -> GridSpec {
        GridSpec { size: self.grid_size, min: self.grid_min, max: self.grid_max, learnable: self.learnable_centers }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub optimizer: OptimizerName,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<usize>,
    #[serde(default = "default_lbfgs_iterations")]
    pub lbfgs_iterations: usize,
}

fn default_lbfgs_iterations() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub samples: usize,
    /// Evaluation points for the wave operator.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Nodes per side of the square FEM mesh.
    #[serde(default = "default_mesh")]
    pub mesh: usize,
    #[serde(default = "default_final_time")]
    pub final_time: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Min-max scale branch inputs and coordinates to [−1, 1].
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default)]
    pub seed: u64,
    /// Pre-generated dataset to load instead of generating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
}

fn default_points() -> usize {
    256
}
fn default_mesh() -> usize {
    32
}
fn default_final_time() -> f64 {
    1.0
}
fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Positions within the test split whose fields are written out.
    #[serde(default = "default_probe_samples")]
    pub probe_samples: Vec<usize>,
    /// Time indices written for transient probes.
    #[serde(default = "default_probe_times")]
    pub probe_times: Vec<usize>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_probe_samples() -> Vec<usize> {
    vec![0]
}
fn default_probe_times() -> Vec<usize> {
    vec![0, 49, 99]
}
fn default_bins() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub architecture: ArchitectureSection,
    pub training: TrainingSection,
    pub data: DataSection,
    pub output: OutputSection,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.name
    }

    pub fn family(&self) -> ModelFamily {
        self.experiment.model
    }

    /// Operator basis width `r`.
    pub fn width(&self) -> Option<usize> {
        self.architecture.trunk.as_ref().and_then(|t| t.last().copied())
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.training;
        let schedule = match (t.gamma, t.step_size) {
            (Some(gamma), Some(step_size)) => Some(StepSchedule { gamma, step_size }),
            _ => None,
        };
        TrainConfig {
            optimizer: match t.optimizer {
                OptimizerName::Adam => OptimizerKind::Adam,
                OptimizerName::Lbfgs => OptimizerKind::Lbfgs,
            },
            lr: t.lr,
            schedule,
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: self.experiment.seed,
            lbfgs_iterations: t.lbfgs_iterations,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind();
        let family = self.family();
        let arch = &self.architecture;
        if kind.is_operator() != family.is_operator() {
            return Err(bad(format!("model {family:?} does not fit experiment {kind:?}")));
        }
        let check_widths = |name: &str, w: &[usize]| -> Result<()> {
            if w.len() < 2 || w.contains(&0) {
                return Err(bad(format!("{name} widths must have ≥ 2 positive entries, got {w:?}")));
            }
            Ok(())
        };
        if family.is_operator() {
            if arch.layers.is_some() {
                return Err(bad("operators take `branch` and `trunk`, not `layers`"));
            }
            let (Some(branch), Some(trunk)) = (&arch.branch, &arch.trunk) else {
                return Err(bad("operators need both `branch` and `trunk` widths"));
            };
            check_widths("branch", branch)?;
            check_widths("trunk", trunk)?;
            if branch[0] != kind.branch_dim() {
                return Err(bad(format!("branch input must be {} for {kind:?}", kind.branch_dim())));
            }
            if trunk[0] != kind.coord_dim() {
                return Err(bad(format!("trunk input must be {} for {kind:?}", kind.coord_dim())));
            }
            let r = *trunk.last().unwrap();
            let expected = r * kind.mode().steps();
            if *branch.last().unwrap() != expected {
                return Err(bad(format!("branch output must be {expected} (r = {r}, {} steps)", kind.mode().steps())));
            }
        } else {
            if arch.branch.is_some() || arch.trunk.is_some() {
                return Err(bad("standalone networks take `layers`, not `branch`/`trunk`"));
            }
            let Some(layers) = &arch.layers else {
                return Err(bad("standalone networks need `layers`"));
            };
            check_widths("layers", layers)?;
            if layers[0] != 1 || *layers.last().unwrap() != 1 {
                return Err(bad("curve fits map one input to one output"));
            }
        }
        if family.is_kan() {
            arch.grid().build().map_err(|e| bad(e.to_string()))?;
        } else if arch.learnable_centers {
            return Err(bad("learnable centers only apply to KAN models"));
        }
        if arch.bias && !family.is_operator() {
            return Err(bad("the fusion bias only applies to operators"));
        }
        if self.training.gamma.is_some() != self.training.step_size.is_some() {
            return Err(bad("scheduler needs both `gamma` and `step_size`"));
        }
        self.train_config().validate().map_err(|e| bad(e.to_string()))?;

        let d = &self.data;
        if d.samples < 2 {
            return Err(bad("need at least 2 samples"));
        }
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return Err(bad(format!("train_fraction must lie in (0, 1), got {}", d.train_fraction)));
        }
        if kind.is_pde() && d.mesh < 2 {
            return Err(bad("mesh needs at least 2 nodes per side"));
        }
        if kind == ExperimentKind::WaveOperator && d.points == 0 {
            return Err(bad("wave operator needs at least one point"));
        }
        if !(d.final_time > 0.0 && d.final_time.is_finite()) {
            return Err(bad("final_time must be positive"));
        }
        if self.output.histogram_bins == 0 {
            return Err(bad("histogram_bins must be at least 1"));
        }
        Ok(())
    }
}

/// Complexity levels of the PDE comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Complexity {
    Low,
    Medium,
    High,
}

impl Complexity {
    pub const ALL: [Self; 3] = [Self::Low, Self::Medium, Self::High];

    pub fn name(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
}

fn operator_arch(branch: Vec<usize>, trunk: Vec<usize>) -> ArchitectureSection {
    ArchitectureSection {
        layers: None,
        branch: Some(branch),
        trunk: Some(trunk),
        grid_size: 5,
        grid_min: -2.0,
        grid_max: 2.0,
        learnable_centers: false,
        bias: false,
    }
}

fn output(dir: String) -> OutputSection {
    OutputSection {
        dir: PathBuf::from(dir),
        probe_samples: default_probe_samples(),
        probe_times: default_probe_times(),
        histogram_bins: default_bins(),
    }
}

fn data(samples: usize) -> DataSection {
    DataSection {
        samples,
        points: default_points(),
        mesh: default_mesh(),
        final_time: default_final_time(),
        train_fraction: DEFAULT_TRAIN_FRACTION,
        normalize: true,
        seed: 0,
        dataset: None,
    }
}

fn adam(lr: f64, epochs: usize, batch_size: usize, gamma: f64, step_size: usize) -> TrainingSection {
    TrainingSection {
        optimizer: OptimizerName::Adam,
        lr,
        epochs,
        batch_size,
        gamma: Some(gamma),
        step_size: Some(step_size),
        lbfgs_iterations: default_lbfgs_iterations(),
    }
}

/// Curve fit on `y₁`: RBF-KAN [1,8,8,1] with 8 centers or MLP [1,24,24,1], L-BFGS.
pub fn wave1_preset(model: ModelFamily) -> ExperimentConfig {
    let layers = if model == ModelFamily::RbfKan { vec![1, 8, 8, 1] } else { vec![1, 24, 24, 1] };
    ExperimentConfig {
        experiment: ExperimentSection { name: ExperimentKind::Wave1, model, seed: 1 },
        architecture: ArchitectureSection {
            layers: Some(layers),
            branch: None,
            trunk: None,
            grid_size: 8,
            grid_min: -2.0,
            grid_max: 2.0,
            learnable_centers: false,
            bias: false,
        },
        training: TrainingSection {
            optimizer: OptimizerName::Lbfgs,
            lr: 1.0,
            epochs: 200,
            batch_size: 1000,
            gamma: None,
            step_size: None,
            lbfgs_iterations: default_lbfgs_iterations(),
        },
        data: DataSection { normalize: false, ..data(1000) },
        output: output(format!("runs/wave1-{}", family_slug(model))),
    }
}

/// Curve fit on `y₂` with Adam; `lr = 1e-2` for 15000 epochs or `1e-3` for 20000.
pub fn wave2_preset(model: ModelFamily, lr: f64) -> ExperimentConfig {
    let mut cfg = wave1_preset(model);
    cfg.experiment.name = ExperimentKind::Wave2;
    cfg.training = TrainingSection {
        optimizer: OptimizerName::Adam,
        lr,
        epochs: if lr >= 1e-2 { 15000 } else { 20000 },
        batch_size: 1000,
        gamma: None,
        step_size: None,
        lbfgs_iterations: default_lbfgs_iterations(),
    };
    cfg.output.dir = PathBuf::from(format!("runs/wave2-{}", family_slug(model)));
    cfg
}

/// Parametric wave operator with two hidden layers and `r = 40`.
pub fn wave_operator_preset(model: ModelFamily, lr: f64) -> ExperimentConfig {
    let n = if model == ModelFamily::Deepokan { 50 } else { 350 };
    ExperimentConfig {
        experiment: ExperimentSection { name: ExperimentKind::WaveOperator, model, seed: 1 },
        architecture: operator_arch(vec![3, n, n, 40], vec![1, n, n, 40]),
        training: adam(lr, 20000, 1024, 0.9, 500),
        data: data(20000),
        output: output(format!("runs/wave-operator-{}", family_slug(model))),
    }
}

pub fn ortho_hidden(model: ModelFamily, level: Complexity) -> usize {
    match (model, level) {
        (ModelFamily::Deepokan, Complexity::Low) => 14,
        (ModelFamily::Deepokan, Complexity::Medium) => 80,
        (ModelFamily::Deepokan, Complexity::High) => 190,
        (_, Complexity::Low) => 62,
        (_, Complexity::Medium) => 358,
        (_, Complexity::High) => 855,
    }
}

pub fn poisson_hidden(model: ModelFamily, level: Complexity) -> usize {
    let base = match level {
        Complexity::Low => 5,
        Complexity::Medium => 10,
        Complexity::High => 20,
    };
    if model == ModelFamily::Deepokan {
        base
    } else {
        5 * base
    }
}

/// Orthotropic plate, one hidden layer, `r = 5`, Adam with step decay.
pub fn ortho_preset(model: ModelFamily, level: Complexity) -> ExperimentConfig {
    let n = ortho_hidden(model, level);
    ExperimentConfig {
        experiment: ExperimentSection { name: ExperimentKind::Ortho, model, seed: 1 },
        architecture: operator_arch(vec![6, n, 5], vec![2, n, 5]),
        training: adam(1e-3, 10000, 64, 0.5, 1000),
        data: data(5000),
        output: output(format!("runs/ortho-{}-{}", level.name(), family_slug(model))),
    }
}

/// Transient Poisson, one hidden layer, `r = 4`, 100 output steps.
pub fn poisson_preset(model: ModelFamily, level: Complexity) -> ExperimentConfig {
    let n = poisson_hidden(model, level);
    ExperimentConfig {
        experiment: ExperimentSection { name: ExperimentKind::Poisson, model, seed: 1 },
        architecture: operator_arch(vec![BC_SAMPLES, n, 4 * BC_SAMPLES], vec![2, n, 4]),
        training: adam(1e-3, 10000, 64, 0.5, 1000),
        data: data(4500),
        output: output(format!("runs/poisson-{}-{}", level.name(), family_slug(model))),
    }
}

pub fn family_slug(model: ModelFamily) -> &'static str {
    match model {
        ModelFamily::Deepokan => "deepokan",
        ModelFamily::Deeponet => "deeponet",
        ModelFamily::RbfKan => "rbf-kan",
        ModelFamily::Mlp => "mlp",
    }
}

/// Every built-in preset by file stem.
pub fn presets() -> Vec<(String, ExperimentConfig)> {
    let mut out = Vec::new();
    for m in [ModelFamily::RbfKan, ModelFamily::Mlp] {
        out.push((format!("wave1-{}", family_slug(m)), wave1_preset(m)));
        out.push((format!("wave2a-{}", family_slug(m)), wave2_preset(m, 1e-2)));
        out.push((format!("wave2b-{}", family_slug(m)), wave2_preset(m, 1e-3)));
    }
    for m in [ModelFamily::Deepokan, ModelFamily::Deeponet] {
        out.push((format!("wave-operator-{}", family_slug(m)), wave_operator_preset(m, 1e-3)));
        for level in Complexity::ALL {
            out.push((format!("ortho-{}-{}", level.name(), family_slug(m)), ortho_preset(m, level)));
            out.push((format!("poisson-{}-{}", level.name(), family_slug(m)), poisson_preset(m, level)));
        }
    }
    for (name, cfg) in &mut out {
        cfg.output.dir = PathBuf::from(format!("runs/{name}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for (name, cfg) in presets() {
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg, "{name}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = wave1_preset(ModelFamily::Mlp).to_toml();
        text = text.replace("[training]", "[training]\nmomentum = 0.9");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn inconsistent_architecture_rejected() {
        let mut cfg = poisson_preset(ModelFamily::Deepokan, Complexity::Low);
        cfg.architecture.branch = Some(vec![100, 5, 4]);
        assert!(cfg.validate().is_err());
        let mut cfg = ortho_preset(ModelFamily::Deeponet, Complexity::Low);
        cfg.experiment.model = ModelFamily::Mlp;
        assert!(cfg.validate().is_err());
        let mut cfg = ortho_preset(ModelFamily::Deeponet, Complexity::Low);
        cfg.architecture.trunk = Some(vec![1, 62, 5]);
        assert!(cfg.validate().is_err());
        let mut cfg = wave1_preset(ModelFamily::RbfKan);
        cfg.training.lr = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = r#"
[experiment]
name = "ortho"
model = "deeponet"

[architecture]
branch = [6, 62, 5]
trunk = [2, 62, 5]

[training]
optimizer = "adam"
lr = 0.001
epochs = 10
batch_size = 64

[data]
samples = 20

[output]
dir = "out"
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.data.mesh, 32);
        assert_eq!(cfg.data.train_fraction, 0.8);
        assert!(cfg.train_config().schedule.is_none());
        assert_eq!(cfg.width(), Some(5));
    }
}
