//! Gaussian-RBF Kolmogorov-Arnold networks, their DeepOKAN operator assembly and
//! MLP/DeepONet baselines, with the data generators, trainers and evaluation
//! used to compare them.

pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod kan;
pub mod linalg;
pub mod mlp;
pub mod model;
pub mod network;
pub mod operator;
pub mod optim;
pub mod persist;
pub mod report;
pub mod rng;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use kan::{GridSpec, KanLayer, KanNetwork, RbfGrid};
pub use linalg::Matrix;
pub use mlp::{Activation, MlpNetwork};
pub use model::Model;
pub use network::Network;
pub use operator::{DeepOKan, DeepONet, FusionMode, OperatorModel};
