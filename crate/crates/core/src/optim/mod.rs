//! Loss, optimizers and the training loop.

pub mod adam;
pub mod lbfgs;
pub mod loss;
pub mod problems;
pub mod schedule;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use lbfgs::{lbfgs_step, LbfgsConfig, LbfgsOutcome, LbfgsState};
pub use loss::{rmsd_loss, rmsd_with_grad};
pub use problems::{OperatorProblem, RegressionProblem};
pub use schedule::{scheduled_lr, StepSchedule};
pub use train::{train, EpochRecord, OptimizerKind, TrainConfig, TrainReport, TrainingProblem};
