//! Epoch loop shared by every model family.

use crate::error::{Error, Result};
use crate::optim::adam::{adam_step, AdamConfig, AdamState};
use crate::optim::lbfgs::{lbfgs_step, LbfgsConfig, LbfgsOutcome, LbfgsState};
use crate::optim::schedule::StepSchedule;
use crate::rng::{shuffle, stream, Stream};

/// Something with a flat parameter vector and a mini-batch RMSD objective.
pub trait TrainingProblem {
    /// Number of training samples; batches index `0..num_samples()`.
    fn num_samples(&self) -> usize;
    fn param_count(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    /// RMSD over `batch` at the current parameters; overwrites `grad`.
    fn loss_and_grad(&mut self, batch: &[usize], grad: &mut [f64]) -> Result<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Lbfgs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub schedule: Option<StepSchedule>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub lbfgs: LbfgsConfig,
    /// L-BFGS iterations per batch per epoch.
    pub lbfgs_iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            schedule: None,
            epochs: 100,
            batch_size: 64,
            seed: 0,
            adam: AdamConfig::default(),
            lbfgs: LbfgsConfig::default(),
            lbfgs_iterations: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if let Some(s) = self.schedule {
            if !(s.gamma > 0.0 && s.gamma <= 1.0) {
                return Err(Error::Config(format!("scheduler gamma must lie in (0, 1], got {}", s.gamma)));
            }
            if s.step_size == 0 {
                return Err(Error::Config("scheduler step size must be at least 1".into()));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.optimizer == OptimizerKind::Lbfgs && self.lbfgs_iterations == 0 {
            return Err(Error::Config("L-BFGS needs at least one iteration per epoch".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.schedule.map_or(self.lr, |s| s.lr(self.lr, epoch))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Adam: mean batch RMSD seen during the epoch. L-BFGS: mean batch RMSD after the epoch's last step.
    pub rmsd: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    pub final_params: Vec<f64>,
    /// Set when training stopped early on a non-finite loss or gradient.
    pub aborted: Option<String>,
}

fn batches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    if batch_size < n {
        shuffle(&mut stream(seed, Stream::Shuffle, epoch as u64), &mut order);
    }
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// Trains `problem` in place. Configuration errors are returned; divergence
/// is reported through [`TrainReport::aborted`] with the history so far and
/// the last finite parameters restored.
pub fn train<P: TrainingProblem + ?Sized>(problem: &mut P, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let n = problem.num_samples();
    if n == 0 && config.epochs > 0 {
        return Err(Error::Empty("training set"));
    }
    let mut params = problem.params();
    let mut grad = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(config.epochs);
    let mut adam = AdamState::new(params.len(), config.adam);
    let mut lbfgs = LbfgsState::new(config.lbfgs);
    let mut aborted = None;

    'epochs: for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch);
        let plan = batches(n, config.batch_size, config.seed, epoch);
        let mut total = 0.0;
        for batch in &plan {
            match config.optimizer {
                OptimizerKind::Adam => {
                    let loss = problem.loss_and_grad(batch, &mut grad)?;
                    if !loss.is_finite() {
                        aborted = Some(format!("non-finite loss at epoch {epoch}"));
                        break 'epochs;
                    }
                    if let Err(e) = adam_step(&mut params, &grad, &mut adam, lr) {
                        aborted = Some(format!("epoch {epoch}: {e}"));
                        break 'epochs;
                    }
                    problem.set_params(&params)?;
                    total += loss;
                }
                OptimizerKind::Lbfgs => {
                    let mut objective = |x: &[f64], g: &mut [f64]| {
                        if problem.set_params(x).is_err() {
                            return f64::NAN;
                        }
                        problem.loss_and_grad(batch, g).unwrap_or(f64::NAN)
                    };
                    let mut loss = f64::NAN;
                    for _ in 0..config.lbfgs_iterations {
                        let outcome = lbfgs_step(&mut params, &mut objective, &mut lbfgs, lr);
                        loss = outcome.loss();
                        match outcome {
                            LbfgsOutcome::Accepted { .. } => {}
                            LbfgsOutcome::Stationary { .. } => break,
                            LbfgsOutcome::LineSearchFailed { .. } => {
                                lbfgs.clear();
                                break;
                            }
                        }
                    }
                    problem.set_params(&params)?;
                    if !loss.is_finite() {
                        aborted = Some(format!("non-finite loss at epoch {epoch}"));
                        break 'epochs;
                    }
                    total += loss;
                }
            }
        }
        history.push(EpochRecord { epoch, lr, rmsd: total / plan.len() as f64 });
    }

    problem.set_params(&params)?;
    Ok(TrainReport { history, final_params: params, aborted })
}
