//! Limited-memory BFGS with the two-loop recursion and Armijo backtracking.

use std::collections::VecDeque;

use crate::linalg::{dot, norm2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsConfig {
    /// Number of `(s, y)` pairs kept.
    pub history: usize,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Backtracking trials (step halved each time).
    pub max_trials: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { history: 10, c1: 1e-4, max_trials: 25 }
    }
}

#[derive(Clone, Debug)]
struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

#[derive(Clone, Debug)]
pub struct LbfgsState {
    pub config: LbfgsConfig,
    history: VecDeque<Pair>,
}

impl LbfgsState {
    pub fn new(config: LbfgsConfig) -> Self {
        Self { config, history: VecDeque::with_capacity(config.history) }
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }

    /// Stores the pair only if the curvature condition `sᵀy > 0` holds.
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > f64::EPSILON * dot(&y, &y)) || !sy.is_finite() {
            return false;
        }
        if self.history.len() == self.config.history {
            self.history.pop_front();
        }
        self.history.push_back(Pair { s, y, rho: 1.0 / sy });
        true
    }

    /// `−H·g` from the stored pairs; plain `−g` when the history is empty.
    pub fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.history.len());
        for p in self.history.iter().rev() {
            let a = p.rho * dot(&p.s, &q);
            crate::linalg::axpy(-a, &p.y, &mut q);
            alphas.push(a);
        }
        if let Some(newest) = self.history.back() {
            let gamma = 1.0 / (newest.rho * dot(&newest.y, &newest.y));
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for (p, a) in self.history.iter().zip(alphas.into_iter().rev()) {
            let b = p.rho * dot(&p.y, &q);
            crate::linalg::axpy(a - b, &p.s, &mut q);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LbfgsOutcome {
    Accepted {
        loss_before: f64,
        loss_after: f64,
        step_length: f64,
        trials: usize,
    },
    /// Gradient is exactly zero; nothing to do.
    Stationary {
        loss: f64,
    },
    /// No Armijo step found; parameters are unchanged.
    LineSearchFailed {
        loss: f64,
        trials: usize,
    },
}

impl LbfgsOutcome {
    /// Loss at the parameters held after the step.
    pub fn loss(&self) -> f64 {
        match *self {
            LbfgsOutcome::Accepted { loss_after, .. } => loss_after,
            LbfgsOutcome::Stationary { loss } | LbfgsOutcome::LineSearchFailed { loss, .. } => loss,
        }
    }
}

/// One L-BFGS iteration. `objective(x, grad)` returns the loss at `x` and writes
/// its gradient; a non-finite return counts as a rejected trial.
pub fn lbfgs_step<F>(params: &mut [f64], objective: &mut F, state: &mut LbfgsState, lr: f64) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = params.len();
    let mut grad = vec![0.0; n];
    let loss = objective(params, &mut grad);
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return LbfgsOutcome::LineSearchFailed { loss, trials: 0 };
    }
    if grad.iter().all(|&g| g == 0.0) {
        return LbfgsOutcome::Stationary { loss };
    }

    let first_step = |g: &[f64]| lr * (1.0 / g.iter().map(|v| v.abs()).sum::<f64>()).min(1.0);
    let mut direction = state.direction(&grad);
    let mut t = if state.history_len() == 0 { first_step(&grad) } else { lr };
    let mut slope = dot(&grad, &direction);
    if !(slope < 0.0) {
        state.clear();
        direction = grad.iter().map(|g| -g).collect();
        slope = -dot(&grad, &grad);
        t = first_step(&grad);
    }

    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    for k in 1..=state.config.max_trials {
        for ((x, p), d) in trial.iter_mut().zip(params.iter()).zip(&direction) {
            *x = p + t * d;
        }
        let f = objective(&trial, &mut trial_grad);
        if f.is_finite() && f <= loss + state.config.c1 * t * slope && trial_grad.iter().all(|g| g.is_finite()) {
            let s: Vec<f64> = trial.iter().zip(params.iter()).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            state.push(s, y);
            params.copy_from_slice(&trial);
            return LbfgsOutcome::Accepted {
                loss_before: loss,
                loss_after: f,
                step_length: t * norm2(&direction),
                trials: k,
            };
        }
        t *= 0.5;
    }
    LbfgsOutcome::LineSearchFailed { loss, trials: state.config.max_trials }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_history_is_steepest_descent() {
        let s = LbfgsState::new(LbfgsConfig::default());
        assert_eq!(s.direction(&[1.0, -2.0, 0.5]), vec![-1.0, 2.0, -0.5]);
    }

    #[test]
    fn quadratic_converges() {
        let mut x = vec![1.0];
        let mut s = LbfgsState::new(LbfgsConfig::default());
        let mut f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        };
        for _ in 0..10 {
            lbfgs_step(&mut x, &mut f, &mut s, 1.0);
        }
        assert!(x[0].abs() < 1e-6, "x = {}", x[0]);
    }

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn rosenbrock_converges_and_never_increases() {
        let mut x = vec![-1.2, 1.0];
        let mut s = LbfgsState::new(LbfgsConfig::default());
        let mut f = rosenbrock;
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            match lbfgs_step(&mut x, &mut f, &mut s, 1.0) {
                LbfgsOutcome::Accepted { loss_before, loss_after, .. } => {
                    assert!(loss_after <= loss_before);
                    last = loss_after;
                }
                other => {
                    last = other.loss();
                    break;
                }
            }
            assert!(s.history_len() <= 10);
        }
        assert!(last < 1e-5, "final loss {last}");
    }

    #[test]
    fn curvature_condition_guards_history() {
        let mut s = LbfgsState::new(LbfgsConfig::default());
        assert!(!s.push(vec![1.0], vec![-1.0]));
        assert!(!s.push(vec![1.0], vec![0.0]));
        assert!(s.push(vec![1.0], vec![2.0]));
        assert_eq!(s.history_len(), 1);
    }

    #[test]
    fn failed_line_search_leaves_params() {
        let mut x = vec![0.5];
        let mut s = LbfgsState::new(LbfgsConfig::default());
        // reports a descent gradient but every trial point is NaN
        let mut f = |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            if x[0] == 0.5 {
                1.0
            } else {
                f64::NAN
            }
        };
        let out = lbfgs_step(&mut x, &mut f, &mut s, 1.0);
        assert!(matches!(out, LbfgsOutcome::LineSearchFailed { trials: 25, .. }));
        assert_eq!(x, vec![0.5]);
    }
}
