/// Step decay: `lr0 · γ^⌊epoch / T_step⌋`.
pub fn scheduled_lr(lr0: f64, gamma: f64, step_size: usize, epoch: usize) -> f64 {
    let step_size = step_size.max(1);
    lr0 * gamma.powi((epoch / step_size) as i32)
}

/// Learning-rate decay by `gamma` every `step_size` epochs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSchedule {
    pub gamma: f64,
    pub step_size: usize,
}

impl StepSchedule {
    pub fn lr(&self, lr0: f64, epoch: usize) -> f64 {
        scheduled_lr(lr0, self.gamma, self.step_size, epoch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(scheduled_lr(0.01, 0.5, 1000, 0), 0.01);
        assert!((scheduled_lr(1e-3, 0.5, 1000, 2500) - 2.5e-4).abs() < 1e-18);
        assert_eq!(scheduled_lr(1e-2, 0.9, 500, 20000), 1e-2 * 0.9f64.powi(40));
    }

    #[test]
    fn piecewise_constant_and_non_increasing() {
        let mut prev = f64::INFINITY;
        for epoch in 0..5000 {
            let lr = scheduled_lr(1e-3, 0.7, 300, epoch);
            assert!(lr <= prev);
            if epoch % 300 != 0 {
                assert_eq!(lr, prev);
            }
            prev = lr;
        }
    }
}
