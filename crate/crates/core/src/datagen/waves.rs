use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{linspace, Matrix};
use crate::operator::FusionMode;
use crate::rng::{stream, uniform, Stream};

use super::{split_dataset, Dataset, DEFAULT_TRAIN_FRACTION};

pub const WAVE1_DOMAIN: (f64, f64) = (-2.0, 2.0);
pub const WAVE2_DOMAIN: (f64, f64) = (-3.0, 3.0);
pub const WAVE_OPERATOR_DOMAIN: (f64, f64) = (-3.0, 3.0);

pub fn wave1(x: f64) -> f64 {
    let x3 = PI * x * x * x;
    (2.0 * PI * x).sin() + (PI * x * x).cos() + x3.cos() * x3.sin()
}

pub fn wave2(x: f64) -> f64 {
    (4.0 * PI * x).cos() - (PI * x * x).sin() * (PI * x * x * x).cos()
}

pub fn wave_operator(c: [f64; 3], x: f64) -> f64 {
    (c[0] * PI * x).cos() - (c[1] * PI * x * x).sin() * (c[2] * PI * x * x * x).cos()
}

fn sample_curve(n: usize, (lo, hi): (f64, f64), f: fn(f64) -> f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {n}")));
    }
    let xs = linspace(lo, hi, n);
    let ys = xs.iter().map(|&x| f(x)).collect();
    Ok((xs, ys))
}

pub fn gen_wave1(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    sample_curve(n, WAVE1_DOMAIN, wave1)
}

pub fn gen_wave2(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    sample_curve(n, WAVE2_DOMAIN, wave2)
}

/// Pointwise dataset for a standalone curve fit: one sample per `x`.
pub fn curve_dataset(xs: &[f64], ys: &[f64]) -> Result<Dataset> {
    if xs.len() != ys.len() {
        return Err(Error::dims("curve samples", xs.len(), ys.len()));
    }
    let n = xs.len();
    Dataset::pointwise(Matrix::from_vec(n, 1, xs.to_vec())?, Matrix::from_vec(n, 1, ys.to_vec())?)
}

/// Branch input `c ∈ [−1, 1]³`, trunk input `x` on a shared grid.
pub fn gen_wave_operator_dataset(num_samples: usize, num_points: usize, seed: u64) -> Result<Dataset> {
    if num_samples < 2 || num_points == 0 {
        return Err(Error::InvalidArgument(format!(
            "wave operator needs ≥ 2 samples and ≥ 1 point, got {num_samples} and {num_points}"
        )));
    }
    let (lo, hi) = WAVE_OPERATOR_DOMAIN;
    let xs = if num_points == 1 { vec![0.5 * (lo + hi)] } else { linspace(lo, hi, num_points) };
    let mut branch = Matrix::zeros(num_samples, 3);
    let mut targets = Matrix::zeros(num_samples, num_points);
    for s in 0..num_samples {
        let mut rng = stream(seed, Stream::Data, s as u64);
        let c = [uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, -1.0, 1.0)];
        branch.row_mut(s).copy_from_slice(&c);
        for (t, &x) in targets.row_mut(s).iter_mut().zip(&xs) {
            *t = wave_operator(c, x);
        }
    }
    let coords = Matrix::from_vec(num_points, 1, xs)?;
    let ds = Dataset::new(branch, coords, targets, FusionMode::Scalar)?;
    split_dataset(ds, DEFAULT_TRAIN_FRACTION, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_points() {
        assert!((wave1(0.0) - 1.0).abs() < 1e-15);
        assert!((wave2(0.0) - 1.0).abs() < 1e-15);
        assert!((wave2(1.0) - 1.0).abs() < 1e-12);
        assert_eq!(wave_operator([0.0; 3], 2.3), 1.0);
    }

    #[test]
    fn curve_sizes_and_bounds() {
        let (xs, ys) = gen_wave1(1000).unwrap();
        assert_eq!((xs.len(), ys.len()), (1000, 1000));
        assert_eq!((xs[0], xs[999]), (-2.0, 2.0));
        assert!(ys.iter().all(|y| y.abs() <= 3.0));
        let (_, ys2) = gen_wave2(777).unwrap();
        assert!(ys2.iter().all(|y| y.abs() <= 2.0));
        assert!(gen_wave1(1).is_err());
    }

    #[test]
    fn operator_dataset_split_and_ranges() {
        let ds = gen_wave_operator_dataset(200, 16, 9).unwrap();
        assert_eq!(ds.train_indices().len(), 160);
        assert_eq!(ds.test_indices().len(), 40);
        assert!(ds.branch_inputs.as_slice().iter().all(|c| (-1.0..=1.0).contains(c)));
        assert_eq!(ds.targets.cols(), 16);
        assert_eq!(ds, gen_wave_operator_dataset(200, 16, 9).unwrap());
    }
}
