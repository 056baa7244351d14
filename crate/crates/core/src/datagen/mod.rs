//! Ground-truth generation and the [`Dataset`] container.

pub mod mesh;
pub mod ortho;
pub mod poisson;
pub mod spline;
pub mod waves;

pub use mesh::{Edge, FemMesh};
pub use ortho::{gen_ortho_dataset, sample_ortho_params, solve_ortho_fem, Displacement, OrthoParams};
pub use poisson::{gen_poisson_bc, gen_poisson_dataset, solve_transient_poisson, BcSeries, TransientPoissonSolver};
pub use spline::NaturalCubicSpline;
pub use waves::{gen_wave1, gen_wave2, gen_wave_operator_dataset, wave1, wave2, wave_operator};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::operator::FusionMode;
use crate::rng::{shuffle, stream, Stream};

/// Fraction of samples used for training unless configured otherwise.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Per-feature min-max map onto [−1, 1]. Constant features map to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>, dim: usize) -> Self {
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for row in rows {
            for ((lo, hi), v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                *lo = lo.min(*v);
                *hi = hi.max(*v);
            }
        }
        Self { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| {
                let span = hi - lo;
                if span > 0.0 {
                    2.0 * (v - lo) / span - 1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn apply_matrix(&self, m: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (i, row) in m.iter_rows().enumerate() {
            out.row_mut(i).copy_from_slice(&self.apply(row));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Every sample in both lists; used for pointwise curve fits.
    pub fn all(n: usize) -> Self {
        Self { train: (0..n).collect(), test: (0..n).collect() }
    }
}

/// Branch inputs, shared trunk coordinates and per-sample target fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// `(samples, branch_dim)`
    pub branch_inputs: Matrix,
    /// `(points, coord_dim)`; zero columns for pointwise regression data.
    pub coords: Matrix,
    /// `(samples, points · steps)`, point-major within a row.
    pub targets: Matrix,
    pub mode: FusionMode,
    pub split: Option<Split>,
    pub branch_norm: Option<Normalizer>,
    pub coord_norm: Option<Normalizer>,
}

impl Dataset {
    pub fn new(branch_inputs: Matrix, coords: Matrix, targets: Matrix, mode: FusionMode) -> Result<Self> {
        if targets.rows() != branch_inputs.rows() {
            return Err(Error::dims("dataset target rows", branch_inputs.rows(), targets.rows()));
        }
        let per_sample = coords.rows() * mode.steps();
        if targets.cols() != per_sample {
            return Err(Error::dims("dataset target columns", per_sample, targets.cols()));
        }
        if targets.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset targets"));
        }
        Ok(Self { branch_inputs, coords, targets, mode, split: None, branch_norm: None, coord_norm: None })
    }

    /// Pointwise `x ↦ y` data: each row of `inputs` is a sample with one target row.
    pub fn pointwise(inputs: Matrix, targets: Matrix) -> Result<Self> {
        let steps = targets.cols();
        let mode = if steps == 1 { FusionMode::Scalar } else { FusionMode::Transient { steps } };
        let mut ds = Self::new(inputs, Matrix::zeros(1, 0), targets, mode)?;
        ds.split = Some(Split::all(ds.num_samples()));
        ds.fit_normalizers();
        Ok(ds)
    }

    pub fn num_samples(&self) -> usize {
        self.branch_inputs.rows()
    }

    pub fn num_points(&self) -> usize {
        self.coords.rows()
    }

    pub fn steps(&self) -> usize {
        self.mode.steps()
    }

    pub fn target(&self, sample: usize) -> &[f64] {
        self.targets.row(sample)
    }

    pub fn train_indices(&self) -> &[usize] {
        self.split.as_ref().map_or(&[], |s| &s.train)
    }

    pub fn test_indices(&self) -> &[usize] {
        self.split.as_ref().map_or(&[], |s| &s.test)
    }

    /// Branch and coordinate statistics from the training rows (all rows if unsplit).
    pub fn fit_normalizers(&mut self) {
        let branch = match &self.split {
            Some(s) => Normalizer::fit(s.train.iter().map(|&i| self.branch_inputs.row(i)), self.branch_inputs.cols()),
            None => Normalizer::fit(self.branch_inputs.iter_rows(), self.branch_inputs.cols()),
        };
        self.branch_norm = Some(branch);
        self.coord_norm = Some(Normalizer::fit(self.coords.iter_rows(), self.coords.cols()));
    }

    pub fn clear_normalizers(&mut self) {
        self.branch_norm = None;
        self.coord_norm = None;
    }

    pub fn normalized_branch_inputs(&self) -> Matrix {
        self.branch_norm.as_ref().map_or_else(|| self.branch_inputs.clone(), |n| n.apply_matrix(&self.branch_inputs))
    }

    pub fn normalized_coords(&self) -> Matrix {
        self.coord_norm.as_ref().map_or_else(|| self.coords.clone(), |n| n.apply_matrix(&self.coords))
    }
}

/// Seeded permutation split; `round(ratio · n)` samples go to training.
/// Normalization statistics are refit on the new training rows.
pub fn split_dataset(mut dataset: Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let n = dataset.num_samples();
    let n_train = (ratio * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut stream(seed, Stream::Split, 0), &mut order);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    dataset.split = Some(Split { train, test });
    dataset.fit_normalizers();
    Ok(dataset)
}
