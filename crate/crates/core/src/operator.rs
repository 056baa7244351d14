//! Branch/trunk operator assembly shared by DeepONet (MLP pair) and DeepOKAN
//! (RBF-KAN pair).
//!
//! The branch encodes the conditioning input `q`, the trunk encodes a query
//! coordinate, and the two are fused by a width-`r` dot product:
//!
//! * scalar mode: `ŝ(x) = Σ_i b_i · t_i(x) (+ B)`
//! * transient mode: the branch emits `M·r` values read as an `(M, r)` matrix
//!   in row-major order (`k → (k / r, k % r)`), giving one `M`-long history
//!   `ŝ_m(x) = Σ_i b_{m,i} · t_i(x) (+ B)` per coordinate.
//!
//! Using one generic [`OperatorModel<N>`] for both families makes mixed
//! MLP/KAN pairs unrepresentable.

use crate::error::{Error, Result};
use crate::kan::KanNetwork;
use crate::linalg::Matrix;
use crate::mlp::MlpNetwork;
use crate::network::Network;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionMode {
    Scalar,
    Transient { steps: usize },
}

impl FusionMode {
    /// Predictions per coordinate (`1` in scalar mode, `M` in transient mode).
    pub fn steps(self) -> usize {
        match self {
            FusionMode::Scalar => 1,
            FusionMode::Transient { steps } => steps,
        }
    }
}

/// Predictions for one conditioning input: `(points, steps)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionBatch {
    points: usize,
    steps: usize,
    values: Vec<f64>,
}

impl PredictionBatch {
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Time history at one coordinate.
    pub fn at_point(&self, p: usize) -> &[f64] {
        &self.values[p * self.steps..(p + 1) * self.steps]
    }

    pub fn get(&self, point: usize, step: usize) -> f64 {
        self.values[point * self.steps + step]
    }
}

/// Trunk outputs for a set of coordinates, `(points, r)`, plus their tapes.
#[derive(Debug)]
pub struct TrunkEncoding<T> {
    pub basis: Matrix,
    pub tapes: Vec<T>,
}

#[derive(Debug)]
pub struct OperatorTape<T> {
    coefficients: Vec<f64>,
    branch: T,
    trunk: TrunkEncoding<T>,
}

/// Flat gradients for the two sub-networks and the optional bias.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorGradients {
    pub branch: Vec<f64>,
    pub trunk: Vec<f64>,
    pub bias: Option<f64>,
}

impl OperatorGradients {
    /// Concatenated in [`OperatorModel::params`] order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.branch.len() + self.trunk.len() + 1);
        out.extend_from_slice(&self.branch);
        out.extend_from_slice(&self.trunk);
        out.extend(self.bias);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorModel<N: Network> {
    branch: N,
    trunk: N,
    width: usize,
    mode: FusionMode,
    bias: Option<f64>,
}

pub type DeepOKan = OperatorModel<KanNetwork>;
pub type DeepONet = OperatorModel<MlpNetwork>;

impl<N: Network> OperatorModel<N> {
    pub fn new(branch: N, trunk: N, width: usize, mode: FusionMode, bias: Option<f64>) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidArgument("fusion width r must be positive".into()));
        }
        if let FusionMode::Transient { steps: 0 } = mode {
            return Err(Error::InvalidArgument("transient mode needs at least one step".into()));
        }
        if trunk.out_dim() != width {
            return Err(Error::dims("trunk output (r)", width, trunk.out_dim()));
        }
        let expected = mode.steps() * width;
        if branch.out_dim() != expected {
            return Err(Error::dims("branch output (M·r)", expected, branch.out_dim()));
        }
        Ok(Self { branch, trunk, width, mode, bias })
    }

    pub fn branch(&self) -> &N {
        &self.branch
    }

    pub fn trunk(&self) -> &N {
        &self.trunk
    }

    pub fn branch_mut(&mut self) -> &mut N {
        &mut self.branch
    }

    pub fn trunk_mut(&mut self) -> &mut N {
        &mut self.trunk
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn bias(&self) -> Option<f64> {
        self.bias
    }

    pub fn param_count(&self) -> usize {
        self.branch.param_count() + self.trunk.param_count() + usize::from(self.bias.is_some())
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.branch.params();
        p.extend(self.trunk.params());
        p.extend(self.bias);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dims("operator parameter vector", self.param_count(), params.len()));
        }
        let nb = self.branch.param_count();
        let nt = self.trunk.param_count();
        self.branch.set_params(&params[..nb])?;
        self.trunk.set_params(&params[nb..nb + nt])?;
        if let Some(b) = self.bias.as_mut() {
            *b = params[nb + nt];
        }
        Ok(())
    }

    fn check_coords(&self, coords: &Matrix) -> Result<()> {
        if coords.cols() != self.trunk.in_dim() {
            return Err(Error::dims("trunk coordinate row", self.trunk.in_dim(), coords.cols()));
        }
        Ok(())
    }

    fn check_q(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.branch.in_dim() {
            return Err(Error::dims("branch input", self.branch.in_dim(), q.len()));
        }
        Ok(())
    }

    /// Trunk outputs `(points, r)` without tapes.
    pub fn trunk_basis(&self, coords: &Matrix) -> Result<Matrix> {
        self.check_coords(coords)?;
        self.trunk.predict_batch(coords)
    }

    pub fn encode_trunk(&self, coords: &Matrix) -> Result<TrunkEncoding<N::Tape>> {
        self.check_coords(coords)?;
        let mut basis = Matrix::zeros(coords.rows(), self.width);
        let mut tapes = Vec::with_capacity(coords.rows());
        for (p, x) in coords.iter_rows().enumerate() {
            let (t, tape) = self.trunk.forward(x)?;
            basis.row_mut(p).copy_from_slice(&t);
            tapes.push(tape);
        }
        Ok(TrunkEncoding { basis, tapes })
    }

    pub fn encode_branch(&self, q: &[f64]) -> Result<(Vec<f64>, N::Tape)> {
        self.check_q(q)?;
        self.branch.forward(q)
    }

    /// Fuses branch coefficients `(M, r)` with a trunk basis `(points, r)`.
    pub fn fuse(&self, coefficients: &[f64], basis: &Matrix) -> Result<PredictionBatch> {
        let (steps, r) = (self.mode.steps(), self.width);
        if coefficients.len() != steps * r {
            return Err(Error::dims("branch coefficients", steps * r, coefficients.len()));
        }
        if basis.cols() != r {
            return Err(Error::dims("trunk basis width", r, basis.cols()));
        }
        let bias = self.bias.unwrap_or(0.0);
        let mut values = Vec::with_capacity(basis.rows() * steps);
        for t in basis.iter_rows() {
            for b in coefficients.chunks_exact(r) {
                values.push(crate::linalg::dot(b, t) + bias);
            }
        }
        Ok(PredictionBatch { points: basis.rows(), steps, values })
    }

    /// Chain rule through the fusion. Accumulates into `d_coefficients` and
    /// `d_basis`; returns `Σ residual` (the bias gradient).
    pub fn fuse_backward(
        &self,
        coefficients: &[f64],
        basis: &Matrix,
        residual: &[f64],
        d_coefficients: &mut [f64],
        d_basis: &mut Matrix,
    ) -> Result<f64> {
        let (steps, r) = (self.mode.steps(), self.width);
        if residual.len() != basis.rows() * steps {
            return Err(Error::dims("prediction residual", basis.rows() * steps, residual.len()));
        }
        let mut bias_grad = 0.0;
        for (p, (t, g_row)) in basis.iter_rows().zip(residual.chunks_exact(steps)).enumerate() {
            let dt = d_basis.row_mut(p);
            for ((b, db), &g) in coefficients.chunks_exact(r).zip(d_coefficients.chunks_exact_mut(r)).zip(g_row) {
                if g == 0.0 {
                    continue;
                }
                bias_grad += g;
                for i in 0..r {
                    db[i] += g * t[i];
                    dt[i] += g * b[i];
                }
            }
        }
        Ok(bias_grad)
    }

    /// Forward pass for one conditioning input over all coordinate rows.
    pub fn forward(&self, q: &[f64], coords: &Matrix) -> Result<(PredictionBatch, OperatorTape<N::Tape>)> {
        let (coefficients, branch) = self.encode_branch(q)?;
        let trunk = self.encode_trunk(coords)?;
        let pred = self.fuse(&coefficients, &trunk.basis)?;
        Ok((pred, OperatorTape { coefficients, branch, trunk }))
    }

    pub fn predict(&self, q: &[f64], coords: &Matrix) -> Result<PredictionBatch> {
        self.check_q(q)?;
        let basis = self.trunk_basis(coords)?;
        self.predict_with_basis(q, &basis)
    }

    /// Prediction reusing a precomputed trunk basis (shared across samples).
    pub fn predict_with_basis(&self, q: &[f64], basis: &Matrix) -> Result<PredictionBatch> {
        self.check_q(q)?;
        let coefficients = self.branch.predict(q)?;
        self.fuse(&coefficients, basis)
    }

    /// Gradients of `L` given `residual = dL/dŝ` laid out like [`PredictionBatch::values`].
    pub fn backward(&self, tape: &OperatorTape<N::Tape>, residual: &[f64]) -> Result<OperatorGradients> {
        let mut d_coefficients = vec![0.0; tape.coefficients.len()];
        let mut d_basis = Matrix::zeros(tape.trunk.basis.rows(), self.width);
        let bias_grad =
            self.fuse_backward(&tape.coefficients, &tape.trunk.basis, residual, &mut d_coefficients, &mut d_basis)?;
        let mut branch = vec![0.0; self.branch.param_count()];
        self.branch.backward_into(&tape.branch, &d_coefficients, &mut branch)?;
        let mut trunk = vec![0.0; self.trunk.param_count()];
        for (p, t_tape) in tape.trunk.tapes.iter().enumerate() {
            self.trunk.backward_into(t_tape, d_basis.row(p), &mut trunk)?;
        }
        Ok(OperatorGradients { branch, trunk, bias: self.bias.map(|_| bias_grad) })
    }
}

pub fn operator_param_count<N: Network>(model: &OperatorModel<N>) -> usize {
    model.param_count()
}
