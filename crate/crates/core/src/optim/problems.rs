//! [`TrainingProblem`] adapters for bare networks and operator models.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::Network;
use crate::operator::OperatorModel;
use crate::optim::train::TrainingProblem;

/// Pointwise regression `x ↦ y` with a single network.
pub struct RegressionProblem<'a, N: Network> {
    pub net: &'a mut N,
    inputs: &'a Matrix,
    targets: &'a Matrix,
    indices: Vec<usize>,
}

impl<'a, N: Network> RegressionProblem<'a, N> {
    /// `indices` selects the training rows of `inputs`/`targets`.
    pub fn new(net: &'a mut N, inputs: &'a Matrix, targets: &'a Matrix, indices: Vec<usize>) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::dims("regression targets", inputs.rows(), targets.rows()));
        }
        if inputs.cols() != net.in_dim() {
            return Err(Error::dims("regression inputs", net.in_dim(), inputs.cols()));
        }
        if targets.cols() != net.out_dim() {
            return Err(Error::dims("regression outputs", net.out_dim(), targets.cols()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= inputs.rows()) {
            return Err(Error::InvalidArgument(format!("sample index {bad} out of range")));
        }
        Ok(Self { net, inputs, targets, indices })
    }
}

impl<N: Network> TrainingProblem for RegressionProblem<'_, N> {
    fn num_samples(&self) -> usize {
        self.indices.len()
    }

    fn param_count(&self) -> usize {
        self.net.param_count()
    }

    fn params(&self) -> Vec<f64> {
        self.net.params()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.net.set_params(params)
    }

    fn loss_and_grad(&mut self, batch: &[usize], grad: &mut [f64]) -> Result<f64> {
        grad.fill(0.0);
        let out = self.net.out_dim();
        let mut preds = Vec::with_capacity(batch.len() * out);
        let mut targets = Vec::with_capacity(batch.len() * out);
        let mut tapes = Vec::with_capacity(batch.len());
        for &b in batch {
            let row = self.indices[b];
            let (y, tape) = self.net.forward(self.inputs.row(row))?;
            preds.extend(y);
            targets.extend_from_slice(self.targets.row(row));
            tapes.push(tape);
        }
        let (loss, g) = crate::optim::loss::rmsd_with_grad(&targets, &preds)?;
        for (tape, up) in tapes.iter().zip(g.chunks_exact(out)) {
            self.net.backward_into(tape, up, grad)?;
        }
        Ok(loss)
    }
}

/// Operator regression: every training sample contributes all `(point, step)` predictions.
pub struct OperatorProblem<'a, N: Network> {
    pub model: &'a mut OperatorModel<N>,
    branch_inputs: &'a Matrix,
    coords: &'a Matrix,
    /// `(samples, points · steps)`
    targets: &'a Matrix,
    indices: Vec<usize>,
}

impl<'a, N: Network> OperatorProblem<'a, N> {
    pub fn new(
        model: &'a mut OperatorModel<N>,
        branch_inputs: &'a Matrix,
        coords: &'a Matrix,
        targets: &'a Matrix,
        indices: Vec<usize>,
    ) -> Result<Self> {
        let per_sample = coords.rows() * model.mode().steps();
        if targets.cols() != per_sample {
            return Err(Error::dims("operator targets per sample", per_sample, targets.cols()));
        }
        if targets.rows() != branch_inputs.rows() {
            return Err(Error::dims("operator target samples", branch_inputs.rows(), targets.rows()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= branch_inputs.rows()) {
            return Err(Error::InvalidArgument(format!("sample index {bad} out of range")));
        }
        Ok(Self { model, branch_inputs, coords, targets, indices })
    }
}

impl<N: Network> TrainingProblem for OperatorProblem<'_, N> {
    fn num_samples(&self) -> usize {
        self.indices.len()
    }

    fn param_count(&self) -> usize {
        self.model.param_count()
    }

    fn params(&self) -> Vec<f64> {
        self.model.params()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.model.set_params(params)
    }

    fn loss_and_grad(&mut self, batch: &[usize], grad: &mut [f64]) -> Result<f64> {
        grad.fill(0.0);
        let model = &*self.model;
        let trunk = model.encode_trunk(self.coords)?;
        let per_sample = self.targets.cols();

        let mut encoded = Vec::with_capacity(batch.len());
        let mut sum_sq = 0.0;
        for &b in batch {
            let row = self.indices[b];
            let (coefficients, tape) = model.encode_branch(self.branch_inputs.row(row))?;
            let mut residual = model.fuse(&coefficients, &trunk.basis)?.into_values();
            for (r, t) in residual.iter_mut().zip(self.targets.row(row)) {
                *r -= t;
                sum_sq += *r * *r;
            }
            encoded.push((coefficients, tape, residual));
        }
        let n = (batch.len() * per_sample) as f64;
        let loss = (sum_sq / n).sqrt();
        if !loss.is_finite() {
            return Ok(loss);
        }
        let scale = if loss > 0.0 { 1.0 / (n * loss) } else { 0.0 };

        let nb = model.branch().param_count();
        let nt = model.trunk().param_count();
        let (g_branch, rest) = grad.split_at_mut(nb);
        let (g_trunk, g_bias) = rest.split_at_mut(nt);
        let mut d_basis = Matrix::zeros(trunk.basis.rows(), model.width());
        let mut bias_grad = 0.0;
        let mut d_coefficients = vec![0.0; model.mode().steps() * model.width()];
        for (coefficients, tape, mut residual) in encoded {
            residual.iter_mut().for_each(|r| *r *= scale);
            d_coefficients.fill(0.0);
            bias_grad +=
                model.fuse_backward(&coefficients, &trunk.basis, &residual, &mut d_coefficients, &mut d_basis)?;
            model.branch().backward_into(&tape, &d_coefficients, g_branch)?;
        }
        for (p, tape) in trunk.tapes.iter().enumerate() {
            model.trunk().backward_into(tape, d_basis.row(p), g_trunk)?;
        }
        if let Some(b) = g_bias.first_mut() {
            *b = bias_grad;
        }
        Ok(loss)
    }
}
