use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::Result;
use crate::linalg::Matrix;

/// A differentiable vector-to-vector map with a flat parameter view.
///
/// Implemented by [`KanNetwork`](crate::kan::KanNetwork) and
/// [`MlpNetwork`](crate::mlp::MlpNetwork); the operator assembly and the
/// trainer are written against this trait only.
pub trait Network: Clone + Send + Sync + std::fmt::Debug {
    /// Cached intermediates from one forward pass.
    type Tape: Send;

    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn param_count(&self) -> usize;

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Self::Tape)>;

    /// Forward pass without keeping a tape.
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Accumulates `dL/dθ` into `grad` (flat, [`Network::params`] order) and returns `dL/dx`.
    fn backward_into(&self, tape: &Self::Tape, upstream: &[f64], grad: &mut [f64]) -> Result<Vec<f64>>;

    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;

    /// Row-wise forward over a batch-major matrix.
    fn predict_batch(&self, xs: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(xs.rows(), self.out_dim());
        for (i, x) in xs.iter_rows().enumerate() {
            out.row_mut(i).copy_from_slice(&self.predict(x)?);
        }
        Ok(out)
    }
}

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

/// Fresh parameter-version stamp. Tapes remember the stamp they were recorded
/// under; any parameter mutation issues a new one.
pub(crate) fn next_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}
