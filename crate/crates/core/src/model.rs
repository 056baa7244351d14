use rayon::prelude::*;

use crate::config::{ExperimentConfig, ModelFamily};
use crate::error::{Error, Result};
use crate::kan::KanNetwork;
use crate::linalg::Matrix;
use crate::mlp::MlpNetwork;
use crate::network::Network;
use crate::operator::{DeepOKan, DeepONet, OperatorModel};
use crate::rng::{stream, Stream};

/// One of the four model families behind a single type.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    RbfKan(KanNetwork),
    Mlp(MlpNetwork),
    DeepOKan(DeepOKan),
    DeepONet(DeepONet),
}

impl Model {
    /// Freshly initialized model; branch and trunk draw from separate seeded streams.
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let arch = &cfg.architecture;
        let seed = cfg.experiment.seed;
        let grid = arch.grid();
        let mut rng0 = stream(seed, Stream::Init, 0);
        let mut rng1 = stream(seed, Stream::Init, 1);
        let bias = arch.bias.then_some(0.0);
        let mode = cfg.kind().mode();
        let widths = |w: &Option<Vec<usize>>| w.clone().expect("validated");
        Ok(match cfg.family() {
            ModelFamily::RbfKan => Self::RbfKan(KanNetwork::new(&widths(&arch.layers), &grid, &mut rng0)?),
            ModelFamily::Mlp => Self::Mlp(MlpNetwork::new(&widths(&arch.layers), &mut rng0)?),
            ModelFamily::Deepokan => {
                let branch = KanNetwork::new(&widths(&arch.branch), &grid, &mut rng0)?;
                let trunk = KanNetwork::new(&widths(&arch.trunk), &grid, &mut rng1)?;
                let r = trunk.out_dim();
                Self::DeepOKan(OperatorModel::new(branch, trunk, r, mode, bias)?)
            }
            ModelFamily::Deeponet => {
                let branch = MlpNetwork::new(&widths(&arch.branch), &mut rng0)?;
                let trunk = MlpNetwork::new(&widths(&arch.trunk), &mut rng1)?;
                let r = trunk.out_dim();
                Self::DeepONet(OperatorModel::new(branch, trunk, r, mode, bias)?)
            }
        })
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            Self::RbfKan(_) => ModelFamily::RbfKan,
            Self::Mlp(_) => ModelFamily::Mlp,
            Self::DeepOKan(_) => ModelFamily::Deepokan,
            Self::DeepONet(_) => ModelFamily::Deeponet,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Self::RbfKan(n) => n.param_count(),
            Self::Mlp(n) => n.param_count(),
            Self::DeepOKan(m) => m.param_count(),
            Self::DeepONet(m) => m.param_count(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Self::RbfKan(n) => n.params(),
            Self::Mlp(n) => n.params(),
            Self::DeepOKan(m) => m.params(),
            Self::DeepONet(m) => m.params(),
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        match self {
            Self::RbfKan(n) => n.set_params(params),
            Self::Mlp(n) => n.set_params(params),
            Self::DeepOKan(m) => m.set_params(params),
            Self::DeepONet(m) => m.set_params(params),
        }
    }

    /// Predictions for the listed rows of `branch_inputs`, one output row each.
    ///
    /// Standalone networks map each row directly; operators evaluate the row at
    /// every coordinate, point-major. Inputs must already be normalized.
    pub fn predict_samples(&self, branch_inputs: &Matrix, coords: &Matrix, indices: &[usize]) -> Result<Matrix> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= branch_inputs.rows()) {
            return Err(Error::InvalidArgument(format!("sample index {bad} out of range")));
        }
        let rows: Vec<Vec<f64>> = match self {
            Self::RbfKan(n) => predict_rows(n, branch_inputs, indices)?,
            Self::Mlp(n) => predict_rows(n, branch_inputs, indices)?,
            Self::DeepOKan(m) => predict_operator(m, branch_inputs, coords, indices)?,
            Self::DeepONet(m) => predict_operator(m, branch_inputs, coords, indices)?,
        };
        let cols = rows.first().map_or(0, Vec::len);
        Matrix::from_vec(indices.len(), cols, rows.concat())
    }
}

fn predict_rows<N: Network>(net: &N, inputs: &Matrix, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
    indices.par_iter().map(|&i| net.predict(inputs.row(i))).collect()
}

fn predict_operator<N: Network>(
    model: &OperatorModel<N>,
    branch_inputs: &Matrix,
    coords: &Matrix,
    indices: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let basis = model.trunk_basis(coords)?;
    indices.par_iter().map(|&i| Ok(model.predict_with_basis(branch_inputs.row(i), &basis)?.into_values())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ortho_preset, poisson_preset, wave1_preset, Complexity};

    #[test]
    fn preset_counts() {
        assert_eq!(Model::build(&wave1_preset(ModelFamily::RbfKan)).unwrap().param_count(), 640);
        assert_eq!(Model::build(&wave1_preset(ModelFamily::Mlp)).unwrap().param_count(), 673);
        let m = Model::build(&ortho_preset(ModelFamily::Deepokan, Complexity::Medium)).unwrap();
        assert_eq!(m.param_count(), 7200);
        let m = Model::build(&poisson_preset(ModelFamily::Deeponet, Complexity::High)).unwrap();
        assert_eq!(m.param_count(), 51204);
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = ortho_preset(ModelFamily::Deeponet, Complexity::Low);
        assert_eq!(Model::build(&cfg).unwrap(), Model::build(&cfg).unwrap());
    }
}
