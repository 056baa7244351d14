//! Dense affine + tanh networks, the DeepONet building block.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{next_stamp, Network};
use crate::rng::uniform;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::dims("dense bias", weights.rows(), bias.len()));
        }
        Ok(Self { weights, bias, activation })
    }

    /// Uniform `[−s, s]` weights and biases, `s = sqrt(1 / in_dim)`.
    pub fn random<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        let s = (1.0 / in_dim as f64).sqrt();
        let mut weights = Matrix::zeros(out_dim, in_dim);
        for w in weights.as_mut_slice() {
            *w = uniform(rng, -s, s);
        }
        let bias = (0..out_dim).map(|_| uniform(rng, -s, s)).collect();
        Self { weights, bias, activation }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn param_count(&self) -> usize {
        self.out_dim() * self.in_dim() + self.out_dim()
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter_rows().zip(&self.bias).map(|(row, b)| crate::linalg::dot(row, x) + b).collect()
    }
}

#[derive(Clone, Debug)]
pub struct MlpTape {
    stamp: u64,
    inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct MlpNetwork {
    layers: Vec<DenseLayer>,
    stamp: u64,
}

impl PartialEq for MlpNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl MlpNetwork {
    /// Chains arbitrary layers. [`MlpNetwork::new`] is the constructor that
    /// enforces tanh hidden layers and a linear output.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dims("dense layer chaining", pair[0].out_dim(), pair[1].in_dim()));
            }
        }
        Ok(Self { layers, stamp: next_stamp() })
    }

    /// Widths `[in, h_1, …, out]`: tanh on every hidden layer, identity on the last.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad MLP widths {widths:?}")));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let act = if k == last { Activation::Identity } else { Activation::Tanh };
                DenseLayer::random(w[0], w[1], act, rng)
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Invalidates outstanding tapes.
    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.stamp = next_stamp();
        &mut self.layers
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        match self.layers.first() {
            Some(l) if l.in_dim() != x.len() => Err(Error::dims("MLP input", l.in_dim(), x.len())),
            _ => Ok(()),
        }
    }
}

impl Network for MlpNetwork {
    type Tape = MlpTape;

    fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::in_dim)
    }

    fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpTape)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for layer in &self.layers {
            let z = layer.pre_activation(&current);
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut current, a));
            pre_activations.push(z);
        }
        Ok((current, MlpTape { stamp: self.stamp, inputs, pre_activations }))
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut current = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.pre_activation(&current);
            z.iter_mut().for_each(|v| *v = layer.activation.apply(*v));
            current = z;
        }
        Ok(current)
    }

    fn backward_into(&self, tape: &MlpTape, upstream: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        if tape.stamp != self.stamp || tape.inputs.len() != self.layers.len() {
            return Err(Error::StaleTape);
        }
        if upstream.len() != self.out_dim() {
            return Err(Error::dims("MLP upstream gradient", self.out_dim(), upstream.len()));
        }
        if grad.len() != self.param_count() {
            return Err(Error::dims("MLP gradient buffer", self.param_count(), grad.len()));
        }
        let mut offset = self.param_count();
        let mut delta = upstream.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            offset -= layer.param_count();
            let (n_in, n_out) = (layer.in_dim(), layer.out_dim());
            let x = &tape.inputs[l];
            let (w_grad, b_grad) = grad[offset..offset + layer.param_count()].split_at_mut(n_in * n_out);
            let mut d_input = vec![0.0; n_in];
            for (o, (d, z)) in delta.iter().zip(&tape.pre_activations[l]).enumerate() {
                let dz = d * layer.activation.derivative(*z);
                if dz == 0.0 {
                    continue;
                }
                b_grad[o] += dz;
                let w_row = layer.weights.row(o);
                let g_row = &mut w_grad[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    g_row[i] += dz * x[i];
                    d_input[i] += dz * w_row[i];
                }
            }
            delta = d_input;
        }
        Ok(delta)
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dims("MLP parameter vector", self.param_count(), params.len()));
        }
        let mut at = 0;
        for layer in self.layers_mut() {
            let n = layer.weights.as_slice().len();
            layer.weights.as_mut_slice().copy_from_slice(&params[at..at + n]);
            at += n;
            let b = layer.bias.len();
            layer.bias.copy_from_slice(&params[at..at + b]);
            at += b;
        }
        Ok(())
    }
}

pub fn mlp_param_count(net: &MlpNetwork) -> usize {
    net.param_count()
}

/// Parameter count of an MLP with the given widths, without building it.
pub fn mlp_count_for(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn single(w: f64, b: f64, act: Activation) -> MlpNetwork {
        let layer = DenseLayer::new(Matrix::from_vec(1, 1, vec![w]).unwrap(), vec![b], act).unwrap();
        MlpNetwork::from_layers(vec![layer]).unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut rng = stream(1, Stream::Init, 0);
        let mut net = MlpNetwork::new(&[3, 5, 2], &mut rng).unwrap();
        let zeros = vec![0.0; net.param_count()];
        net.set_params(&zeros).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let mut w = Matrix::zeros(3, 3);
        for i in 0..3 {
            w[(i, i)] = 1.0;
        }
        let net =
            MlpNetwork::from_layers(vec![DenseLayer::new(w, vec![0.0; 3], Activation::Identity).unwrap()]).unwrap();
        assert_eq!(net.predict(&[0.3, -1.0, 7.0]).unwrap(), vec![0.3, -1.0, 7.0]);
    }

    #[test]
    fn tanh_hand_value() {
        let net = single(2.0, 0.0, Activation::Tanh);
        let y = net.predict(&[0.5]).unwrap()[0];
        assert!((y - 0.761594).abs() < 1e-6);
        assert_eq!(y, 1.0f64.tanh());
    }

    #[test]
    fn tanh_layer_without_bias_is_odd() {
        let mut rng = stream(4, Stream::Init, 0);
        let mut layer = DenseLayer::random(4, 3, Activation::Tanh, &mut rng);
        layer.bias_mut().fill(0.0);
        let net = MlpNetwork::from_layers(vec![layer]).unwrap();
        let x = [0.3, -0.8, 1.2, 0.05];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = net.predict(&x).unwrap();
        let b = net.predict(&neg).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(*p, -q);
        }
    }

    #[test]
    fn identity_layer_weight_gradient_is_outer_product() {
        let mut rng = stream(8, Stream::Init, 0);
        let net = MlpNetwork::from_layers(vec![DenseLayer::random(3, 2, Activation::Identity, &mut rng)]).unwrap();
        let x = [0.5, -1.5, 2.0];
        let up = [0.7, -0.2];
        let (_, tape) = net.forward(&x).unwrap();
        let mut g = vec![0.0; net.param_count()];
        net.backward_into(&tape, &up, &mut g).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(g[o * 3 + i], up[o] * x[i]);
            }
            assert_eq!(g[6 + o], up[o]);
        }
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let mut rng = stream(8, Stream::Init, 1);
        let net = MlpNetwork::new(&[2, 6, 6, 3], &mut rng).unwrap();
        let (_, tape) = net.forward(&[0.1, 0.2]).unwrap();
        let mut g = vec![0.0; net.param_count()];
        let dx = net.backward_into(&tape, &[0.0; 3], &mut g).unwrap();
        assert!(g.iter().chain(&dx).all(|&v| v == 0.0));
    }

    #[test]
    fn stale_tape_detected() {
        let mut rng = stream(8, Stream::Init, 2);
        let mut net = MlpNetwork::new(&[2, 3, 1], &mut rng).unwrap();
        let (_, tape) = net.forward(&[0.1, 0.2]).unwrap();
        net.layers_mut()[0].bias_mut()[0] += 1.0;
        let mut g = vec![0.0; net.param_count()];
        assert!(matches!(net.backward_into(&tape, &[1.0], &mut g), Err(Error::StaleTape)));
    }

    #[test]
    fn param_counts() {
        let mut rng = stream(0, Stream::Init, 0);
        let net = MlpNetwork::new(&[1, 24, 24, 1], &mut rng).unwrap();
        assert_eq!(mlp_param_count(&net), 673);
        assert_eq!(mlp_count_for(&[100, 25, 400]) + mlp_count_for(&[2, 25, 4]), 13104);
        assert_eq!(mlp_count_for(&[6, 62, 5]) + mlp_count_for(&[2, 62, 5]), 1250);
        assert_eq!(net.layers().last().unwrap().activation(), Activation::Identity);
        assert_eq!(net.layers()[0].activation(), Activation::Tanh);
    }
}
