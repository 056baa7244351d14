//! Gaussian RBF Kolmogorov-Arnold layers.
//!
//! A layer expands every input coordinate `x_i` into `m` Gaussian bumps
//! `R_ij = exp(-((x_i - g_j) / β)²)` over a shared 1-D grid of centers and
//! mixes the resulting `n·m` features with a dense `(o, n·m)` weight matrix:
//!
//! ```text
//! x ─► [R_11 … R_1m | R_21 … R_2m | … | R_n1 … R_nm] ─► W ─► y
//! ```
//!
//! The feature vector is laid out input-major (all `m` features of `x_1`,
//! then `x_2`, …), which is also the column order of `W`. There is no bias,
//! no residual base branch and no extra nonlinearity.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{linspace, Matrix};
use crate::network::{next_stamp, Network};
use crate::rng::uniform;

/// Centers `g_1 … g_m` and the shared width `β = (g_max − g_min)/(m − 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RbfGrid {
    centers: Vec<f64>,
    g_min: f64,
    g_max: f64,
    beta: f64,
    learnable: bool,
}

impl RbfGrid {
    pub fn new(g_min: f64, g_max: f64, m: usize, learnable: bool) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("RBF grid needs at least 2 centers, got {m}")));
        }
        if !(g_max > g_min) || !g_min.is_finite() || !g_max.is_finite() {
            return Err(Error::InvalidArgument(format!("RBF grid range [{g_min}, {g_max}] is empty")));
        }
        Ok(Self { centers: linspace(g_min, g_max, m), g_min, g_max, beta: (g_max - g_min) / (m - 1) as f64, learnable })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.centers.len()
    }

    #[inline]
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn range(&self) -> (f64, f64) {
        (self.g_min, self.g_max)
    }

    #[inline]
    pub fn is_learnable(&self) -> bool {
        self.learnable
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { size: self.size(), min: self.g_min, max: self.g_max, learnable: self.learnable }
    }

    /// Replaces the centers (checkpoint restore and learnable-grid updates). `β` is kept.
    pub fn set_centers(&mut self, centers: &[f64]) -> Result<()> {
        if centers.len() != self.size() {
            return Err(Error::dims("RBF centers", self.size(), centers.len()));
        }
        self.centers.copy_from_slice(centers);
        Ok(())
    }

    /// Restores a grid exactly as serialized.
    pub fn from_parts(g_min: f64, g_max: f64, beta: f64, centers: Vec<f64>, learnable: bool) -> Result<Self> {
        let mut grid = Self::new(g_min, g_max, centers.len(), learnable)?;
        grid.beta = beta;
        grid.centers = centers;
        Ok(grid)
    }

    fn features_into(&self, x: &[f64], out: &mut [f64]) {
        let m = self.size();
        let inv_beta = 1.0 / self.beta;
        for (xi, chunk) in x.iter().zip(out.chunks_exact_mut(m)) {
            for (r, g) in chunk.iter_mut().zip(&self.centers) {
                let z = (xi - g) * inv_beta;
                *r = (-z * z).exp();
            }
        }
    }
}

/// Construction parameters for a grid; `Default` is 5 fixed centers on [−2, 2].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub size: usize,
    pub min: f64,
    pub max: f64,
    pub learnable: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { size: 5, min: -2.0, max: 2.0, learnable: false }
    }
}

impl GridSpec {
    pub fn with_size(size: usize) -> Self {
        Self { size, ..Self::default() }
    }

    pub fn build(&self) -> Result<RbfGrid> {
        RbfGrid::new(self.min, self.max, self.size, self.learnable)
    }
}

fn check_finite(x: &[f64], what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// RBF expansion of `x`, length `x.len() · m`, input-major.
pub fn rbf_features(x: &[f64], grid: &RbfGrid) -> Result<Vec<f64>> {
    check_finite(x, "RBF input")?;
    let mut out = vec![0.0; x.len() * grid.size()];
    grid.features_into(x, &mut out);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KanLayer {
    in_dim: usize,
    out_dim: usize,
    grid: RbfGrid,
    weights: Matrix,
}

impl KanLayer {
    /// Layer with all-zero weights.
    pub fn zeros(in_dim: usize, out_dim: usize, grid: RbfGrid) -> Self {
        let cols = in_dim * grid.size();
        Self { in_dim, out_dim, grid, weights: Matrix::zeros(out_dim, cols) }
    }

    pub fn with_weights(in_dim: usize, out_dim: usize, grid: RbfGrid, weights: Matrix) -> Result<Self> {
        if weights.rows() != out_dim {
            return Err(Error::dims("KAN weight rows", out_dim, weights.rows()));
        }
        if weights.cols() != in_dim * grid.size() {
            return Err(Error::dims("KAN weight columns", in_dim * grid.size(), weights.cols()));
        }
        Ok(Self { in_dim, out_dim, grid, weights })
    }

    /// Uniform `[−s, s]` weights with `s = sqrt(1 / (in_dim · m))`.
    pub fn random<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, grid: RbfGrid, rng: &mut R) -> Self {
        let mut layer = Self::zeros(in_dim, out_dim, grid);
        let s = (1.0 / (in_dim * layer.grid.size()) as f64).sqrt();
        for w in layer.weights.as_mut_slice() {
            *w = uniform(rng, -s, s);
        }
        layer
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn grid(&self) -> &RbfGrid {
        &self.grid
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn param_count(&self) -> usize {
        self.out_dim * self.in_dim * self.grid.size() + if self.grid.learnable { self.grid.size() } else { 0 }
    }

    /// `W · R(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_with_features(x).map(|(y, _)| y)
    }

    fn forward_with_features(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.in_dim {
            return Err(Error::dims("KAN layer input", self.in_dim, x.len()));
        }
        let features = rbf_features(x, &self.grid)?;
        let y = self.weights.matvec(&features)?;
        Ok((y, features))
    }
}

/// Per-layer inputs `x^l` and features `R^l` from a forward pass.
#[derive(Clone, Debug)]
pub struct KanTape {
    stamp: u64,
    inputs: Vec<Vec<f64>>,
    features: Vec<Vec<f64>>,
}

impl KanTape {
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }
}

/// Gradients in the shape of the network that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct KanGradients {
    pub weights: Vec<Matrix>,
    /// `Some` only for layers whose grid is learnable.
    pub centers: Vec<Option<Vec<f64>>>,
}

impl KanGradients {
    pub fn zeros_like(net: &KanNetwork) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols())).collect(),
            centers: net.layers.iter().map(|l| l.grid.learnable.then(|| vec![0.0; l.grid.size()])).collect(),
        }
    }

    /// Flat view in [`Network::params`] order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, c) in self.weights.iter().zip(&self.centers) {
            out.extend_from_slice(w.as_slice());
            if let Some(c) = c {
                out.extend_from_slice(c);
            }
        }
        out
    }

    pub fn from_flat(net: &KanNetwork, flat: &[f64]) -> Result<Self> {
        if flat.len() != net.param_count() {
            return Err(Error::dims("KAN gradient vector", net.param_count(), flat.len()));
        }
        let mut g = Self::zeros_like(net);
        let mut at = 0;
        for (w, c) in g.weights.iter_mut().zip(g.centers.iter_mut()) {
            let n = w.as_slice().len();
            w.as_mut_slice().copy_from_slice(&flat[at..at + n]);
            at += n;
            if let Some(c) = c {
                let n = c.len();
                c.copy_from_slice(&flat[at..at + n]);
                at += n;
            }
        }
        Ok(g)
    }
}

#[derive(Clone, Debug)]
pub struct KanNetwork {
    layers: Vec<KanLayer>,
    stamp: u64,
}

impl PartialEq for KanNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl KanNetwork {
    /// Chains `layers`; consecutive layers must agree on width.
    pub fn from_layers(layers: Vec<KanLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::dims("KAN layer chaining", pair[0].out_dim, pair[1].in_dim));
            }
        }
        Ok(Self { layers, stamp: next_stamp() })
    }

    /// Randomly initialized network with widths `[in, h_1, …, out]`, one grid per layer.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], grid: &GridSpec, rng: &mut R) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad KAN widths {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .map(|w| Ok(KanLayer::random(w[0], w[1], grid.build()?, rng)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    /// Mutable access to the layers; invalidates outstanding tapes.
    pub fn layers_mut(&mut self) -> &mut [KanLayer] {
        self.stamp = next_stamp();
        &mut self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Forward pass returning the per-layer tape.
    pub fn forward_tape(&self, x: &[f64]) -> Result<(Vec<f64>, KanTape)> {
        if let Some(first) = self.layers.first() {
            if x.len() != first.in_dim {
                return Err(Error::dims("KAN network input", first.in_dim, x.len()));
            }
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut features = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for layer in &self.layers {
            let (y, r) = layer.forward_with_features(&current)?;
            inputs.push(std::mem::replace(&mut current, y));
            features.push(r);
        }
        Ok((current, KanTape { stamp: self.stamp, inputs, features }))
    }

    /// Structured gradients plus `dL/dx^0`.
    pub fn backward(&self, tape: &KanTape, upstream: &[f64]) -> Result<(KanGradients, Vec<f64>)> {
        let mut flat = vec![0.0; self.param_count()];
        let dx = self.backward_into(tape, upstream, &mut flat)?;
        Ok((KanGradients::from_flat(self, &flat)?, dx))
    }

    fn check_tape(&self, tape: &KanTape) -> Result<()> {
        let consistent = tape.stamp == self.stamp
            && tape.inputs.len() == self.layers.len()
            && tape.features.len() == self.layers.len()
            && self.layers.iter().zip(&tape.inputs).all(|(l, x)| x.len() == l.in_dim);
        if consistent {
            Ok(())
        } else {
            Err(Error::StaleTape)
        }
    }

    /// Offsets of each layer's block in the flat parameter vector.
    fn offsets(&self) -> Vec<usize> {
        let mut at = 0;
        self.layers
            .iter()
            .map(|l| {
                let o = at;
                at += l.param_count();
                o
            })
            .collect()
    }
}

impl Network for KanNetwork {
    type Tape = KanTape;

    fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(KanLayer::param_count).sum()
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, KanTape)> {
        self.forward_tape(x)
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(first) = self.layers.first() {
            if x.len() != first.in_dim {
                return Err(Error::dims("KAN network input", first.in_dim, x.len()));
            }
        }
        let mut current = x.to_vec();
        for layer in &self.layers {
            current = layer.forward(&current)?;
        }
        Ok(current)
    }

    fn backward_into(&self, tape: &KanTape, upstream: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        self.check_tape(tape)?;
        if upstream.len() != self.out_dim() {
            return Err(Error::dims("KAN upstream gradient", self.out_dim(), upstream.len()));
        }
        if grad.len() != self.param_count() {
            return Err(Error::dims("KAN gradient buffer", self.param_count(), grad.len()));
        }
        let offsets = self.offsets();
        let mut delta = upstream.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let m = layer.grid.size();
            let x = &tape.inputs[l];
            let r = &tape.features[l];
            let cols = layer.weights.cols();
            let block = &mut grad[offsets[l]..offsets[l] + layer.param_count()];
            let (w_grad, c_grad) = block.split_at_mut(cols * layer.out_dim);

            // dL/dW = δ ⊗ R ; dL/dR = Wᵀ δ
            let mut d_features = vec![0.0; cols];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let w_row = layer.weights.row(o);
                let g_row = &mut w_grad[o * cols..(o + 1) * cols];
                for k in 0..cols {
                    g_row[k] += d * r[k];
                    d_features[k] += d * w_row[k];
                }
            }

            // ∂R/∂x = −2(x − g)/β² · R = −∂R/∂g
            let scale = 2.0 / (layer.grid.beta * layer.grid.beta);
            let mut d_input = vec![0.0; layer.in_dim];
            for (i, xi) in x.iter().enumerate() {
                let mut acc = 0.0;
                for (j, g) in layer.grid.centers.iter().enumerate() {
                    let k = i * m + j;
                    let d_r_dx = -scale * (xi - g) * r[k];
                    acc += d_features[k] * d_r_dx;
                    if layer.grid.learnable {
                        c_grad[j] -= d_features[k] * d_r_dx;
                    }
                }
                d_input[i] = acc;
            }
            delta = d_input;
        }
        Ok(delta)
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            if layer.grid.learnable {
                out.extend_from_slice(&layer.grid.centers);
            }
        }
        out
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dims("KAN parameter vector", self.param_count(), params.len()));
        }
        let mut at = 0;
        for layer in self.layers_mut() {
            let n = layer.weights.as_slice().len();
            layer.weights.as_mut_slice().copy_from_slice(&params[at..at + n]);
            at += n;
            if layer.grid.learnable {
                let m = layer.grid.size();
                layer.grid.centers.copy_from_slice(&params[at..at + m]);
                at += m;
            }
        }
        Ok(())
    }
}

/// Trainable parameter count: `Σ o·n·m` (+ `m` per learnable grid).
pub fn kan_param_count(net: &KanNetwork) -> usize {
    net.param_count()
}
