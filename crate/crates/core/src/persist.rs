//! `DOKN` binary files for datasets and checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `DOKN` |
//! | 4 | `u32` format version |
//! | 4 | `u32` record tag (1 dataset, 2 checkpoint) |
//! | 8 | `u64` header word count `h` |
//! | 8·h | `u64` header words (dimensions, flags, indices) |
//! | 8 | `u64` payload length `p` |
//! | 8·p | `f64` payload, row-major |

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::datagen::{Dataset, Normalizer, Split};
use crate::error::{Error, Result};
use crate::kan::{KanLayer, KanNetwork, RbfGrid};
use crate::linalg::Matrix;
use crate::mlp::{Activation, DenseLayer, MlpNetwork};
use crate::model::Model;
use crate::network::Network;
use crate::operator::{FusionMode, OperatorModel};

pub const MAGIC: [u8; 4] = *b"DOKN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum RecordTag {
    Dataset = 1,
    Checkpoint = 2,
}

#[derive(Default)]
struct Encoder {
    header: Vec<u64>,
    payload: Vec<f64>,
}

impl Encoder {
    fn word(&mut self, w: usize) {
        self.header.push(w as u64);
    }

    fn floats(&mut self, v: &[f64]) {
        self.payload.extend_from_slice(v);
    }

    fn to_bytes(&self, tag: RecordTag) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 8 * (self.header.len() + self.payload.len()));
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(tag as u32).to_le_bytes());
        out.extend_from_slice(&(self.header.len() as u64).to_le_bytes());
        for w in &self.header {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        for v in &self.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

struct Decoder {
    header: Vec<u64>,
    payload: Vec<f64>,
    h: usize,
    p: usize,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(format_err("unexpected end of file"));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn read_u64(bytes: &mut &[u8]) -> Result<u64> {
    Ok(u64::from_le_bytes(take(bytes, 8)?.try_into().expect("8 bytes")))
}

impl Decoder {
    fn from_bytes(mut bytes: &[u8], tag: RecordTag) -> Result<Self> {
        let b = &mut bytes;
        if take(b, 4)? != MAGIC {
            return Err(format_err("missing DOKN magic bytes"));
        }
        let version = u32::from_le_bytes(take(b, 4)?.try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Version { found: version, expected: FORMAT_VERSION });
        }
        let found = u32::from_le_bytes(take(b, 4)?.try_into().expect("4 bytes"));
        if found != tag as u32 {
            return Err(format_err(format!("record tag {found}, expected {}", tag as u32)));
        }
        let h = read_u64(b)? as usize;
        if h > b.len() / 8 {
            return Err(format_err("header longer than file"));
        }
        let header = (0..h).map(|_| read_u64(b)).collect::<Result<_>>()?;
        let p = read_u64(b)? as usize;
        if p != b.len() / 8 || !b.len().is_multiple_of(8) {
            return Err(format_err("payload length does not match file size"));
        }
        let payload = b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { header, payload, h: 0, p: 0 })
    }

    fn word(&mut self) -> Result<usize> {
        let w = *self.header.get(self.h).ok_or_else(|| format_err("header too short"))?;
        self.h += 1;
        usize::try_from(w).map_err(|_| format_err("header word out of range"))
    }

    fn words(&mut self, n: usize) -> Result<Vec<usize>> {
        (0..n).map(|_| self.word()).collect()
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let end = self.p.checked_add(n).filter(|&e| e <= self.payload.len());
        let end = end.ok_or_else(|| format_err("payload too short"))?;
        let out = self.payload[self.p..end].to_vec();
        self.p = end;
        Ok(out)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let n = rows.checked_mul(cols).ok_or_else(|| format_err("matrix size overflow"))?;
        Matrix::from_vec(rows, cols, self.floats(n)?)
    }

    fn finish(&self) -> Result<()> {
        if self.h != self.header.len() || self.p != self.payload.len() {
            return Err(format_err("trailing data after record"));
        }
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

fn mode_word(mode: FusionMode) -> usize {
    match mode {
        FusionMode::Scalar => 0,
        FusionMode::Transient { steps } => steps,
    }
}

fn mode_from_word(w: usize) -> FusionMode {
    if w == 0 {
        FusionMode::Scalar
    } else {
        FusionMode::Transient { steps: w }
    }
}

fn encode_normalizer(enc: &mut Encoder, n: &Option<Normalizer>) {
    match n {
        Some(n) => {
            enc.word(1);
            enc.word(n.dim());
            enc.floats(&n.min);
            enc.floats(&n.max);
        }
        None => enc.word(0),
    }
}

fn decode_normalizer(dec: &mut Decoder) -> Result<Option<Normalizer>> {
    if dec.word()? == 0 {
        return Ok(None);
    }
    let dim = dec.word()?;
    Ok(Some(Normalizer { min: dec.floats(dim)?, max: dec.floats(dim)? }))
}

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let mut enc = Encoder::default();
    for w in [ds.num_samples(), ds.branch_inputs.cols(), ds.num_points(), ds.coords.cols(), mode_word(ds.mode)] {
        enc.word(w);
    }
    enc.floats(ds.branch_inputs.as_slice());
    enc.floats(ds.coords.as_slice());
    enc.floats(ds.targets.as_slice());
    match &ds.split {
        Some(s) => {
            enc.word(1);
            enc.word(s.train.len());
            enc.word(s.test.len());
            s.train.iter().chain(&s.test).for_each(|&i| enc.word(i));
        }
        None => enc.word(0),
    }
    encode_normalizer(&mut enc, &ds.branch_norm);
    encode_normalizer(&mut enc, &ds.coord_norm);
    enc.to_bytes(RecordTag::Dataset)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut dec = Decoder::from_bytes(bytes, RecordTag::Dataset)?;
    let [samples, branch_dim, points, coord_dim, mode] = dec.words(5)?.try_into().expect("5 words");
    let mode = mode_from_word(mode);
    let branch = dec.matrix(samples, branch_dim)?;
    let coords = dec.matrix(points, coord_dim)?;
    let targets = dec.matrix(samples, points * mode.steps())?;
    let mut ds = Dataset::new(branch, coords, targets, mode)?;
    if dec.word()? == 1 {
        let (n_train, n_test) = (dec.word()?, dec.word()?);
        let train = dec.words(n_train)?;
        let test = dec.words(n_test)?;
        if train.iter().chain(&test).any(|&i| i >= samples) {
            return Err(format_err("split index out of range"));
        }
        ds.split = Some(Split { train, test });
    }
    ds.branch_norm = decode_normalizer(&mut dec)?;
    ds.coord_norm = decode_normalizer(&mut dec)?;
    dec.finish()?;
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    write_file(path, &encode_dataset(ds))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&fs::read(path)?)
}

const KIND_KAN: usize = 0;
const KIND_MLP: usize = 1;
const KIND_DEEPOKAN: usize = 2;
const KIND_DEEPONET: usize = 3;

fn encode_kan(enc: &mut Encoder, net: &KanNetwork) {
    enc.word(KIND_KAN);
    enc.word(net.depth());
    for layer in net.layers() {
        let g = layer.grid();
        for w in [layer.in_dim(), layer.out_dim(), g.size(), g.is_learnable() as usize] {
            enc.word(w);
        }
        let (lo, hi) = g.range();
        enc.floats(&[lo, hi, g.beta()]);
        enc.floats(g.centers());
        enc.floats(layer.weights().as_slice());
    }
}

fn decode_kan(dec: &mut Decoder) -> Result<KanNetwork> {
    if dec.word()? != KIND_KAN {
        return Err(format_err("expected a KAN network"));
    }
    let depth = dec.word()?;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let [inp, out, m, learnable] = dec.words(4)?.try_into().expect("4 words");
        let [lo, hi, beta] = dec.floats(3)?.try_into().expect("3 floats");
        let grid = RbfGrid::from_parts(lo, hi, beta, dec.floats(m)?, learnable == 1)?;
        let weights = dec.matrix(out, inp * m)?;
        layers.push(KanLayer::with_weights(inp, out, grid, weights)?);
    }
    KanNetwork::from_layers(layers)
}

fn encode_mlp(enc: &mut Encoder, net: &MlpNetwork) {
    enc.word(KIND_MLP);
    enc.word(net.layers().len());
    for layer in net.layers() {
        enc.word(layer.in_dim());
        enc.word(layer.out_dim());
        enc.word(match layer.activation() {
            Activation::Tanh => 0,
            Activation::Identity => 1,
        });
        enc.floats(layer.weights().as_slice());
        enc.floats(layer.bias());
    }
}

fn decode_mlp(dec: &mut Decoder) -> Result<MlpNetwork> {
    if dec.word()? != KIND_MLP {
        return Err(format_err("expected an MLP network"));
    }
    let depth = dec.word()?;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let [inp, out, act] = dec.words(3)?.try_into().expect("3 words");
        let activation = match act {
            0 => Activation::Tanh,
            1 => Activation::Identity,
            other => return Err(format_err(format!("unknown activation code {other}"))),
        };
        let weights = dec.matrix(out, inp)?;
        layers.push(DenseLayer::new(weights, dec.floats(out)?, activation)?);
    }
    MlpNetwork::from_layers(layers)
}

fn encode_operator<N: Network>(enc: &mut Encoder, kind: usize, m: &OperatorModel<N>, encode_net: fn(&mut Encoder, &N)) {
    enc.word(kind);
    enc.word(m.width());
    enc.word(mode_word(m.mode()));
    match m.bias() {
        Some(b) => {
            enc.word(1);
            enc.floats(&[b]);
        }
        None => enc.word(0),
    }
    encode_net(enc, m.branch());
    encode_net(enc, m.trunk());
}

fn decode_operator<N: Network>(
    dec: &mut Decoder,
    decode_net: fn(&mut Decoder) -> Result<N>,
) -> Result<OperatorModel<N>> {
    let width = dec.word()?;
    let mode = mode_from_word(dec.word()?);
    let bias = if dec.word()? == 1 { Some(dec.floats(1)?[0]) } else { None };
    let branch = decode_net(dec)?;
    let trunk = decode_net(dec)?;
    OperatorModel::new(branch, trunk, width, mode, bias)
}

/// A trained model plus the input scaling it was trained under.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub branch_norm: Option<Normalizer>,
    pub coord_norm: Option<Normalizer>,
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let mut enc = Encoder::default();
    match &ck.model {
        Model::RbfKan(n) => encode_kan(&mut enc, n),
        Model::Mlp(n) => encode_mlp(&mut enc, n),
        Model::DeepOKan(m) => encode_operator(&mut enc, KIND_DEEPOKAN, m, encode_kan),
        Model::DeepONet(m) => encode_operator(&mut enc, KIND_DEEPONET, m, encode_mlp),
    }
    encode_normalizer(&mut enc, &ck.branch_norm);
    encode_normalizer(&mut enc, &ck.coord_norm);
    enc.to_bytes(RecordTag::Checkpoint)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut dec = Decoder::from_bytes(bytes, RecordTag::Checkpoint)?;
    let kind = *dec.header.first().ok_or_else(|| format_err("empty checkpoint header"))? as usize;
    let model = match kind {
        KIND_KAN => Model::RbfKan(decode_kan(&mut dec)?),
        KIND_MLP => Model::Mlp(decode_mlp(&mut dec)?),
        KIND_DEEPOKAN => {
            dec.word()?;
            Model::DeepOKan(decode_operator(&mut dec, decode_kan)?)
        }
        KIND_DEEPONET => {
            dec.word()?;
            Model::DeepONet(decode_operator(&mut dec, decode_mlp)?)
        }
        other => return Err(format_err(format!("unknown model kind {other}"))),
    };
    let branch_norm = decode_normalizer(&mut dec)?;
    let coord_norm = decode_normalizer(&mut dec)?;
    dec.finish()?;
    Ok(Checkpoint { model, branch_norm, coord_norm })
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    write_file(path, &encode_checkpoint(ck))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path)?)
}
