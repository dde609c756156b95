//! Feed-forward ranking network with cached forward pass and exact backprop.
//!
//! Weights are stored row-major with one row per output unit, so layer `l`
//! maps an input of width `cols` to `rows` pre-activations as `W·a + b`.
//! Hidden layers apply the configured activation; the final layer is linear
//! and produces one score per item.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::sha256_hex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation and the activation output.
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - post * post,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    /// Input width first, then hidden widths, then 1.
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            layer_dims: vec![16, 32, 16, 1],
            activation: Activation::Relu,
            init_scale: 0.3,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn new(layer_dims: Vec<usize>, activation: Activation, init_scale: f64, seed: u64) -> Self {
        Self {
            layer_dims,
            activation,
            init_scale,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::config("layer_dims needs at least an input and an output entry"));
        }
        if self.layer_dims.contains(&0) {
            return Err(Error::config("layer_dims entries must be positive"));
        }
        if *self.layer_dims.last().unwrap() != 1 {
            return Err(Error::config("last layer_dims entry must be 1 (one score per item)"));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::config("init_scale must be a positive finite number"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("MlpConfig serializes").as_bytes())
    }
}

/// One dense layer: `rows` outputs, `cols` inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerParams {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    fn is_consistent(&self) -> bool {
        self.weights.len() == self.rows * self.cols && self.bias.len() == self.rows
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub layers: Vec<LayerParams>,
}

impl ParameterSet {
    /// Uniform init in `[-init_scale, init_scale]`, layer by layer, weights before bias.
    pub fn init(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let s = config.init_scale;
        let layers = config
            .layer_dims
            .windows(2)
            .map(|w| {
                let (cols, rows) = (w[0], w[1]);
                let mut layer = LayerParams::zeros(rows, cols);
                for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                    *v = rng.random_range(-s..=s);
                }
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            layers: config
                .layer_dims
                .windows(2)
                .map(|w| LayerParams::zeros(w[1], w[0]))
                .collect(),
        })
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Checks shapes against `config` and that every value is finite.
    pub fn check(&self, config: &MlpConfig) -> Result<()> {
        config.validate()?;
        if self.layers.len() != config.num_layers() {
            return Err(Error::input(format!(
                "parameter set has {} layers, config expects {}",
                self.layers.len(),
                config.num_layers()
            )));
        }
        for (i, (layer, w)) in self.layers.iter().zip(config.layer_dims.windows(2)).enumerate() {
            if layer.cols != w[0] || layer.rows != w[1] || !layer.is_consistent() {
                return Err(Error::input(format!(
                    "layer {i} has shape {}x{}, expected {}x{}",
                    layer.rows, layer.cols, w[1], w[0]
                )));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::input(format!("layer {i} contains non-finite values")));
            }
        }
        Ok(())
    }

    /// All parameters in layer order, weights (row-major) then bias per layer.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten), keeping this set's shapes.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.num_params() {
            return Err(Error::input(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut out = self.clone();
        let mut pos = 0;
        for l in &mut out.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[pos..pos + nw]);
            pos += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[pos..pos + nb]);
            pos += nb;
        }
        Ok(out)
    }

    /// SHA-256 over the exact bit patterns of every parameter.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::with_capacity(self.num_params() * 8 + self.layers.len() * 16);
        for l in &self.layers {
            bytes.extend_from_slice(&(l.rows as u64).to_le_bytes());
            bytes.extend_from_slice(&(l.cols as u64).to_le_bytes());
            for v in l.weights.iter().chain(&l.bias) {
                bytes.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        sha256_hex(&bytes)
    }
}

/// Per-parameter loss gradients, shaped like the [`ParameterSet`] they differentiate.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<LayerParams>,
}

impl GradientSet {
    pub fn zeros_like(params: &ParameterSet) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| LayerParams::zeros(l.rows, l.cols))
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        ParameterSet {
            layers: self.layers.clone(),
        }
        .flatten()
    }

    pub(crate) fn from_flat_like(params: &ParameterSet, flat: &[f64]) -> Result<Self> {
        Ok(Self {
            layers: params.with_flat(flat)?.layers,
        })
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v *= factor;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|&v| v == 0.0))
    }

    /// Largest `|a - b| / max(|a|, |b|, floor)` over all entries.
    pub fn max_relative_error(&self, other: &GradientSet, floor: f64) -> f64 {
        self.flatten()
            .iter()
            .zip(other.flatten())
            .map(|(&a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    /// n × rows, row-major by item.
    pre: Vec<f64>,
    post: Vec<f64>,
}

/// Cached activations of one forward pass over an item list.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    n: usize,
    input_dim: usize,
    inputs: Vec<f64>,
    layers: Vec<LayerCache>,
    activation: Activation,
}

impl ForwardTrace {
    pub fn num_items(&self) -> usize {
        self.n
    }
}

/// Scores every row of `features` and keeps what backprop needs.
pub fn mlp_forward<R: AsRef<[f64]>>(
    params: &ParameterSet,
    activation: Activation,
    features: &[R],
) -> Result<(Vec<f64>, ForwardTrace)> {
    let first = params
        .layers
        .first()
        .ok_or_else(|| Error::input("parameter set has no layers"))?;
    if params.layers.last().map(|l| l.rows) != Some(1) {
        return Err(Error::input("output layer must produce a single score"));
    }
    let m = first.cols;
    let n = features.len();
    let mut inputs = Vec::with_capacity(n * m);
    for (i, row) in features.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != m {
            return Err(Error::input(format!(
                "item {i} has {} features, model expects {m}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(format!("item {i} has non-finite features")));
        }
        inputs.extend_from_slice(row);
    }

    let last = params.layers.len() - 1;
    let mut caches: Vec<LayerCache> = Vec::with_capacity(params.layers.len());
    for (li, layer) in params.layers.iter().enumerate() {
        let (prev, width) = match caches.last() {
            Some(c) => (&c.post, params.layers[li - 1].rows),
            None => (&inputs, m),
        };
        if width != layer.cols {
            return Err(Error::input(format!(
                "layer {li} expects width {}, previous layer produces {width}",
                layer.cols
            )));
        }
        let mut pre = vec![0.0; n * layer.rows];
        for item in 0..n {
            let a = &prev[item * width..(item + 1) * width];
            for r in 0..layer.rows {
                let w = &layer.weights[r * width..(r + 1) * width];
                let dot: f64 = w.iter().zip(a).map(|(x, y)| x * y).sum();
                pre[item * layer.rows + r] = dot + layer.bias[r];
            }
        }
        let post = if li == last {
            pre.clone()
        } else {
            pre.iter().map(|&x| activation.apply(x)).collect()
        };
        caches.push(LayerCache { pre, post });
    }

    let scores = caches.last().unwrap().post.clone();
    Ok((
        scores,
        ForwardTrace {
            n,
            input_dim: m,
            inputs,
            layers: caches,
            activation,
        },
    ))
}

/// Backpropagates `per_score_grad` (∂loss/∂score per item) through a cached pass.
pub fn backward(params: &ParameterSet, trace: &ForwardTrace, per_score_grad: &[f64]) -> Result<GradientSet> {
    let mut grads = GradientSet::zeros_like(params);
    backward_into(params, trace, per_score_grad, &mut grads)?;
    Ok(grads)
}

/// Like [`backward`] but adds into an existing gradient buffer.
pub(crate) fn backward_into(
    params: &ParameterSet,
    trace: &ForwardTrace,
    per_score_grad: &[f64],
    grads: &mut GradientSet,
) -> Result<()> {
    if trace.layers.len() != params.layers.len() || params.layers.first().map(|l| l.cols) != Some(trace.input_dim) {
        return Err(Error::Internal("forward trace does not match parameter set".into()));
    }
    for (c, l) in trace.layers.iter().zip(&params.layers) {
        if c.pre.len() != trace.n * l.rows {
            return Err(Error::Internal("forward trace does not match parameter set".into()));
        }
    }
    if per_score_grad.len() != trace.n {
        return Err(Error::input(format!(
            "got {} score gradients for {} items",
            per_score_grad.len(),
            trace.n
        )));
    }

    if grads.layers.len() != params.layers.len() {
        return Err(Error::Internal("gradient buffer does not match parameter set".into()));
    }
    let n = trace.n;
    // delta: ∂loss/∂pre for the current layer, n × rows
    let mut delta = per_score_grad.to_vec();
    for li in (0..params.layers.len()).rev() {
        let layer = &params.layers[li];
        let (rows, cols) = (layer.rows, layer.cols);
        let input = if li == 0 {
            &trace.inputs
        } else {
            &trace.layers[li - 1].post
        };
        let g = &mut grads.layers[li];
        for item in 0..n {
            let d = &delta[item * rows..(item + 1) * rows];
            let a = &input[item * cols..(item + 1) * cols];
            for (r, &dr) in d.iter().enumerate() {
                if dr == 0.0 {
                    continue;
                }
                g.bias[r] += dr;
                let gw = &mut g.weights[r * cols..(r + 1) * cols];
                for (w, &x) in gw.iter_mut().zip(a) {
                    *w += dr * x;
                }
            }
        }
        if li == 0 {
            break;
        }
        let below = &trace.layers[li - 1];
        let mut next = vec![0.0; n * cols];
        for item in 0..n {
            let d = &delta[item * rows..(item + 1) * rows];
            for c in 0..cols {
                let mut s = 0.0;
                for (&dr, &w) in d.iter().zip(layer.weights[c..].iter().step_by(cols)) {
                    s += dr * w;
                }
                let idx = item * cols + c;
                next[idx] = s * trace.activation.derivative(below.pre[idx], below.post[idx]);
            }
        }
        delta = next;
    }
    Ok(())
}
