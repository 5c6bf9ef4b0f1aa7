//! Small multilayer perceptrons with hand-written forward/backward passes,
//! the Adam optimizer, and checkpoint persistence.
//!
//! Three heads share the same `3 -> 64 -> 128 -> out` layout:
//!
//! * [`Architecture::BiasNet`]: ReLU hidden layers, one linear output scaled
//!   to meters (pseudorange bias).
//! * [`Architecture::WeightNet`]: sigmoid hidden layers, one sigmoid output
//!   (measurement weight in (0, 1)).
//! * [`Architecture::JointNet`]: ReLU hidden layers, output 0 is the linear
//!   bias, output 1 the sigmoid weight.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SatelliteObservation;

pub const CHECKPOINT_FORMAT: &str = "tdl-gnss-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const INPUT_DIM: usize = 3;
pub const HIDDEN_DIMS: [usize; 2] = [64, 128];
/// Network bias output of 1.0 corresponds to this many meters.
pub const DEFAULT_BIAS_SCALE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    BiasNet,
    WeightNet,
    JointNet,
}

impl Architecture {
    pub fn tag(self) -> &'static str {
        match self {
            Architecture::BiasNet => "bias",
            Architecture::WeightNet => "weight",
            Architecture::JointNet => "joint",
        }
    }

    pub fn output_dim(self) -> usize {
        match self {
            Architecture::JointNet => 2,
            _ => 1,
        }
    }

    pub fn hidden_activation(self) -> Activation {
        match self {
            Architecture::WeightNet => Activation::Sigmoid,
            _ => Activation::Relu,
        }
    }

    pub fn output_activations(self) -> Vec<Activation> {
        match self {
            Architecture::BiasNet => vec![Activation::Identity],
            Architecture::WeightNet => vec![Activation::Sigmoid],
            Architecture::JointNet => vec![Activation::Identity, Activation::Sigmoid],
        }
    }

    pub fn has_bias_head(self) -> bool {
        self != Architecture::WeightNet
    }

    pub fn has_weight_head(self) -> bool {
        self != Architecture::BiasNet
    }

    /// Output unit index of each head.
    fn bias_unit(self) -> Option<usize> {
        self.has_bias_head().then_some(0)
    }

    fn weight_unit(self) -> Option<usize> {
        match self {
            Architecture::BiasNet => None,
            Architecture::WeightNet => Some(0),
            Architecture::JointNet => Some(1),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bias" => Ok(Architecture::BiasNet),
            "weight" => Ok(Architecture::WeightNet),
            "joint" => Ok(Architecture::JointNet),
            other => Err(format!("unknown architecture tag {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

/// Logistic function kept strictly inside (0, 1).
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative given the pre-activation and the activation output.
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => post * (1.0 - post),
        }
    }
}

/// Fixed affine scaling of the raw inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub cn0_db_hz: f64,
    pub elevation_rad: f64,
    pub residual_m: f64,
}

impl Default for FeatureScaling {
    fn default() -> Self {
        Self {
            cn0_db_hz: 50.0,
            elevation_rad: FRAC_PI_2,
            residual_m: 100.0,
        }
    }
}

impl FeatureScaling {
    pub fn featurize(&self, obs: &SatelliteObservation, residual: f64) -> FeatureVector {
        FeatureVector {
            cn0: obs.cn0 / self.cn0_db_hz,
            elevation: obs.elevation / self.elevation_rad,
            residual: residual / self.residual_m,
        }
    }
}

/// Scaled network input for one satellite.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub cn0: f64,
    pub elevation: f64,
    pub residual: f64,
}

impl FeatureVector {
    pub fn to_array(self) -> [f64; INPUT_DIM] {
        [self.cn0, self.elevation, self.residual]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Features from C/N0, elevation and the equal-weight residual, using the
/// default scaling.
pub fn featurize(obs: &SatelliteObservation, residual: f64) -> FeatureVector {
    FeatureScaling::default().featurize(obs, residual)
}

/// Fully connected layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights, zero biases.
    fn glorot(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            biases: vec![0.0; outputs],
        }
    }

    fn is_consistent(&self) -> bool {
        self.weights.len() == self.inputs * self.outputs && self.biases.len() == self.outputs
    }

    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.biases))
        {
            *o = b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub architecture: Architecture,
    pub layers: Vec<Dense>,
    pub hidden_activations: Vec<Activation>,
    pub output_activations: Vec<Activation>,
    pub feature_scaling: FeatureScaling,
    pub bias_scale: f64,
}

impl MlpModel {
    /// Default `3 -> 64 -> 128 -> out` network with seeded Glorot init.
    pub fn new(architecture: Architecture, seed: u64) -> Self {
        let dims = Self::default_dims(architecture);
        Self::with_dims(architecture, &dims, seed).expect("default dimensions are consistent")
    }

    pub fn default_dims(architecture: Architecture) -> Vec<usize> {
        let mut dims = vec![INPUT_DIM];
        dims.extend(HIDDEN_DIMS);
        dims.push(architecture.output_dim());
        dims
    }

    pub fn with_dims(architecture: Architecture, dims: &[usize], seed: u64) -> Result<Self> {
        check_dims(architecture, dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|d| Dense::glorot(d[0], d[1], &mut rng))
            .collect();
        Ok(Self::from_layers(architecture, layers))
    }

    /// All parameters zero.
    pub fn zeroed(architecture: Architecture) -> Self {
        let dims = Self::default_dims(architecture);
        let layers = dims.windows(2).map(|d| Dense::zeros(d[0], d[1])).collect();
        Self::from_layers(architecture, layers)
    }

    fn from_layers(architecture: Architecture, layers: Vec<Dense>) -> Self {
        let hidden = layers.len().saturating_sub(1);
        Self {
            architecture,
            layers,
            hidden_activations: vec![architecture.hidden_activation(); hidden],
            output_activations: architecture.output_activations(),
            feature_scaling: FeatureScaling::default(),
            bias_scale: DEFAULT_BIAS_SCALE,
        }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self
            .layers
            .first()
            .map(|l| vec![l.inputs])
            .unwrap_or_default();
        dims.extend(self.layers.iter().map(|l| l.outputs));
        dims
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.layer_dims();
        check_dims(self.architecture, &dims)?;
        if self.layers.windows(2).any(|w| w[0].outputs != w[1].inputs)
            || !self.layers.iter().all(Dense::is_consistent)
        {
            return Err(Error::DimensionMismatch("layer shapes do not chain".into()));
        }
        if self.hidden_activations.len() + 1 != self.layers.len() {
            return Err(Error::DimensionMismatch(
                "activation schedule length".into(),
            ));
        }
        if self.output_activations != self.architecture.output_activations() {
            return Err(Error::DimensionMismatch(format!(
                "output activations do not match the {} head",
                self.architecture
            )));
        }
        Ok(())
    }

    pub fn featurize(&self, obs: &SatelliteObservation, residual: f64) -> FeatureVector {
        self.feature_scaling.featurize(obs, residual)
    }

    fn activation(&self, layer: usize, unit: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activations[unit]
        } else {
            self.hidden_activations[layer]
        }
    }
}

fn check_dims(architecture: Architecture, dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims[0] != INPUT_DIM || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!(
            "invalid layer dimensions {dims:?}"
        )));
    }
    if *dims.last().unwrap() != architecture.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} head needs {} outputs, dimensions are {dims:?}",
            architecture,
            architecture.output_dim()
        )));
    }
    Ok(())
}

/// Per-satellite head outputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Predictions {
    /// meters
    pub biases: Option<Vec<f64>>,
    /// in (0, 1)
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    pre: Vec<f64>,
    post: Vec<f64>,
}

/// Activations retained by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    inputs: Vec<f64>,
    layers: Vec<LayerCache>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Pre-activation values of `layer`, row-major (batch x outputs).
    pub fn pre_activations(&self, layer: usize) -> &[f64] {
        &self.layers[layer].pre
    }
}

pub fn forward(model: &MlpModel, x: &[FeatureVector]) -> Result<(Predictions, ForwardCache)> {
    model.validate()?;
    let batch = x.len();
    let inputs: Vec<f64> = x.iter().flat_map(|f| f.to_array()).collect();

    let mut layers: Vec<LayerCache> = Vec::with_capacity(model.layers.len());
    for (li, layer) in model.layers.iter().enumerate() {
        let source = if li == 0 {
            &inputs
        } else {
            &layers[li - 1].post
        };
        let mut pre = vec![0.0; batch * layer.outputs];
        for (xs, out) in source
            .chunks_exact(layer.inputs)
            .zip(pre.chunks_exact_mut(layer.outputs))
        {
            layer.affine(xs, out);
        }
        let post = pre
            .iter()
            .enumerate()
            .map(|(i, &p)| model.activation(li, i % layer.outputs).apply(p))
            .collect();
        layers.push(LayerCache { pre, post });
    }

    let out = &layers.last().expect("at least one layer").post;
    let width = model.architecture.output_dim();
    let arch = model.architecture;
    let predictions = Predictions {
        biases: arch.bias_unit().map(|u| {
            out.chunks_exact(width)
                .map(|o| o[u] * model.bias_scale)
                .collect()
        }),
        weights: arch
            .weight_unit()
            .map(|u| out.chunks_exact(width).map(|o| o[u]).collect()),
    };
    Ok((
        predictions,
        ForwardCache {
            batch,
            inputs,
            layers,
        },
    ))
}

/// Upstream loss gradients with respect to each head's per-satellite output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputGradients {
    /// d loss / d bias (per meter)
    pub d_biases: Option<Vec<f64>>,
    pub d_weights: Option<Vec<f64>>,
}

/// Parameter gradients, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights
                .iter_mut()
                .zip(&b.weights)
                .for_each(|(x, y)| *x += y);
            a.biases
                .iter_mut()
                .zip(&b.biases)
                .for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in self.layers.iter_mut() {
            l.weights
                .iter_mut()
                .chain(l.biases.iter_mut())
                .for_each(|x| *x *= factor);
        }
    }

    /// Layer by layer, weights then biases; same order as Adam's moments.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|&v| v == 0.0))
    }
}

fn head_gradient<'a>(
    name: &str,
    required: bool,
    given: &'a Option<Vec<f64>>,
    batch: usize,
) -> Result<Option<&'a [f64]>> {
    match (required, given) {
        (true, Some(g)) if g.len() == batch => Ok(Some(g)),
        (true, Some(g)) => Err(Error::DimensionMismatch(format!(
            "{name} gradient has {} entries for batch {batch}",
            g.len()
        ))),
        (true, None) => Err(Error::DimensionMismatch(format!(
            "missing {name} head gradient"
        ))),
        (false, Some(_)) => Err(Error::DimensionMismatch(format!(
            "model has no {name} head"
        ))),
        (false, None) => Ok(None),
    }
}

pub fn backward(
    model: &MlpModel,
    cache: &ForwardCache,
    upstream: &OutputGradients,
) -> Result<Gradients> {
    model.validate()?;
    let arch = model.architecture;
    let batch = cache.batch;
    if cache.layers.len() != model.layers.len()
        || cache
            .layers
            .iter()
            .zip(&model.layers)
            .any(|(c, l)| c.pre.len() != batch * l.outputs)
    {
        return Err(Error::DimensionMismatch(
            "cache does not match the model".into(),
        ));
    }
    let d_bias = head_gradient("bias", arch.has_bias_head(), &upstream.d_biases, batch)?;
    let d_weight = head_gradient("weight", arch.has_weight_head(), &upstream.d_weights, batch)?;

    let width = arch.output_dim();
    // d loss / d output-layer post-activation
    let mut delta = vec![0.0; batch * width];
    for s in 0..batch {
        if let (Some(u), Some(g)) = (arch.bias_unit(), d_bias) {
            delta[s * width + u] = g[s] * model.bias_scale;
        }
        if let (Some(u), Some(g)) = (arch.weight_unit(), d_weight) {
            delta[s * width + u] = g[s];
        }
    }

    let mut grads = Gradients::zeros_like(model);
    for li in (0..model.layers.len()).rev() {
        let layer = &model.layers[li];
        let lc = &cache.layers[li];
        for (i, d) in delta.iter_mut().enumerate() {
            *d *= model
                .activation(li, i % layer.outputs)
                .derivative(lc.pre[i], lc.post[i]);
        }
        let input = if li == 0 {
            &cache.inputs
        } else {
            &cache.layers[li - 1].post
        };
        let g = &mut grads.layers[li];
        let mut next = vec![0.0; batch * layer.inputs];
        for s in 0..batch {
            let xs = &input[s * layer.inputs..(s + 1) * layer.inputs];
            let ds = &delta[s * layer.outputs..(s + 1) * layer.outputs];
            let back = &mut next[s * layer.inputs..(s + 1) * layer.inputs];
            for (o, &d) in ds.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = o * layer.inputs..(o + 1) * layer.inputs;
                for ((gw, w), (x, b)) in g.weights[row.clone()]
                    .iter_mut()
                    .zip(&layer.weights[row])
                    .zip(xs.iter().zip(back.iter_mut()))
                {
                    *gw += d * x;
                    *b += d * w;
                }
            }
        }
        delta = next;
    }
    Ok(grads)
}

const MOMENT_FLOOR: f64 = 1e-200;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(model: &MlpModel, learning_rate: f64) -> Self {
        Self::with_len(model.parameter_count(), learning_rate)
    }

    pub fn with_len(len: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
        }
    }

    /// Bias-corrected Adam update of a flat parameter slice.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters, {} gradients, {} moments",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            // Moments of parameters that stopped receiving gradient (dead
            // ReLU units) decay into subnormals, which are very slow on
            // x86. Below this floor their update is far under one ulp.
            if m.abs() < MOMENT_FLOOR {
                *m = 0.0;
            }
            if *v < MOMENT_FLOOR {
                *v = 0.0;
            }
            *p -= self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.epsilon);
        }
        Ok(())
    }
}

pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.layers.len() != model.layers.len() {
        return Err(Error::DimensionMismatch("gradient layer count".into()));
    }
    let mut flat: Vec<f64> = model
        .layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect();
    state.update(&mut flat, &grads.flatten())?;
    let mut values = flat.into_iter();
    for l in model.layers.iter_mut() {
        for p in l.weights.iter_mut().chain(l.biases.iter_mut()) {
            *p = values.next().expect("length checked");
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    architecture: String,
    layer_dims: Vec<usize>,
    hidden_activations: Vec<Activation>,
    output_activations: Vec<Activation>,
    feature_scaling: FeatureScaling,
    bias_scale_m: f64,
    layers: Vec<LayerRecord>,
}

pub fn checkpoint_to_string(model: &MlpModel) -> Result<String> {
    model.validate()?;
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        architecture: model.architecture.tag().to_string(),
        layer_dims: model.layer_dims(),
        hidden_activations: model.hidden_activations.clone(),
        output_activations: model.output_activations.clone(),
        feature_scaling: model.feature_scaling,
        bias_scale_m: model.bias_scale,
        layers: model
            .layers
            .iter()
            .map(|l| LayerRecord {
                weights: l.weights.clone(),
                biases: l.biases.clone(),
            })
            .collect(),
    };
    let mut text =
        serde_json::to_string(&file).map_err(|e| Error::MalformedCheckpoint(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn checkpoint_from_str(text: &str) -> Result<MlpModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::MalformedCheckpoint(e.to_string()))?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(CHECKPOINT_FORMAT) => {}
        Some(other) => {
            return Err(Error::VersionMismatch(format!(
                "unknown checkpoint format {other:?}"
            )))
        }
        None => return Err(Error::MalformedCheckpoint("missing format field".into())),
    }
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == CHECKPOINT_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::VersionMismatch(format!(
                "checkpoint version {v}, expected {CHECKPOINT_VERSION}"
            )))
        }
        None => return Err(Error::MalformedCheckpoint("missing version field".into())),
    }
    let file: CheckpointFile =
        serde_json::from_value(value).map_err(|e| Error::MalformedCheckpoint(e.to_string()))?;

    let architecture: Architecture = file.architecture.parse().map_err(Error::VersionMismatch)?;
    check_dims(architecture, &file.layer_dims)
        .map_err(|e| Error::VersionMismatch(e.to_string()))?;
    if file.output_activations != architecture.output_activations()
        || file.hidden_activations.len() + 2 != file.layer_dims.len()
        || file
            .hidden_activations
            .iter()
            .any(|&a| a != architecture.hidden_activation())
    {
        return Err(Error::VersionMismatch(format!(
            "activation schedule does not match the {architecture} architecture"
        )));
    }
    if file.layers.len() + 1 != file.layer_dims.len() {
        return Err(Error::MalformedCheckpoint(
            "layer count does not match layer_dims".into(),
        ));
    }
    let layers: Vec<Dense> = file
        .layers
        .into_iter()
        .zip(file.layer_dims.windows(2))
        .map(|(rec, d)| Dense {
            inputs: d[0],
            outputs: d[1],
            weights: rec.weights,
            biases: rec.biases,
        })
        .collect();
    if !layers.iter().all(Dense::is_consistent) {
        return Err(Error::MalformedCheckpoint(
            "parameter array sizes do not match layer_dims".into(),
        ));
    }
    if layers
        .iter()
        .any(|l| l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()))
        || !file.bias_scale_m.is_finite()
    {
        return Err(Error::MalformedCheckpoint("non-finite parameter".into()));
    }
    Ok(MlpModel {
        architecture,
        layers,
        hidden_activations: file.hidden_activations,
        output_activations: file.output_activations,
        feature_scaling: file.feature_scaling,
        bias_scale: file.bias_scale_m,
    })
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}
