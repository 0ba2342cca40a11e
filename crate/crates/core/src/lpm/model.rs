use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LpmTrainConfig;
use crate::error::{Error, Result};
use crate::numeric::{Activation, DenseLayer, Rng};
use crate::space::Encoding;

pub const MODEL_VERSION: u32 = 1;

/// Widths of the hidden layers followed by the output width.
pub const HIDDEN_DIMS: [usize; 4] = [112, 256, 64, 1];

/// Min-max target scaler fitted on training latencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min_ms: f64,
    pub max_ms: f64,
}

impl Scaler {
    pub fn new(min_ms: f64, max_ms: f64) -> Result<Self> {
        if !(min_ms.is_finite() && max_ms.is_finite() && max_ms > min_ms) {
            return Err(Error::DegenerateScaler(min_ms));
        }
        Ok(Self { min_ms, max_ms })
    }

    pub fn fit(latencies: &[f64]) -> Result<Self> {
        let min = latencies.iter().copied().fold(f64::INFINITY, f64::min);
        let max = latencies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if latencies.is_empty() {
            return Err(Error::Empty("training latencies"));
        }
        Self::new(min, max)
    }

    pub fn span(&self) -> f64 {
        self.max_ms - self.min_ms
    }

    pub fn normalize(&self, ms: f64) -> f64 {
        (ms - self.min_ms) / self.span()
    }

    pub fn denormalize(&self, out: f64) -> f64 {
        self.min_ms + out * self.span()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lpm {
    layers: Vec<DenseLayer>,
    scaler: Scaler,
    train_config: Option<LpmTrainConfig>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    dims: Vec<usize>,
    hidden_activation: Activation,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    scaler: Scaler,
    train_config: Option<LpmTrainConfig>,
}

fn dims_for(input_dim: usize) -> Vec<usize> {
    std::iter::once(input_dim).chain(HIDDEN_DIMS).collect()
}

fn activation_for(layer: usize) -> Activation {
    if layer + 1 == HIDDEN_DIMS.len() {
        Activation::Identity
    } else {
        Activation::Sigmoid
    }
}

impl Lpm {
    /// Glorot-initialized network.
    pub fn new(input_dim: usize, scaler: Scaler, rng: &mut Rng) -> Self {
        let dims = dims_for(input_dim);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| DenseLayer::new(w[0], w[1], activation_for(i), rng))
            .collect();
        Self {
            layers,
            scaler,
            train_config: None,
        }
    }

    /// All weights and biases zero.
    pub fn zeros(input_dim: usize, scaler: Scaler) -> Self {
        let dims = dims_for(input_dim);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| DenseLayer::zeros(w[0], w[1], activation_for(i)))
            .collect();
        Self {
            layers,
            scaler,
            train_config: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        dims_for(self.input_dim())
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn set_scaler(&mut self, scaler: Scaler) {
        self.scaler = scaler;
    }

    pub fn train_config(&self) -> Option<&LpmTrainConfig> {
        self.train_config.as_ref()
    }

    pub(crate) fn set_train_config(&mut self, cfg: LpmTrainConfig) {
        self.train_config = Some(cfg);
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "LPM input",
                expected: self.input_dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// Layer outputs for one input; the last entry holds the normalized prediction.
    fn activations(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(input.len())?;
        if let Some(i) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("LPM input {i}")));
        }
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = acts.last().map(Vec::as_slice).unwrap_or(input);
            let y = layer.forward(x)?;
            acts.push(y);
        }
        Ok(acts)
    }

    pub fn predict(&self, enc: &Encoding) -> Result<f64> {
        self.predict_vec(&enc.to_f64())
    }

    pub fn predict_vec(&self, input: &[f64]) -> Result<f64> {
        let acts = self.activations(input)?;
        Ok(self.scaler.denormalize(acts[acts.len() - 1][0]))
    }

    /// Prediction in ms and its exact gradient with respect to a real-valued input.
    pub fn predict_with_grad(&self, input: &[f64]) -> Result<(f64, Vec<f64>)> {
        let acts = self.activations(input)?;
        let mut grad = vec![self.scaler.span()];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let y = &acts[i];
            let act = layer.activation();
            let delta: Vec<f64> = grad
                .iter()
                .zip(y)
                .map(|(g, &y)| g * act.derivative_from_output(y))
                .collect();
            let n_in = layer.in_dim();
            let mut next = vec![0.0; n_in];
            for (row, d) in layer.weights().chunks_exact(n_in).zip(&delta) {
                for (n, w) in next.iter_mut().zip(row) {
                    *n += d * w;
                }
            }
            grad = next;
        }
        let out = acts[acts.len() - 1][0];
        Ok((self.scaler.denormalize(out), grad))
    }

    /// Predictions in ms for row-major `(n, input_dim)` inputs.
    pub fn predict_batch(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        let width = self.input_dim();
        if !inputs.len().is_multiple_of(width) {
            return Err(Error::DimensionMismatch {
                context: "LPM batch input",
                expected: width,
                found: inputs.len() % width,
            });
        }
        let n = inputs.len() / width;
        let mut out = Vec::with_capacity(n);
        const CHUNK: usize = 1024;
        for chunk in inputs.chunks(CHUNK * width) {
            let rows = chunk.len() / width;
            let mut x = chunk.to_vec();
            for layer in &self.layers {
                x = layer.forward_batch(&x, rows);
            }
            out.extend(x.into_iter().map(|v| self.scaler.denormalize(v)));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_VERSION,
            dims: self.dims(),
            hidden_activation: Activation::Sigmoid,
            weights: self.layers.iter().map(|l| l.weights().to_vec()).collect(),
            biases: self.layers.iter().map(|l| l.biases().to_vec()).collect(),
            scaler: self.scaler,
            train_config: self.train_config.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("corrupt model file: {e}")))?;
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        if file.hidden_activation != Activation::Sigmoid {
            return Err(Error::Model("hidden activation must be sigmoid".into()));
        }
        if file.dims.len() != HIDDEN_DIMS.len() + 1
            || file.dims[1..] != HIDDEN_DIMS
            || file.dims[0] == 0
        {
            return Err(Error::Model(format!(
                "layer dims {:?} do not match [input, 112, 256, 64, 1]",
                file.dims
            )));
        }
        if file.weights.len() != HIDDEN_DIMS.len() || file.biases.len() != HIDDEN_DIMS.len() {
            return Err(Error::Model(format!(
                "expected {} weight and bias blocks, found {} and {}",
                HIDDEN_DIMS.len(),
                file.weights.len(),
                file.biases.len()
            )));
        }
        let scaler = Scaler::new(file.scaler.min_ms, file.scaler.max_ms)?;
        let layers = file
            .dims
            .windows(2)
            .zip(file.weights.into_iter().zip(file.biases))
            .enumerate()
            .map(|(i, (w, (weights, biases)))| {
                DenseLayer::from_parts(w[0], w[1], weights, biases, activation_for(i))
                    .map_err(|e| Error::Model(format!("layer {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layers,
            scaler,
            train_config: file.train_config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
