//! The scoring network: a small fully connected ReLU MLP with a scalar
//! output, shared across all offline items.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{FEATURE_DIM, FEATURE_SPEC_VERSION};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Default layer widths: 14 inputs, three hidden layers of 100, one output.
pub const DEFAULT_DIMS: [usize; 5] = [FEATURE_DIM, 100, 100, 100, 1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Network parameters. `weights[l]` is row-major `dims[l+1] x dims[l]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub feature_spec_version: String,
    pub dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
}

/// Same shape as the parameters; used for gradients and updates.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrad {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl ParamGrad {
    pub fn zeros_like(params: &PolicyParams) -> Self {
        ParamGrad {
            weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &ParamGrad, scale: f64) {
        let pairs = self
            .weights
            .iter_mut()
            .zip(&other.weights)
            .chain(self.biases.iter_mut().zip(&other.biases));
        for (dst, src) in pairs {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.weights, &self.biases)
    }
}

fn flatten(weights: &[Vec<f64>], biases: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for (w, b) in weights.iter().zip(biases) {
        out.extend_from_slice(w);
        out.extend_from_slice(b);
    }
    out
}

/// Per-layer activations recorded by a forward pass; `layers[0]` is the input.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    layers: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.layers.last().expect("non-empty cache")[0]
    }
}

impl PolicyParams {
    /// All-zero network of the given shape (h ≡ 0).
    pub fn zeros(dims: &[usize]) -> Self {
        let weights = dims.windows(2).map(|d| vec![0.0; d[0] * d[1]]).collect();
        let biases = dims[1..].iter().map(|&n| vec![0.0; n]).collect();
        PolicyParams {
            feature_spec_version: FEATURE_SPEC_VERSION.to_string(),
            dims: dims.to_vec(),
            weights,
            biases,
            activation: Activation::Relu,
        }
    }

    /// Weights uniform in `(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`,
    /// drawn layer by layer in row-major order; biases zero.
    pub fn init(dims: &[usize], rng: &mut SeededRng) -> Self {
        let mut p = Self::zeros(dims);
        for (l, w) in p.weights.iter_mut().enumerate() {
            let a = (6.0 / (dims[l] + dims[l + 1]) as f64).sqrt();
            for x in w.iter_mut() {
                *x = rng.uniform_in(-a, a);
            }
        }
        p
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::PolicyLoad(msg));
        if self.feature_spec_version != FEATURE_SPEC_VERSION {
            return bad(format!(
                "feature spec version '{}' does not match '{FEATURE_SPEC_VERSION}'",
                self.feature_spec_version
            ));
        }
        if self.dims.len() < 2 || self.dims[0] != FEATURE_DIM || *self.dims.last().unwrap() != 1 {
            return bad(format!(
                "dims {:?} must start at {FEATURE_DIM} and end at 1",
                self.dims
            ));
        }
        if self.weights.len() != self.dims.len() - 1 || self.biases.len() != self.dims.len() - 1 {
            return bad("layer count does not match dims".into());
        }
        for (l, d) in self.dims.windows(2).enumerate() {
            if self.weights[l].len() != d[0] * d[1] || self.biases[l].len() != d[1] {
                return bad(format!("layer {l} shape does not match dims"));
            }
        }
        if self.weights.iter().chain(&self.biases).flatten().any(|x| !x.is_finite()) {
            return bad("non-finite parameter".into());
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let params: PolicyParams =
            serde_json::from_str(&text).map_err(|e| Error::PolicyLoad(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.weights, &self.biases)
    }

    /// Inverse of [`flat`](Self::flat).
    pub fn set_flat(&mut self, values: &[f64]) {
        let mut it = values.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for x in w.iter_mut().chain(b.iter_mut()) {
                *x = it.next().expect("flat vector too short");
            }
        }
    }

    pub fn apply_update(&mut self, grad: &ParamGrad, step: f64) {
        let pairs = self
            .weights
            .iter_mut()
            .zip(&grad.weights)
            .chain(self.biases.iter_mut().zip(&grad.biases));
        for (dst, src) in pairs {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += step * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|x| x.is_finite())
    }

    /// Every parameter multiplied by −1.
    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        for x in p.weights.iter_mut().chain(p.biases.iter_mut()).flatten() {
            *x = -*x;
        }
        p
    }

    fn layer(&self, l: usize, input: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let n_in = self.dims[l];
        let w = &self.weights[l];
        out.clear();
        for (o, &b) in self.biases[l].iter().enumerate() {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut z = b;
            for (wi, xi) in row.iter().zip(input) {
                z += wi * xi;
            }
            if l + 1 < self.num_layers() {
                z = z.max(0.0);
            }
            if !z.is_finite() {
                return Err(Error::Numeric { layer: l });
            }
            out.push(z);
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for l in 0..self.num_layers() {
            self.layer(l, &cur, &mut next)?;
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur[0])
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        let mut layers = Vec::with_capacity(self.num_layers() + 1);
        layers.push(input.to_vec());
        for l in 0..self.num_layers() {
            let mut out = Vec::with_capacity(self.dims[l + 1]);
            self.layer(l, &layers[l], &mut out)?;
            layers.push(out);
        }
        Ok(ForwardCache { layers })
    }

    /// Accumulates `d_output * d(output)/d(theta)` into `grad`.
    pub fn backward(&self, cache: &ForwardCache, d_output: f64, grad: &mut ParamGrad) {
        let mut delta = vec![d_output];
        for l in (0..self.num_layers()).rev() {
            let n_in = self.dims[l];
            let input = &cache.layers[l];
            let gw = &mut grad.weights[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad.biases[l][o] += d;
                for (g, x) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.weights[l];
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, wi) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *p += d * wi;
                }
            }
            // ReLU gate on the hidden activation feeding this layer
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }
}
