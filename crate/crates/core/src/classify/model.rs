//! One-hidden-layer binary classifier trained with weighted cross-entropy
//! and SGD with momentum.
//!
//! ```text
//! x' = (x - mean) / std
//! h  = tanh(W1 x' + b1)
//! z  = w2 . h + b2
//! p  = sigmoid(z)
//! L  = 1/B * sum_i [ c_pos * y_i * softplus(-z_i) + c_neg * (1 - y_i) * softplus(z_i) ]
//! ```
//!
//! Parameters live in one flat vector laid out as `[W1 (H x D, row-major), b1 (H), w2 (H), b2]`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureConfig;
use crate::error::{invalid, Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// A feature vector with its binary label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: bool,
}

/// Network shape plus class weights; owns no parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub input_dim: usize,
    pub hidden: usize,
    /// `[positive, negative]` loss weights.
    pub class_weights: [f64; 2],
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Mlp {
    pub fn n_params(&self) -> usize {
        self.hidden * self.input_dim + 2 * self.hidden + 1
    }

    fn split<'a>(&self, params: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], f64) {
        let (d, h) = (self.input_dim, self.hidden);
        let (w1, rest) = params.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        (w1, b1, w2, rest[0])
    }

    /// Hidden activations and logit for one (standardized) input.
    fn forward(&self, params: &[f64], x: &[f64], hidden: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split(params);
        let d = self.input_dim;
        let mut z = b2;
        for (j, hj) in hidden.iter_mut().enumerate() {
            let row = &w1[j * d..(j + 1) * d];
            let a: f64 = b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *hj = a.tanh();
            z += w2[j] * *hj;
        }
        z
    }

    pub fn logit(&self, params: &[f64], x: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.hidden];
        self.forward(params, x, &mut hidden)
    }

    fn sample_loss(&self, z: f64, label: bool) -> f64 {
        if label {
            self.class_weights[0] * softplus(-z)
        } else {
            self.class_weights[1] * softplus(z)
        }
    }

    /// Mean weighted loss over `batch` (inputs already standardized).
    pub fn loss(&self, params: &[f64], batch: &[(&[f64], bool)]) -> f64 {
        let mut hidden = vec![0.0; self.hidden];
        let total: f64 = batch
            .iter()
            .map(|(x, y)| {
                let z = self.forward(params, x, &mut hidden);
                self.sample_loss(z, *y)
            })
            .sum();
        total / batch.len().max(1) as f64
    }

    /// Mean loss and its analytic gradient with respect to `params`.
    pub fn loss_and_grad(&self, params: &[f64], batch: &[(&[f64], bool)]) -> (f64, Vec<f64>) {
        let (d, h) = (self.input_dim, self.hidden);
        let (_, _, w2, _) = self.split(params);
        let mut grad = vec![0.0; params.len()];
        let mut hidden = vec![0.0; h];
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut total = 0.0;
        for (x, y) in batch {
            let z = self.forward(params, x, &mut hidden);
            total += self.sample_loss(z, *y);
            let p = sigmoid(z);
            let dz = scale
                * if *y {
                    -self.class_weights[0] * (1.0 - p)
                } else {
                    self.class_weights[1] * p
                };
            let (gw1, rest) = grad.split_at_mut(h * d);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(h);
            gb2[0] += dz;
            for j in 0..h {
                gw2[j] += dz * hidden[j];
                let da = dz * w2[j] * (1.0 - hidden[j] * hidden[j]);
                gb1[j] += da;
                for (g, v) in gw1[j * d..(j + 1) * d].iter_mut().zip(x.iter()) {
                    *g += da * v;
                }
            }
        }
        (total * scale, grad)
    }

    /// Uniform Glorot initialisation of the weights, zero biases.
    pub fn init_params(&self, rng: &mut impl Rng) -> Vec<f64> {
        let (d, h) = (self.input_dim, self.hidden);
        let mut params = vec![0.0; self.n_params()];
        let a1 = (6.0 / (d + h) as f64).sqrt();
        let a2 = (6.0 / (h + 1) as f64).sqrt();
        for w in &mut params[..h * d] {
            *w = rng.random_range(-a1..a1);
        }
        for w in &mut params[h * d + h..h * d + 2 * h] {
            *w = rng.random_range(-a2..a2);
        }
        params
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden: usize,
    /// `[positive, negative]`; `None` weights classes by inverse frequency.
    pub class_weights: Option<[f64; 2]>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            momentum: 0.9,
            batch_size: 128,
            epochs: 100,
            hidden: 32,
            class_weights: None,
            seed: 0,
        }
    }
}

/// A trained classifier with its input standardization and the feature
/// configuration it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub version: u32,
    pub net: Mlp,
    pub params: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub features: FeatureConfig,
    /// Loss of the returned checkpoint (validation loss when available).
    pub loss: f64,
}

impl Model {
    pub fn input_dim(&self) -> usize {
        self.net.input_dim
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        standardize(x, &self.feature_mean, &self.feature_std)
    }

    /// Positive-class probability.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.net.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.net.input_dim,
                actual: x.len(),
            });
        }
        Ok(sigmoid(self.net.logit(&self.params, &self.standardize(x))))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Model = serde_json::from_str(text)?;
        if m.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!("unsupported checkpoint version {}", m.version)));
        }
        let d = m.net.input_dim;
        if m.params.len() != m.net.n_params() || m.feature_mean.len() != d || m.feature_std.len() != d {
            return Err(Error::Schema(
                "checkpoint arrays do not match declared dimensions".into(),
            ));
        }
        if m.params
            .iter()
            .chain(&m.feature_mean)
            .chain(&m.feature_std)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Schema("checkpoint contains non-finite values".into()));
        }
        Ok(m)
    }
}

fn standardize(x: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    x.iter().zip(mean).zip(std).map(|((v, m), s)| (v - m) / s).collect()
}

fn fit_standardization(samples: &[LabeledSample], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(&s.features) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for s in samples {
        for ((acc, v), m) in var.iter_mut().zip(&s.features).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

fn check_samples(samples: &[LabeledSample], d: usize) -> Result<()> {
    for s in samples {
        if s.features.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.features.len(),
            });
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite feature value"));
        }
    }
    Ok(())
}

/// Trains the classifier. With a validation set the epoch checkpoint with
/// the lowest validation loss is returned, otherwise the final epoch.
pub fn train(
    samples: &[LabeledSample],
    validation: Option<&[LabeledSample]>,
    features: FeatureConfig,
    cfg: &TrainConfig,
) -> Result<Model> {
    let d = samples.first().map(|s| s.features.len()).ok_or(Error::SingleClass)?;
    check_samples(samples, d)?;
    if let Some(v) = validation {
        check_samples(v, d)?;
    }
    let n_pos = samples.iter().filter(|s| s.label).count();
    let n_neg = samples.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    if cfg.batch_size == 0 || cfg.hidden == 0 || !(cfg.learning_rate > 0.0) || !(0.0..1.0).contains(&cfg.momentum) {
        return Err(invalid("invalid training hyper-parameters"));
    }
    let class_weights = cfg.class_weights.unwrap_or_else(|| {
        let n = samples.len() as f64;
        [n / (2.0 * n_pos as f64), n / (2.0 * n_neg as f64)]
    });
    let net = Mlp {
        input_dim: d,
        hidden: cfg.hidden,
        class_weights,
    };
    let (mean, std) = fit_standardization(samples, d);
    let train_x: Vec<Vec<f64>> = samples.iter().map(|s| standardize(&s.features, &mean, &std)).collect();
    let val_x: Option<Vec<(Vec<f64>, bool)>> = validation.map(|v| {
        v.iter()
            .map(|s| (standardize(&s.features, &mean, &std), s.label))
            .collect()
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = net.init_params(&mut rng);
    let mut velocity = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut last_loss = f64::NAN;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[f64], bool)> = chunk
                .iter()
                .map(|&i| (train_x[i].as_slice(), samples[i].label))
                .collect();
            let (_, grad) = net.loss_and_grad(&params, &batch);
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
        }
        if let Some(val) = &val_x {
            let batch: Vec<(&[f64], bool)> = val.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
            let loss = net.loss(&params, &batch);
            if best.as_ref().is_none_or(|(b, _)| loss < *b) {
                best = Some((loss, params.clone()));
            }
        }
    }
    if best.is_none() {
        let batch: Vec<(&[f64], bool)> = train_x
            .iter()
            .zip(samples)
            .map(|(x, s)| (x.as_slice(), s.label))
            .collect();
        last_loss = net.loss(&params, &batch);
    }
    let (loss, params) = best.unwrap_or((last_loss, params));
    Ok(Model {
        version: CHECKPOINT_VERSION,
        net,
        params,
        feature_mean: mean,
        feature_std: std,
        features,
        loss,
    })
}
