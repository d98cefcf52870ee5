//! Two-layer fully connected network with a softmax output over two
//! classes, trained by seeded mini-batch SGD on cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{balanced_weights, check_finite, check_shape, squash, BinaryClassifier, Input};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Classical momentum coefficient; 0 is plain SGD.
    pub momentum: f64,
    /// Weight the loss with balanced class weights.
    pub class_weighted: bool,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 64,
            epochs: 10,
            lr: 1e-3,
            batch_size: 4,
            momentum: 0.0,
            class_weighted: false,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0
            || self.epochs == 0
            || self.batch_size == 0
            || self.lr.is_nan()
            || self.lr <= 0.0
        {
            return Err(Error::Config(
                "mlp: hidden, epochs, batch_size and lr must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("mlp: momentum must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Parameters: `w1` is hidden x input (row-major), `w2` is 2 x hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: [f64; 2],
}

/// Gradient with the same layout as [`MlpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: [f64; 2],
}

impl MlpGrad {
    fn zeros(m: &MlpModel) -> Self {
        MlpGrad {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.b1.len()],
            w2: vec![0.0; m.w2.len()],
            b2: [0.0; 2],
        }
    }

    /// Flattened in the order w1, b1, w2, b2.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + 2);
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.extend(self.b2);
        v
    }
}

fn log_softmax(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

impl MlpModel {
    /// Uniform init in `±1/sqrt(fan_in)` for every layer.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut uniform = |fan_in: usize, n: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let w1 = uniform(input_dim, hidden * input_dim);
        let b1 = uniform(input_dim, hidden);
        let w2 = uniform(hidden, 2 * hidden);
        let b2v = uniform(hidden, 2);
        MlpModel {
            input_dim,
            hidden,
            w1,
            b1,
            w2,
            b2: [b2v[0], b2v[1]],
        }
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.input_dim..(h + 1) * self.input_dim];
                self.b1[h] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    pub fn logits(&self, x: &[f64]) -> [f64; 2] {
        let a: Vec<f64> = self.hidden_pre(x).into_iter().map(|z| z.max(0.0)).collect();
        let out = |k: usize| {
            self.b2[k]
                + self.w2[k * self.hidden..(k + 1) * self.hidden]
                    .iter()
                    .zip(&a)
                    .map(|(w, a)| w * a)
                    .sum::<f64>()
        };
        [out(0), out(1)]
    }

    pub fn softmax(&self, x: &[f64]) -> [f64; 2] {
        let ls = log_softmax(self.logits(x));
        [ls[0].exp(), ls[1].exp()]
    }

    /// Weighted mean cross-entropy over the batch and its gradient.
    /// `sample_weights` default to 1; the mean divides by their sum.
    pub fn loss_and_grad(
        &self,
        xs: &[&[f64]],
        ys: &[bool],
        sample_weights: Option<&[f64]>,
    ) -> (f64, MlpGrad) {
        let mut grad = MlpGrad::zeros(self);
        let total: f64 = match sample_weights {
            Some(w) => w.iter().sum(),
            None => xs.len() as f64,
        };
        let mut loss = 0.0;
        for (n, (x, &y)) in xs.iter().zip(ys).enumerate() {
            let w = sample_weights.map_or(1.0, |s| s[n]) / total;
            let z1 = self.hidden_pre(x);
            let a1: Vec<f64> = z1.iter().map(|z| z.max(0.0)).collect();
            let mut z2 = self.b2;
            for (k, z) in z2.iter_mut().enumerate() {
                *z += self.w2[k * self.hidden..(k + 1) * self.hidden]
                    .iter()
                    .zip(&a1)
                    .map(|(w, a)| w * a)
                    .sum::<f64>();
            }
            let ls = log_softmax(z2);
            let target = usize::from(y);
            loss -= w * ls[target];
            let mut dz2 = [ls[0].exp(), ls[1].exp()];
            dz2[target] -= 1.0;
            dz2.iter_mut().for_each(|d| *d *= w);
            let mut da1 = vec![0.0; self.hidden];
            for (k, &d) in dz2.iter().enumerate() {
                grad.b2[k] += d;
                let row = k * self.hidden;
                for h in 0..self.hidden {
                    grad.w2[row + h] += d * a1[h];
                    da1[h] += self.w2[row + h] * d;
                }
            }
            for h in 0..self.hidden {
                if z1[h] <= 0.0 {
                    continue;
                }
                let dz = da1[h];
                grad.b1[h] += dz;
                let row = &mut grad.w1[h * self.input_dim..(h + 1) * self.input_dim];
                row.iter_mut().zip(x.iter()).for_each(|(g, x)| *g += dz * x);
            }
        }
        (loss, grad)
    }

    /// Flattened in the order w1, b1, w2, b2.
    pub fn to_flat(&self) -> Vec<f64> {
        MlpGrad {
            w1: self.w1.clone(),
            b1: self.b1.clone(),
            w2: self.w2.clone(),
            b2: self.b2,
        }
        .to_flat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let (a, rest) = flat.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
    }

    fn step(&mut self, grad: &MlpGrad, velocity: &mut [f64], lr: f64, momentum: f64) {
        let g = grad.to_flat();
        let mut p = self.to_flat();
        for ((p, v), g) in p.iter_mut().zip(velocity.iter_mut()).zip(&g) {
            *v = momentum * *v - lr * g;
            *p += *v;
        }
        self.set_flat(&p);
    }

    fn full_loss(&self, x: &[Vec<f64>], y: &[bool], weights: Option<&[f64]>) -> f64 {
        let xs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        self.loss_and_grad(&xs, y, weights).0
    }
}

impl BinaryClassifier for MlpModel {
    /// Logit difference `z1 - z0`; its logistic equals softmax class 1.
    fn score(&self, input: &Input<'_>) -> Result<f64> {
        let x = input.require_features()?;
        if x.len() != self.input_dim {
            return Err(Error::Data(format!(
                "mlp expects {} features, got {}",
                self.input_dim,
                x.len()
            )));
        }
        let z = self.logits(x);
        Ok(z[1] - z[0])
    }

    fn prob(&self, input: &Input<'_>) -> Result<f64> {
        Ok(squash(self.score(input)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpFit {
    pub model: MlpModel,
    /// Full-data training loss before training, then after every epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train_mlp(x: &[Vec<f64>], y: &[bool], params: &MlpParams, seed: u64) -> Result<MlpFit> {
    params.validate()?;
    let d = check_shape(x, y)?;
    check_finite(x)?;
    if x.is_empty() || d == 0 {
        return Err(Error::Data(
            "mlp needs at least one sample and one feature".into(),
        ));
    }
    let weights: Option<Vec<f64>> = if params.class_weighted {
        let (w0, w1) = balanced_weights(y)?;
        Some(y.iter().map(|&v| if v { w1 } else { w0 }).collect())
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = MlpModel::init(d, params.hidden, &mut rng);
    let mut velocity = vec![0.0; model.to_flat().len()];
    let initial = model.full_loss(x, y, weights.as_deref());
    let mut epoch_losses = vec![initial];
    let mut order: Vec<usize> = (0..x.len()).collect();
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| x[i].as_slice()).collect();
            let ys: Vec<bool> = batch.iter().map(|&i| y[i]).collect();
            let ws: Option<Vec<f64>> = weights
                .as_ref()
                .map(|w| batch.iter().map(|&i| w[i]).collect());
            let (loss, grad) = model.loss_and_grad(&xs, &ys, ws.as_deref());
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "mlp loss became {loss} in epoch {}",
                    epoch + 1
                )));
            }
            model.step(&grad, &mut velocity, params.lr, params.momentum);
        }
        let loss = model.full_loss(x, y, weights.as_deref());
        if !loss.is_finite() {
            return Err(Error::Numerical(format!(
                "mlp loss became {loss} after epoch {}",
                epoch + 1
            )));
        }
        epoch_losses.push(loss);
    }
    Ok(MlpFit {
        model,
        epoch_losses,
    })
}
