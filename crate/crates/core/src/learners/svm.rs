//! Class-weighted C-SVM solved in the dual with SMO.
//!
//! The working pair is the maximal violating pair (first-order selection),
//! ties broken by the lowest sample index, so the solver path is fully
//! deterministic. Each sample's box is `0 <= alpha_i <= C * w_{y_i}`.

use serde::{Deserialize, Serialize};

use super::{balanced_weights, check_finite, check_shape, BinaryClassifier, Input};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    Named(GammaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaRule {
    Scale,
}

impl Gamma {
    pub const SCALE: Gamma = Gamma::Named(GammaRule::Scale);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    /// `N / (2 N_c)` per class.
    Balanced,
    Uniform,
    Explicit {
        negative: f64,
        positive: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelKind,
    pub gamma: Gamma,
    pub tol: f64,
    /// Iteration budget in multiples of the sample count.
    pub max_passes: usize,
    pub class_weight: ClassWeight,
    /// Kernel row cache budget in megabytes.
    pub cache_mb: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            kernel: KernelKind::Rbf,
            gamma: Gamma::SCALE,
            tol: 1e-3,
            max_passes: 100,
            class_weight: ClassWeight::Balanced,
            cache_mb: 256,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.c) || !positive(self.tol) || self.max_passes == 0 {
            return Err(Error::Config(
                "svm: c, tol and max_passes must be positive".into(),
            ));
        }
        if let Gamma::Value(g) = self.gamma {
            if !positive(g) {
                return Err(Error::Config("svm: gamma must be positive".into()));
            }
        }
        if let ClassWeight::Explicit {
            negative,
            positive: p,
        } = self.class_weight
        {
            if !positive(negative) || !positive(p) {
                return Err(Error::Config("svm: class weights must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Kernel with its parameter resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `1 / (d * var(X))` with the variance pooled over every entry.
pub fn gamma_scale(x: &[Vec<f64>]) -> Result<f64> {
    let d = x.first().map_or(0, Vec::len);
    let n = (x.len() * d) as f64;
    if n == 0.0 {
        return Err(Error::Data("gamma_scale: empty feature matrix".into()));
    }
    let mean = x.iter().flatten().sum::<f64>() / n;
    let var = x
        .iter()
        .flatten()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    if var.is_nan() || var <= 0.0 {
        return Err(Error::Data(
            "gamma_scale: feature matrix has zero variance".into(),
        ));
    }
    Ok(1.0 / (d as f64 * var))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    /// `(negative, positive)`.
    pub class_weights: (f64, f64),
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Collapsed primal weights, linear kernel only.
    pub weights: Option<Vec<f64>>,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        match &self.weights {
            Some(w) => dot(w, x) + self.bias,
            None => {
                self.support_vectors
                    .iter()
                    .zip(&self.dual_coef)
                    .map(|(sv, c)| c * self.kernel.eval(sv, x))
                    .sum::<f64>()
                    + self.bias
            }
        }
    }
}

impl BinaryClassifier for SvmModel {
    fn score(&self, input: &Input<'_>) -> Result<f64> {
        Ok(self.decision(input.require_features()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: SvmModel,
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation `m(alpha) - M(alpha)` at exit.
    pub final_violation: f64,
    /// Dual objective after every full pass (n iterations) and at exit.
    pub objective_trace: Vec<f64>,
    /// Dual variables for every training sample, in input order.
    pub alpha: Vec<f64>,
}

struct KernelRows<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    kernel: Kernel,
    rows: Vec<Option<Vec<f64>>>,
    order: std::collections::VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [f64], kernel: Kernel, cache_mb: usize) -> Self {
        let n = x.len();
        let per_row = (n * std::mem::size_of::<f64>()).max(1);
        let capacity = ((cache_mb << 20) / per_row).clamp(2, n.max(2));
        KernelRows {
            x,
            y,
            kernel,
            rows: vec![None; n],
            order: Default::default(),
            capacity,
        }
    }

    /// Row i of Q, `Q_ij = y_i y_j K(x_i, x_j)`.
    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows[i].is_none() {
            if self.order.len() >= self.capacity {
                let evict = self.order.pop_front().unwrap();
                self.rows[evict] = None;
            }
            let xi = &self.x[i];
            let yi = self.y[i];
            let row = self
                .x
                .iter()
                .zip(self.y)
                .map(|(xj, yj)| yi * yj * self.kernel.eval(xi, xj))
                .collect();
            self.rows[i] = Some(row);
            self.order.push_back(i);
        }
        self.rows[i].as_deref().unwrap()
    }
}

/// Train on features `x` with labels `y` (true = positive class).
pub fn train_svm(x: &[Vec<f64>], y: &[bool], params: &SvmParams) -> Result<SvmFit> {
    params.validate()?;
    let d = check_shape(x, y)?;
    check_finite(x)?;
    let n = x.len();
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::Data("svm needs samples of both classes".into()));
    }
    let (w_neg, w_pos) = match params.class_weight {
        ClassWeight::Balanced => balanced_weights(y)?,
        ClassWeight::Uniform => (1.0, 1.0),
        ClassWeight::Explicit { negative, positive } => (negative, positive),
    };
    let kernel = match params.kernel {
        KernelKind::Linear => Kernel::Linear,
        KernelKind::Rbf => Kernel::Rbf {
            gamma: match params.gamma {
                Gamma::Value(g) => g,
                Gamma::Named(GammaRule::Scale) => gamma_scale(x).unwrap_or_else(|_| {
                    log::warn!("svm: zero-variance features, falling back to gamma = 1/d");
                    1.0 / d.max(1) as f64
                }),
            },
        },
    };

    let ys: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { -1.0 }).collect();
    let upper: Vec<f64> = y
        .iter()
        .map(|&v| params.c * if v { w_pos } else { w_neg })
        .collect();
    let qd: Vec<f64> = x.iter().map(|xi| kernel.eval(xi, xi)).collect();
    let mut q = KernelRows::new(x, &ys, kernel, params.cache_mb);

    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        -0.5 * alpha
            .iter()
            .zip(grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    };
    let max_iter = params.max_passes.saturating_mul(n);
    let mut trace = vec![objective(&alpha, &grad)];
    let mut iterations = 0;
    let mut converged = false;
    let mut violation = f64::INFINITY;
    const TAU: f64 = 1e-12;

    while iterations < max_iter {
        let (mut i, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut g_min) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -ys[t] * grad[t];
            let in_up = if ys[t] > 0.0 {
                alpha[t] < upper[t]
            } else {
                alpha[t] > 0.0
            };
            let in_low = if ys[t] > 0.0 {
                alpha[t] > 0.0
            } else {
                alpha[t] < upper[t]
            };
            if in_up && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low && v < g_min {
                g_min = v;
                j = t;
            }
        }
        violation = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || violation < params.tol {
            converged = true;
            break;
        }

        let q_ij = q.row(i)[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ci, cj) = (upper[i], upper[j]);
        if ys[i] != ys[j] {
            let quad = (qd[i] + qd[j] + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        if di != 0.0 {
            let row_i = q.row(i);
            grad.iter_mut().zip(row_i).for_each(|(g, q)| *g += q * di);
        }
        if dj != 0.0 {
            let row_j = q.row(j);
            grad.iter_mut().zip(row_j).for_each(|(g, q)| *g += q * dj);
        }
        iterations += 1;
        if iterations % n == 0 {
            trace.push(objective(&alpha, &grad));
        }
    }
    if !converged {
        log::warn!(
            "svm: no convergence after {iterations} iterations (violation {violation:.3e} > tol {})",
            params.tol
        );
    }
    trace.push(objective(&alpha, &grad));

    let bias = -rho(&alpha, &grad, &ys, &upper);
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            dual_coef.push(alpha[t] * ys[t]);
        }
    }
    let weights = matches!(kernel, Kernel::Linear).then(|| {
        let mut w = vec![0.0; d];
        for (sv, c) in support_vectors.iter().zip(&dual_coef) {
            w.iter_mut().zip(sv).for_each(|(w, x)| *w += c * x);
        }
        w
    });
    Ok(SvmFit {
        model: SvmModel {
            kernel,
            c: params.c,
            class_weights: (w_neg, w_pos),
            support_vectors,
            dual_coef,
            bias,
            weights,
        },
        iterations,
        converged,
        final_violation: violation,
        objective_trace: trace,
        alpha,
    })
}

fn rho(alpha: &[f64], grad: &[f64], ys: &[f64], upper: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = ys[t] * grad[t];
        let at_upper = alpha[t] >= upper[t];
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
