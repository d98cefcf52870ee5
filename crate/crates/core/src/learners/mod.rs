//! Trainable binary scorers behind one interface.
//!
//! Every backend produces a real-valued margin. `predict` thresholds the
//! margin at zero and `prob` maps it into [0, 1] so that
//! `predict(x) == (prob(x) >= 0.5) == (score(x) >= 0)` holds exactly.

mod external;
mod mlp;
mod ngram;
mod svm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use external::{load_external_scores, parse_external_scores, ExternalScores};
pub use mlp::{train_mlp, MlpFit, MlpGrad, MlpModel, MlpParams};
pub(crate) use ngram::fit_logistic;
pub use ngram::{
    train_ngram_linear, NgramFit, NgramLinearModel, NgramParams, SparseVec, TfidfVectorizer,
};
pub use svm::{
    gamma_scale, train_svm, ClassWeight, Gamma, Kernel, KernelKind, SvmFit, SvmModel, SvmParams,
};

/// What a classifier may look at for one post.
#[derive(Debug, Clone, Copy)]
pub struct Input<'a> {
    pub id: &'a str,
    pub text: &'a str,
    pub features: Option<&'a [f64]>,
}

impl<'a> Input<'a> {
    pub fn features(x: &'a [f64]) -> Self {
        Input {
            id: "",
            text: "",
            features: Some(x),
        }
    }

    pub fn text(text: &'a str) -> Self {
        Input {
            id: "",
            text,
            features: None,
        }
    }

    pub(crate) fn require_features(&self) -> Result<&'a [f64]> {
        self.features
            .ok_or_else(|| Error::row(self.id, "classifier needs a feature vector"))
    }
}

pub trait BinaryClassifier {
    fn score(&self, input: &Input<'_>) -> Result<f64>;

    fn prob(&self, input: &Input<'_>) -> Result<f64> {
        Ok(squash(self.score(input)?))
    }

    fn predict(&self, input: &Input<'_>) -> Result<bool> {
        Ok(self.score(input)? >= 0.0)
    }
}

// largest f64 below 0.5
const BELOW_HALF: f64 = f64::from_bits(0x3FDF_FFFF_FFFF_FFFF);

/// Logistic function, nudged so that negative scores never round up to 0.5.
pub fn squash(score: f64) -> f64 {
    if score >= 0.0 {
        1.0 / (1.0 + (-score).exp())
    } else {
        let e = score.exp();
        (e / (1.0 + e)).min(BELOW_HALF)
    }
}

/// `w_c = N / (2 N_c)` for labels coded false = 0, true = 1.
/// Returns `(w0, w1)`.
pub fn balanced_weights(labels: &[bool]) -> Result<(f64, f64)> {
    let n = labels.len() as f64;
    let n1 = labels.iter().filter(|&&y| y).count() as f64;
    let n0 = n - n1;
    if n0 == 0.0 || n1 == 0.0 {
        return Err(Error::Data(
            "balanced class weights need both classes present".into(),
        ));
    }
    Ok((n / (2.0 * n0), n / (2.0 * n1)))
}

/// Hyperparameters for every trainer. All randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub svm: SvmParams,
    pub mlp: MlpParams,
    pub ngram: NgramParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 42,
            svm: SvmParams::default(),
            mlp: MlpParams::default(),
            ngram: NgramParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.svm.validate()?;
        self.mlp.validate()?;
        self.ngram.validate()
    }
}

pub(crate) fn check_finite(x: &[Vec<f64>]) -> Result<()> {
    for (i, row) in x.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite feature at sample {i}, column {j}"
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_shape(x: &[Vec<f64>], y: &[bool]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Data(format!(
            "{} samples but {} labels",
            x.len(),
            y.len()
        )));
    }
    let d = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Data("ragged feature matrix".into()));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn balanced_examples() {
        let (w0, w1) = balanced_weights(&[true, true, true, false]).unwrap();
        assert_eq!(w0, 2.0);
        assert!((w1 - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(balanced_weights(&[true, false]).unwrap(), (1.0, 1.0));
        let mut y = vec![true; 376];
        y.extend(vec![false; 435]);
        let (w0, w1) = balanced_weights(&y).unwrap();
        assert_eq!(w1, 811.0 / 752.0);
        assert_eq!(w0, 811.0 / 870.0);
        assert!((w1 - 1.0785).abs() < 1e-4 && (w0 - 0.9322).abs() < 1e-4);
        assert!(balanced_weights(&[true, true]).is_err());
    }

    #[test]
    fn squash_midpoint() {
        assert_eq!(squash(0.0), 0.5);
        assert!(squash(-1e-300) < 0.5);
        assert!(squash(1e-300) >= 0.5);
        assert_eq!(squash(800.0), 1.0);
        assert_eq!(squash(-800.0), 0.0);
    }

    proptest! {
        #[test]
        fn squash_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(squash(lo) <= squash(hi));
            prop_assert_eq!(squash(a) >= 0.5, a >= 0.0);
        }
    }
}
