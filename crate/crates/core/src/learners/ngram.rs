//! TF-IDF over word 1–2-grams and character 2–4-grams of raw text, scored
//! by an L2-regularized logistic regression.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::{balanced_weights, BinaryClassifier, Input};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NgramParams {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    /// Stop once the epoch objective changes by less than this (relative).
    pub tol: f64,
    pub min_df: usize,
    pub word_ngrams: (usize, usize),
    pub char_ngrams: (usize, usize),
    /// Weight the loss with balanced class weights.
    pub balanced: bool,
}

impl Default for NgramParams {
    fn default() -> Self {
        NgramParams {
            epochs: 30,
            lr: 0.5,
            l2: 1e-5,
            tol: 1e-5,
            min_df: 1,
            word_ngrams: (1, 2),
            char_ngrams: (2, 4),
            balanced: true,
        }
    }
}

impl NgramParams {
    pub fn validate(&self) -> Result<()> {
        let ok_range = |(lo, hi): (usize, usize)| lo <= hi;
        let negative = |v: f64| v.is_nan() || v < 0.0;
        if self.epochs == 0
            || negative(self.lr)
            || self.lr == 0.0
            || negative(self.l2)
            || negative(self.tol)
            || self.min_df == 0
        {
            return Err(Error::Config(
                "ngram: epochs, lr, min_df must be positive; l2, tol non-negative".into(),
            ));
        }
        if !ok_range(self.word_ngrams) || !ok_range(self.char_ngrams) {
            return Err(Error::Config(
                "ngram: n-gram ranges must satisfy lo <= hi".into(),
            ));
        }
        Ok(())
    }
}

/// Sparse vector as `(index, value)` pairs sorted by index.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VectorizerRepr", into = "VectorizerRepr")]
pub struct TfidfVectorizer {
    pub word_ngrams: (usize, usize),
    pub char_ngrams: (usize, usize),
    /// Sorted term list; `w:` word n-grams, `c:` character n-grams.
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VectorizerRepr {
    word_ngrams: (usize, usize),
    char_ngrams: (usize, usize),
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl From<VectorizerRepr> for TfidfVectorizer {
    fn from(r: VectorizerRepr) -> Self {
        let mut v = TfidfVectorizer {
            word_ngrams: r.word_ngrams,
            char_ngrams: r.char_ngrams,
            terms: r.terms,
            idf: r.idf,
            index: HashMap::new(),
        };
        v.rebuild_index();
        v
    }
}

impl From<TfidfVectorizer> for VectorizerRepr {
    fn from(v: TfidfVectorizer) -> Self {
        VectorizerRepr {
            word_ngrams: v.word_ngrams,
            char_ngrams: v.char_ngrams,
            terms: v.terms,
            idf: v.idf,
        }
    }
}

impl PartialEq for TfidfVectorizer {
    fn eq(&self, other: &Self) -> bool {
        self.word_ngrams == other.word_ngrams
            && self.char_ngrams == other.char_ngrams
            && self.terms == other.terms
            && self.idf == other.idf
    }
}

impl TfidfVectorizer {
    /// Raw text is only NFC-normalized and lowercased before n-gramming.
    pub fn extract_terms(&self, text: &str) -> Vec<String> {
        extract_terms(text, self.word_ngrams, self.char_ngrams)
    }

    pub fn fit(texts: &[&str], params: &NgramParams) -> Result<Self> {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            let mut terms = extract_terms(text, params.word_ngrams, params.char_ngrams);
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = texts.len() as f64;
        let (terms, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .filter(|(_, c)| *c >= params.min_df)
            .map(|(t, c)| (t, ((n + 1.0) / (c as f64 + 1.0)).ln() + 1.0))
            .unzip();
        if terms.is_empty() {
            return Err(Error::Data("n-gram vocabulary is empty".into()));
        }
        let mut v = TfidfVectorizer {
            word_ngrams: params.word_ngrams,
            char_ngrams: params.char_ngrams,
            terms,
            idf,
            index: HashMap::new(),
        };
        v.rebuild_index();
        Ok(v)
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `tf * idf`, L2-normalized. Unknown terms are ignored.
    pub fn transform(&self, text: &str) -> SparseVec {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for t in self.extract_terms(text) {
            if let Some(&i) = self.index.get(&t) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut v: SparseVec = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i as usize]))
            .collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        v
    }
}

fn extract_terms(text: &str, words: (usize, usize), chars: (usize, usize)) -> Vec<String> {
    let lowered: String = text.nfc().flat_map(char::to_lowercase).collect();
    let tokens: Vec<&str> = lowered.split_whitespace().collect();
    let mut out = Vec::new();
    for n in words.0.max(1)..=words.1 {
        for w in tokens.windows(n) {
            out.push(format!("w:{}", w.join(" ")));
        }
    }
    for tok in &tokens {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(tok.chars())
            .chain(std::iter::once(' '))
            .collect();
        for n in chars.0.max(1)..=chars.1 {
            for g in padded.windows(n) {
                out.push(format!("c:{}", g.iter().collect::<String>()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramLinearModel {
    pub vectorizer: TfidfVectorizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl NgramLinearModel {
    pub fn decision(&self, x: &[(u32, f64)]) -> f64 {
        self.bias
            + x.iter()
                .map(|&(i, v)| self.weights[i as usize] * v)
                .sum::<f64>()
    }
}

impl BinaryClassifier for NgramLinearModel {
    fn score(&self, input: &Input<'_>) -> Result<f64> {
        Ok(self.decision(&self.vectorizer.transform(input.text)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramFit {
    pub model: NgramLinearModel,
    pub epochs_run: usize,
    /// Regularized objective after each epoch.
    pub objective: Vec<f64>,
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic regression by seeded SGD over pre-vectorized samples.
pub(crate) fn fit_logistic(
    xs: &[SparseVec],
    y: &[bool],
    dim: usize,
    params: &NgramParams,
    seed: u64,
) -> Result<(Vec<f64>, f64, usize, Vec<f64>)> {
    let (w0, w1) = if params.balanced {
        balanced_weights(y)?
    } else {
        (1.0, 1.0)
    };
    let n = xs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // weights are stored as scale * v so that L2 decay is O(1) per step
    let mut v = vec![0.0f64; dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut objective = Vec::new();
    let mut epochs_run = 0;
    let mut prev = f64::INFINITY;
    for epoch in 0..params.epochs {
        let lr = params.lr / (1.0 + epoch as f64).sqrt();
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &xs[i];
            let z = bias + scale * x.iter().map(|&(j, val)| v[j as usize] * val).sum::<f64>();
            let p = super::squash(z);
            let target = if y[i] { 1.0 } else { 0.0 };
            let cw = if y[i] { w1 } else { w0 };
            let g = (p - target) * cw;
            scale *= 1.0 - lr * params.l2;
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
            for &(j, val) in x {
                v[j as usize] -= lr * g * val / scale;
            }
            bias -= lr * g;
        }
        epochs_run = epoch + 1;
        let wsq: f64 = v.iter().map(|w| w * w).sum::<f64>() * scale * scale;
        let loss: f64 = xs
            .iter()
            .zip(y)
            .map(|(x, &yi)| {
                let z = bias + scale * x.iter().map(|&(j, val)| v[j as usize] * val).sum::<f64>();
                let cw = if yi { w1 } else { w0 };
                cw * if yi { log1p_exp(-z) } else { log1p_exp(z) }
            })
            .sum::<f64>()
            / n as f64
            + 0.5 * params.l2 * wsq;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("n-gram objective became {loss}")));
        }
        objective.push(loss);
        if prev.is_finite() && (prev - loss).abs() <= params.tol * prev.abs().max(1.0) {
            break;
        }
        prev = loss;
    }
    let weights = v.into_iter().map(|w| w * scale).collect();
    Ok((weights, bias, epochs_run, objective))
}

pub fn train_ngram_linear(
    texts: &[&str],
    y: &[bool],
    params: &NgramParams,
    seed: u64,
) -> Result<NgramFit> {
    params.validate()?;
    if texts.is_empty() {
        return Err(Error::Data("n-gram model needs a non-empty corpus".into()));
    }
    if texts.len() != y.len() {
        return Err(Error::Data(format!(
            "{} texts but {} labels",
            texts.len(),
            y.len()
        )));
    }
    let vectorizer = TfidfVectorizer::fit(texts, params)?;
    let xs: Vec<SparseVec> = texts.iter().map(|t| vectorizer.transform(t)).collect();
    let (weights, bias, epochs_run, objective) =
        fit_logistic(&xs, y, vectorizer.len(), params, seed)?;
    Ok(NgramFit {
        model: NgramLinearModel {
            vectorizer,
            weights,
            bias,
        },
        epochs_run,
        objective,
    })
}
