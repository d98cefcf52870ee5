use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{slot_seed, training_labels, EnsembleConfig, SlotReport, TrainReport};
use crate::corpus_io::{Corpus, LabelSet};
use crate::error::{Error, Result};
use crate::learners::{fit_logistic, SparseVec, TfidfVectorizer};

/// One-vs-rest n-gram scorers over the label combinations seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPowersetModel {
    pub vectorizer: TfidfVectorizer,
    /// Sorted by tag string; ties in score go to the earlier entry.
    pub combinations: Vec<LabelSet>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl LabelPowersetModel {
    pub fn scores(&self, text: &str) -> Vec<f64> {
        let x = self.vectorizer.transform(text);
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| b + x.iter().map(|&(i, v)| w[i as usize] * v).sum::<f64>())
            .collect()
    }

    pub fn predict(&self, text: &str) -> LabelSet {
        let scores = self.scores(text);
        let mut best = 0;
        for (k, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = k;
            }
        }
        self.combinations[best]
    }
}

pub fn train_label_powerset(
    corpus: &Corpus,
    config: &EnsembleConfig,
) -> Result<(LabelPowersetModel, TrainReport)> {
    config.validate()?;
    let start = Instant::now();
    let labels = training_labels(corpus)?;
    let mut combinations: Vec<LabelSet> = labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    combinations.sort_by_key(|c| c.to_tags());
    let params = &config.train.ngram;
    let texts: Vec<&str> = corpus.posts.iter().map(|p| p.text.as_str()).collect();
    let vectorizer = TfidfVectorizer::fit(&texts, params)?;
    let xs: Vec<SparseVec> = texts.iter().map(|t| vectorizer.transform(t)).collect();
    let mut weights = Vec::with_capacity(combinations.len());
    let mut biases = Vec::with_capacity(combinations.len());
    for (k, combo) in combinations.iter().enumerate() {
        let y: Vec<bool> = labels.iter().map(|l| l == combo).collect();
        let (w, b, _, _) = fit_logistic(
            &xs,
            &y,
            vectorizer.len(),
            params,
            slot_seed(config.train.seed, k),
        )
        .map_err(|e| Error::training(format!("combination {combo}"), e.to_string()))?;
        weights.push(w);
        biases.push(b);
    }
    let report = SlotReport {
        slot: "label_powerset".into(),
        backend: "ngram".into(),
        samples: labels.len(),
        positives: combinations.len(),
        feature_dim: Some(vectorizer.len()),
        vocab_sizes: Default::default(),
        seconds: start.elapsed().as_secs_f64(),
    };
    let model = LabelPowersetModel {
        vectorizer,
        combinations,
        weights,
        biases,
    };
    Ok((
        model,
        TrainReport {
            classifiers: vec![report],
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::Post;

    fn corpus(rows: &[(&str, &str)]) -> Corpus {
        Corpus::new(
            rows.iter()
                .enumerate()
                .map(|(k, (text, tags))| {
                    Post::new(
                        format!("p{k}"),
                        *text,
                        Some(LabelSet::parse_tags(tags).unwrap()),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn classes_are_observed_combinations_only() {
        let c = corpus(&[
            ("झूठ खबर", "fake"),
            ("झूठ नफरत", "fake,hate"),
            ("झूठ अफवाह", "fake"),
            ("नफरत गाली बदनाम", "hate,offensive,defamation"),
            ("गाली बदनाम", "offensive,defamation"),
            ("अच्छा दिन", "non-hostile"),
            ("सुंदर मौसम", "non-hostile"),
        ]);
        let (m, _) = train_label_powerset(&c, &EnsembleConfig::default()).unwrap();
        assert_eq!(m.combinations.len(), 5);
        let tags: Vec<String> = m.combinations.iter().map(|c| c.to_tags()).collect();
        let mut sorted = tags.clone();
        sorted.sort();
        assert_eq!(tags, sorted);
        for text in ["झूठ", "कुछ नया", "", "गाली नफरत झूठ"]
        {
            assert!(m.combinations.contains(&m.predict(text)));
        }
    }

    #[test]
    fn equal_scores_pick_first_combination() {
        let c = corpus(&[
            ("a", "fake"),
            ("b", "fake,hate"),
            ("c", "hate,offensive,defamation"),
            ("d", "offensive,defamation"),
            ("e", "non-hostile"),
        ]);
        let (mut m, _) = train_label_powerset(&c, &EnsembleConfig::default()).unwrap();
        m.weights.iter_mut().for_each(|w| w.fill(0.0));
        m.biases.fill(0.0);
        assert_eq!(m.predict("anything"), m.combinations[0]);
    }
}
