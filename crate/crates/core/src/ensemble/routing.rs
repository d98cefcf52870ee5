use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{Label, LabelSet};
use crate::error::{Error, Result};

/// What to assign when a post is routed hostile but no level-2 classifier
/// fires.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackStrategy {
    #[default]
    HateOffensive,
    #[serde(alias = "max_prob")]
    MaxProbability,
}

impl FromStr for FallbackStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hate_offensive" => Ok(FallbackStrategy::HateOffensive),
            "max_prob" | "max_probability" => Ok(FallbackStrategy::MaxProbability),
            other => Err(Error::Config(format!(
                "unknown fallback {other:?} (expected hate_offensive or max_prob)"
            ))),
        }
    }
}

impl fmt::Display for FallbackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FallbackStrategy::HateOffensive => "hate_offensive",
            FallbackStrategy::MaxProbability => "max_prob",
        })
    }
}

/// One classifier's answer for one post.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vote {
    pub positive: bool,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub labels: LabelSet,
    /// The fallback rule produced `labels`.
    pub fallback: bool,
}

/// Resolve an empty level-2 union. Missing or NaN probabilities never win;
/// ties go to the earlier label in canonical order.
pub fn fallback_resolve(probs: &BTreeMap<Label, f64>, strategy: FallbackStrategy) -> LabelSet {
    match strategy {
        FallbackStrategy::HateOffensive => hate_offensive(),
        FallbackStrategy::MaxProbability => {
            let mut best = Label::Fake;
            let mut best_p = f64::NEG_INFINITY;
            for label in Label::HOSTILE {
                let p = probs
                    .get(&label)
                    .copied()
                    .filter(|p| !p.is_nan())
                    .unwrap_or(f64::NEG_INFINITY);
                if p > best_p {
                    best = label;
                    best_p = p;
                }
            }
            singleton(best)
        }
    }
}

/// Level-1 decides hostility; only then is `level2` asked about each
/// hostile label, in canonical order.
pub fn route<F, G>(level1: F, mut level2: G, strategy: FallbackStrategy) -> Result<Prediction>
where
    F: FnOnce() -> Result<bool>,
    G: FnMut(Label) -> Result<Vote>,
{
    if !level1()? {
        return Ok(Prediction {
            labels: LabelSet::NON_HOSTILE,
            fallback: false,
        });
    }
    let mut positives = Vec::new();
    let mut probs = BTreeMap::new();
    for label in Label::HOSTILE {
        let vote = level2(label)?;
        probs.insert(label, vote.prob);
        if vote.positive {
            positives.push(label);
        }
    }
    Ok(match LabelSet::new(positives) {
        Ok(labels) => Prediction {
            labels,
            fallback: false,
        },
        Err(_) => Prediction {
            labels: fallback_resolve(&probs, strategy),
            fallback: true,
        },
    })
}

fn singleton(label: Label) -> LabelSet {
    LabelSet::new([label]).expect("a single label is a valid set")
}

fn hate_offensive() -> LabelSet {
    LabelSet::new([Label::Hate, Label::Offensive]).expect("hostile labels combine")
}
