//! Scores produced outside this crate, e.g. by a fine-tuned transformer.

use std::collections::HashMap;
use std::path::Path;

use super::{BinaryClassifier, Input};
use crate::corpus_io::table::{self, Format};
use crate::error::{Error, Result};

/// Per-post probabilities keyed by post id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalScores {
    probs: HashMap<String, f64>,
}

impl ExternalScores {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut probs = HashMap::new();
        for (id, p) in entries {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::row(&id, format!("probability {p} outside [0, 1]")));
            }
            if probs.insert(id.clone(), p).is_some() {
                return Err(Error::row(id, "duplicate id in external scores"));
            }
        }
        Ok(ExternalScores { probs })
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.probs.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    fn lookup(&self, id: &str) -> Result<f64> {
        self.get(id)
            .ok_or_else(|| Error::row(id, "no external score for this post"))
    }
}

impl BinaryClassifier for ExternalScores {
    /// Log-odds of the stored probability.
    fn score(&self, input: &Input<'_>) -> Result<f64> {
        let p = self.lookup(input.id)?;
        Ok((p / (1.0 - p)).ln())
    }

    fn prob(&self, input: &Input<'_>) -> Result<f64> {
        self.lookup(input.id)
    }

    fn predict(&self, input: &Input<'_>) -> Result<bool> {
        Ok(self.lookup(input.id)? >= 0.5)
    }
}

/// Parses `post_id\tprobability` lines. A header row is recognized by a
/// non-numeric second column on the first line.
pub fn parse_external_scores(content: &str, path: &Path) -> Result<ExternalScores> {
    let records = table::parse(content, Format::Tsv, path)?;
    let mut entries = Vec::with_capacity(records.len());
    for (k, rec) in records.into_iter().enumerate() {
        if rec.fields.len() != 2 {
            return Err(Error::parse(
                path,
                rec.line,
                "expected `post_id<TAB>probability`",
            ));
        }
        let value = rec.fields[1].trim();
        match value.parse::<f64>() {
            Ok(p) => entries.push((rec.fields[0].clone(), p)),
            Err(_) if k == 0 => continue,
            Err(_) => {
                return Err(Error::parse(
                    path,
                    rec.line,
                    format!("bad probability {value:?}"),
                ))
            }
        }
    }
    ExternalScores::from_entries(entries)
}

pub fn load_external_scores(path: impl AsRef<Path>) -> Result<ExternalScores> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_external_scores(&content, path)
}
