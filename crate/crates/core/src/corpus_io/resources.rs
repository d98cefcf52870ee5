use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::normalize;

/// Word vectors keyed by normalized token, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Insert or overwrite. Returns true when an existing entry was replaced.
    pub fn insert(&mut self, token: String, vector: &[f32]) -> bool {
        assert_eq!(vector.len(), self.dim);
        match self.index.get(&token) {
            Some(&row) => {
                self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(vector);
                true
            }
            None => {
                self.index.insert(token, self.index.len());
                self.data.extend_from_slice(vector);
                false
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index
            .get(token)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }
}

fn parse_floats(fields: &[&str], path: &Path, line: usize) -> Result<Vec<f32>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f32>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, line, format!("unparseable value {f:?}")))
        })
        .collect()
}

/// Read a word2vec/fastText text file. A leading `count dim` line is
/// optional; without it the dimension comes from the first row.
pub fn load_word_vectors(path: &Path) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_word_vectors(BufReader::new(file), path)
}

pub fn read_word_vectors(reader: impl BufRead, path: &Path) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    let mut declared: Option<(usize, usize)> = None;
    let mut duplicates = 0usize;
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if std::mem::take(&mut first) && fields.len() == 2 {
            if let (Ok(count), Ok(dim)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                if dim == 0 {
                    return Err(Error::parse(path, lineno, "declared dimension is zero"));
                }
                declared = Some((count, dim));
                continue;
            }
        }
        let values = parse_floats(&fields[1..], path, lineno)?;
        if values.is_empty() {
            return Err(Error::parse(path, lineno, "row has no vector values"));
        }
        let expected = table
            .as_ref()
            .map(EmbeddingTable::dim)
            .or(declared.map(|(_, d)| d))
            .unwrap_or(values.len());
        if values.len() != expected {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "inconsistent dimension: expected {expected}, found {}",
                    values.len()
                ),
            ));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(expected));
        let token = normalize(fields[0]);
        if token.is_empty() {
            continue;
        }
        if table.insert(token, &values) {
            log::debug!(
                "{}:{lineno}: duplicate token {:?} overwrites earlier vector",
                path.display(),
                fields[0]
            );
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        log::warn!(
            "{}: {duplicates} duplicate tokens after normalization; later vectors won",
            path.display()
        );
    }
    match (table, declared) {
        (Some(t), Some((count, _))) => {
            if count != t.len() + duplicates {
                log::warn!("{}: header declares {count} rows", path.display());
            }
            Ok(t)
        }
        (Some(t), None) => Ok(t),
        (None, Some((_, dim))) => Ok(EmbeddingTable::new(dim)),
        (None, None) => Err(Error::parse(path, 1, "empty embedding file")),
    }
}

/// Precomputed per-post vectors (e.g. sentence embeddings from an external
/// encoder), keyed by post id.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVectorTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl SampleVectorTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f32>)>,
    ) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (id, v) in entries {
            if v.len() != dim {
                return Err(Error::Data(format!(
                    "sample vector {id}: expected dimension {dim}, found {}",
                    v.len()
                )));
            }
            vectors.insert(id, v);
        }
        Ok(SampleVectorTable { dim, vectors })
    }
}

/// TSV rows `post_id<TAB>v1 v2 … vd`.
pub fn load_sample_vectors(path: &Path) -> Result<SampleVectorTable> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dim = None;
    let mut vectors = HashMap::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected post_id<TAB>vector"))?;
        let fields: Vec<&str> = rest.split_whitespace().collect();
        let values = parse_floats(&fields, path, lineno)?;
        let d = *dim.get_or_insert(values.len());
        if d == 0 || values.len() != d {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "inconsistent dimension: expected {d}, found {}",
                    values.len()
                ),
            ));
        }
        if vectors.insert(id.to_owned(), values).is_some() {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate post id {id:?}"),
            ));
        }
    }
    let dim = dim.ok_or_else(|| Error::parse(path, 1, "empty sample-vector file"))?;
    Ok(SampleVectorTable { dim, vectors })
}

/// A named set of normalized tokens (stopwords, swear words, hate words).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub name: String,
    pub tokens: BTreeSet<String>,
}

impl Lexicon {
    pub fn from_tokens<'a>(name: &str, tokens: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let tokens: BTreeSet<String> = tokens
            .into_iter()
            .map(normalize)
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            return Err(Error::Data(format!("lexicon {name:?} is empty")));
        }
        Ok(Lexicon {
            name: name.to_owned(),
            tokens,
        })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One token per line; `#` lines are comments, blank lines are skipped.
pub fn load_lexicon(path: &Path, name: &str) -> Result<Lexicon> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lines = content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    Lexicon::from_tokens(name, lines)
        .map_err(|_| Error::parse(path, 1, format!("lexicon {name:?} has no tokens")))
}

pub fn load_stopwords(path: &Path) -> Result<Lexicon> {
    load_lexicon(path, "stopwords")
}
