use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::label::{Label, LabelSet};
use super::table::{self, Format};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub labels: Option<LabelSet>,
}

impl Post {
    pub fn new(id: impl Into<String>, text: impl Into<String>, labels: Option<LabelSet>) -> Self {
        Post {
            id: id.into(),
            text: text.into(),
            labels,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    #[default]
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    Labeled,
    Unlabeled,
    Mixed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub posts: Vec<Post>,
    pub split: Split,
}

impl Corpus {
    pub fn new(posts: Vec<Post>) -> Self {
        Corpus {
            posts,
            split: Split::Unspecified,
        }
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Empty corpora count as labeled.
    pub fn labeling(&self) -> Labeling {
        let labeled = self.posts.iter().filter(|p| p.labels.is_some()).count();
        if labeled == self.posts.len() {
            Labeling::Labeled
        } else if labeled == 0 {
            Labeling::Unlabeled
        } else {
            Labeling::Mixed
        }
    }

    /// Labels of every post, failing on the first unlabeled one.
    pub fn label_sets(&self) -> Result<Vec<LabelSet>> {
        self.posts
            .iter()
            .map(|p| {
                p.labels
                    .ok_or_else(|| Error::row(&p.id, "post is unlabeled"))
            })
            .collect()
    }
}

/// Header names for the three dataset columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub id: String,
    pub text: String,
    pub labels: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            id: "id".into(),
            text: "text".into(),
            labels: "labels".into(),
        }
    }
}

impl ColumnMap {
    /// Header used by the shared-task CSV release.
    pub fn shared_task() -> Self {
        ColumnMap {
            id: "Unique ID".into(),
            text: "Post".into(),
            labels: "Labels Set".into(),
        }
    }
}

fn find_column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h.trim() == name)
}

pub fn load_corpus(path: &Path, format: Format) -> Result<Corpus> {
    load_corpus_with(path, format, &ColumnMap::default())
}

/// Load a dataset file. The labels column may be absent entirely, which
/// yields an unlabeled corpus.
pub fn load_corpus_with(path: &Path, format: Format, columns: &ColumnMap) -> Result<Corpus> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&content, format, columns, path)
}

pub fn parse_corpus(
    content: &str,
    format: Format,
    columns: &ColumnMap,
    path: &Path,
) -> Result<Corpus> {
    let records = table::parse(content, format, path)?;
    let mut records = records.into_iter();
    let header = records
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header row"))?;
    let id_col = find_column(&header.fields, &columns.id).ok_or_else(|| {
        Error::parse(
            path,
            header.line,
            format!("missing column {:?}", columns.id),
        )
    })?;
    let text_col = find_column(&header.fields, &columns.text).ok_or_else(|| {
        Error::parse(
            path,
            header.line,
            format!("missing column {:?}", columns.text),
        )
    })?;
    let label_col = find_column(&header.fields, &columns.labels);

    let mut seen = HashSet::new();
    let mut posts = Vec::new();
    for rec in records {
        if rec.fields.len() != header.fields.len() {
            return Err(Error::parse(
                path,
                rec.line,
                format!(
                    "expected {} columns, found {}",
                    header.fields.len(),
                    rec.fields.len()
                ),
            ));
        }
        let mut fields = rec.fields;
        let id = std::mem::take(&mut fields[id_col]);
        let text = std::mem::take(&mut fields[text_col]);
        if !seen.insert(id.clone()) {
            return Err(Error::row(id, "duplicate id"));
        }
        let labels = match label_col.map(|c| fields[c].trim()) {
            Some(tags) if !tags.is_empty() => {
                Some(LabelSet::parse_tags(tags).map_err(|m| Error::row(&id, m))?)
            }
            _ => None,
        };
        posts.push(Post { id, text, labels });
    }
    Ok(Corpus::new(posts))
}

/// Serialize with the default `id, text, labels` header.
pub fn format_corpus(corpus: &Corpus, format: Format) -> Result<String> {
    let tags: Vec<String> = corpus
        .posts
        .iter()
        .map(|p| p.labels.map(|l| l.to_tags()).unwrap_or_default())
        .collect();
    let mut rows = vec![vec!["id", "text", "labels"]];
    for (post, tags) in corpus.posts.iter().zip(&tags) {
        rows.push(vec![post.id.as_str(), post.text.as_str(), tags.as_str()]);
    }
    table::write(&rows, format)
}

pub fn write_corpus(corpus: &Corpus, path: &Path, format: Format) -> Result<()> {
    let s = format_corpus(corpus, format)?;
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Per-label positive counts, as in a dataset statistics table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub fake: usize,
    pub hate: usize,
    pub offensive: usize,
    pub defamation: usize,
    pub non_hostile: usize,
    pub total_hostile: usize,
    pub total: usize,
}

impl CorpusStats {
    pub fn count(&self, label: Label) -> usize {
        match label {
            Label::Fake => self.fake,
            Label::Hate => self.hate,
            Label::Offensive => self.offensive,
            Label::Defamation => self.defamation,
            Label::NonHostile => self.non_hostile,
        }
    }
}

impl std::ops::Add for CorpusStats {
    type Output = CorpusStats;

    fn add(self, o: CorpusStats) -> CorpusStats {
        CorpusStats {
            fake: self.fake + o.fake,
            hate: self.hate + o.hate,
            offensive: self.offensive + o.offensive,
            defamation: self.defamation + o.defamation,
            non_hostile: self.non_hostile + o.non_hostile,
            total_hostile: self.total_hostile + o.total_hostile,
            total: self.total + o.total,
        }
    }
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    for set in corpus.label_sets()? {
        for label in set.iter() {
            match label {
                Label::Fake => stats.fake += 1,
                Label::Hate => stats.hate += 1,
                Label::Offensive => stats.offensive += 1,
                Label::Defamation => stats.defamation += 1,
                Label::NonHostile => stats.non_hostile += 1,
            }
        }
        if set.is_hostile() {
            stats.total_hostile += 1;
        }
    }
    stats.total = stats.total_hostile + stats.non_hostile;
    Ok(stats)
}
