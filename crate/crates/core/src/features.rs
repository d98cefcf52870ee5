//! Per-classifier feature assembly.
//!
//! A [`FeatureSpec`] is an ordered list of blocks fixed at training time:
//! a pooled (or precomputed) embedding, presence one-hots over
//! class-specific vocabularies, and lexicon hit counts. Blocks are
//! concatenated in order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{EmbeddingTable, Label, LabelSet, Lexicon, SampleVectorTable};
use crate::error::{Error, Result};
use crate::preprocess::{entity_key, PreparedText};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabKind {
    Hashtag,
    Mention,
    Emoji,
    Word,
}

impl VocabKind {
    pub const ALL: [VocabKind; 4] = [
        VocabKind::Hashtag,
        VocabKind::Mention,
        VocabKind::Emoji,
        VocabKind::Word,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VocabKind::Hashtag => "hashtag",
            VocabKind::Mention => "mention",
            VocabKind::Emoji => "emoji",
            VocabKind::Word => "word",
        }
    }

    /// The keys this kind contributes for one post, with repeats.
    pub fn keys(self, text: &PreparedText) -> Vec<String> {
        match self {
            VocabKind::Hashtag => text
                .entities
                .hashtags
                .iter()
                .map(|h| entity_key(h))
                .collect(),
            VocabKind::Mention => text
                .entities
                .mentions
                .iter()
                .map(|m| entity_key(m))
                .collect(),
            VocabKind::Emoji => text.entities.emojis.clone(),
            VocabKind::Word => text.cleaned.tokens.clone(),
        }
    }
}

/// Frequency-thresholded vocabulary of one entity kind in one class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub kind: VocabKind,
    pub class: Label,
    pub min_freq: u32,
    /// Most frequent first; ties in lexicographic order.
    pub entries: Vec<String>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Count `kind` keys over the posts labeled with `class` (total
/// occurrences) and keep those seen at least `min_freq` times.
pub fn build_vocab<'a>(
    posts: impl IntoIterator<Item = (LabelSet, &'a PreparedText)>,
    class: Label,
    kind: VocabKind,
    min_freq: u32,
) -> Result<Vocab> {
    if min_freq == 0 {
        return Err(Error::Config("min_freq must be at least 1".into()));
    }
    if class == Label::NonHostile {
        log::warn!(
            "building a {} vocabulary for the non-hostile class",
            kind.as_str()
        );
    }
    let mut counts: HashMap<String, u32> = HashMap::new();
    for (labels, text) in posts {
        if labels.contains(class) {
            for key in kind.keys(text) {
                *counts.entry(key).or_default() += 1;
            }
        }
    }
    let mut kept: Vec<(String, u32)> = counts.into_iter().filter(|(_, c)| *c >= min_freq).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocab {
        kind,
        class,
        min_freq,
        entries: kept.into_iter().map(|(k, _)| k).collect(),
    })
}

/// Presence encoding: 1 at position i iff `entries[i]` occurs in `keys`.
pub fn encode_onehot(keys: &[String], vocab: &Vocab) -> Vec<f64> {
    vocab
        .entries
        .iter()
        .map(|e| {
            if keys.iter().any(|k| k == e) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Mean vector over the first `max_tokens` tokens that the table knows;
/// zero vector when none are found.
pub fn pool_embeddings(tokens: &[String], table: &EmbeddingTable, max_tokens: usize) -> Vec<f64> {
    let mut sum = vec![0.0f64; table.dim()];
    let mut found = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t)).take(max_tokens) {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += f64::from(*x);
        }
        found += 1;
    }
    if found > 0 {
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    sum
}

/// `[hits, hits / max(1, |tokens|)]`, counting repeats.
pub fn lexicon_count(tokens: &[String], lex: &Lexicon) -> [f64; 2] {
    let hits = tokens.iter().filter(|t| lex.contains(t)).count() as f64;
    [hits, hits / (tokens.len().max(1) as f64)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "provider")]
pub enum EmbeddingSource {
    /// Mean of word vectors over the cleaned tokens.
    WordVectors { max_tokens: usize },
    /// A vector per post id, looked up directly.
    SampleVectors,
}

/// Per-dimension z-scoring fitted on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Standardizer {
        let dim = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, values: &mut [f64]) {
        for ((x, m), s) in values.iter_mut().zip(&self.mean).zip(&self.scale) {
            *x = (*x - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Embedding {
        source: EmbeddingSource,
        dim: usize,
        standardizer: Option<Standardizer>,
    },
    OneHot(Vocab),
    LexiconCount(Lexicon),
}

impl Block {
    pub fn dim(&self) -> usize {
        match self {
            Block::Embedding { dim, .. } => *dim,
            Block::OneHot(v) => v.len(),
            Block::LexiconCount(_) => 2,
        }
    }
}

/// Borrowed embedding providers needed at assembly time.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddingProviders<'a> {
    pub word_vectors: Option<&'a EmbeddingTable>,
    pub sample_vectors: Option<&'a SampleVectorTable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub blocks: Vec<Block>,
}

impl FeatureSpec {
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    /// Concatenate every block for one post, standardizing embedding blocks
    /// when a standardizer has been fitted.
    pub fn assemble(
        &self,
        post_id: &str,
        text: &PreparedText,
        providers: EmbeddingProviders<'_>,
    ) -> Result<FeatureVector> {
        let mut values = Vec::with_capacity(self.total_dim());
        for block in &self.blocks {
            match block {
                Block::Embedding {
                    source,
                    dim,
                    standardizer,
                } => {
                    let start = values.len();
                    match source {
                        EmbeddingSource::WordVectors { max_tokens } => {
                            let table = providers
                                .word_vectors
                                .ok_or_else(|| Error::MissingResource("word vectors".into()))?;
                            check_dim("word vectors", table.dim(), *dim)?;
                            values.extend(pool_embeddings(
                                &text.cleaned.tokens,
                                table,
                                *max_tokens,
                            ));
                        }
                        EmbeddingSource::SampleVectors => {
                            let table = providers
                                .sample_vectors
                                .ok_or_else(|| Error::MissingResource("sample vectors".into()))?;
                            check_dim("sample vectors", table.dim(), *dim)?;
                            let v = table.get(post_id).ok_or_else(|| {
                                Error::row(post_id, "no sample vector for this post id")
                            })?;
                            values.extend(v.iter().map(|x| f64::from(*x)));
                        }
                    }
                    if let Some(s) = standardizer {
                        s.apply(&mut values[start..]);
                    }
                }
                Block::OneHot(vocab) => values.extend(encode_onehot(&vocab.kind.keys(text), vocab)),
                Block::LexiconCount(lex) => values.extend(lexicon_count(&text.all_tokens, lex)),
            }
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::row(
                post_id,
                format!("non-finite feature at position {bad}"),
            ));
        }
        Ok(FeatureVector { values })
    }

    /// Fit standardizers for every embedding block from unstandardized
    /// training rows, then return the rows standardized in place.
    pub fn fit_standardization(&mut self, rows: &mut [Vec<f64>]) {
        let mut offset = 0;
        for block in &mut self.blocks {
            let dim = block.dim();
            if let Block::Embedding { standardizer, .. } = block {
                *standardizer = None;
                let slices: Vec<&[f64]> = rows.iter().map(|r| &r[offset..offset + dim]).collect();
                let fitted = Standardizer::fit(&slices);
                for r in rows.iter_mut() {
                    fitted.apply(&mut r[offset..offset + dim]);
                }
                *standardizer = Some(fitted);
            }
            offset += dim;
        }
    }

    pub fn vocabs(&self) -> impl Iterator<Item = &Vocab> {
        self.blocks.iter().filter_map(|b| match b {
            Block::OneHot(v) => Some(v),
            _ => None,
        })
    }
}

fn check_dim(what: &str, actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::Data(format!(
            "{what} have dimension {actual}, model was trained with {expected}"
        )));
    }
    Ok(())
}

/// Frequency thresholds and pooling cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub min_freq_hashtag: u32,
    pub min_freq_mention: u32,
    pub min_freq_emoji: u32,
    pub min_freq_word: u32,
    pub max_tokens: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_freq_hashtag: 3,
            min_freq_mention: 3,
            min_freq_emoji: 3,
            min_freq_word: 5,
            max_tokens: 100,
        }
    }
}

impl FeatureConfig {
    pub fn min_freq(&self, kind: VocabKind) -> u32 {
        match kind {
            VocabKind::Hashtag => self.min_freq_hashtag,
            VocabKind::Mention => self.min_freq_mention,
            VocabKind::Emoji => self.min_freq_emoji,
            VocabKind::Word => self.min_freq_word,
        }
    }
}

/// Which block layout a feature-based classifier uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Sentence or pooled embedding, word/hashtag/mention/emoji one-hots,
    /// hate-word and swear-word counts.
    Hate,
    /// Pooled word vectors, hashtag/mention/emoji one-hots, swear-word count.
    Defamation,
}

impl Recipe {
    pub fn for_label(label: Label) -> Recipe {
        match label {
            Label::Hate => Recipe::Hate,
            _ => Recipe::Defamation,
        }
    }

    fn vocab_kinds(self) -> &'static [VocabKind] {
        match self {
            Recipe::Hate => &[
                VocabKind::Word,
                VocabKind::Hashtag,
                VocabKind::Mention,
                VocabKind::Emoji,
            ],
            Recipe::Defamation => &[VocabKind::Hashtag, VocabKind::Mention, VocabKind::Emoji],
        }
    }
}

/// Lexicons available to recipes.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecipeLexicons<'a> {
    pub hate: Option<&'a Lexicon>,
    pub swear: Option<&'a Lexicon>,
}

/// Lay out the blocks of `recipe` for `class`, building vocabularies from
/// `posts`. Blocks whose resource is unavailable are left out with a
/// warning. Standardizers are not fitted here.
pub fn build_spec(
    recipe: Recipe,
    class: Label,
    posts: &[(LabelSet, &PreparedText)],
    config: &FeatureConfig,
    providers: EmbeddingProviders<'_>,
    lexicons: RecipeLexicons<'_>,
) -> Result<FeatureSpec> {
    let mut blocks = Vec::new();
    let word_block = providers.word_vectors.map(|t| Block::Embedding {
        source: EmbeddingSource::WordVectors {
            max_tokens: config.max_tokens,
        },
        dim: t.dim(),
        standardizer: None,
    });
    let embedding = match recipe {
        Recipe::Hate => providers
            .sample_vectors
            .map(|t| Block::Embedding {
                source: EmbeddingSource::SampleVectors,
                dim: t.dim(),
                standardizer: None,
            })
            .or(word_block),
        Recipe::Defamation => word_block,
    };
    match embedding {
        Some(b) => blocks.push(b),
        None => log::warn!("{class}: no embedding provider available, embedding block omitted"),
    }
    for &kind in recipe.vocab_kinds() {
        let vocab = build_vocab(posts.iter().copied(), class, kind, config.min_freq(kind))?;
        blocks.push(Block::OneHot(vocab));
    }
    let wanted: &[(&str, Option<&Lexicon>)] = match recipe {
        Recipe::Hate => &[("hate", lexicons.hate), ("swear", lexicons.swear)],
        Recipe::Defamation => &[("swear", lexicons.swear)],
    };
    for (name, lex) in wanted {
        match lex {
            Some(l) => blocks.push(Block::LexiconCount((*l).clone())),
            None => log::warn!("{class}: no {name} lexicon configured, count block omitted"),
        }
    }
    Ok(FeatureSpec { blocks })
}
