use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hostile_core::corpus_io::{
    load_lexicon, load_sample_vectors, load_stopwords, load_word_vectors, ColumnMap, Format, Label,
};
use hostile_core::ensemble::{BackendKind, Classifier, EnsembleConfig, Model, Resources};
use hostile_core::learners::load_external_scores;
use hostile_core::metrics::Scope;
use hostile_core::preprocess::EmojiRanges;
use hostile_core::{Error, Result};

/// Files a run may read. Relative paths in a config file are resolved
/// against the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub hate_lexicon: Option<PathBuf>,
    pub swear_lexicon: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
    pub sample_vectors: Option<PathBuf>,
    pub emoji_ranges: Option<PathBuf>,
}

impl Paths {
    fn all_mut(&mut self) -> [&mut Option<PathBuf>; 9] {
        [
            &mut self.train,
            &mut self.val,
            &mut self.test,
            &mut self.stopwords,
            &mut self.hate_lexicon,
            &mut self.swear_lexicon,
            &mut self.word_vectors,
            &mut self.sample_vectors,
            &mut self.emoji_ranges,
        ]
    }

    fn named(&self) -> [(&'static str, &Option<PathBuf>); 9] {
        [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
            ("stopwords", &self.stopwords),
            ("hate_lexicon", &self.hate_lexicon),
            ("swear_lexicon", &self.swear_lexicon),
            ("word_vectors", &self.word_vectors),
            ("sample_vectors", &self.sample_vectors),
            ("emoji_ranges", &self.emoji_ranges),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub columns: ColumnMap,
    /// Dataset format; inferred from the file extension when absent.
    pub format: Option<Format>,
    pub ensemble: EnsembleConfig,
    pub scope: Scope,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            paths: Paths::default(),
            columns: ColumnMap::default(),
            format: None,
            ensemble: EnsembleConfig::default(),
            scope: Scope::default(),
            jobs: 1,
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in cfg.paths.all_mut() {
            resolve(base, p);
        }
        for backend in cfg.ensemble.backends.values_mut() {
            if let BackendKind::External { path } = backend {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<RunConfig> {
        path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
    }

    /// Fail early on any configured file that does not exist.
    pub fn validate_paths(&self) -> Result<()> {
        let mut missing = Vec::new();
        for (name, p) in self.paths.named() {
            if let Some(path) = p {
                if !path.is_file() {
                    missing.push(format!("{name} ({})", path.display()));
                }
            }
        }
        for (label, backend) in &self.ensemble.backends {
            if let BackendKind::External { path } = backend {
                if !path.is_file() {
                    missing.push(format!("external scores for {label} ({})", path.display()));
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingResource(missing.join(", ")))
        }
    }

    pub fn format_for(&self, path: &Path) -> Format {
        self.format.unwrap_or_else(|| Format::from_path(path))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Embedding tables, lexicons and emoji ranges named in the config.
    pub fn load_resources(&self) -> Result<Resources> {
        let p = &self.paths;
        let mut res = Resources {
            word_vectors: p
                .word_vectors
                .as_deref()
                .map(load_word_vectors)
                .transpose()?,
            sample_vectors: p
                .sample_vectors
                .as_deref()
                .map(load_sample_vectors)
                .transpose()?,
            stopwords: p.stopwords.as_deref().map(load_stopwords).transpose()?,
            hate_lexicon: p
                .hate_lexicon
                .as_deref()
                .map(|f| load_lexicon(f, "hate"))
                .transpose()?,
            swear_lexicon: p
                .swear_lexicon
                .as_deref()
                .map(|f| load_lexicon(f, "swear"))
                .transpose()?,
            emoji_ranges: p
                .emoji_ranges
                .as_deref()
                .map(EmojiRanges::load)
                .transpose()?
                .unwrap_or_default(),
            external: BTreeMap::new(),
        };
        for label in Label::ALL {
            if let BackendKind::External { path } = self.ensemble.backend(label) {
                res.external.insert(label, load_external_scores(&path)?);
            }
        }
        Ok(res)
    }
}

/// Load external scores for every external slot of a trained model. A
/// `--backend label=external:path` override replaces the recorded path.
pub fn load_model_externals(
    model: &Model,
    overrides: &BTreeMap<Label, BackendKind>,
    res: &mut Resources,
) -> Result<()> {
    let Model::BinaryRelevance(m) = model else {
        return Ok(());
    };
    let slots = std::iter::once((Label::NonHostile, m.level1()))
        .chain(m.level2().iter().map(|(l, c)| (*l, c)));
    for (label, clf) in slots {
        if let Classifier::External { path } = clf {
            let path = match overrides.get(&label) {
                Some(BackendKind::External { path }) => path.clone(),
                _ => path.clone(),
            };
            res.external.insert(label, load_external_scores(&path)?);
        }
    }
    Ok(())
}

/// Parse `label=backend`.
pub fn parse_backend_override(s: &str) -> Result<(Label, BackendKind)> {
    let (label, backend) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--backend expects label=backend, got {s:?}")))?;
    let label: Label = label.parse().map_err(Error::Config)?;
    Ok((label, backend.parse()?))
}
