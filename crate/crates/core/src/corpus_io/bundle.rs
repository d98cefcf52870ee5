//! Model bundle directory: `manifest.json`, one `vocab_<class>_<kind>.json`
//! per one-hot block and one `clf_<class>.json` per classifier.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Label, Lexicon};
use crate::ensemble::{
    Classifier, EnsembleModel, FallbackStrategy, LabelPowersetModel, Model, Strategy, TextPipeline,
};
use crate::error::{Error, Result};
use crate::features::{Block, EmbeddingSource, FeatureSpec, Standardizer, Vocab, VocabKind};
use crate::learners::{MlpModel, NgramLinearModel, SvmModel};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const POWERSET_SLOT: &str = "label_powerset";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fallback: Option<FallbackStrategy>,
    pipeline: TextPipeline,
    classifiers: Vec<ClassifierEntry>,
    #[serde(default)]
    provenance: Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassifierEntry {
    slot: String,
    backend: String,
    file: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    features: Vec<BlockEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BlockEntry {
    Embedding {
        source: EmbeddingSource,
        dim: usize,
        standardizer: Option<Standardizer>,
    },
    OneHot {
        file: String,
    },
    LexiconCount(Lexicon),
}

#[derive(Serialize, Deserialize)]
struct ExternalFile {
    path: PathBuf,
}

fn slot_name(label: Label) -> &'static str {
    label.as_str()
}

fn vocab_file(slot: &str, kind: VocabKind) -> String {
    format!("vocab_{slot}_{}.json", kind.as_str())
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize, pretty: bool) -> Result<()> {
    let mut text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .map_err(|e| Error::json(name, e))?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T> {
    let path = dir.join(name);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Bundle(format!("missing file {}", path.display())))
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    serde_json::from_str(&text).map_err(|e| Error::Bundle(format!("{}: {e}", path.display())))
}

fn spec_entries(
    slot: &str,
    spec: &FeatureSpec,
    files: &mut Vec<(String, Vocab)>,
) -> Vec<BlockEntry> {
    spec.blocks
        .iter()
        .map(|b| match b {
            Block::Embedding {
                source,
                dim,
                standardizer,
            } => BlockEntry::Embedding {
                source: *source,
                dim: *dim,
                standardizer: standardizer.clone(),
            },
            Block::OneHot(vocab) => {
                let file = vocab_file(slot, vocab.kind);
                files.push((file.clone(), vocab.clone()));
                BlockEntry::OneHot { file }
            }
            Block::LexiconCount(lex) => BlockEntry::LexiconCount(lex.clone()),
        })
        .collect()
}

/// Write `model` into `dir`, creating it if needed. `provenance` is stored
/// verbatim in the manifest.
pub fn save_model(model: &Model, dir: &Path, provenance: Value) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut classifiers = Vec::new();
    let mut vocabs = Vec::new();
    let (pipeline, fallback) = match model {
        Model::BinaryRelevance(m) => {
            let slots = std::iter::once((Label::NonHostile, m.level1()))
                .chain(m.level2().iter().map(|(l, c)| (*l, c)));
            for (label, clf) in slots {
                let slot = slot_name(label);
                let file = format!("clf_{slot}.json");
                let features = clf
                    .features()
                    .map(|s| spec_entries(slot, s, &mut vocabs))
                    .unwrap_or_default();
                match clf {
                    Classifier::Svm { model, .. } => write_json(dir, &file, model, false)?,
                    Classifier::Mlp { model, .. } => write_json(dir, &file, model, false)?,
                    Classifier::Ngram { model } => write_json(dir, &file, model, false)?,
                    Classifier::External { path } => {
                        write_json(dir, &file, &ExternalFile { path: path.clone() }, true)?
                    }
                }
                classifiers.push(ClassifierEntry {
                    slot: slot.to_owned(),
                    backend: clf.kind().to_string(),
                    file,
                    features,
                });
            }
            (m.pipeline().clone(), Some(m.fallback()))
        }
        Model::LabelPowerset(m) => {
            let file = format!("clf_{POWERSET_SLOT}.json");
            write_json(dir, &file, m, false)?;
            classifiers.push(ClassifierEntry {
                slot: POWERSET_SLOT.to_owned(),
                backend: "ngram".into(),
                file,
                features: Vec::new(),
            });
            (TextPipeline::default(), None)
        }
    };
    for (file, vocab) in &vocabs {
        write_json(dir, file, vocab, true)?;
    }
    let manifest = Manifest {
        format_version: BUNDLE_FORMAT_VERSION,
        strategy: model.strategy(),
        fallback,
        pipeline,
        classifiers,
        provenance,
    };
    write_json(dir, MANIFEST, &manifest, true)
}

fn read_manifest(dir: &Path) -> Result<Manifest> {
    if !dir.is_dir() {
        return Err(Error::Bundle(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let raw: Value = read_json(dir, MANIFEST)?;
    let version = raw.get("format_version").and_then(Value::as_u64);
    if version != Some(u64::from(BUNDLE_FORMAT_VERSION)) {
        return Err(Error::Bundle(format!(
            "unsupported format version {} (expected {BUNDLE_FORMAT_VERSION})",
            version.map_or("none".to_string(), |v| v.to_string())
        )));
    }
    serde_json::from_value(raw).map_err(|e| Error::Bundle(format!("manifest: {e}")))
}

/// The provenance object recorded at save time.
pub fn load_provenance(dir: &Path) -> Result<Value> {
    Ok(read_manifest(dir)?.provenance)
}

fn load_spec(dir: &Path, slot: &str, entries: Vec<BlockEntry>) -> Result<FeatureSpec> {
    let mut blocks = Vec::with_capacity(entries.len());
    for e in entries {
        blocks.push(match e {
            BlockEntry::Embedding {
                source,
                dim,
                standardizer,
            } => {
                if let Some(s) = &standardizer {
                    if s.mean.len() != dim
                        || s.scale.len() != dim
                        || s.scale.iter().any(|v| v.is_nan() || *v <= 0.0)
                    {
                        return Err(Error::Bundle(format!("{slot}: corrupted standardizer")));
                    }
                }
                Block::Embedding {
                    source,
                    dim,
                    standardizer,
                }
            }
            BlockEntry::OneHot { file } => Block::OneHot(read_json(dir, &file)?),
            BlockEntry::LexiconCount(lex) => Block::LexiconCount(lex),
        });
    }
    Ok(FeatureSpec { blocks })
}

fn finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

fn check(ok: bool, slot: &str, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Bundle(format!("{slot}: corrupted weights ({what})")))
    }
}

fn check_svm(m: &SvmModel, dim: usize, slot: &str) -> Result<()> {
    check(
        m.support_vectors.len() == m.dual_coef.len(),
        slot,
        "support vector count",
    )?;
    check(
        m.support_vectors
            .iter()
            .all(|v| v.len() == dim && finite(v)),
        slot,
        "support vector shape",
    )?;
    check(
        finite(&m.dual_coef) && m.bias.is_finite(),
        slot,
        "non-finite coefficients",
    )?;
    if let Some(w) = &m.weights {
        check(w.len() == dim && finite(w), slot, "primal weights")?;
    }
    Ok(())
}

fn check_mlp(m: &MlpModel, dim: usize, slot: &str) -> Result<()> {
    check(m.input_dim == dim, slot, "input dimension")?;
    check(
        m.w1.len() == m.hidden * m.input_dim && m.b1.len() == m.hidden,
        slot,
        "hidden layer shape",
    )?;
    check(m.w2.len() == 2 * m.hidden, slot, "output layer shape")?;
    check(
        finite(&m.w1) && finite(&m.b1) && finite(&m.w2) && finite(&m.b2),
        slot,
        "non-finite parameters",
    )
}

fn check_ngram(weights: &[f64], bias: f64, terms: usize, idf: &[f64], slot: &str) -> Result<()> {
    check(idf.len() == terms && finite(idf), slot, "idf table")?;
    check(
        weights.len() == terms && finite(weights) && bias.is_finite(),
        slot,
        "linear weights",
    )
}

fn load_classifier(dir: &Path, entry: ClassifierEntry) -> Result<Classifier> {
    let slot = entry.slot.as_str();
    let backend = entry
        .backend
        .parse()
        .map_err(|e: Error| Error::Bundle(format!("{slot}: {e}")))?;
    let features = load_spec(dir, slot, entry.features)?;
    let dim = features.total_dim();
    use crate::ensemble::BackendKind;
    Ok(match backend {
        BackendKind::Svm => {
            let model: SvmModel = read_json(dir, &entry.file)?;
            check_svm(&model, dim, slot)?;
            Classifier::Svm { features, model }
        }
        BackendKind::Mlp => {
            let model: MlpModel = read_json(dir, &entry.file)?;
            check_mlp(&model, dim, slot)?;
            Classifier::Mlp { features, model }
        }
        BackendKind::Ngram => {
            let model: NgramLinearModel = read_json(dir, &entry.file)?;
            let v = &model.vectorizer;
            check_ngram(&model.weights, model.bias, v.terms.len(), &v.idf, slot)?;
            Classifier::Ngram { model }
        }
        BackendKind::External { .. } => {
            let file: ExternalFile = read_json(dir, &entry.file)?;
            Classifier::External { path: file.path }
        }
    })
}

pub fn load_model(dir: &Path) -> Result<Model> {
    let manifest = read_manifest(dir)?;
    match manifest.strategy {
        Strategy::BinaryRelevance => {
            let mut slots: BTreeMap<Label, Classifier> = BTreeMap::new();
            for entry in manifest.classifiers {
                let label: Label = entry
                    .slot
                    .parse()
                    .map_err(|e: String| Error::Bundle(format!("manifest: {e}")))?;
                let clf = load_classifier(dir, entry)?;
                if slots.insert(label, clf).is_some() {
                    return Err(Error::Bundle(format!("manifest lists {label} twice")));
                }
            }
            let level1 = slots
                .remove(&Label::NonHostile)
                .ok_or_else(|| Error::Bundle("manifest has no non_hostile classifier".into()))?;
            let fallback = manifest.fallback.unwrap_or_default();
            let model = EnsembleModel::new(manifest.pipeline, level1, slots, fallback)
                .map_err(|e| Error::Bundle(e.to_string()))?;
            Ok(Model::BinaryRelevance(model))
        }
        Strategy::LabelPowerset => {
            let entry = manifest
                .classifiers
                .into_iter()
                .find(|e| e.slot == POWERSET_SLOT)
                .ok_or_else(|| Error::Bundle("manifest has no label_powerset classifier".into()))?;
            let m: LabelPowersetModel = read_json(dir, &entry.file)?;
            let n = m.combinations.len();
            check(
                n > 0 && m.weights.len() == n && m.biases.len() == n,
                POWERSET_SLOT,
                "combination count",
            )?;
            for w in &m.weights {
                check_ngram(
                    w,
                    0.0,
                    m.vectorizer.terms.len(),
                    &m.vectorizer.idf,
                    POWERSET_SLOT,
                )?;
            }
            check(finite(&m.biases), POWERSET_SLOT, "non-finite biases")?;
            Ok(Model::LabelPowerset(m))
        }
    }
}
