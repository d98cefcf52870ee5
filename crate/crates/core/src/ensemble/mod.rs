//! Two-level binary relevance ensemble and the label-powerset alternative.
//!
//! Level 1 separates hostile from non-hostile posts and is trained on every
//! sample. The four level-2 classifiers are trained on hostile samples only
//! and consulted only for posts level 1 calls hostile.

mod powerset;
mod routing;

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{Corpus, EmbeddingTable, Label, LabelSet, Lexicon, Post, SampleVectorTable};
use crate::error::{Error, Result};
use crate::features::{
    build_spec, EmbeddingProviders, FeatureConfig, FeatureSpec, Recipe, RecipeLexicons,
};
use crate::learners::{
    train_mlp, train_ngram_linear, train_svm, BinaryClassifier, ExternalScores, Input, MlpModel,
    NgramLinearModel, SvmModel, TrainConfig,
};
use crate::preprocess::{EmojiRanges, PreparedText, Preprocessor};

pub use powerset::{train_label_powerset, LabelPowersetModel};
pub use routing::{fallback_resolve, route, FallbackStrategy, Prediction, Vote};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    BinaryRelevance,
    LabelPowerset,
}

/// Which learner fills a classifier slot. Written as `svm`, `mlp`, `ngram`
/// or `external:<path>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendKind {
    Svm,
    Mlp,
    Ngram,
    External { path: PathBuf },
}

impl BackendKind {
    pub fn uses_features(&self) -> bool {
        matches!(self, BackendKind::Svm | BackendKind::Mlp)
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(BackendKind::Svm),
            "mlp" => Ok(BackendKind::Mlp),
            "ngram" => Ok(BackendKind::Ngram),
            _ => match s.strip_prefix("external:") {
                Some(path) if !path.is_empty() => Ok(BackendKind::External { path: path.into() }),
                _ => Err(Error::Config(format!(
                    "unknown backend {s:?} (expected svm, mlp, ngram or external:<path>)"
                ))),
            },
        }
    }
}

impl TryFrom<String> for BackendKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BackendKind> for String {
    fn from(b: BackendKind) -> String {
        b.to_string()
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Svm => f.write_str("svm"),
            BackendKind::Mlp => f.write_str("mlp"),
            BackendKind::Ngram => f.write_str("ngram"),
            BackendKind::External { path } => write!(f, "external:{}", path.display()),
        }
    }
}

/// Default backend per slot; `non_hostile` names the level-1 router.
pub fn default_backends() -> BTreeMap<Label, BackendKind> {
    BTreeMap::from([
        (Label::Fake, BackendKind::Ngram),
        (Label::Hate, BackendKind::Mlp),
        (Label::Offensive, BackendKind::Ngram),
        (Label::Defamation, BackendKind::Svm),
        (Label::NonHostile, BackendKind::Ngram),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub strategy: Strategy,
    /// Slots missing from the map keep their default backend.
    pub backends: BTreeMap<Label, BackendKind>,
    pub features: FeatureConfig,
    pub fallback: FallbackStrategy,
    pub train: TrainConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            strategy: Strategy::default(),
            backends: default_backends(),
            features: FeatureConfig::default(),
            fallback: FallbackStrategy::default(),
            train: TrainConfig::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn backend(&self, label: Label) -> BackendKind {
        self.backends
            .get(&label)
            .cloned()
            .unwrap_or_else(|| default_backends()[&label].clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        for kind in crate::features::VocabKind::ALL {
            if self.features.min_freq(kind) == 0 {
                return Err(Error::Config(format!(
                    "min_freq for {} must be at least 1",
                    kind.as_str()
                )));
            }
        }
        if self.features.max_tokens == 0 {
            return Err(Error::Config("max_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything loaded from disk that training or prediction may consult.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub word_vectors: Option<EmbeddingTable>,
    pub sample_vectors: Option<SampleVectorTable>,
    pub stopwords: Option<Lexicon>,
    pub hate_lexicon: Option<Lexicon>,
    pub swear_lexicon: Option<Lexicon>,
    pub emoji_ranges: EmojiRanges,
    /// Scores for `external:` slots, keyed by slot label.
    pub external: BTreeMap<Label, ExternalScores>,
}

impl Resources {
    pub fn providers(&self) -> EmbeddingProviders<'_> {
        EmbeddingProviders {
            word_vectors: self.word_vectors.as_ref(),
            sample_vectors: self.sample_vectors.as_ref(),
        }
    }
}

/// Preprocessing settings frozen into a trained model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TextPipeline {
    pub stopwords: Option<Lexicon>,
    pub emoji_ranges: EmojiRanges,
}

impl TextPipeline {
    pub fn preprocessor(&self) -> Preprocessor {
        Preprocessor::new(self.stopwords.as_ref(), self.emoji_ranges.clone())
    }
}

/// A trained classifier slot with whatever it needs to score a post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum Classifier {
    Svm {
        features: FeatureSpec,
        model: SvmModel,
    },
    Mlp {
        features: FeatureSpec,
        model: MlpModel,
    },
    Ngram {
        model: NgramLinearModel,
    },
    External {
        path: PathBuf,
    },
}

impl Classifier {
    pub fn kind(&self) -> BackendKind {
        match self {
            Classifier::Svm { .. } => BackendKind::Svm,
            Classifier::Mlp { .. } => BackendKind::Mlp,
            Classifier::Ngram { .. } => BackendKind::Ngram,
            Classifier::External { path } => BackendKind::External { path: path.clone() },
        }
    }

    pub fn features(&self) -> Option<&FeatureSpec> {
        match self {
            Classifier::Svm { features, .. } | Classifier::Mlp { features, .. } => Some(features),
            _ => None,
        }
    }

    pub fn features_mut(&mut self) -> Option<&mut FeatureSpec> {
        match self {
            Classifier::Svm { features, .. } | Classifier::Mlp { features, .. } => Some(features),
            _ => None,
        }
    }

    fn vote(&self, slot: Label, post: &PostContext<'_>) -> Result<Vote> {
        let assembled;
        let features = match self.features() {
            Some(spec) => {
                assembled = spec.assemble(post.id, post.prepared(), post.resources.providers())?;
                Some(assembled.values.as_slice())
            }
            None => None,
        };
        let input = Input {
            id: post.id,
            text: post.text,
            features,
        };
        let clf: &dyn BinaryClassifier = match self {
            Classifier::Svm { model, .. } => model,
            Classifier::Mlp { model, .. } => model,
            Classifier::Ngram { model } => model,
            Classifier::External { path } => {
                post.resources.external.get(&slot).ok_or_else(|| {
                    Error::MissingResource(format!(
                        "external scores for {slot} ({})",
                        path.display()
                    ))
                })?
            }
        };
        Ok(Vote {
            positive: clf.predict(&input)?,
            prob: clf.prob(&input)?,
        })
    }
}

struct PostContext<'a> {
    id: &'a str,
    text: &'a str,
    preprocessor: &'a Preprocessor,
    resources: &'a Resources,
    prepared: OnceCell<PreparedText>,
}

impl<'a> PostContext<'a> {
    fn new(post: &'a Post, preprocessor: &'a Preprocessor, resources: &'a Resources) -> Self {
        PostContext {
            id: &post.id,
            text: &post.text,
            preprocessor,
            resources,
            prepared: OnceCell::new(),
        }
    }

    fn prepared(&self) -> &PreparedText {
        self.prepared
            .get_or_init(|| self.preprocessor.prepare(self.text))
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleModel {
    pipeline: TextPipeline,
    preprocessor: Preprocessor,
    level1: Classifier,
    level2: BTreeMap<Label, Classifier>,
    fallback: FallbackStrategy,
}

impl PartialEq for EnsembleModel {
    fn eq(&self, other: &Self) -> bool {
        self.pipeline == other.pipeline
            && self.level1 == other.level1
            && self.level2 == other.level2
            && self.fallback == other.fallback
    }
}

impl EnsembleModel {
    /// `level2` must hold exactly the four hostile labels.
    pub fn new(
        pipeline: TextPipeline,
        level1: Classifier,
        level2: BTreeMap<Label, Classifier>,
        fallback: FallbackStrategy,
    ) -> Result<Self> {
        if !level2.keys().copied().eq(Label::HOSTILE) {
            return Err(Error::Data(format!(
                "level-2 classifiers must be exactly fake, hate, offensive, defamation; got {:?}",
                level2.keys().map(|l| l.as_str()).collect::<Vec<_>>()
            )));
        }
        Ok(EnsembleModel {
            preprocessor: pipeline.preprocessor(),
            pipeline,
            level1,
            level2,
            fallback,
        })
    }

    pub fn pipeline(&self) -> &TextPipeline {
        &self.pipeline
    }

    pub fn level1(&self) -> &Classifier {
        &self.level1
    }

    pub fn level2(&self) -> &BTreeMap<Label, Classifier> {
        &self.level2
    }

    pub fn fallback(&self) -> FallbackStrategy {
        self.fallback
    }

    pub fn set_fallback(&mut self, fallback: FallbackStrategy) {
        self.fallback = fallback;
    }

    pub fn predict(&self, post: &Post, resources: &Resources) -> Result<Prediction> {
        let ctx = PostContext::new(post, &self.preprocessor, resources);
        route(
            || Ok(self.level1.vote(Label::NonHostile, &ctx)?.positive),
            |label| self.level2[&label].vote(label, &ctx),
            self.fallback,
        )
    }
}

/// A trained model of either strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    BinaryRelevance(EnsembleModel),
    LabelPowerset(LabelPowersetModel),
}

impl Model {
    pub fn strategy(&self) -> Strategy {
        match self {
            Model::BinaryRelevance(_) => Strategy::BinaryRelevance,
            Model::LabelPowerset(_) => Strategy::LabelPowerset,
        }
    }

    pub fn predict(&self, post: &Post, resources: &Resources) -> Result<Prediction> {
        match self {
            Model::BinaryRelevance(m) => m.predict(post, resources),
            Model::LabelPowerset(m) => Ok(Prediction {
                labels: m.predict(&post.text),
                fallback: false,
            }),
        }
    }
}

#[derive(Debug, Default)]
pub struct BatchOutput {
    /// Successful predictions in input order.
    pub predictions: Vec<(String, LabelSet)>,
    pub fallback_count: usize,
    /// Posts that could not be scored, by id.
    pub failures: Vec<(String, Error)>,
}

/// Predict every post; a failing post is recorded and skipped.
pub fn predict_batch(model: &Model, corpus: &Corpus, resources: &Resources) -> BatchOutput {
    let mut out = BatchOutput::default();
    for post in &corpus.posts {
        match model.predict(post, resources) {
            Ok(p) => {
                out.fallback_count += usize::from(p.fallback);
                out.predictions.push((post.id.clone(), p.labels));
            }
            Err(e) => out.failures.push((post.id.clone(), e)),
        }
    }
    out
}

/// Training facts for one classifier slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub slot: String,
    pub backend: String,
    pub samples: usize,
    pub positives: usize,
    pub feature_dim: Option<usize>,
    pub vocab_sizes: BTreeMap<String, usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub classifiers: Vec<SlotReport>,
}

/// Seed for one slot, derived from the run seed.
pub fn slot_seed(seed: u64, slot: usize) -> u64 {
    seed.wrapping_add((slot as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Check the labeled-corpus preconditions shared by both strategies and
/// return the label sets.
pub(crate) fn training_labels(corpus: &Corpus) -> Result<Vec<LabelSet>> {
    let labels = corpus.label_sets()?;
    let hostile: Vec<LabelSet> = labels.iter().copied().filter(|l| l.is_hostile()).collect();
    if hostile.is_empty() {
        return Err(Error::Data("training corpus has no hostile samples".into()));
    }
    if hostile.len() == labels.len() {
        return Err(Error::training(
            Label::NonHostile,
            "training corpus has no non-hostile samples",
        ));
    }
    for label in Label::HOSTILE {
        let pos = hostile.iter().filter(|l| l.contains(label)).count();
        let neg = hostile.len() - pos;
        if pos < 2 || neg < 2 {
            return Err(Error::training(
                label,
                format!("needs at least 2 positive and 2 negative hostile samples, found {pos} and {neg}"),
            ));
        }
    }
    Ok(labels)
}

struct TrainContext<'a> {
    posts: &'a [Post],
    labels: &'a [LabelSet],
    prepared: &'a [PreparedText],
    config: &'a EnsembleConfig,
    resources: &'a Resources,
}

struct SlotJob {
    slot: Label,
    backend: BackendKind,
    indices: Vec<usize>,
    targets: Vec<bool>,
    seed: u64,
}

fn train_slot(job: &SlotJob, ctx: &TrainContext<'_>) -> Result<(Classifier, SlotReport)> {
    let start = Instant::now();
    let slot = job.slot;
    let wrap = |e: Error| match e {
        Error::Training { .. } | Error::Config(_) => e,
        other => Error::training(slot, other.to_string()),
    };
    let classifier = match &job.backend {
        BackendKind::Svm | BackendKind::Mlp => {
            let samples: Vec<(LabelSet, &PreparedText)> = job
                .indices
                .iter()
                .map(|&i| (ctx.labels[i], &ctx.prepared[i]))
                .collect();
            let providers = ctx.resources.providers();
            let lexicons = RecipeLexicons {
                hate: ctx.resources.hate_lexicon.as_ref(),
                swear: ctx.resources.swear_lexicon.as_ref(),
            };
            let mut spec = build_spec(
                Recipe::for_label(slot),
                slot,
                &samples,
                &ctx.config.features,
                providers,
                lexicons,
            )?;
            if spec.total_dim() == 0 {
                return Err(Error::training(
                    slot,
                    "feature layout is empty; supply embeddings or lexicons",
                ));
            }
            let mut rows = job
                .indices
                .iter()
                .map(|&i| {
                    let post = &ctx.posts[i];
                    spec.assemble(&post.id, &ctx.prepared[i], providers)
                        .map(|f| f.values)
                })
                .collect::<Result<Vec<_>>>()?;
            spec.fit_standardization(&mut rows);
            if job.backend == BackendKind::Svm {
                let fit = train_svm(&rows, &job.targets, &ctx.config.train.svm).map_err(wrap)?;
                if !fit.converged {
                    log::warn!(
                        "{slot}: SVM stopped at the pass limit (violation {:.3e})",
                        fit.final_violation
                    );
                }
                Classifier::Svm {
                    features: spec,
                    model: fit.model,
                }
            } else {
                let fit = train_mlp(&rows, &job.targets, &ctx.config.train.mlp, job.seed)
                    .map_err(wrap)?;
                Classifier::Mlp {
                    features: spec,
                    model: fit.model,
                }
            }
        }
        BackendKind::Ngram => {
            let texts: Vec<&str> = job
                .indices
                .iter()
                .map(|&i| ctx.posts[i].text.as_str())
                .collect();
            let fit = train_ngram_linear(&texts, &job.targets, &ctx.config.train.ngram, job.seed)
                .map_err(wrap)?;
            Classifier::Ngram { model: fit.model }
        }
        BackendKind::External { path } => Classifier::External { path: path.clone() },
    };
    let report = SlotReport {
        slot: slot.as_str().to_owned(),
        backend: job.backend.to_string(),
        samples: job.indices.len(),
        positives: job.targets.iter().filter(|&&t| t).count(),
        feature_dim: classifier.features().map(FeatureSpec::total_dim),
        vocab_sizes: classifier
            .features()
            .map(|s| {
                s.vocabs()
                    .map(|v| (v.kind.as_str().to_owned(), v.len()))
                    .collect()
            })
            .unwrap_or_default(),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((classifier, report))
}

/// Train the five binary-relevance slots, running up to `jobs` at once.
pub fn train_binary_relevance(
    corpus: &Corpus,
    config: &EnsembleConfig,
    resources: &Resources,
    jobs: usize,
) -> Result<(EnsembleModel, TrainReport)> {
    config.validate()?;
    let labels = training_labels(corpus)?;
    let pipeline = TextPipeline {
        stopwords: resources.stopwords.clone(),
        emoji_ranges: resources.emoji_ranges.clone(),
    };
    let needs_features = Label::ALL
        .iter()
        .any(|&l| config.backend(l).uses_features());
    let prepared: Vec<PreparedText> = if needs_features {
        let pre = pipeline.preprocessor();
        corpus.posts.iter().map(|p| pre.prepare(&p.text)).collect()
    } else {
        Vec::new()
    };
    let hostile: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i].is_hostile())
        .collect();
    let mut slots = vec![SlotJob {
        slot: Label::NonHostile,
        backend: config.backend(Label::NonHostile),
        indices: (0..labels.len()).collect(),
        targets: labels.iter().map(|l| l.is_hostile()).collect(),
        seed: slot_seed(config.train.seed, Label::NonHostile.index()),
    }];
    for label in Label::HOSTILE {
        slots.push(SlotJob {
            slot: label,
            backend: config.backend(label),
            targets: hostile.iter().map(|&i| labels[i].contains(label)).collect(),
            indices: hostile.clone(),
            seed: slot_seed(config.train.seed, label.index()),
        });
    }
    let ctx = TrainContext {
        posts: &corpus.posts,
        labels: &labels,
        prepared: &prepared,
        config,
        resources,
    };
    let results = run_jobs(&slots, jobs, |job| train_slot(job, &ctx));
    let mut report = TrainReport::default();
    let mut trained = Vec::with_capacity(slots.len());
    for result in results {
        let (clf, slot_report) = result?;
        report.classifiers.push(slot_report);
        trained.push(clf);
    }
    let mut trained = trained.into_iter();
    let level1 = trained.next().expect("level-1 slot trained");
    let level2 = Label::HOSTILE.into_iter().zip(trained).collect();
    let model = EnsembleModel::new(pipeline, level1, level2, config.fallback)?;
    Ok((model, report))
}

/// Dispatch on the configured strategy.
pub fn train_ensemble(
    corpus: &Corpus,
    config: &EnsembleConfig,
    resources: &Resources,
    jobs: usize,
) -> Result<(Model, TrainReport)> {
    match config.strategy {
        Strategy::BinaryRelevance => {
            let (m, r) = train_binary_relevance(corpus, config, resources, jobs)?;
            Ok((Model::BinaryRelevance(m), r))
        }
        Strategy::LabelPowerset => {
            let (m, r) = train_label_powerset(corpus, config)?;
            Ok((Model::LabelPowerset(m), r))
        }
    }
}

/// Map `f` over `items` on up to `jobs` scoped threads, preserving order.
fn run_jobs<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("training thread panicked"))
            .collect()
    })
}
