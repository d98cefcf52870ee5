//! Keyword-driven synthetic corpora with matching word vectors and
//! lexicons, for tests and demos.
//!
//! Each hostile dimension owns a family of trigger words, hashtags and
//! mentions; non-hostile posts draw only from neutral vocabulary. Word
//! vectors place each family around its own random centroid.

use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus_io::{Corpus, EmbeddingTable, Label, LabelSet, Lexicon, Post, Split};
use crate::preprocess::normalize;

const FAKE: &[&str] = &["झूठ", "अफवाह", "फर्जी", "नकली", "भ्रम", "मनगढ़ंत"];
const HATE: &[&str] = &["नफरत", "गद्दार", "दुश्मन", "देशद्रोही", "जहर", "कट्टर"];
const OFFENSIVE: &[&str] = &["बेवकूफ", "कमीना", "गधा", "पागल", "नालायक", "घटिया"];
const DEFAMATION: &[&str] = &["घोटाला", "भ्रष्ट", "बदनाम", "रिश्वत", "दलाल", "लुटेरा"];
const NEUTRAL: &[&str] = &[
    "आज",
    "मौसम",
    "सुंदर",
    "खाना",
    "बाजार",
    "परिवार",
    "स्कूल",
    "बच्चे",
    "खेल",
    "मैच",
    "गाना",
    "फिल्म",
    "यात्रा",
    "गांव",
    "शहर",
    "सड़क",
    "बारिश",
    "धूप",
    "किताब",
    "पढ़ाई",
    "दोस्त",
    "त्योहार",
    "मिठाई",
    "सुबह",
    "शाम",
    "रात",
    "काम",
    "दफ्तर",
    "नौकरी",
    "किसान",
    "खेत",
    "फसल",
    "पानी",
    "नदी",
    "पहाड़",
    "जंगल",
    "मंदिर",
    "सरकार",
    "खबर",
    "लोग",
];
const STOPWORDS: &[&str] = &["है", "का", "की", "के", "में", "और", "यह", "से", "पर", "को"];
const FAKE_TAGS: &[&str] = &["#fakenews", "#अफवाह"];
const HATE_TAGS: &[&str] = &["#नफरत", "#गद्दार"];
const OFFENSIVE_TAGS: &[&str] = &["#बेशर्म"];
const DEFAMATION_TAGS: &[&str] = &["@neta_ji", "@mantri", "#घोटाला"];
const NEUTRAL_TAGS: &[&str] = &["#मौसम", "#cricket", "@news_desk", "🙏", "😊"];
const HOSTILE_EMOJI: &[&str] = &["😡", "🤬"];

fn family(label: Label) -> &'static [&'static str] {
    match label {
        Label::Fake => FAKE,
        Label::Hate => HATE,
        Label::Offensive => OFFENSIVE,
        Label::Defamation => DEFAMATION,
        Label::NonHostile => NEUTRAL,
    }
}

fn tags(label: Label) -> &'static [&'static str] {
    match label {
        Label::Fake => FAKE_TAGS,
        Label::Hate => HATE_TAGS,
        Label::Offensive => OFFENSIVE_TAGS,
        Label::Defamation => DEFAMATION_TAGS,
        Label::NonHostile => NEUTRAL_TAGS,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub posts: usize,
    pub seed: u64,
    pub hostile_fraction: f64,
    /// Chance that each hostile dimension is present in a hostile post, in
    /// canonical order.
    pub label_rates: [f64; 4],
    /// Chance that a post carries one trigger word of a dimension it does
    /// not have.
    pub noise: f64,
    pub embedding_dim: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            posts: 1000,
            seed: 42,
            hostile_fraction: 0.45,
            label_rates: [0.45, 0.35, 0.35, 0.3],
            noise: 0.03,
            embedding_dim: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub corpus: Corpus,
    /// Sorted by token.
    pub word_vectors: Vec<(String, Vec<f32>)>,
    pub stopwords: Vec<String>,
    pub hate_words: Vec<String>,
    pub swear_words: Vec<String>,
}

/// Standard normal draw by the Box-Muller transform.
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn pick<'a>(rng: &mut impl Rng, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("non-empty word family")
}

fn draw_labels(rng: &mut impl Rng, cfg: &SyntheticConfig) -> LabelSet {
    if rng.random::<f64>() >= cfg.hostile_fraction {
        return LabelSet::NON_HOSTILE;
    }
    let mut chosen: Vec<Label> = Label::HOSTILE
        .into_iter()
        .zip(cfg.label_rates)
        .filter_map(|(l, p)| (rng.random::<f64>() < p).then_some(l))
        .collect();
    if chosen.is_empty() {
        chosen.push(*Label::HOSTILE.choose(rng).expect("four labels"));
    }
    LabelSet::new(chosen).expect("hostile labels combine")
}

fn compose(rng: &mut impl Rng, labels: LabelSet, cfg: &SyntheticConfig) -> String {
    let mut words: Vec<&str> = Vec::new();
    for _ in 0..rng.random_range(3..9) {
        words.push(pick(rng, NEUTRAL));
    }
    for _ in 0..rng.random_range(1..4) {
        words.push(pick(rng, STOPWORDS));
    }
    for label in labels.iter() {
        if label.is_hostile() {
            for _ in 0..rng.random_range(1..3) {
                words.push(pick(rng, family(label)));
            }
        }
        if rng.random::<f64>() < 0.35 {
            words.push(pick(rng, tags(label)));
        }
    }
    if labels.is_hostile() && rng.random::<f64>() < 0.2 {
        words.push(pick(rng, HOSTILE_EMOJI));
    }
    for label in Label::HOSTILE {
        if !labels.contains(label) && rng.random::<f64>() < cfg.noise {
            words.push(pick(rng, family(label)));
        }
    }
    words.shuffle(rng);
    words.join(" ")
}

fn embed(rng: &mut impl Rng, centroid: &[f64], spread: f64) -> Vec<f32> {
    centroid
        .iter()
        .map(|c| (c + spread * gaussian(rng)) as f32)
        .collect()
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let posts = (0..cfg.posts)
        .map(|k| {
            let labels = draw_labels(&mut rng, cfg);
            let text = compose(&mut rng, labels, cfg);
            Post::new(format!("s{k:05}"), text, Some(labels))
        })
        .collect();
    let mut vectors = Vec::new();
    for label in Label::ALL {
        let centroid: Vec<f64> = (0..cfg.embedding_dim)
            .map(|_| 2.0 * gaussian(&mut rng))
            .collect();
        let spread = if label.is_hostile() { 0.5 } else { 1.5 };
        for w in family(label) {
            vectors.push((normalize(w), embed(&mut rng, &centroid, spread)));
        }
    }
    let zero = vec![0.0; cfg.embedding_dim];
    for w in STOPWORDS {
        vectors.push((normalize(w), embed(&mut rng, &zero, 1.0)));
    }
    vectors.sort_by(|a, b| a.0.cmp(&b.0));
    let owned = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>();
    let mut hate_words = owned(HATE);
    hate_words.extend(owned(&["हरामी", "कुत्ता"]));
    SyntheticData {
        corpus: Corpus::new(posts),
        word_vectors: vectors,
        stopwords: owned(STOPWORDS),
        hate_words,
        swear_words: owned(OFFENSIVE),
    }
}

impl SyntheticData {
    pub fn embedding_table(&self) -> EmbeddingTable {
        let dim = self.word_vectors.first().map_or(0, |(_, v)| v.len());
        let mut table = EmbeddingTable::new(dim);
        for (w, v) in &self.word_vectors {
            table.insert(w.clone(), v);
        }
        table
    }

    pub fn stopword_lexicon(&self) -> Lexicon {
        Lexicon::from_tokens("stopwords", self.stopwords.iter().map(String::as_str))
            .expect("non-empty")
    }

    pub fn hate_lexicon(&self) -> Lexicon {
        Lexicon::from_tokens("hate", self.hate_words.iter().map(String::as_str)).expect("non-empty")
    }

    pub fn swear_lexicon(&self) -> Lexicon {
        Lexicon::from_tokens("swear", self.swear_words.iter().map(String::as_str))
            .expect("non-empty")
    }

    /// word2vec text format with a `count dim` header.
    pub fn word_vectors_text(&self) -> String {
        let dim = self.word_vectors.first().map_or(0, |(_, v)| v.len());
        let mut out = format!("{} {dim}\n", self.word_vectors.len());
        for (w, v) in &self.word_vectors {
            out.push_str(w);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }
}

/// First `fraction` of the posts for training, the rest for testing.
pub fn split(corpus: &Corpus, fraction: f64) -> (Corpus, Corpus) {
    let cut = ((corpus.len() as f64) * fraction).round() as usize;
    let (a, b) = corpus.posts.split_at(cut.min(corpus.len()));
    (
        Corpus {
            posts: a.to_vec(),
            split: Split::Train,
        },
        Corpus {
            posts: b.to_vec(),
            split: Split::Test,
        },
    )
}
