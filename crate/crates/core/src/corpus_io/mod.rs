//! Dataset ingestion, resource files and model-bundle persistence.

mod bundle;
mod corpus;
mod label;
mod resources;
pub mod table;

pub use bundle::{load_model, load_provenance, save_model, BUNDLE_FORMAT_VERSION};
pub use corpus::{
    corpus_stats, format_corpus, load_corpus, load_corpus_with, parse_corpus, write_corpus,
    ColumnMap, Corpus, CorpusStats, Labeling, Post, Split,
};
pub use label::{Label, LabelSet, LabelSetError};
pub use resources::{
    load_lexicon, load_sample_vectors, load_stopwords, load_word_vectors, read_word_vectors,
    EmbeddingTable, Lexicon, SampleVectorTable,
};
pub use table::Format;
