//! Two-level binary relevance ensemble for multi-label hostile post
//! detection in Devanagari-script Hindi.
//!
//! A level-1 router separates hostile from non-hostile posts; hostile posts
//! go on to four independent level-2 classifiers (fake, hate, offensive,
//! defamation) whose positive votes are unioned. Posts routed hostile that
//! collect no label get a fallback assignment.
//!
//! - [`corpus_io`]: datasets, lexicons, embeddings, model bundles
//! - [`preprocess`]: entity extraction and cleaning
//! - [`features`]: thresholded one-hot vocabularies, pooling, lexicon counts
//! - [`learners`]: SVM, two-layer softmax network, n-gram logistic model,
//!   external score adapter
//! - [`ensemble`]: training, routing, fallback, label powerset alternative
//! - [`metrics`]: per-class reports, coarse and fine-grained F1

pub mod corpus_io;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod learners;
pub mod metrics;
pub mod preprocess;
pub mod synthetic;

pub use error::{Error, Result};
