//! Writes a synthetic corpus and matching resources to a directory.
//!
//! ```text
//! cargo run -p hostile-core --example make_synthetic -- data/synthetic
//! ```

use std::fs;
use std::path::PathBuf;

use hostile_core::corpus_io::{write_corpus, Format};
use hostile_core::synthetic::{generate, split, SyntheticConfig};

fn main() -> hostile_core::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "data/synthetic".into()),
    );
    fs::create_dir_all(&dir).map_err(|e| hostile_core::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let data = generate(&SyntheticConfig::default());
    let (train, test) = split(&data.corpus, 0.8);
    write_corpus(&train, &dir.join("train.tsv"), Format::Tsv)?;
    write_corpus(&test, &dir.join("test.tsv"), Format::Tsv)?;
    let files = [
        ("word_vectors.txt", data.word_vectors_text()),
        ("stopwords.txt", data.stopwords.join("\n") + "\n"),
        ("hate_words.txt", data.hate_words.join("\n") + "\n"),
        ("swear_words.txt", data.swear_words.join("\n") + "\n"),
    ];
    for (name, content) in files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| hostile_core::Error::Io { path, source: e })?;
    }
    println!(
        "wrote {} train and {} test posts to {}",
        train.len(),
        test.len(),
        dir.display()
    );
    Ok(())
}
