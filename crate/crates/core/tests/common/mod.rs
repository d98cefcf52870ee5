use hostile_core::ensemble::Resources;
use hostile_core::synthetic::SyntheticData;

pub fn resources(data: &SyntheticData) -> Resources {
    Resources {
        word_vectors: Some(data.embedding_table()),
        stopwords: Some(data.stopword_lexicon()),
        hate_lexicon: Some(data.hate_lexicon()),
        swear_lexicon: Some(data.swear_lexicon()),
        ..Resources::default()
    }
}
