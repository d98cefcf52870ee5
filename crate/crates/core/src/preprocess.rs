//! Tokenization, social-media entity extraction and text cleaning.
//!
//! Feature-based classifiers see the cleaned token stream: URLs, hashtags,
//! mentions, emojis and ASCII smileys are cut out first, the residual text is
//! split on whitespace and normalized, and stopwords are dropped last. Raw
//! text is kept alongside for the text classifiers that consume it directly.

use std::collections::BTreeSet;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus_io::Lexicon;
use crate::error::{Error, Result};

static PUNCT_EDGES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{P}+|\p{P}+$").unwrap());

static ENTITY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"(?P<url>(?i:https?://|www\.)\S+)",
        r"|(?P<hashtag>#\w+)",
        r"|(?P<mention>@\w+)",
        r"|(?P<smiley>:-\)|:-\(|:\)|:\(|:D\b|;\)|:P\b|:/|<3)",
    ))
    .unwrap()
});

/// The bundled emoticon list.
pub const SMILEYS: [&str; 9] = [":-)", ":)", ":(", ":-(", ":D", ";)", ":P", ":/", "<3"];

/// NFC, lowercase, and strip leading/trailing punctuation. May return an
/// empty string, which callers drop.
pub fn normalize(token: &str) -> String {
    let lowered: String = token.nfc().flat_map(char::to_lowercase).collect();
    let lowered: String = lowered.nfc().collect();
    PUNCT_EDGES.replace_all(&lowered, "").into_owned()
}

/// Key used for hashtag and mention vocabularies: NFC + lowercase, sigil kept.
pub fn entity_key(entity: &str) -> String {
    entity
        .nfc()
        .flat_map(char::to_lowercase)
        .collect::<String>()
        .nfc()
        .collect()
}

/// Inclusive codepoint ranges whose grapheme clusters count as emoji.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmojiRanges(pub Vec<(u32, u32)>);

impl Default for EmojiRanges {
    fn default() -> Self {
        EmojiRanges(vec![(0x1F300, 0x1FAFF), (0x2600, 0x27BF), (0xFE0F, 0xFE0F)])
    }
}

impl EmojiRanges {
    /// One range per line: `1F300-1FAFF` or a single `FE0F`; `#` comments.
    pub fn parse(content: &str, path: &Path) -> Result<Self> {
        let mut ranges = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let hex = |s: &str| {
                let s = s.trim().trim_start_matches("U+").trim_start_matches("u+");
                u32::from_str_radix(s, 16)
                    .map_err(|_| Error::parse(path, i + 1, format!("bad hex codepoint {s:?}")))
            };
            let (lo, hi) = match line.split_once('-') {
                Some((a, b)) => (hex(a)?, hex(b)?),
                None => {
                    let v = hex(line)?;
                    (v, v)
                }
            };
            if lo > hi {
                return Err(Error::parse(path, i + 1, "range start exceeds end"));
            }
            ranges.push((lo, hi));
        }
        if ranges.is_empty() {
            return Err(Error::parse(path, 1, "no emoji ranges"));
        }
        Ok(EmojiRanges(ranges))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, path)
    }

    pub fn contains(&self, c: char) -> bool {
        let c = c as u32;
        self.0.iter().any(|&(lo, hi)| (lo..=hi).contains(&c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Url,
    Hashtag,
    Mention,
    Emoji,
    Smiley,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub kind: EntityKind,
    pub range: Range<usize>,
}

/// Entities found in one post, each list in left-to-right order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialEntities {
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub urls: Vec<String>,
    pub emojis: Vec<String>,
    pub smileys: Vec<String>,
    /// Byte spans into the source text, sorted and non-overlapping.
    pub spans: Vec<EntitySpan>,
}

impl SocialEntities {
    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    fn push(&mut self, kind: EntityKind, text: &str, range: Range<usize>) {
        let list = match kind {
            EntityKind::Url => &mut self.urls,
            EntityKind::Hashtag => &mut self.hashtags,
            EntityKind::Mention => &mut self.mentions,
            EntityKind::Emoji => &mut self.emojis,
            EntityKind::Smiley => &mut self.smileys,
        };
        list.push(text.to_owned());
        self.spans.push(EntitySpan { kind, range });
    }
}

#[derive(Debug, Clone, Default)]
pub struct Extractor {
    pub emoji_ranges: EmojiRanges,
}

impl Extractor {
    pub fn new(emoji_ranges: EmojiRanges) -> Self {
        Extractor { emoji_ranges }
    }

    pub fn extract(&self, text: &str) -> SocialEntities {
        let mut out = SocialEntities::default();
        let mut cursor = 0;
        for caps in ENTITY.captures_iter(text) {
            let whole = caps.get(0).unwrap();
            self.scan_emojis(text, cursor..whole.start(), &mut out);
            let kind = if caps.name("url").is_some() {
                EntityKind::Url
            } else if caps.name("hashtag").is_some() {
                EntityKind::Hashtag
            } else if caps.name("mention").is_some() {
                EntityKind::Mention
            } else {
                EntityKind::Smiley
            };
            out.push(kind, whole.as_str(), whole.range());
            cursor = whole.end();
        }
        self.scan_emojis(text, cursor..text.len(), &mut out);
        out
    }

    fn scan_emojis(&self, text: &str, gap: Range<usize>, out: &mut SocialEntities) {
        let base = gap.start;
        for (offset, cluster) in text[gap].grapheme_indices(true) {
            if cluster
                .chars()
                .next()
                .is_some_and(|c| self.emoji_ranges.contains(c))
            {
                let start = base + offset;
                out.push(EntityKind::Emoji, cluster, start..start + cluster.len());
            }
        }
    }
}

pub fn extract_entities(text: &str) -> SocialEntities {
    Extractor::default().extract(text)
}

/// The text with every entity span replaced by a single space, so that
/// removal never glues neighbours into a new entity.
pub fn residual(text: &str, entities: &SocialEntities) -> String {
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for span in &entities.spans {
        out.push_str(&text[cursor..span.range.start]);
        out.push(' ');
        cursor = span.range.end;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Whitespace split, then [`normalize`] each piece; empties are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize)
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanedText {
    /// Normalized tokens of the entity-free text, stopwords removed.
    pub tokens: Vec<String>,
    /// Same, before stopword removal.
    pub raw_tokens: Vec<String>,
}

fn clean_with(
    extractor: &Extractor,
    text: &str,
    stopwords: &BTreeSet<String>,
) -> (SocialEntities, CleanedText) {
    let entities = extractor.extract(text);
    let raw_tokens = tokenize(&residual(text, &entities));
    let tokens = raw_tokens
        .iter()
        .filter(|t| !stopwords.contains(t.as_str()))
        .cloned()
        .collect();
    (entities, CleanedText { tokens, raw_tokens })
}

pub fn clean(text: &str, stopwords: &Lexicon) -> CleanedText {
    clean_with(&Extractor::default(), text, &stopwords.tokens).1
}

/// Everything the feature blocks need from one post's text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedText {
    pub entities: SocialEntities,
    pub cleaned: CleanedText,
    /// Tokenization of the full raw text, entities included (sigils stripped
    /// by normalization); lexicon counts run over this.
    pub all_tokens: Vec<String>,
}

/// Stopword set plus emoji configuration, applied identically at training
/// and prediction time.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    extractor: Extractor,
    stopwords: BTreeSet<String>,
}

impl Preprocessor {
    pub fn new(stopwords: Option<&Lexicon>, emoji_ranges: EmojiRanges) -> Self {
        Preprocessor {
            extractor: Extractor::new(emoji_ranges),
            stopwords: stopwords.map(|l| l.tokens.clone()).unwrap_or_default(),
        }
    }

    pub fn extractor(&self) -> &Extractor {
        &self.extractor
    }

    pub fn clean(&self, text: &str) -> CleanedText {
        clean_with(&self.extractor, text, &self.stopwords).1
    }

    pub fn prepare(&self, text: &str) -> PreparedText {
        let (entities, cleaned) = clean_with(&self.extractor, text, &self.stopwords);
        PreparedText {
            entities,
            cleaned,
            all_tokens: tokenize(text),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lexicon(tokens: &[&str]) -> Lexicon {
        Lexicon::from_tokens("stop", tokens.iter().copied()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("Bakra!"), "bakra");
        assert_eq!(normalize("चोर।"), "चोर");
        assert_eq!(normalize("चौकीदार"), "चौकीदार");
        assert_eq!(normalize("\"Hello,\""), "hello");
        assert_eq!(normalize("..."), "");
        // NFC: a + combining acute composes
        assert_eq!(normalize("A\u{301}"), "\u{e1}");
    }

    #[test]
    fn extracts_mixed_entities() {
        let e = extract_entities("@modi123 #FakeNews https://t.co/x 😀 :-) यह खबर");
        assert_eq!(e.mentions, vec!["@modi123"]);
        assert_eq!(e.hashtags, vec!["#FakeNews"]);
        assert_eq!(e.urls, vec!["https://t.co/x"]);
        assert_eq!(e.emojis, vec!["😀"]);
        assert_eq!(e.smileys, vec![":-)"]);
        assert_eq!(e.spans.len(), 5);
    }

    #[test]
    fn empty_text() {
        assert_eq!(extract_entities(""), SocialEntities::default());
    }

    #[test]
    fn consecutive_emojis_in_order() {
        let e = extract_entities("सही था ! 🤔👍😏");
        assert_eq!(e.emojis, vec!["🤔", "👍", "😏"]);
    }

    #[test]
    fn zwj_and_variation_selector_clusters() {
        let e = extract_entities("👨‍👩‍👧 ❤️ 👍🏽");
        assert_eq!(e.emojis, vec!["👨‍👩‍👧", "❤️", "👍🏽"]);
    }

    #[test]
    fn devanagari_hashtags_and_mentions() {
        let e = extract_entities("#भारत_माता की जय @राहुल_गांधी, देखो");
        assert_eq!(e.hashtags, vec!["#भारत_माता"]);
        assert_eq!(e.mentions, vec!["@राहुल_गांधी"]);
    }

    #[test]
    fn smiley_boundaries() {
        assert_eq!(extract_entities("time:Delhi").smileys, Vec::<String>::new());
        assert_eq!(extract_entities("ok :D").smileys, vec![":D"]);
        // the url wins over the ":/" inside it
        let e = extract_entities("see http://a.b/c");
        assert_eq!(e.urls, vec!["http://a.b/c"]);
        assert!(e.smileys.is_empty());
        assert_eq!(
            extract_entities("WWW.example.com").urls,
            vec!["WWW.example.com"]
        );
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("चौकीदार चोर है"), vec!["चौकीदार", "चोर", "है"]);
        assert_eq!(tokenize("a  b"), vec!["a", "b"]);
        assert_eq!(tokenize("  "), Vec::<String>::new());
    }

    #[test]
    fn clean_examples() {
        let stop = lexicon(&["यह", "है"]);
        let c = clean("यह खबर झूठी है #fake", &stop);
        assert_eq!(c.tokens, vec!["खबर", "झूठी"]);
        assert_eq!(c.raw_tokens, vec!["यह", "खबर", "झूठी", "है"]);
        assert!(clean("यह है @x #y https://z 😀 :)", &stop).tokens.is_empty());
        let only_emoji = clean("😀", &stop);
        assert!(only_emoji.tokens.is_empty() && only_emoji.raw_tokens.is_empty());
    }

    #[test]
    fn emoji_range_file() {
        let r = EmojiRanges::parse("# c\n1F600-1F64F\nU+2764\n", Path::new("r")).unwrap();
        assert_eq!(r.0, vec![(0x1F600, 0x1F64F), (0x2764, 0x2764)]);
        assert!(EmojiRanges::parse("zz\n", Path::new("r")).is_err());
        let ex = Extractor::new(r);
        assert_eq!(ex.extract("😀 🌍").emojis, vec!["😀"]);
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            Just("#टैग".to_string()),
            Just("@user_1".to_string()),
            Just("https://t.co/x".to_string()),
            Just("😀".to_string()),
            Just("👍🏽".to_string()),
            Just(":-)".to_string()),
            Just("<3".to_string()),
            Just("है".to_string()),
            Just("यह".to_string()),
            Just("चोर।".to_string()),
            Just("Bakra!".to_string()),
            Just(" ".to_string()),
            Just("\t".to_string()),
            "[a-zA-Z#@:()<3./,!]{1,6}",
            "[\u{0900}-\u{097F}]{1,5}",
        ];
        proptest::collection::vec(piece, 0..12).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,12}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn clean_is_idempotent(text in text_strategy()) {
            let stop = lexicon(&["है", "यह"]);
            let first = clean(&text, &stop);
            let again = clean(&first.tokens.join(" "), &stop);
            prop_assert_eq!(again.tokens, first.tokens.clone());
            // tokens are a subsequence of raw_tokens
            let mut it = first.raw_tokens.iter();
            for t in &first.tokens {
                prop_assert!(it.any(|r| r == t));
            }
        }

        #[test]
        fn residual_has_no_entities(text in text_strategy()) {
            let e = extract_entities(&text);
            let rest = residual(&text, &e);
            prop_assert!(extract_entities(&rest).is_empty(), "residual {:?}", rest);
            // spans sorted, disjoint, in bounds
            let mut last = 0;
            for s in &e.spans {
                prop_assert!(s.range.start >= last && s.range.end <= text.len());
                last = s.range.end;
            }
        }

        #[test]
        fn tokens_keep_source_order(words in proptest::collection::vec("[a-z]{1,5}", 0..8)) {
            let text = words.join(" ");
            prop_assert_eq!(tokenize(&text), words);
        }
    }
}
