use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One of the five post classes.
///
/// The declaration order is the canonical order used for every
/// deterministic iteration and tie-break in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Fake,
    Hate,
    Offensive,
    Defamation,
    NonHostile,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Fake,
        Label::Hate,
        Label::Offensive,
        Label::Defamation,
        Label::NonHostile,
    ];

    /// The four hostile dimensions, in canonical order.
    pub const HOSTILE: [Label; 4] = [
        Label::Fake,
        Label::Hate,
        Label::Offensive,
        Label::Defamation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_hostile(self) -> bool {
        self != Label::NonHostile
    }

    /// Canonical lowercase name (`non_hostile` uses an underscore).
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fake => "fake",
            Label::Hate => "hate",
            Label::Offensive => "offensive",
            Label::Defamation => "defamation",
            Label::NonHostile => "non_hostile",
        }
    }

    /// Spelling used in dataset and prediction files (`non-hostile`).
    pub fn file_tag(self) -> &'static str {
        match self {
            Label::NonHostile => "non-hostile",
            other => other.as_str(),
        }
    }

    fn bit(self) -> u8 {
        1 << self.index()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    /// Accepts both the file spelling and the canonical name, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "fake" => Ok(Label::Fake),
            "hate" => Ok(Label::Hate),
            "offensive" => Ok(Label::Offensive),
            "defamation" => Ok(Label::Defamation),
            "non-hostile" | "non_hostile" | "nonhostile" => Ok(Label::NonHostile),
            other => Err(format!("unknown label tag {other:?}")),
        }
    }
}

/// A valid multi-label assignment: either `{non_hostile}` alone or one to
/// four hostile labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelSet(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelSetError {
    #[error("empty label set")]
    Empty,
    #[error("exclusive label violated: non-hostile combined with a hostile label")]
    ExclusiveViolated,
}

impl LabelSet {
    pub const NON_HOSTILE: LabelSet = LabelSet(1 << 4);

    pub fn new(labels: impl IntoIterator<Item = Label>) -> Result<Self, LabelSetError> {
        let bits = labels.into_iter().fold(0u8, |acc, l| acc | l.bit());
        Self::from_bits(bits)
    }

    fn from_bits(bits: u8) -> Result<Self, LabelSetError> {
        if bits == 0 {
            return Err(LabelSetError::Empty);
        }
        let nh = Label::NonHostile.bit();
        if bits & nh != 0 && bits != nh {
            return Err(LabelSetError::ExclusiveViolated);
        }
        Ok(LabelSet(bits))
    }

    /// Parse a comma-separated tag list such as `fake,hate` or `non-hostile`.
    pub fn parse_tags(s: &str) -> Result<Self, String> {
        let mut labels = Vec::new();
        for tag in s.split(',') {
            if tag.trim().is_empty() {
                continue;
            }
            labels.push(tag.parse::<Label>()?);
        }
        Self::new(labels).map_err(|e| e.to_string())
    }

    pub fn contains(self, label: Label) -> bool {
        self.0 & label.bit() != 0
    }

    pub fn is_hostile(self) -> bool {
        !self.contains(Label::NonHostile)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in canonical order.
    pub fn iter(self) -> impl Iterator<Item = Label> {
        Label::ALL.into_iter().filter(move |l| self.contains(*l))
    }

    /// Comma-joined file tags in canonical order; also the tie-break key
    /// for label-powerset combinations.
    pub fn to_tags(self) -> String {
        self.iter()
            .map(Label::file_tag)
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tags())
    }
}

impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_tags())
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        LabelSet::parse_tags(&s).map_err(serde::de::Error::custom)
    }
}
