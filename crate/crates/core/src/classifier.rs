//! Per-sentence category sets and pair classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SentencePair};
use crate::lexicon::{GenderCategory, Lexicon};
use crate::tokenizer::{PronounMatcher, PronounOccurrence};

/// Subset of {M, F, A} present in a sentence. The empty set is the None
/// class.
///
/// Stored as a bitmask with M = 4, F = 2, A = 1, so the bitmask value is the
/// canonical index: None, A, F, FA, M, MA, FM, FMA.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategorySet(u8);

pub const CATEGORY_SET_LABELS: [&str; 8] = ["None", "A", "F", "FA", "M", "MA", "FM", "FMA"];

impl CategorySet {
    pub const NONE: CategorySet = CategorySet(0);

    fn bit(category: GenderCategory) -> u8 {
        match category {
            GenderCategory::Ambiguous => 1,
            GenderCategory::Feminine => 2,
            GenderCategory::Masculine => 4,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < 8).then_some(Self(index as u8))
    }

    pub fn from_label(label: &str) -> Option<Self> {
        CATEGORY_SET_LABELS.iter().position(|l| *l == label).map(|i| Self(i as u8))
    }

    pub fn all() -> impl Iterator<Item = CategorySet> {
        (0..8).map(CategorySet)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> &'static str {
        CATEGORY_SET_LABELS[self.index()]
    }

    pub fn contains(self, category: GenderCategory) -> bool {
        self.0 & Self::bit(category) != 0
    }

    pub fn with(self, category: GenderCategory) -> Self {
        Self(self.0 | Self::bit(category))
    }

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

impl FromIterator<GenderCategory> for CategorySet {
    fn from_iter<T: IntoIterator<Item = GenderCategory>>(iter: T) -> Self {
        iter.into_iter().fold(Self::NONE, Self::with)
    }
}

impl fmt::Display for CategorySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for CategorySet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for CategorySet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let label = String::deserialize(deserializer)?;
        Self::from_label(&label).ok_or_else(|| serde::de::Error::custom(format!("unknown category set `{label}`")))
    }
}

pub fn category_set(occurrences: &[PronounOccurrence]) -> CategorySet {
    occurrences.iter().map(|o| o.category).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairClassification {
    pub pair_id: String,
    pub en_set: CategorySet,
    pub ja_set: CategorySet,
    pub en_occurrences: Vec<PronounOccurrence>,
    pub ja_occurrences: Vec<PronounOccurrence>,
}

/// Matchers for both sides of a pair, built once and shared across threads.
#[derive(Debug, Clone)]
pub struct Classifier {
    source: PronounMatcher,
    target: PronounMatcher,
}

impl Classifier {
    pub fn new(source_lexicon: &Lexicon, target_lexicon: &Lexicon) -> Self {
        Self {
            source: PronounMatcher::new(source_lexicon),
            target: PronounMatcher::new(target_lexicon),
        }
    }

    pub fn source_matcher(&self) -> &PronounMatcher {
        &self.source
    }

    pub fn target_matcher(&self) -> &PronounMatcher {
        &self.target
    }

    pub fn classify(&self, pair: &SentencePair) -> PairClassification {
        let en_occurrences = self.source.extract(&pair.source.text);
        let ja_occurrences = self.target.extract(&pair.target.text);
        PairClassification {
            pair_id: pair.pair_id.clone(),
            en_set: category_set(&en_occurrences),
            ja_set: category_set(&ja_occurrences),
            en_occurrences,
            ja_occurrences,
        }
    }

    pub fn classify_sequential(&self, corpus: &Corpus) -> Vec<PairClassification> {
        corpus.pairs.iter().map(|p| self.classify(p)).collect()
    }

    #[cfg(feature = "parallel")]
    pub fn classify_parallel(&self, corpus: &Corpus) -> Vec<PairClassification> {
        use rayon::prelude::*;
        corpus.pairs.par_iter().map(|p| self.classify(p)).collect()
    }

    /// Classifies every pair, in corpus order.
    pub fn classify_corpus(&self, corpus: &Corpus) -> Vec<PairClassification> {
        #[cfg(feature = "parallel")]
        {
            self.classify_parallel(corpus)
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.classify_sequential(corpus)
        }
    }
}

pub fn classify_pair(pair: &SentencePair, en_lexicon: &Lexicon, ja_lexicon: &Lexicon) -> PairClassification {
    Classifier::new(en_lexicon, ja_lexicon).classify(pair)
}
