//! Dataset model and ingestion: triplet-annotated sentences, split loading,
//! transfer-pair construction and split statistics.

mod parse;
mod synthetic;

pub use parse::{parse_dataset_line, serialize_sentence};
pub use synthetic::{generate_synthetic_corpus, synthetic_domain_splits, SyntheticSpec};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentiment polarity of an aspect-opinion relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    /// Tag used in the dataset file format.
    pub fn tag(self) -> &'static str {
        match self {
            Sentiment::Positive => "POS",
            Sentiment::Negative => "NEG",
            Sentiment::Neutral => "NEU",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Sentiment> {
        match tag {
            "POS" => Some(Sentiment::Positive),
            "NEG" => Some(Sentiment::Negative),
            "NEU" => Some(Sentiment::Neutral),
            _ => None,
        }
    }
}

/// Contiguous token range, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        assert!(start <= end, "span start {start} > end {end}");
        Span { start, end }
    }

    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// One gold or predicted sentiment triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triplet {
    pub aspect: Span,
    pub opinion: Span,
    pub sentiment: Sentiment,
}

/// Tokenized review sentence with a domain tag and optional gold triplets.
///
/// `gold` is private: unlabeled sentences (target-domain training data) carry
/// `None` and the only way to read labels is through [`Sentence::gold`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<String>,
    domain: String,
    gold: Option<Vec<Triplet>>,
}

impl Sentence {
    pub fn new(
        tokens: Vec<String>,
        domain: impl Into<String>,
        gold: Option<Vec<Triplet>>,
    ) -> Result<Sentence> {
        if tokens.is_empty() {
            return Err(Error::Precondition("sentence has no tokens".into()));
        }
        if let Some(ts) = &gold {
            for t in ts {
                if t.aspect.end >= tokens.len() || t.opinion.end >= tokens.len() {
                    return Err(Error::Precondition(format!(
                        "triplet span out of range for {}-token sentence",
                        tokens.len()
                    )));
                }
            }
        }
        Ok(Sentence {
            tokens,
            domain: domain.into(),
            gold,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    /// Gold triplets, `None` for unlabeled sentences.
    pub fn gold(&self) -> Option<&[Triplet]> {
        self.gold.as_deref()
    }

    pub fn is_labeled(&self) -> bool {
        self.gold.is_some()
    }

    /// Drop gold annotations, turning this into an unlabeled sentence.
    pub fn strip_gold(&mut self) {
        self.gold = None;
    }
}

/// Per-split triplet counts, matching the published statistics tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub num_sentences: usize,
    pub num_positive: usize,
    pub num_neutral: usize,
    pub num_negative: usize,
}

/// The three labeled splits of one domain.
#[derive(Debug, Clone)]
pub struct DomainSplits {
    pub domain: String,
    pub train: Vec<Sentence>,
    pub dev: Vec<Sentence>,
    pub test: Vec<Sentence>,
}

/// A cross-domain transfer setting: labeled source splits plus an unlabeled
/// target training set. Target dev/test stay labeled for evaluation only.
#[derive(Debug, Clone)]
pub struct TransferPair {
    pub id: String,
    pub source_domain: String,
    pub target_domain: String,
    pub source_train: Vec<Sentence>,
    pub source_dev: Vec<Sentence>,
    pub target_train: Vec<Sentence>,
    pub target_dev: Option<Vec<Sentence>>,
    pub target_test: Vec<Sentence>,
}

/// Parse one split file: one record per line, order preserved.
pub fn load_split(path: impl AsRef<Path>, domain: &str) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let sentence = parse::parse_line(line, domain).map_err(|cause| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            cause,
        })?;
        out.push(sentence);
    }
    Ok(out)
}

/// Count sentences and triplets by sentiment.
pub fn dataset_statistics(sentences: &[Sentence]) -> Stats {
    let mut stats = Stats {
        num_sentences: sentences.len(),
        num_positive: 0,
        num_neutral: 0,
        num_negative: 0,
    };
    for s in sentences {
        for t in s.gold().unwrap_or(&[]) {
            match t.sentiment {
                Sentiment::Positive => stats.num_positive += 1,
                Sentiment::Neutral => stats.num_neutral += 1,
                Sentiment::Negative => stats.num_negative += 1,
            }
        }
    }
    stats
}

/// Combine two domains into a transfer pair, stripping target train labels.
pub fn build_transfer_pair(source: DomainSplits, target: DomainSplits) -> Result<TransferPair> {
    if source.domain == target.domain {
        return Err(Error::Config(format!(
            "source and target domain tags must differ, both are {:?}",
            source.domain
        )));
    }
    let mut target_train = target.train;
    for s in &mut target_train {
        s.strip_gold();
    }
    Ok(TransferPair {
        id: format!("{}->{}", source.domain, target.domain),
        source_domain: source.domain,
        target_domain: target.domain,
        source_train: source.train,
        source_dev: source.dev,
        target_train,
        target_dev: Some(target.dev),
        target_test: target.test,
    })
}

/// Published per-split statistics of the standard four-domain benchmark,
/// keyed by (domain, split) with domains 14res/14lap/15res/16res and splits
/// train/dev/test.
pub fn published_stats(domain: &str, split: &str) -> Option<Stats> {
    // (#S, #+, #O, #-)
    let cell = match (domain, split) {
        ("14res", "train") => (1266, 1692, 166, 480),
        ("14res", "dev") => (310, 404, 54, 119),
        ("14res", "test") => (492, 773, 66, 155),
        ("14lap", "train") => (906, 817, 126, 517),
        ("14lap", "dev") => (219, 169, 36, 141),
        ("14lap", "test") => (328, 364, 63, 116),
        ("15res", "train") => (605, 783, 25, 205),
        ("15res", "dev") => (148, 185, 11, 53),
        ("15res", "test") => (322, 317, 25, 143),
        ("16res", "train") => (857, 1015, 50, 329),
        ("16res", "dev") => (210, 252, 11, 76),
        ("16res", "test") => (326, 407, 29, 78),
        _ => return None,
    };
    Some(Stats {
        num_sentences: cell.0,
        num_positive: cell.1,
        num_neutral: cell.2,
        num_negative: cell.3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(line: &str) -> Sentence {
        parse_dataset_line(line, "d").unwrap()
    }

    #[test]
    fn statistics_counts_by_sentiment() {
        let sentences = vec![
            sent("the battery life is short####[([1, 2], [4], 'NEG')]"),
            sent("great food####[([1], [0], 'POS')]"),
            sent("ok####[]"),
            sent("a b####[([0], [1], 'POS'), ([1], [0], 'NEU')]"),
        ];
        let stats = dataset_statistics(&sentences);
        assert_eq!(stats.num_sentences, 4);
        assert_eq!(stats.num_positive, 2);
        assert_eq!(stats.num_neutral, 1);
        assert_eq!(stats.num_negative, 1);
    }

    #[test]
    fn statistics_empty() {
        let stats = dataset_statistics(&[]);
        assert_eq!(stats.num_sentences, 0);
        assert_eq!(stats.num_positive + stats.num_neutral + stats.num_negative, 0);
    }

    #[test]
    fn transfer_pair_strips_target_gold() {
        let (src, tgt) = synthetic_domain_splits(7, &SyntheticSpec::default());
        assert!(tgt.train.iter().all(|s| s.is_labeled()));
        let pair = build_transfer_pair(src, tgt).unwrap();
        assert!(pair.target_train.iter().all(|s| s.gold().is_none()));
        assert!(pair.source_train.iter().all(|s| s.is_labeled()));
        assert!(pair.target_test.iter().all(|s| s.is_labeled()));
        assert_ne!(pair.source_domain, pair.target_domain);
    }

    #[test]
    fn transfer_pair_rejects_same_domain() {
        let (src, _) = synthetic_domain_splits(7, &SyntheticSpec::default());
        let copy = src.clone();
        assert!(matches!(build_transfer_pair(src, copy), Err(Error::Config(_))));
    }

    #[test]
    fn load_split_reports_line_numbers() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "good line####[]").unwrap();
        writeln!(f, "bad line####[([0, 2], [1], 'POS')]").unwrap();
        drop(f);
        let err = load_split(&path, "d").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn load_split_handles_small_files() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("three.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "a b####[([0], [1], 'POS')]").unwrap();
        writeln!(f, "ok####[]").unwrap();
        writeln!(f, "c d e####[([0], [2], 'NEU')]").unwrap();
        drop(f);
        assert_eq!(load_split(&path, "d").unwrap().len(), 3);

        let empty = dir.path().join("empty.txt");
        std::fs::File::create(&empty).unwrap();
        assert!(load_split(&empty, "d").unwrap().is_empty());
    }

    #[test]
    fn published_table_sanity() {
        let s = published_stats("14lap", "test").unwrap();
        assert_eq!(s.num_sentences, 328);
        assert_eq!(s.num_positive, 364);
        assert_eq!(s.num_neutral, 63);
        assert_eq!(s.num_negative, 116);
        assert!(published_stats("14res", "foo").is_none());
    }
}
