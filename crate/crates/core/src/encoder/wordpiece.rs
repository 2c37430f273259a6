//! Greedy longest-match WordPiece tokenization over a vocab file.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

#[derive(Debug)]
pub struct WordPieceVocab {
    ids: HashMap<String, usize>,
    lowercase: bool,
}

impl WordPieceVocab {
    /// Load a vocab file: one piece per line, line number = id.
    pub fn load(path: &Path, lowercase: bool) -> Result<WordPieceVocab> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_lines(text.lines().map(str::to_string), lowercase)
    }

    pub fn from_lines(
        lines: impl IntoIterator<Item = String>,
        lowercase: bool,
    ) -> Result<WordPieceVocab> {
        let mut ids = HashMap::new();
        for (i, line) in lines.into_iter().enumerate() {
            let piece = line.trim_end().to_string();
            if piece.is_empty() {
                continue;
            }
            ids.insert(piece, i);
        }
        for special in [UNK, CLS, SEP] {
            if !ids.contains_key(special) {
                return Err(Error::EncoderInit(format!(
                    "vocab is missing the {special} token"
                )));
            }
        }
        Ok(WordPieceVocab { ids, lowercase })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, piece: &str) -> Option<usize> {
        self.ids.get(piece).copied()
    }

    /// Split one word into piece ids; unknown words map to a single [UNK].
    pub fn tokenize_word(&self, word: &str) -> Vec<usize> {
        let word = if self.lowercase {
            word.to_lowercase()
        } else {
            word.to_string()
        };
        let chars: Vec<char> = word.chars().collect();
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while end > start {
                let mut candidate: String = chars[start..end].iter().collect();
                if start > 0 {
                    candidate = format!("##{candidate}");
                }
                if let Some(&id) = self.ids.get(&candidate) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => return vec![self.ids[UNK]],
            }
        }
        if pieces.is_empty() {
            vec![self.ids[UNK]]
        } else {
            pieces
        }
    }

    /// Tokenize a word sequence as `[CLS] pieces... [SEP]`, returning the
    /// piece ids and, per word, the subword positions it occupies.
    pub fn tokenize(&self, words: &[String]) -> (Vec<usize>, Vec<Vec<usize>>) {
        let mut ids = vec![self.ids[CLS]];
        let mut map = Vec::with_capacity(words.len());
        for word in words {
            let pieces = self.tokenize_word(word);
            map.push((ids.len()..ids.len() + pieces.len()).collect());
            ids.extend(pieces);
        }
        ids.push(self.ids[SEP]);
        (ids, map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> WordPieceVocab {
        let pieces = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "bat", "##tery", "##s", "life", "a"]
            .iter()
            .map(|s| s.to_string());
        WordPieceVocab::from_lines(pieces, true).unwrap()
    }

    #[test]
    fn greedy_longest_match() {
        let v = vocab();
        assert_eq!(v.tokenize_word("battery"), vec![4, 5]);
        assert_eq!(v.tokenize_word("batterys"), vec![4, 5, 6]);
        assert_eq!(v.tokenize_word("life"), vec![7]);
        assert_eq!(v.tokenize_word("xyz"), vec![1]); // UNK
        assert_eq!(v.tokenize_word("Battery"), vec![4, 5]); // lowercased
    }

    #[test]
    fn sentence_mapping_covers_every_word() {
        let v = vocab();
        let words: Vec<String> = ["battery", "life", "zzz"].iter().map(|s| s.to_string()).collect();
        let (ids, map) = v.tokenize(&words);
        assert_eq!(ids[0], 2); // CLS
        assert_eq!(*ids.last().unwrap(), 3); // SEP
        assert_eq!(map, vec![vec![1, 2], vec![3], vec![4]]);
        assert_eq!(ids.len(), 6);
    }

    #[test]
    fn missing_specials_rejected() {
        let pieces = ["just", "words"].iter().map(|s| s.to_string());
        assert!(WordPieceVocab::from_lines(pieces, false).is_err());
    }
}
