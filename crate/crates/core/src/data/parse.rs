//! Line-level parser for the standard triplet dataset format:
//!
//! ```text
//! <tokens separated by spaces>####[([a_idx, ...], [o_idx, ...], '<POS|NEG|NEU>'), ...]
//! ```
//!
//! Index lists must be contiguous ascending runs; a gap is a hard parse error.

use crate::data::{Sentence, Sentiment, Span, Triplet};
use crate::error::{Error, Result};

/// Parse one dataset record.
pub fn parse_dataset_line(line: &str, domain: &str) -> Result<Sentence> {
    parse_line(line, domain).map_err(|cause| Error::Parse {
        path: "<input>".into(),
        line: 1,
        cause,
    })
}

/// Render a sentence in the canonical dataset format. Re-parsing the result
/// yields an equal `Sentence` (labels default to an empty triplet list).
pub fn serialize_sentence(sentence: &Sentence) -> String {
    let mut out = sentence.tokens().join(" ");
    out.push_str("####[");
    for (i, t) in sentence.gold().unwrap_or(&[]).iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('(');
        push_index_list(&mut out, t.aspect);
        out.push_str(", ");
        push_index_list(&mut out, t.opinion);
        out.push_str(", '");
        out.push_str(t.sentiment.tag());
        out.push_str("')");
    }
    out.push(']');
    out
}

fn push_index_list(out: &mut String, span: Span) {
    out.push('[');
    for (i, idx) in (span.start..=span.end).enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&idx.to_string());
    }
    out.push(']');
}

pub(crate) fn parse_line(line: &str, domain: &str) -> std::result::Result<Sentence, String> {
    // The triplet list never contains '#', so the last occurrence of the
    // separator is the real one even if a token happens to contain hashes.
    let sep = line
        .rfind("####")
        .ok_or_else(|| "missing '####' separator".to_string())?;
    let (text, rest) = (&line[..sep], &line[sep + 4..]);

    let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        return Err("empty sentence before separator".to_string());
    }

    let raw = parse_triplet_list(rest)?;
    let mut gold = Vec::with_capacity(raw.len());
    for (aspect_idx, opinion_idx, tag) in raw {
        let aspect = span_from_indices(&aspect_idx, tokens.len(), "aspect")?;
        let opinion = span_from_indices(&opinion_idx, tokens.len(), "opinion")?;
        let sentiment = Sentiment::from_tag(&tag)
            .ok_or_else(|| format!("unknown polarity tag '{tag}'"))?;
        gold.push(Triplet {
            aspect,
            opinion,
            sentiment,
        });
    }

    Sentence::new(tokens, domain, Some(gold)).map_err(|e| e.to_string())
}

fn span_from_indices(
    indices: &[usize],
    n_tokens: usize,
    what: &str,
) -> std::result::Result<Span, String> {
    let first = *indices
        .first()
        .ok_or_else(|| format!("{what} index list is empty"))?;
    for w in indices.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(format!(
                "{what} index list {indices:?} is not a contiguous ascending run"
            ));
        }
    }
    let last = *indices.last().unwrap();
    if last >= n_tokens {
        return Err(format!(
            "{what} index {last} out of range for {n_tokens}-token sentence"
        ));
    }
    Ok(Span::new(first, last))
}

type RawTriplet = (Vec<usize>, Vec<usize>, String);

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Cursor<'a> {
        Cursor {
            bytes: s.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> std::result::Result<(), String> {
        self.skip_ws();
        match self.peek() {
            Some(b) if b == c => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(format!(
                "expected '{}' at column {}, found '{}'",
                c as char, self.pos, b as char
            )),
            None => Err(format!(
                "expected '{}' at column {}, found end of line",
                c as char, self.pos
            )),
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn integer(&mut self) -> std::result::Result<usize, String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(format!("expected integer at column {start}"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse::<usize>()
            .map_err(|e| format!("bad integer at column {start}: {e}"))
    }

    fn index_list(&mut self) -> std::result::Result<Vec<usize>, String> {
        self.expect(b'[')?;
        let mut out = Vec::new();
        if self.eat(b']') {
            return Ok(out);
        }
        loop {
            out.push(self.integer()?);
            if self.eat(b']') {
                return Ok(out);
            }
            self.expect(b',')?;
        }
    }

    fn quoted_tag(&mut self) -> std::result::Result<String, String> {
        self.expect(b'\'')?;
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\'' {
            self.pos += 1;
        }
        if self.pos == self.bytes.len() {
            return Err("unterminated quoted tag".to_string());
        }
        let tag = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| "non-utf8 tag".to_string())?
            .to_string();
        self.pos += 1;
        Ok(tag)
    }
}

fn parse_triplet_list(s: &str) -> std::result::Result<Vec<RawTriplet>, String> {
    let mut cur = Cursor::new(s);
    cur.expect(b'[')?;
    let mut out = Vec::new();
    if !cur.eat(b']') {
        loop {
            cur.expect(b'(')?;
            let aspect = cur.index_list()?;
            cur.expect(b',')?;
            let opinion = cur.index_list()?;
            cur.expect(b',')?;
            let tag = cur.quoted_tag()?;
            cur.expect(b')')?;
            out.push((aspect, opinion, tag));
            if cur.eat(b']') {
                break;
            }
            cur.expect(b',')?;
        }
    }
    cur.skip_ws();
    if cur.pos != cur.bytes.len() {
        return Err(format!("trailing characters at column {}", cur.pos));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_standard_record() {
        let s = parse_dataset_line("The battery life is short####[([1, 2], [4], 'NEG')]", "14lap")
            .unwrap();
        assert_eq!(s.len(), 5);
        let gold = s.gold().unwrap();
        assert_eq!(gold.len(), 1);
        assert_eq!(gold[0].aspect, Span::new(1, 2));
        assert_eq!(gold[0].opinion, Span::new(4, 4));
        assert_eq!(gold[0].sentiment, Sentiment::Negative);
        assert_eq!(s.domain(), "14lap");
    }

    #[test]
    fn parses_empty_triplet_list() {
        let s = parse_dataset_line("ok####[]", "d").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.gold().unwrap().len(), 0);
    }

    #[test]
    fn parses_two_triplets_sharing_tokens() {
        let s = parse_dataset_line("a b####[([0], [1], 'POS'), ([1], [0], 'NEU')]", "d").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.gold().unwrap().len(), 2);
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = [
            "no separator here",
            "####[]",
            "a b####[([0, 2], [1], 'POS')]",      // gap in index run
            "a b####[([5], [1], 'POS')]",         // out of range
            "a b####[([0], [1], 'GREAT')]",       // unknown polarity
            "a b####[([0], [1], 'POS')",          // unterminated list
            "a b####[([], [1], 'POS')]",          // empty aspect
            "a b####[([0], [1], 'POS')] trailing",
        ];
        for case in cases {
            assert!(
                parse_dataset_line(case, "d").is_err(),
                "expected failure for {case:?}"
            );
        }
    }

    #[test]
    fn tolerates_flexible_spacing() {
        let s = parse_dataset_line("a b c####[ ( [0,1] , [2] , 'POS' ) ]", "d").unwrap();
        let gold = s.gold().unwrap();
        assert_eq!(gold[0].aspect, Span::new(0, 1));
    }

    fn arb_sentence() -> impl Strategy<Value = Sentence> {
        (2usize..10).prop_flat_map(|n| {
            let tokens = proptest::collection::vec("[a-z]{1,6}", n..=n);
            let triplets = proptest::collection::vec(
                (0..n, 0..n, 0..n, 0..n, 0usize..3).prop_map(move |(a0, a1, o0, o1, s)| Triplet {
                    aspect: Span::new(a0.min(a1), a0.max(a1)),
                    opinion: Span::new(o0.min(o1), o0.max(o1)),
                    sentiment: [Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral][s],
                }),
                0..3,
            );
            (tokens, triplets)
                .prop_map(|(tokens, gold)| Sentence::new(tokens, "d", Some(gold)).unwrap())
        })
    }

    proptest! {
        #[test]
        fn round_trip_canonical_form(sentence in arb_sentence()) {
            let line = serialize_sentence(&sentence);
            let reparsed = parse_dataset_line(&line, "d").unwrap();
            prop_assert_eq!(&reparsed, &sentence);
            // canonical form is a fixed point
            prop_assert_eq!(serialize_sentence(&reparsed), line);
        }
    }
}
