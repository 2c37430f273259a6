//! Contextual token encoders behind one pluggable interface.
//!
//! Two implementations: a deterministic seeded toy encoder for desk-scale
//! training and tests, and a transformer encoder initialized from a local
//! checkpoint directory (WordPiece subwords pooled back to word granularity).

mod pretrained;
mod toy;
mod wordpiece;

pub use pretrained::{write_checkpoint, PretrainedConfig, PretrainedEncoder};
pub use toy::ToyEncoder;
pub use wordpiece::WordPieceVocab;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tape::{Tape, Var};

/// One d-vector per word token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    rows: Vec<Vec<f64>>,
    hidden: usize,
}

impl TokenEmbeddings {
    pub fn new(rows: Vec<Vec<f64>>, hidden: usize) -> Result<TokenEmbeddings> {
        for row in &rows {
            if row.len() != hidden {
                return Err(Error::Shape(format!(
                    "embedding row has length {}, expected {hidden}",
                    row.len()
                )));
            }
            if !row.iter().all(|x| x.is_finite()) {
                return Err(Error::Shape("non-finite embedding entry".into()));
            }
        }
        Ok(TokenEmbeddings { rows, hidden })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Pretrained,
    Toy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// Hidden size of the toy encoder; the pretrained kind takes its width
    /// from the checkpoint.
    pub hidden_size: usize,
    /// Checkpoint directory (or name resolved under `ASTE_MODEL_DIR`).
    pub pretrained_name: Option<String>,
    /// Init seed for the toy encoder.
    pub seed: u64,
    /// Hash-embedding bucket count for the toy encoder.
    pub vocab_buckets: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: EncoderKind::Toy,
            hidden_size: 64,
            pretrained_name: None,
            seed: 0,
            vocab_buckets: 2048,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(Error::Config("encoder hidden_size must be > 0".into()));
        }
        if self.kind == EncoderKind::Pretrained && self.pretrained_name.is_none() {
            return Err(Error::Config(
                "pretrained encoder requires pretrained_name".into(),
            ));
        }
        Ok(())
    }
}

/// Encoder dispatch. Parameters live in the shared [`ParamStore`], so both
/// kinds participate in gradient flow during training.
pub enum Encoder {
    Toy(ToyEncoder),
    Pretrained(PretrainedEncoder),
}

impl Encoder {
    pub fn build(config: &EncoderConfig, params: &mut ParamStore) -> Result<Encoder> {
        config.validate()?;
        match config.kind {
            EncoderKind::Toy => Ok(Encoder::Toy(ToyEncoder::build(config, params))),
            EncoderKind::Pretrained => {
                let name = config.pretrained_name.as_deref().unwrap();
                Ok(Encoder::Pretrained(PretrainedEncoder::load(name, params)?))
            }
        }
    }

    pub fn hidden_size(&self) -> usize {
        match self {
            Encoder::Toy(e) => e.hidden_size(),
            Encoder::Pretrained(e) => e.hidden_size(),
        }
    }

    /// Encode onto an existing tape; returns one node per word token.
    pub fn encode_on(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        tokens: &[String],
    ) -> Result<Vec<Var>> {
        if tokens.is_empty() {
            return Err(Error::Precondition("cannot encode an empty sentence".into()));
        }
        match self {
            Encoder::Toy(e) => Ok(e.encode_on(tape, params, tokens)),
            Encoder::Pretrained(e) => e.encode_on(tape, params, tokens),
        }
    }

    /// Encode with frozen parameters, materializing plain vectors.
    pub fn encode(&self, params: &ParamStore, tokens: &[String]) -> Result<TokenEmbeddings> {
        let mut tape = Tape::new();
        let vars = self.encode_on(&mut tape, params, tokens)?;
        let rows: Vec<Vec<f64>> = vars.iter().map(|v| tape.value(*v).to_vec()).collect();
        TokenEmbeddings::new(rows, self.hidden_size())
    }
}

/// Pool subword vectors back to word granularity: each word is represented
/// by its first subword's vector.
pub fn align_subwords(
    word_count: usize,
    subword_vectors: &[Vec<f64>],
    word_to_subword: &[Vec<usize>],
) -> Result<TokenEmbeddings> {
    if word_to_subword.len() != word_count {
        return Err(Error::Alignment(format!(
            "map covers {} words, expected {word_count}",
            word_to_subword.len()
        )));
    }
    let hidden = subword_vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut rows = Vec::with_capacity(word_count);
    for (w, subs) in word_to_subword.iter().enumerate() {
        let first = *subs
            .first()
            .ok_or_else(|| Error::Alignment(format!("word {w} has no subwords")))?;
        let vec = subword_vectors
            .get(first)
            .ok_or_else(|| Error::Alignment(format!("subword index {first} out of range")))?;
        rows.push(vec.clone());
    }
    TokenEmbeddings::new(rows, hidden)
}
