//! Span enumeration, span representations with width features, span-type
//! classification and dual-channel pruning.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Span;
use crate::nn::{Activation, FeedForward};
use crate::params::{ParamGroup, ParamId, ParamStore};
use crate::tape::{Tape, Var};

pub const SPAN_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpanClass {
    Aspect,
    Opinion,
    Invalid,
}

impl SpanClass {
    pub fn index(self) -> usize {
        match self {
            SpanClass::Aspect => 0,
            SpanClass::Opinion => 1,
            SpanClass::Invalid => 2,
        }
    }

    pub fn from_index(i: usize) -> SpanClass {
        match i {
            0 => SpanClass::Aspect,
            1 => SpanClass::Opinion,
            2 => SpanClass::Invalid,
            _ => panic!("span class index {i} out of range"),
        }
    }
}

/// All (start, end) with end-start+1 <= max_width, in lexicographic order.
pub fn enumerate_spans(n: usize, max_width: usize) -> Vec<Span> {
    let mut out = Vec::new();
    for start in 0..n {
        for end in start..n.min(start + max_width) {
            out.push(Span::new(start, end));
        }
    }
    out
}

/// Trainable span-width feature embedding. Widths 1..max_width map to their
/// own bucket; wider spans clamp to the last bucket.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WidthEmbedding {
    table: ParamId,
    pub max_width: usize,
    pub dim: usize,
}

impl WidthEmbedding {
    pub fn new(
        params: &mut ParamStore,
        max_width: usize,
        dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> WidthEmbedding {
        assert!(max_width >= 1);
        let table = params.add_xavier("span.width", ParamGroup::Classifier, (max_width, dim), rng);
        WidthEmbedding {
            table,
            max_width,
            dim,
        }
    }

    pub fn bucket(&self, span: Span) -> usize {
        span.width().min(self.max_width) - 1
    }

    pub fn lookup(&self, tape: &mut Tape, params: &ParamStore, span: Span) -> Var {
        let table = tape.param(params, self.table);
        tape.slice(table, self.bucket(span) * self.dim, self.dim)
    }

    pub fn param_id(&self) -> ParamId {
        self.table
    }
}

/// Span scorer: representation building plus the 3-way type classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpanModule {
    pub width: WidthEmbedding,
    pub ffn: FeedForward,
}

impl SpanModule {
    pub fn new(
        params: &mut ParamStore,
        hidden_size: usize,
        max_width: usize,
        width_dim: usize,
        ffn_hidden: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> SpanModule {
        let width = WidthEmbedding::new(params, max_width, width_dim, rng);
        let ffn = FeedForward::new(
            params,
            "span.ffn",
            ParamGroup::Classifier,
            2 * hidden_size + width_dim,
            ffn_hidden,
            SPAN_CLASSES,
            activation,
            rng,
        );
        SpanModule { width, ffn }
    }

    /// [h_start ; h_end ; f_width(start, end)]. Depends only on the two
    /// boundary token vectors and the span width.
    pub fn representation(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        token_vars: &[Var],
        span: Span,
    ) -> Var {
        assert!(
            span.end < token_vars.len(),
            "span ({}, {}) out of range for {} tokens",
            span.start,
            span.end,
            token_vars.len()
        );
        let width = self.width.lookup(tape, params, span);
        tape.concat(&[token_vars[span.start], token_vars[span.end], width])
    }

    pub fn logits(&self, tape: &mut Tape, params: &ParamStore, rep: Var) -> Var {
        self.ffn.logits(tape, params, rep)
    }

    pub fn probs(&self, tape: &mut Tape, params: &ParamStore, rep: Var) -> Var {
        let logits = self.logits(tape, params, rep);
        tape.softmax(logits)
    }
}

/// Realized span score used for pruning and pseudo-labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanScore {
    pub span: Span,
    pub probs: [f64; SPAN_CLASSES],
}

impl SpanScore {
    pub fn argmax(&self) -> (SpanClass, f64) {
        let mut best = 0;
        for i in 1..SPAN_CLASSES {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        (SpanClass::from_index(best), self.probs[best])
    }
}

/// ⌈n·z⌉ with guard against float round-off on exact integers.
pub fn prune_count(n: usize, z: f64) -> usize {
    ((n as f64 * z) - 1e-9).ceil().max(1.0) as usize
}

/// Dual-channel pruning: the top ⌈n·z⌉ spans by P(Aspect) and by P(Opinion).
/// Returns indices into `scored`, each channel sorted by score descending
/// with ties resolved in favor of earlier (lexicographically smaller) spans.
pub fn prune_spans(scored: &[SpanScore], n: usize, z: f64) -> (Vec<usize>, Vec<usize>) {
    assert!(z > 0.0 && z <= 1.0, "pruning ratio must be in (0, 1]");
    let k = prune_count(n, z).min(scored.len());
    let channel = |class: usize| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..scored.len()).collect();
        idx.sort_by(|&a, &b| {
            scored[b].probs[class]
                .total_cmp(&scored[a].probs[class])
                .then(a.cmp(&b))
        });
        idx.truncate(k);
        idx
    };
    (channel(0), channel(1))
}
