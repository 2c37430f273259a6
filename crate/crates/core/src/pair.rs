//! Aspect-opinion pair formation, pair representations with distance
//! features and 4-way sentiment-relation classification.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Sentiment, Span};
use crate::nn::{Activation, FeedForward};
use crate::params::{ParamGroup, ParamId, ParamStore};
use crate::tape::{Tape, Var};

pub const PAIR_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairClass {
    Positive,
    Negative,
    Neutral,
    Invalid,
}

impl PairClass {
    pub fn index(self) -> usize {
        match self {
            PairClass::Positive => 0,
            PairClass::Negative => 1,
            PairClass::Neutral => 2,
            PairClass::Invalid => 3,
        }
    }

    pub fn from_index(i: usize) -> PairClass {
        match i {
            0 => PairClass::Positive,
            1 => PairClass::Negative,
            2 => PairClass::Neutral,
            3 => PairClass::Invalid,
            _ => panic!("pair class index {i} out of range"),
        }
    }

    pub fn from_sentiment(s: Sentiment) -> PairClass {
        match s {
            Sentiment::Positive => PairClass::Positive,
            Sentiment::Negative => PairClass::Negative,
            Sentiment::Neutral => PairClass::Neutral,
        }
    }

    pub fn sentiment(self) -> Option<Sentiment> {
        match self {
            PairClass::Positive => Some(Sentiment::Positive),
            PairClass::Negative => Some(Sentiment::Negative),
            PairClass::Neutral => Some(Sentiment::Neutral),
            PairClass::Invalid => None,
        }
    }
}

/// One aspect-candidate × opinion-candidate combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub aspect: Span,
    pub opinion: Span,
}

/// Cartesian product ordered by (aspect rank, opinion rank). Self-pairs and
/// overlapping pairs are emitted; rejecting them is the job of the Invalid
/// relation class.
pub fn form_pairs(aspects: &[Span], opinions: &[Span]) -> Vec<PairKey> {
    let mut out = Vec::with_capacity(aspects.len() * opinions.len());
    for &aspect in aspects {
        for &opinion in opinions {
            out.push(PairKey { aspect, opinion });
        }
    }
    out
}

/// Token gap between the nearest boundaries of the two spans, 0 on overlap.
pub fn pair_distance(key: &PairKey) -> usize {
    let (a, o) = (key.aspect, key.opinion);
    if a.overlaps(&o) {
        0
    } else if o.start > a.end {
        o.start - a.end
    } else {
        a.start - o.end
    }
}

/// Default distance bucket lower bounds: {0, 1, 2, 3, 4, 5-7, 8-15, 16-31, 32+}.
pub fn default_distance_buckets() -> Vec<usize> {
    vec![0, 1, 2, 3, 4, 5, 8, 16, 32]
}

/// Trainable distance feature embedding over configurable buckets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceEmbedding {
    table: ParamId,
    /// Ascending bucket lower bounds; the first must be 0 so every
    /// nonnegative distance maps to exactly one bucket.
    pub buckets: Vec<usize>,
    pub dim: usize,
}

impl DistanceEmbedding {
    pub fn new(
        params: &mut ParamStore,
        buckets: Vec<usize>,
        dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> DistanceEmbedding {
        assert!(!buckets.is_empty() && buckets[0] == 0, "buckets must start at 0");
        assert!(buckets.windows(2).all(|w| w[0] < w[1]), "buckets must ascend");
        let table = params.add_xavier(
            "pair.distance",
            ParamGroup::Classifier,
            (buckets.len(), dim),
            rng,
        );
        DistanceEmbedding {
            table,
            buckets,
            dim,
        }
    }

    pub fn bucket_of(&self, distance: usize) -> usize {
        match self.buckets.binary_search(&distance) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    pub fn lookup(&self, tape: &mut Tape, params: &ParamStore, key: &PairKey) -> Var {
        let table = tape.param(params, self.table);
        let bucket = self.bucket_of(pair_distance(key));
        tape.slice(table, bucket * self.dim, self.dim)
    }

    pub fn param_id(&self) -> ParamId {
        self.table
    }
}

/// Pair scorer: representation building plus the 4-way relation classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairModule {
    pub distance: DistanceEmbedding,
    pub ffn: FeedForward,
}

impl PairModule {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        params: &mut ParamStore,
        span_rep_dim: usize,
        buckets: Vec<usize>,
        dist_dim: usize,
        ffn_hidden: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> PairModule {
        let distance = DistanceEmbedding::new(params, buckets, dist_dim, rng);
        let ffn = FeedForward::new(
            params,
            "pair.ffn",
            ParamGroup::Classifier,
            2 * span_rep_dim + dist_dim,
            ffn_hidden,
            PAIR_CLASSES,
            activation,
            rng,
        );
        PairModule { distance, ffn }
    }

    /// [s_aspect ; s_opinion ; f_distance].
    pub fn representation(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        aspect_rep: Var,
        opinion_rep: Var,
        key: &PairKey,
    ) -> Var {
        let dist = self.distance.lookup(tape, params, key);
        tape.concat(&[aspect_rep, opinion_rep, dist])
    }

    pub fn logits(&self, tape: &mut Tape, params: &ParamStore, rep: Var) -> Var {
        self.ffn.logits(tape, params, rep)
    }

    pub fn probs(&self, tape: &mut Tape, params: &ParamStore, rep: Var) -> Var {
        let logits = self.logits(tape, params, rep);
        tape.softmax(logits)
    }
}

/// Realized pair score used for decoding and pseudo-labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub key: PairKey,
    pub probs: [f64; PAIR_CLASSES],
}

impl PairScore {
    pub fn argmax(&self) -> (PairClass, f64) {
        let mut best = 0;
        for i in 1..PAIR_CLASSES {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        (PairClass::from_index(best), self.probs[best])
    }
}
