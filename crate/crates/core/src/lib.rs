//! Cross-domain aspect sentiment triplet extraction.
//!
//! A span-based extraction model trained jointly on labeled source-domain
//! data and unlabeled target-domain data, with a fine-grained cross-domain
//! contrastive objective at the phrase and aspect-opinion-pair levels,
//! exact-match F1 evaluation and kernel-based representation-discrepancy
//! analysis.

pub mod data;
pub mod encoder;
pub mod error;
pub mod params;
pub mod tape;

pub use data::{
    build_transfer_pair, dataset_statistics, generate_synthetic_corpus, load_split,
    parse_dataset_line, published_stats, serialize_sentence, synthetic_domain_splits,
    DomainSplits, Sentence, Sentiment, Span, Stats, SyntheticSpec, TransferPair, Triplet,
};
pub use error::{Error, Result};
pub use params::{Param, ParamGroup, ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
