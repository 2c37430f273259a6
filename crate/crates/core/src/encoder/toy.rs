//! Seeded hash-embedding encoder with a window-3 mixing layer.
//!
//! Each token hashes to a trainable embedding row; a bidirectional
//! convolution over [previous, current, next] embeddings gives every token a
//! context-dependent representation without any pretrained weights.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::EncoderConfig;
use crate::params::{ParamGroup, ParamId, ParamStore};
use crate::tape::{Tape, Var};

pub struct ToyEncoder {
    hidden: usize,
    vocab_buckets: usize,
    embed: ParamId,
    mix_w: ParamId,
    mix_b: ParamId,
}

impl ToyEncoder {
    pub fn build(config: &EncoderConfig, params: &mut ParamStore) -> ToyEncoder {
        let d = config.hidden_size;
        let buckets = config.vocab_buckets.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let embed = params.add_xavier("toy.embed", ParamGroup::Encoder, (buckets, d), &mut rng);
        let mix_w = params.add_xavier("toy.mix.weight", ParamGroup::Encoder, (d, 3 * d), &mut rng);
        let mix_b = params.add_zeros("toy.mix.bias", ParamGroup::Encoder, (1, d));
        ToyEncoder {
            hidden: d,
            vocab_buckets: buckets,
            embed,
            mix_w,
            mix_b,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    fn bucket(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.vocab_buckets as u64) as usize
    }

    pub fn encode_on(&self, tape: &mut Tape, params: &ParamStore, tokens: &[String]) -> Vec<Var> {
        let d = self.hidden;
        let table = tape.param(params, self.embed);
        let w = tape.param(params, self.mix_w);
        let b = tape.param(params, self.mix_b);
        let zero = tape.constant(vec![0.0; d]);

        let embeds: Vec<Var> = tokens
            .iter()
            .map(|t| tape.slice(table, self.bucket(t) * d, d))
            .collect();

        (0..tokens.len())
            .map(|i| {
                let prev = if i > 0 { embeds[i - 1] } else { zero };
                let next = if i + 1 < tokens.len() { embeds[i + 1] } else { zero };
                let window = tape.concat(&[prev, embeds[i], next]);
                let mixed = tape.matvec(w, d, 3 * d, window);
                let shifted = tape.add(mixed, b);
                tape.tanh(shifted)
            })
            .collect()
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
