//! Small neural building blocks shared by the span, pair and adversarial
//! classifiers.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::params::{ParamGroup, ParamId, ParamStore};
use crate::tape::{Tape, Var};

/// Nonlinearity used inside the feed-forward classifiers; chosen once per run
/// and recorded in the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Gelu,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Tanh => tape.tanh(x),
            Activation::Relu => tape.relu(x),
            Activation::Gelu => tape.gelu(x),
        }
    }
}

/// One-hidden-layer feed-forward network with bias terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedForward {
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    pub activation: Activation,
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

impl FeedForward {
    pub fn new(
        params: &mut ParamStore,
        name: &str,
        group: ParamGroup,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> FeedForward {
        FeedForward {
            in_dim,
            hidden,
            out_dim,
            activation,
            w1: params.add_xavier(format!("{name}.w1"), group, (hidden, in_dim), rng),
            b1: params.add_zeros(format!("{name}.b1"), group, (1, hidden)),
            w2: params.add_xavier(format!("{name}.w2"), group, (out_dim, hidden), rng),
            b2: params.add_zeros(format!("{name}.b2"), group, (1, out_dim)),
        }
    }

    pub fn logits(&self, tape: &mut Tape, params: &ParamStore, x: Var) -> Var {
        debug_assert_eq!(tape.value(x).len(), self.in_dim);
        let w1 = tape.param(params, self.w1);
        let b1 = tape.param(params, self.b1);
        let w2 = tape.param(params, self.w2);
        let b2 = tape.param(params, self.b2);
        let mid = tape.matvec(w1, self.hidden, self.in_dim, x);
        let mid = tape.add(mid, b1);
        let mid = self.activation.apply(tape, mid);
        let out = tape.matvec(w2, self.out_dim, self.hidden, mid);
        tape.add(out, b2)
    }

    pub fn param_ids(&self) -> [ParamId; 4] {
        [self.w1, self.b1, self.w2, self.b2]
    }
}
