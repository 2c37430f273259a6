//! Transformer encoder initialized from a local checkpoint directory.
//!
//! A checkpoint directory holds `config.json`, `vocab.txt` (WordPiece, one
//! piece per line) and `weights.json` (tensor name -> {shape, data}). The
//! identifier passed in the run configuration is either a directory path or
//! a name resolved under `$ASTE_MODEL_DIR`. All weights are registered as
//! trainable encoder parameters, so fine-tuning works the same way as with
//! the toy encoder.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoder::wordpiece::WordPieceVocab;
use crate::error::{Error, Result};
use crate::params::{ParamGroup, ParamId, ParamStore};
use crate::tape::{Tape, Var};

pub const ENV_MODEL_DIR: &str = "ASTE_MODEL_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainedConfig {
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub intermediate_size: usize,
    pub max_position: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_true")]
    pub lowercase: bool,
}

fn default_eps() -> f64 {
    1e-12
}

fn default_true() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug)]
struct LayerParams {
    query: (ParamId, ParamId),
    key: (ParamId, ParamId),
    value: (ParamId, ParamId),
    output: (ParamId, ParamId),
    attn_ln: (ParamId, ParamId),
    ffn_in: (ParamId, ParamId),
    ffn_out: (ParamId, ParamId),
    ffn_ln: (ParamId, ParamId),
}

#[derive(Debug)]
pub struct PretrainedEncoder {
    cfg: PretrainedConfig,
    vocab: WordPieceVocab,
    word_emb: ParamId,
    pos_emb: ParamId,
    type_emb: ParamId,
    emb_ln: (ParamId, ParamId),
    layers: Vec<LayerParams>,
}

fn resolve_dir(name: &str) -> Result<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.is_dir() {
        return Ok(direct);
    }
    if let Ok(root) = std::env::var(ENV_MODEL_DIR) {
        let nested = Path::new(&root).join(name);
        if nested.is_dir() {
            return Ok(nested);
        }
    }
    Err(Error::EncoderInit(format!(
        "unknown pretrained identifier {name:?}: not a checkpoint directory \
         and not found under ${ENV_MODEL_DIR}"
    )))
}

struct TensorLoader {
    tensors: HashMap<String, TensorJson>,
}

impl TensorLoader {
    fn take(
        &mut self,
        params: &mut ParamStore,
        name: &str,
        shape: (usize, usize),
    ) -> Result<ParamId> {
        let t = self
            .tensors
            .remove(name)
            .ok_or_else(|| Error::EncoderInit(format!("checkpoint is missing tensor {name:?}")))?;
        let declared: Vec<usize> = t.shape.clone();
        let expected: Vec<usize> = if shape.0 == 1 {
            vec![shape.1]
        } else {
            vec![shape.0, shape.1]
        };
        if declared != expected {
            return Err(Error::EncoderInit(format!(
                "tensor {name:?} has shape {declared:?}, expected {expected:?}"
            )));
        }
        if t.data.len() != shape.0 * shape.1 {
            return Err(Error::EncoderInit(format!(
                "tensor {name:?} has {} values, expected {}",
                t.data.len(),
                shape.0 * shape.1
            )));
        }
        Ok(params.add(format!("bert.{name}"), ParamGroup::Encoder, t.data, shape))
    }
}

impl PretrainedEncoder {
    pub fn load(identifier: &str, params: &mut ParamStore) -> Result<PretrainedEncoder> {
        let dir = resolve_dir(identifier)?;
        let cfg_path = dir.join("config.json");
        let cfg_text = std::fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
        let cfg: PretrainedConfig = serde_json::from_str(&cfg_text)
            .map_err(|e| Error::EncoderInit(format!("bad config.json: {e}")))?;
        if cfg.hidden_size == 0 || cfg.num_heads == 0 || cfg.hidden_size % cfg.num_heads != 0 {
            return Err(Error::EncoderInit(format!(
                "hidden_size {} must be a positive multiple of num_heads {}",
                cfg.hidden_size, cfg.num_heads
            )));
        }

        let vocab = WordPieceVocab::load(&dir.join("vocab.txt"), cfg.lowercase)?;

        let weights_path = dir.join("weights.json");
        let weights_text =
            std::fs::read_to_string(&weights_path).map_err(|e| Error::io(&weights_path, e))?;
        let tensors: HashMap<String, TensorJson> = serde_json::from_str(&weights_text)
            .map_err(|e| Error::EncoderInit(format!("bad weights.json: {e}")))?;
        let mut loader = TensorLoader { tensors };

        let h = cfg.hidden_size;
        let vocab_len = vocab.len();
        let word_emb = loader.take(params, "embeddings.word", (vocab_len, h))?;
        let pos_emb = loader.take(params, "embeddings.position", (cfg.max_position, h))?;
        let type_emb = loader.take(params, "embeddings.token_type", (2, h))?;
        let emb_ln = (
            loader.take(params, "embeddings.ln.weight", (1, h))?,
            loader.take(params, "embeddings.ln.bias", (1, h))?,
        );

        let mut layers = Vec::with_capacity(cfg.num_layers);
        for i in 0..cfg.num_layers {
            let mat = |l: &mut TensorLoader, p: &mut ParamStore, part: &str| -> Result<(ParamId, ParamId)> {
                Ok((
                    l.take(p, &format!("layer.{i}.attention.{part}.weight"), (h, h))?,
                    l.take(p, &format!("layer.{i}.attention.{part}.bias"), (1, h))?,
                ))
            };
            let query = mat(&mut loader, params, "query")?;
            let key = mat(&mut loader, params, "key")?;
            let value = mat(&mut loader, params, "value")?;
            let output = mat(&mut loader, params, "output")?;
            let attn_ln = (
                loader.take(params, &format!("layer.{i}.attention.ln.weight"), (1, h))?,
                loader.take(params, &format!("layer.{i}.attention.ln.bias"), (1, h))?,
            );
            let ffn_in = (
                loader.take(
                    params,
                    &format!("layer.{i}.ffn.intermediate.weight"),
                    (cfg.intermediate_size, h),
                )?,
                loader.take(
                    params,
                    &format!("layer.{i}.ffn.intermediate.bias"),
                    (1, cfg.intermediate_size),
                )?,
            );
            let ffn_out = (
                loader.take(
                    params,
                    &format!("layer.{i}.ffn.output.weight"),
                    (h, cfg.intermediate_size),
                )?,
                loader.take(params, &format!("layer.{i}.ffn.output.bias"), (1, h))?,
            );
            let ffn_ln = (
                loader.take(params, &format!("layer.{i}.ffn.ln.weight"), (1, h))?,
                loader.take(params, &format!("layer.{i}.ffn.ln.bias"), (1, h))?,
            );
            layers.push(LayerParams {
                query,
                key,
                value,
                output,
                attn_ln,
                ffn_in,
                ffn_out,
                ffn_ln,
            });
        }

        Ok(PretrainedEncoder {
            cfg,
            vocab,
            word_emb,
            pos_emb,
            type_emb,
            emb_ln,
            layers,
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.cfg.hidden_size
    }

    pub fn vocab(&self) -> &WordPieceVocab {
        &self.vocab
    }

    /// Run the transformer and pool subwords back to word vectors (first
    /// subword per word; [CLS]/[SEP] are dropped after alignment).
    pub fn encode_on(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        words: &[String],
    ) -> Result<Vec<Var>> {
        let (piece_ids, word_map) = self.vocab.tokenize(words);
        let n = piece_ids.len();
        if n > self.cfg.max_position {
            return Err(Error::Precondition(format!(
                "sequence of {n} pieces exceeds max_position {}",
                self.cfg.max_position
            )));
        }

        let h = self.cfg.hidden_size;
        let eps = self.cfg.layer_norm_eps;
        let word_table = tape.param(params, self.word_emb);
        let pos_table = tape.param(params, self.pos_emb);
        let type_table = tape.param(params, self.type_emb);
        let (g, b) = (
            tape.param(params, self.emb_ln.0),
            tape.param(params, self.emb_ln.1),
        );
        let type_row = tape.slice(type_table, 0, h);

        let mut states: Vec<Var> = piece_ids
            .iter()
            .enumerate()
            .map(|(pos, &id)| {
                let we = tape.slice(word_table, id * h, h);
                let pe = tape.slice(pos_table, pos * h, h);
                let sum = tape.add(we, pe);
                let sum = tape.add(sum, type_row);
                tape.layer_norm(sum, g, b, eps)
            })
            .collect();

        for layer in &self.layers {
            states = self.run_layer(tape, params, layer, &states);
        }

        Ok(word_map
            .iter()
            .map(|subs| states[subs[0]])
            .collect())
    }

    fn run_layer(
        &self,
        tape: &mut Tape,
        params: &ParamStore,
        layer: &LayerParams,
        states: &[Var],
    ) -> Vec<Var> {
        let h = self.cfg.hidden_size;
        let heads = self.cfg.num_heads;
        let dh = h / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let n = states.len();

        let project = |tape: &mut Tape, (w, b): (ParamId, ParamId), x: Var| {
            let wv = tape.param(params, w);
            let bv = tape.param(params, b);
            let y = tape.matvec(wv, h, h, x);
            tape.add(y, bv)
        };

        let qs: Vec<Var> = states.iter().map(|&x| project(tape, layer.query, x)).collect();
        let ks: Vec<Var> = states.iter().map(|&x| project(tape, layer.key, x)).collect();
        let vs: Vec<Var> = states.iter().map(|&x| project(tape, layer.value, x)).collect();

        // pre-slice per-head views of keys and values
        let k_heads: Vec<Vec<Var>> = (0..heads)
            .map(|a| ks.iter().map(|&k| tape.slice(k, a * dh, dh)).collect())
            .collect();
        let v_heads: Vec<Vec<Var>> = (0..heads)
            .map(|a| vs.iter().map(|&v| tape.slice(v, a * dh, dh)).collect())
            .collect();

        let mut after_attn = Vec::with_capacity(n);
        for i in 0..n {
            let mut head_ctx = Vec::with_capacity(heads);
            for a in 0..heads {
                let q = tape.slice(qs[i], a * dh, dh);
                let scores: Vec<Var> = (0..n)
                    .map(|j| {
                        let s = tape.dot(q, k_heads[a][j]);
                        tape.scale(s, scale)
                    })
                    .collect();
                let score_vec = tape.concat(&scores);
                let probs = tape.softmax(score_vec);
                head_ctx.push(tape.weighted_sum(probs, &v_heads[a]));
            }
            let ctx = tape.concat(&head_ctx);
            let out = project(tape, layer.output, ctx);
            let res = tape.add(states[i], out);
            let (g, b) = (
                tape.param(params, layer.attn_ln.0),
                tape.param(params, layer.attn_ln.1),
            );
            after_attn.push(tape.layer_norm(res, g, b, self.cfg.layer_norm_eps));
        }

        let mut out_states = Vec::with_capacity(n);
        for &x in &after_attn {
            let w1 = tape.param(params, layer.ffn_in.0);
            let b1 = tape.param(params, layer.ffn_in.1);
            let w2 = tape.param(params, layer.ffn_out.0);
            let b2 = tape.param(params, layer.ffn_out.1);
            let mid = tape.matvec(w1, self.cfg.intermediate_size, self.cfg.hidden_size, x);
            let mid = tape.add(mid, b1);
            let mid = tape.gelu(mid);
            let y = tape.matvec(w2, self.cfg.hidden_size, self.cfg.intermediate_size, mid);
            let y = tape.add(y, b2);
            let res = tape.add(x, y);
            let (g, b) = (
                tape.param(params, layer.ffn_ln.0),
                tape.param(params, layer.ffn_ln.1),
            );
            out_states.push(tape.layer_norm(res, g, b, self.cfg.layer_norm_eps));
        }
        out_states
    }
}

/// Write a checkpoint directory in the format `PretrainedEncoder::load`
/// expects. Used to materialize converted or synthetic models.
pub fn write_checkpoint(
    dir: &Path,
    cfg: &PretrainedConfig,
    vocab: &[String],
    tensors: &HashMap<String, (Vec<usize>, Vec<f64>)>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg_path = dir.join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(cfg).unwrap())
        .map_err(|e| Error::io(&cfg_path, e))?;
    let vocab_path = dir.join("vocab.txt");
    std::fs::write(&vocab_path, vocab.join("\n")).map_err(|e| Error::io(&vocab_path, e))?;
    let json: HashMap<&String, TensorJson> = tensors
        .iter()
        .map(|(name, (shape, data))| {
            (
                name,
                TensorJson {
                    shape: shape.clone(),
                    data: data.clone(),
                },
            )
        })
        .collect();
    let weights_path = dir.join("weights.json");
    std::fs::write(&weights_path, serde_json::to_string(&json).unwrap())
        .map_err(|e| Error::io(&weights_path, e))?;
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::test_fixture::write_tiny_model;
    use super::*;

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn unknown_identifier_fails_init() {
        let mut params = ParamStore::new();
        let err = PretrainedEncoder::load("no-such-model-anywhere", &mut params).unwrap_err();
        assert!(matches!(err, Error::EncoderInit(_)));
    }

    #[test]
    fn loads_and_encodes_word_granularity() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny_model(dir.path(), 42);
        let mut params = ParamStore::new();
        let enc = PretrainedEncoder::load(dir.path().to_str().unwrap(), &mut params).unwrap();

        let mut tape = Tape::new();
        let out = enc
            .encode_on(&mut tape, &params, &words(&["battery", "good", "screen"]))
            .unwrap();
        assert_eq!(out.len(), 3); // word granularity, CLS/SEP dropped
        for v in &out {
            assert_eq!(tape.value(*v).len(), 8);
            assert!(tape.value(*v).iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn deterministic_and_context_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny_model(dir.path(), 42);
        let mut params = ParamStore::new();
        let enc = PretrainedEncoder::load(dir.path().to_str().unwrap(), &mut params).unwrap();

        let encode = |ws: &[&str]| -> Vec<Vec<f64>> {
            let mut tape = Tape::new();
            let out = enc.encode_on(&mut tape, &params, &words(ws)).unwrap();
            out.iter().map(|v| tape.value(*v).to_vec()).collect()
        };
        assert_eq!(encode(&["good", "screen"]), encode(&["good", "screen"]));
        assert_ne!(encode(&["good", "screen"])[1], encode(&["bad", "screen"])[1]);
    }

    #[test]
    fn gradient_flows_to_pretrained_weights() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny_model(dir.path(), 1);
        let mut params = ParamStore::new();
        let enc = PretrainedEncoder::load(dir.path().to_str().unwrap(), &mut params).unwrap();

        let mut tape = Tape::new();
        let out = enc.encode_on(&mut tape, &params, &words(&["good"])).unwrap();
        let joined = tape.concat(&out);
        let sq = tape.mul(joined, joined);
        let loss = tape.sum(sq);
        let grads = tape.backward(loss);
        let gw = grads.of_param(enc.word_emb, params.get(enc.word_emb).data.len());
        assert!(gw.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn missing_tensor_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_tiny_model(dir.path(), 3);
        // corrupt: drop one tensor
        let weights_path = dir.path().join("weights.json");
        let text = std::fs::read_to_string(&weights_path).unwrap();
        let mut map: HashMap<String, TensorJson> = serde_json::from_str(&text).unwrap();
        map.remove("layer.1.ffn.output.bias");
        std::fs::write(&weights_path, serde_json::to_string(&map).unwrap()).unwrap();

        let mut params = ParamStore::new();
        let err = PretrainedEncoder::load(dir.path().to_str().unwrap(), &mut params).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("layer.1.ffn.output.bias"), "{msg}");
    }
}
