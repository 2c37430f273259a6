//! Trainable parameter storage shared by the model, optimizer and
//! checkpointing.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Optimizer grouping: the two learning-rate groups of the trainer plus the
/// adversarial discriminator, which is stepped on its own schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamGroup {
    Encoder,
    Classifier,
    Discriminator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub group: ParamGroup,
    pub data: Vec<f64>,
    /// (rows, cols); vectors use (1, len).
    pub shape: (usize, usize),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    pub fn add(
        &mut self,
        name: impl Into<String>,
        group: ParamGroup,
        data: Vec<f64>,
        shape: (usize, usize),
    ) -> ParamId {
        assert_eq!(data.len(), shape.0 * shape.1);
        self.params.push(Param {
            name: name.into(),
            group,
            data,
            shape,
        });
        ParamId(self.params.len() - 1)
    }

    /// Uniform init in ±sqrt(6 / (fan_in + fan_out)).
    pub fn add_xavier(
        &mut self,
        name: impl Into<String>,
        group: ParamGroup,
        shape: (usize, usize),
        rng: &mut ChaCha8Rng,
    ) -> ParamId {
        let bound = (6.0 / (shape.0 + shape.1) as f64).sqrt();
        let data = (0..shape.0 * shape.1)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        self.add(name, group, data, shape)
    }

    pub fn add_zeros(
        &mut self,
        name: impl Into<String>,
        group: ParamGroup,
        shape: (usize, usize),
    ) -> ParamId {
        self.add(name, group, vec![0.0; shape.0 * shape.1], shape)
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params
            .iter()
            .all(|p| p.data.iter().all(|x| x.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn xavier_bounds_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let id = store.add_xavier("w", ParamGroup::Encoder, (10, 20), &mut rng);
        let bound = (6.0 / 30.0f64).sqrt();
        assert!(store.get(id).data.iter().all(|x| x.abs() < bound));

        let mut rng2 = ChaCha8Rng::seed_from_u64(1);
        let mut store2 = ParamStore::new();
        let id2 = store2.add_xavier("w", ParamGroup::Encoder, (10, 20), &mut rng2);
        assert_eq!(store.get(id).data, store2.get(id2).data);
    }

    #[test]
    fn store_roundtrips_through_json() {
        let mut store = ParamStore::new();
        store.add("a", ParamGroup::Classifier, vec![1.5, -2.25], (1, 2));
        let json = serde_json::to_string(&store).unwrap();
        let back: ParamStore = serde_json::from_str(&json).unwrap();
        assert_eq!(back.get(ParamId(0)).data, vec![1.5, -2.25]);
    }
}
