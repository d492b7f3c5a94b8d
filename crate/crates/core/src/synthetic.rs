//! Generated corpora with known structure, used by the tests, the
//! acceptance suite and the examples.
//!
//! Two tasks are provided:
//!
//! * [`separable`]: the mention word and one context cue word both identify
//!   a fine type; every instance carries a coarse type and a fine type.
//! * [`trigger`]: mentions are uninformative and the label is fixed by a
//!   single trigger word placed at least five tokens away from the mention,
//!   surrounded by filler words.
//!
//! Word vectors are Gaussian with per-coordinate variance `1/dim`, so every
//! vector has norm close to one.

use crate::corpus::Instance;
use crate::embeddings::EmbeddingTable;
use crate::numeric::Rng;

/// A generated corpus and the embedding table covering its vocabulary.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub instances: Vec<Instance>,
    /// Token index of the label-determining trigger, when the task has one.
    pub triggers: Vec<Option<usize>>,
    pub embeddings: EmbeddingTable,
}

impl SyntheticCorpus {
    /// Splits off the last `n` instances.
    pub fn split_off(&mut self, n: usize) -> SyntheticCorpus {
        let at = self.instances.len() - n;
        SyntheticCorpus {
            instances: self.instances.split_off(at),
            triggers: self.triggers.split_off(at),
            embeddings: self.embeddings.clone(),
        }
    }
}

/// Gaussian vectors for every word, plus an `unk` entry.
pub fn random_embeddings(vocab: &[String], dim: usize, rng: &mut Rng) -> EmbeddingTable {
    scaled_embeddings(vocab.iter().map(|w| (w.clone(), 1.0)), dim, rng)
}

/// Like [`random_embeddings`], with a per-word norm multiplier.
fn scaled_embeddings(
    vocab: impl Iterator<Item = (String, f64)>,
    dim: usize,
    rng: &mut Rng,
) -> EmbeddingTable {
    let unit = 1.0 / (dim as f64).sqrt();
    let entries = vocab
        .chain(std::iter::once(("unk".to_string(), 1.0)))
        .map(|(w, scale)| (w, (0..dim).map(|_| scale * unit * rng.normal()).collect()))
        .collect::<Vec<_>>();
    EmbeddingTable::from_entries(dim, entries)
        .expect("well-formed synthetic table")
        .0
}

fn words(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

const COARSE: [&str; 2] = ["/person", "/location"];
const FINE: [&str; 4] = [
    "/person/actor",
    "/person/politician",
    "/location/city",
    "/location/country",
];

/// `n` instances over 6 types (2 coarse, 4 fine).
///
/// The fine type `f` determines both the mention vocabulary and a cue word
/// placed in the context; the coarse type follows from the fine one.
pub fn separable(n: usize, dim: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = Rng::new(seed);
    let mention_words: Vec<Vec<String>> = (0..FINE.len())
        .map(|f| words(&format!("name{f}_"), 4))
        .collect();
    let cue_words: Vec<String> = words("cue", FINE.len());
    let filler = words("w", 30);

    let mut vocab: Vec<String> = mention_words.concat();
    vocab.extend(cue_words.iter().cloned());
    vocab.extend(filler.iter().cloned());
    let embeddings = random_embeddings(&vocab, dim, &mut rng);

    let mut instances = Vec::with_capacity(n);
    for i in 0..n {
        let f = i % FINE.len();
        let left_len = 1 + rng.below(8);
        let right_len = rng.below(8);
        let mention_len = 1 + rng.below(2);
        let mut tokens: Vec<String> = (0..left_len).map(|_| rng.choose(&filler).clone()).collect();
        let cue_at = rng.below(left_len);
        tokens[cue_at] = cue_words[f].clone();
        let start = tokens.len();
        tokens.extend((0..mention_len).map(|_| rng.choose(&mention_words[f]).clone()));
        let end = tokens.len();
        tokens.extend((0..right_len).map(|_| rng.choose(&filler).clone()));
        instances.push(Instance {
            tokens,
            mention_start: start,
            mention_end: end,
            labels: vec![COARSE[f / 2].to_string(), FINE[f].to_string()],
        });
    }
    SyntheticCorpus {
        triggers: vec![None; n],
        instances,
        embeddings,
    }
}

/// Parameters of the trigger-word task.
#[derive(Clone, Copy, Debug)]
pub struct TriggerTask {
    pub types: usize,
    pub triggers_per_type: usize,
    pub fillers: usize,
    /// Context window the sentences are generated for.
    pub context: usize,
    /// Minimum token distance between trigger and mention (1 = adjacent).
    pub min_distance: usize,
    pub dim: usize,
    /// Norm of trigger vectors relative to the other words.
    pub trigger_scale: f64,
    /// Give both sides at least `context` tokens, so no padding reaches the
    /// encoders and the window edges carry no positional signal.
    pub full_windows: bool,
}

impl Default for TriggerTask {
    fn default() -> Self {
        TriggerTask {
            types: 4,
            triggers_per_type: 2,
            fillers: 40,
            context: 10,
            min_distance: 5,
            dim: 16,
            trigger_scale: 1.0,
            full_windows: false,
        }
    }
}

impl TriggerTask {
    pub fn label(k: usize) -> String {
        format!("/trigger/t{k}")
    }

    /// `n` instances; the trigger sits on a random side at a distance in
    /// `[min_distance, context]` from the mention.
    pub fn generate(&self, n: usize, seed: u64) -> SyntheticCorpus {
        let mut rng = Rng::new(seed);
        let trig: Vec<Vec<String>> = (0..self.types)
            .map(|k| words(&format!("trig{k}_"), self.triggers_per_type))
            .collect();
        let filler = words("w", self.fillers);
        let entities = words("ent", 12);
        let vocab = trig
            .concat()
            .into_iter()
            .map(|w| (w, self.trigger_scale))
            .chain(filler.iter().chain(&entities).map(|w| (w.clone(), 1.0)));
        let embeddings = scaled_embeddings(vocab, self.dim, &mut rng);

        let c = self.context;
        let mut instances = Vec::with_capacity(n);
        let mut triggers = Vec::with_capacity(n);
        for i in 0..n {
            let k = i % self.types;
            let distance = self.min_distance + rng.below(c - self.min_distance + 1);
            let on_left = rng.bernoulli(0.5);
            let floor = if self.full_windows { c } else { 0 };
            let span = |rng: &mut Rng, min: usize| {
                let min = min.max(floor);
                min + rng.below(c + 3 - min + 1)
            };
            let (left_len, right_len) = if on_left {
                (span(&mut rng, distance), span(&mut rng, 0))
            } else {
                (span(&mut rng, 0), span(&mut rng, distance))
            };
            let mention_len = 1 + rng.below(2);

            let mut tokens: Vec<String> =
                (0..left_len).map(|_| rng.choose(&filler).clone()).collect();
            let start = tokens.len();
            tokens.extend((0..mention_len).map(|_| rng.choose(&entities).clone()));
            let end = tokens.len();
            tokens.extend((0..right_len).map(|_| rng.choose(&filler).clone()));
            let at = if on_left {
                start - distance
            } else {
                end + distance - 1
            };
            tokens[at] = rng.choose(&trig[k]).clone();

            instances.push(Instance {
                tokens,
                mention_start: start,
                mention_end: end,
                labels: vec![Self::label(k)],
            });
            triggers.push(Some(at));
        }
        SyntheticCorpus {
            instances,
            triggers,
            embeddings,
        }
    }
}

/// Window position (`(is_left, 0-based index)`) of token `at` for a context
/// window of width `c`, or `None` when the token falls outside the window.
pub fn window_position(inst: &Instance, at: usize, c: usize) -> Option<(bool, usize)> {
    if at < inst.mention_start {
        let distance = inst.mention_start - at;
        (distance <= c).then(|| (true, c - distance))
    } else if at >= inst.mention_end {
        let distance = at - inst.mention_end + 1;
        (distance <= c).then(|| (false, distance - 1))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_label_index, window, WindowSpec};

    #[test]
    fn separable_has_six_types() {
        let s = separable(200, 8, 1);
        assert_eq!(s.instances.len(), 200);
        assert_eq!(build_label_index(&s.instances).unwrap().len(), 6);
        assert!(s.instances.iter().all(|i| i.labels.len() == 2));
    }

    #[test]
    fn trigger_geometry() {
        let task = TriggerTask::default();
        let s = task.generate(300, 9);
        let idx = build_label_index(&s.instances).unwrap();
        let spec = WindowSpec::new(task.context, 2);
        for (inst, trig) in s.instances.iter().zip(&s.triggers) {
            let at = trig.unwrap();
            assert!(inst.tokens[at].starts_with("trig"));
            // Exactly one trigger word per sentence.
            assert_eq!(
                inst.tokens.iter().filter(|t| t.starts_with("trig")).count(),
                1
            );
            let (left, pos) = window_position(inst, at, task.context).unwrap();
            let (w, _) = window(inst, &spec, &idx).unwrap();
            let side = if left { &w.left } else { &w.right };
            assert_eq!(side[pos], inst.tokens[at]);
            let distance = if left { task.context - pos } else { pos + 1 };
            assert!(distance >= task.min_distance);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = TriggerTask::default().generate(20, 4);
        let b = TriggerTask::default().generate(20, 4);
        assert_eq!(a.instances, b.instances);
        assert_eq!(a.embeddings.checksum(), b.embeddings.checksum());
    }
}
