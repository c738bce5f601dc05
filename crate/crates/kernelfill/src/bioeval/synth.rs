//! Synthetic multi-class sequence generator.
//!
//! Stands in for paired marker-sequence datasets: each class gets a random
//! ancestor, each member is rendered twice from that ancestor — once through
//! a low-mutation "expensive" marker and once through a noisier "cheap"
//! marker — so the two renderings are correlated through their shared
//! ancestry.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Alphabet, Sequence};
use crate::error::{Error, Result};

/// Generator settings. Defaults mirror a 52-sample three-class layout
/// (10/31/11) with a well-separated expensive marker (5% mutation) and a
/// noisy cheap marker (20% mutation).
#[derive(Debug, Clone, Serialize)]
pub struct SynthConfig {
    pub class_sizes: Vec<usize>,
    pub alphabet: Alphabet,
    pub length: usize,
    /// Per-position mutation rate of the expensive marker rendering.
    pub marker_a_rate: f64,
    /// Per-position mutation rate of the cheap marker rendering.
    pub marker_b_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            class_sizes: vec![10, 31, 11],
            alphabet: Alphabet::Nucleotide,
            length: 200,
            marker_a_rate: 0.05,
            marker_b_rate: 0.20,
            seed: 0,
        }
    }
}

/// Two correlated renderings of the same samples, in identical order with
/// identical ids and class labels.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    /// Low-mutation marker (plays the expensive sequence source).
    pub expensive: Vec<Sequence>,
    /// High-mutation marker (plays the cheap base source).
    pub base: Vec<Sequence>,
}

impl SynthDataset {
    pub fn len(&self) -> usize {
        self.expensive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expensive.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.expensive
            .iter()
            .map(|s| s.class_label.expect("generator always labels"))
            .collect()
    }
}

fn random_sequence(alphabet: Alphabet, length: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let symbols = alphabet.symbols();
    (0..length)
        .map(|_| symbols[rng.random_range(0..symbols.len())])
        .collect()
}

/// Substitutes each position independently with probability `rate`, always
/// choosing a different symbol, so `rate = 0` reproduces the ancestor
/// exactly.
fn mutate(ancestor: &[u8], rate: f64, alphabet: Alphabet, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let symbols = alphabet.symbols();
    ancestor
        .iter()
        .map(|&current| {
            if rng.random::<f64>() < rate {
                let mut replacement = symbols[rng.random_range(0..symbols.len())];
                while replacement == current {
                    replacement = symbols[rng.random_range(0..symbols.len())];
                }
                replacement
            } else {
                current
            }
        })
        .collect()
}

/// Generates the dataset. Byte-identical output for a fixed config: one
/// ChaCha8 stream seeded with `config.seed`, consumed in a fixed order
/// (ancestors per class, then per member the expensive rendering followed by
/// the base rendering).
pub fn synth_dataset(config: &SynthConfig) -> Result<SynthDataset> {
    if config.class_sizes.is_empty() || config.class_sizes.contains(&0) {
        return Err(Error::InvalidInput(
            "every class needs at least one member".to_string(),
        ));
    }
    if config.length < 2 {
        return Err(Error::InvalidInput(
            "sequence length must be at least 2".to_string(),
        ));
    }
    for rate in [config.marker_a_rate, config.marker_b_rate] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidInput(format!(
                "mutation rate {rate} outside [0, 1]"
            )));
        }
    }
    let total: usize = config.class_sizes.iter().sum();
    let width = total.to_string().len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let ancestors: Vec<Vec<u8>> = config
        .class_sizes
        .iter()
        .map(|_| random_sequence(config.alphabet, config.length, &mut rng))
        .collect();

    let mut expensive = Vec::with_capacity(total);
    let mut base = Vec::with_capacity(total);
    let mut sample = 0usize;
    for (class, (&size, ancestor)) in config.class_sizes.iter().zip(&ancestors).enumerate() {
        for _ in 0..size {
            let id = format!("s{sample:0width$}");
            let a = mutate(ancestor, config.marker_a_rate, config.alphabet, &mut rng);
            let b = mutate(ancestor, config.marker_b_rate, config.alphabet, &mut rng);
            expensive.push(Sequence::new(
                id.clone(),
                String::from_utf8(a).expect("alphabet symbols are ASCII"),
                config.alphabet,
                Some(class),
            )?);
            base.push(Sequence::new(
                id,
                String::from_utf8(b).expect("alphabet symbols are ASCII"),
                config.alphabet,
                Some(class),
            )?);
            sample += 1;
        }
    }
    Ok(SynthDataset { expensive, base })
}
