//! Hashed n-gram features over rendered sensor-event sentences.

use crate::dataset::{tdost, ActivityWindow, TdostVariant};
use crate::rng::fnv1a64;

pub const DEFAULT_FEATURE_DIM: usize = 4096;

/// L2-normalized term-frequency vector of hashed word 1- and 2-grams.
/// The norm is exactly 0 (empty input) or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn nonzeros(&self) -> usize {
        self.0.iter().filter(|&&x| x != 0.0).count()
    }
}

fn bucket(gram: &str, dim: usize) -> usize {
    (fnv1a64(gram.as_bytes()) % dim as u64) as usize
}

/// Render each event's sentence, split on whitespace, hash every token and
/// every adjacent token pair into `dim` buckets, sum counts over the window,
/// and L2-normalize. Bigrams do not cross sentence boundaries.
pub fn featurize(window: &ActivityWindow, variant: TdostVariant, dim: usize) -> FeatureVector {
    let mut counts = vec![0.0f64; dim];
    for event in &window.events {
        let sentence = tdost(event, variant);
        let tokens: Vec<&str> = sentence.split_whitespace().collect();
        for token in &tokens {
            counts[bucket(token, dim)] += 1.0;
        }
        for pair in tokens.windows(2) {
            counts[bucket(&format!("{} {}", pair[0], pair[1]), dim)] += 1.0;
        }
    }
    let norm = counts.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut counts {
            *x /= norm;
        }
    }
    FeatureVector(counts)
}
