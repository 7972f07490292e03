//! Stratified k-fold splits with an 80/20 train/validation split of each
//! fold's non-test portion.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldOutcome {
    pub folds: Vec<FoldSplit>,
    /// Classes with fewer than k members; their samples sit in every fold's
    /// train portion and never in test.
    pub small_classes: Vec<String>,
}

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
    #[error("no samples to split")]
    Empty,
}

/// Split sample indices into k stratified folds. Per-class proportions in
/// each test fold are preserved within one sample; folds partition the
/// corpus exactly. Classes with fewer than k members are routed to every
/// train portion and reported.
pub fn stratified_folds(labels: &[String], k: usize, seed: u64) -> Result<FoldOutcome, FoldError> {
    if k < 2 {
        return Err(FoldError::BadK(k));
    }
    if labels.is_empty() {
        return Err(FoldError::Empty);
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }

    let mut rng = Rng::new(seed);
    let mut small_classes = Vec::new();
    let mut always_train: Vec<usize> = Vec::new();
    // Per eligible class: shuffled members chunked into k test slices.
    let mut class_chunks: Vec<Vec<Vec<usize>>> = Vec::new();
    for (label, mut members) in by_class {
        rng.shuffle(&mut members);
        if members.len() < k {
            small_classes.push(label.to_string());
            always_train.extend(members);
            continue;
        }
        let n = members.len();
        let base = n / k;
        let extra = n % k;
        let mut chunks = Vec::with_capacity(k);
        let mut at = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            chunks.push(members[at..at + size].to_vec());
            at += size;
        }
        class_chunks.push(chunks);
    }

    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let mut split = FoldSplit {
            train: always_train.clone(),
            val: Vec::new(),
            test: Vec::new(),
        };
        for chunks in &class_chunks {
            split.test.extend(&chunks[fold]);
            // Remaining members of this class, 80/20 into train/val.
            let rest: Vec<usize> = chunks
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != fold)
                .flat_map(|(_, c)| c.iter().copied())
                .collect();
            let train_n = ((rest.len() * 4) / 5).max(1).min(rest.len());
            split.train.extend(&rest[..train_n]);
            split.val.extend(&rest[train_n..]);
        }
        split.train.sort_unstable();
        split.val.sort_unstable();
        split.test.sort_unstable();
        folds.push(split);
    }
    Ok(FoldOutcome {
        folds,
        small_classes,
    })
}
