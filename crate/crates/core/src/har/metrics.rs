//! Classification metrics: accuracy, macro F1, weighted F1.

use std::collections::BTreeMap;

use serde::Serialize;

use super::model::{Example, LinearModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: BTreeMap<String, ClassMetrics>,
}

/// Evaluate on a test set. Per-class F1 is `2PR/(P+R)` (0 when `P+R` is 0);
/// macro F1 averages over the classes present in the test set, weighted F1
/// weights them by support.
pub fn evaluate(model: &LinearModel, test: &[Example]) -> EvalMetrics {
    assert!(!test.is_empty(), "test set must be nonempty");
    let mut predictions = Vec::with_capacity(test.len());
    let mut correct = 0usize;
    for (x, label) in test {
        let predicted = model.predict_label(x).to_string();
        if &predicted == label {
            correct += 1;
        }
        predictions.push(predicted);
    }

    // Classes present in the test set, by true label.
    let mut support: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, label) in test {
        *support.entry(label).or_insert(0) += 1;
    }

    let mut per_class = BTreeMap::new();
    let mut macro_sum = 0.0;
    let mut weighted_sum = 0.0;
    for (&class, &sup) in &support {
        let tp = test
            .iter()
            .zip(&predictions)
            .filter(|((_, t), p)| t == class && p.as_str() == class)
            .count();
        let fp = test
            .iter()
            .zip(&predictions)
            .filter(|((_, t), p)| t != class && p.as_str() == class)
            .count();
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = tp as f64 / sup as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        macro_sum += f1;
        weighted_sum += f1 * sup as f64;
        per_class.insert(
            class.to_string(),
            ClassMetrics {
                precision,
                recall,
                f1,
                support: sup,
            },
        );
    }

    EvalMetrics {
        accuracy: correct as f64 / test.len() as f64,
        macro_f1: macro_sum / support.len() as f64,
        weighted_f1: weighted_sum / test.len() as f64,
        per_class,
    }
}

/// Mean and population standard deviation of a metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd {
        mean,
        std: var.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub accuracy: MeanStd,
    pub macro_f1: MeanStd,
    pub weighted_f1: MeanStd,
}

pub fn summarize(runs: &[EvalMetrics]) -> MetricsSummary {
    assert!(!runs.is_empty(), "no runs to summarize");
    MetricsSummary {
        accuracy: mean_std(&runs.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
        macro_f1: mean_std(&runs.iter().map(|r| r.macro_f1).collect::<Vec<_>>()),
        weighted_f1: mean_std(&runs.iter().map(|r| r.weighted_f1).collect::<Vec<_>>()),
    }
}
