//! The pretrain/finetune evaluation protocol: real-only versus
//! virtual-pretrained arms across real-data fractions, seeds, and
//! stratified folds.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use homesim_core::dataset::{parse_windows_jsonl, TdostVariant};
use homesim_core::har::{
    evaluate, featurize, pretrain_finetune, stratified_folds, summarize, train, EvalMetrics,
    Example, MeanStd, TrainConfig,
};
use homesim_core::rng::Rng;

use crate::logging::Logger;

#[derive(Debug, Clone)]
pub struct TrainEvalArgs {
    pub virtual_path: PathBuf,
    pub real_path: PathBuf,
    pub variant: TdostVariant,
    pub fractions: Vec<f64>,
    pub folds: usize,
    pub seeds: u64,
    pub dim: usize,
    pub train: TrainConfig,
    /// Finetune on virtual + real combined instead of real alone.
    pub mix: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmResult {
    pub arm: &'static str,
    pub fraction: f64,
    pub seed: u64,
    pub fold: usize,
    pub metrics: EvalMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmSummary {
    pub arm: &'static str,
    pub fraction: f64,
    pub accuracy: MeanStd,
    pub macro_f1: MeanStd,
    pub weighted_f1: MeanStd,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainEvalReport {
    pub virtual_windows: usize,
    pub real_windows: usize,
    pub small_classes: Vec<String>,
    pub grid: Vec<ArmResult>,
    pub summaries: Vec<ArmSummary>,
}

pub const ARM_REAL_ONLY: &str = "real_only";
pub const ARM_PRETRAIN: &str = "pretrain_finetune";

/// Stratified sample of about `fraction` of `pool` (at least 2 samples),
/// preserving class proportions by largest-remainder allocation.
fn sample_fraction(pool: &[usize], labels: &[String], fraction: f64, rng: &mut Rng) -> Vec<usize> {
    if fraction >= 1.0 {
        return pool.to_vec();
    }
    let target = ((pool.len() as f64 * fraction).round() as usize).clamp(2, pool.len());
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in pool {
        by_class.entry(labels[i].as_str()).or_default().push(i);
    }
    let mut classes: Vec<Vec<usize>> = by_class.into_values().collect();
    for members in &mut classes {
        rng.shuffle(members);
    }
    let total = pool.len() as f64;
    let mut take = vec![0usize; classes.len()];
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(classes.len());
    let mut assigned = 0usize;
    for (c, members) in classes.iter().enumerate() {
        let exact = target as f64 * members.len() as f64 / total;
        take[c] = (exact.floor() as usize).min(members.len());
        assigned += take[c];
        remainders.push((c, exact - exact.floor()));
    }
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut i = 0;
    while assigned < target && i < remainders.len() * (target + 2) {
        let c = remainders[i % remainders.len()].0;
        if take[c] < classes[c].len() {
            take[c] += 1;
            assigned += 1;
        }
        i += 1;
    }
    let mut sample: Vec<usize> = classes
        .iter()
        .enumerate()
        .flat_map(|(c, members)| members[..take[c]].iter().copied())
        .collect();
    sample.sort_unstable();
    sample
}

fn load_examples(path: &PathBuf, variant: TdostVariant, dim: usize) -> Result<Vec<Example>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading windows {path:?}"))?;
    let windows = parse_windows_jsonl(&text)?;
    Ok(windows
        .iter()
        .map(|w| (featurize(w, variant, dim), w.label.clone()))
        .collect())
}

/// Run both arms over the full (fraction x seed x fold) grid.
pub fn run_train_eval(args: &TrainEvalArgs, logger: &Logger) -> Result<TrainEvalReport> {
    let virtual_examples = load_examples(&args.virtual_path, args.variant, args.dim)?;
    let real_examples = load_examples(&args.real_path, args.variant, args.dim)?;
    if real_examples.is_empty() {
        bail!("real windows file {:?} is empty", args.real_path);
    }
    let real_labels: Vec<String> = real_examples.iter().map(|(_, l)| l.clone()).collect();

    let mut grid = Vec::new();
    let mut small_classes = Vec::new();
    for seed in 0..args.seeds {
        let folds = stratified_folds(&real_labels, args.folds, seed)?;
        if seed == 0 {
            small_classes = folds.small_classes.clone();
        }
        for (fold_index, fold) in folds.folds.iter().enumerate() {
            let test: Vec<Example> = fold
                .test
                .iter()
                .map(|&i| real_examples[i].clone())
                .collect();
            for &fraction in &args.fractions {
                let mut rng = Rng::new(seed ^ (fold_index as u64).wrapping_mul(0x9E37_79B9));
                let picked = sample_fraction(&fold.train, &real_labels, fraction, &mut rng);
                let sampled: Vec<Example> =
                    picked.iter().map(|&i| real_examples[i].clone()).collect();
                let config = TrainConfig {
                    seed,
                    ..args.train.clone()
                };

                let real_only = train(&sampled, &config)
                    .with_context(|| format!("real-only arm (fraction {fraction})"))?;
                grid.push(ArmResult {
                    arm: ARM_REAL_ONLY,
                    fraction,
                    seed,
                    fold: fold_index,
                    metrics: evaluate(&real_only.model, &test),
                });

                let finetune_data: Vec<Example> = if args.mix {
                    virtual_examples.iter().chain(&sampled).cloned().collect()
                } else {
                    sampled.clone()
                };
                let pretrained = pretrain_finetune(&virtual_examples, &finetune_data, &config)
                    .with_context(|| format!("pretrain arm (fraction {fraction})"))?;
                grid.push(ArmResult {
                    arm: ARM_PRETRAIN,
                    fraction,
                    seed,
                    fold: fold_index,
                    metrics: evaluate(&pretrained.model, &test),
                });
                logger.debug(
                    "arm pair evaluated",
                    serde_json::json!({"seed": seed, "fold": fold_index, "fraction": fraction}),
                );
            }
        }
    }

    let mut summaries = Vec::new();
    for arm in [ARM_REAL_ONLY, ARM_PRETRAIN] {
        for &fraction in &args.fractions {
            let runs: Vec<EvalMetrics> = grid
                .iter()
                .filter(|r| r.arm == arm && r.fraction == fraction)
                .map(|r| r.metrics.clone())
                .collect();
            let s = summarize(&runs);
            summaries.push(ArmSummary {
                arm,
                fraction,
                accuracy: s.accuracy,
                macro_f1: s.macro_f1,
                weighted_f1: s.weighted_f1,
            });
        }
    }

    Ok(TrainEvalReport {
        virtual_windows: virtual_examples.len(),
        real_windows: real_examples.len(),
        small_classes,
        grid,
        summaries,
    })
}

/// A persisted model: weights, labels, and the configuration that made it.
#[derive(Debug, Clone, Serialize)]
pub struct SavedModel {
    pub config: TrainConfig,
    pub seed: u64,
    pub variant: TdostVariant,
    pub dim: usize,
    pub model: homesim_core::har::LinearModel,
}

/// Train the deployable model: pretrain on all virtual windows, finetune on
/// all real windows.
pub fn train_full_model(args: &TrainEvalArgs) -> Result<SavedModel> {
    let virtual_examples = load_examples(&args.virtual_path, args.variant, args.dim)?;
    let real_examples = load_examples(&args.real_path, args.variant, args.dim)?;
    let config = TrainConfig {
        seed: 0,
        ..args.train.clone()
    };
    let outcome = pretrain_finetune(&virtual_examples, &real_examples, &config)
        .context("training the full model")?;
    Ok(SavedModel {
        seed: config.seed,
        config,
        variant: args.variant,
        dim: args.dim,
        model: outcome.model,
    })
}

/// Aligned comparison table for human eyes.
pub fn render_text_table(report: &TrainEvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>9} {:>18} {:>18} {:>18}\n",
        "arm", "fraction", "accuracy", "macro_f1", "weighted_f1"
    ));
    for s in &report.summaries {
        out.push_str(&format!(
            "{:<18} {:>9.3} {:>10.4}±{:<7.4} {:>10.4}±{:<7.4} {:>10.4}±{:<7.4}\n",
            s.arm,
            s.fraction,
            s.accuracy.mean,
            s.accuracy.std,
            s.macro_f1.mean,
            s.macro_f1.std,
            s.weighted_f1.mean,
            s.weighted_f1.std,
        ));
    }
    out
}
