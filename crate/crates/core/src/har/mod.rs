//! Activity classifier: hashed n-gram features over rendered sensor-event
//! sentences, a multinomial linear model trained by gradient descent, and
//! the pretrain-on-virtual / finetune-on-real protocol with stratified
//! k-fold evaluation.

mod features;
mod folds;
mod metrics;
mod model;

pub use features::{featurize, FeatureVector, DEFAULT_FEATURE_DIM};
pub use folds::{stratified_folds, FoldError, FoldOutcome, FoldSplit};
pub use metrics::{evaluate, summarize, ClassMetrics, EvalMetrics, MeanStd, MetricsSummary};
pub use model::{
    batch_loss_and_grad, continue_training, pretrain_finetune, train, train_with_labels, Example,
    LinearModel, TrainConfig, TrainError, TrainOutcome,
};
