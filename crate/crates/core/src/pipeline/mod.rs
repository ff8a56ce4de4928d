//! Training of the three hierarchical extractors and the fused classifier.

mod config;
mod model;
mod objective;
mod train;

pub use config::{assignment_name, make_variant, TrainConfig, Variant};
pub use model::{EpochRecord, TrainedModel, CHECKPOINT_FILE, CONFIG_FILE, HISTORY_FILE};
pub use objective::{batch_kernel_bank, extractor_objective, system_objective, Batch, SystemStep};
pub use train::{split_accuracy, train, PkSampler};
