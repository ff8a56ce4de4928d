use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::{fine_labels, inputs, Sample, Splits};
use crate::error::{Error, Result};
use crate::hierarchy::HierarchyTree;
use crate::tensornet::{sgd_step, OptimState};

use super::config::TrainConfig;
use super::model::{EpochRecord, TrainedModel};
use super::objective::{system_objective, Batch};

// Independent ChaCha streams so that source batches never depend on whether
// target batches are drawn.
const SOURCE_STREAM: u64 = 1;
const TARGET_STREAM: u64 = 2;

/// Cycles through shuffled per-class pools, drawing `P` distinct classes and
/// `K` samples of each per batch.
#[derive(Debug, Clone)]
pub struct PkSampler {
    pools: Vec<Vec<usize>>,
    cursors: Vec<usize>,
    classes: usize,
    per_class: usize,
    rng: ChaCha8Rng,
}

impl PkSampler {
    pub fn new(
        labels: &[usize],
        n_classes: usize,
        classes: usize,
        per_class: usize,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let mut pools = vec![Vec::new(); n_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= n_classes {
                return Err(Error::ConfigSplitMismatch(format!(
                    "label {y} outside the {n_classes}-class tree"
                )));
            }
            pools[y].push(i);
        }
        let pools: Vec<Vec<usize>> = pools.into_iter().filter(|p| !p.is_empty()).collect();
        if pools.len() < classes {
            return Err(Error::ConfigSplitMismatch(format!(
                "{classes} classes per batch but only {} present",
                pools.len()
            )));
        }
        let cursors = vec![usize::MAX; pools.len()];
        Ok(PkSampler {
            pools,
            cursors,
            classes,
            per_class,
            rng,
        })
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        let picked = sample(&mut self.rng, self.pools.len(), self.classes).into_vec();
        let mut out = Vec::with_capacity(self.classes * self.per_class);
        for c in picked {
            for _ in 0..self.per_class {
                if self.cursors[c] >= self.pools[c].len() {
                    self.pools[c].shuffle(&mut self.rng);
                    self.cursors[c] = 0;
                }
                out.push(self.pools[c][self.cursors[c]]);
                self.cursors[c] += 1;
            }
        }
        out
    }
}

/// Shuffled cycling over `0..n`.
#[derive(Debug, Clone)]
struct CyclicSampler {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl CyclicSampler {
    fn new(n: usize, rng: ChaCha8Rng) -> Self {
        CyclicSampler {
            order: (0..n).collect(),
            cursor: usize::MAX,
            rng,
        }
    }

    fn take(&mut self, k: usize) -> Vec<usize> {
        (0..k)
            .map(|_| {
                if self.cursor >= self.order.len() {
                    self.order.shuffle(&mut self.rng);
                    self.cursor = 0;
                }
                self.cursor += 1;
                self.order[self.cursor - 1]
            })
            .collect()
    }
}

fn accuracy(model: &TrainedModel, split: &[Sample]) -> Result<f64> {
    if split.is_empty() {
        return Ok(f64::NAN);
    }
    let pred = model.predict(&inputs(split))?;
    let correct = pred.iter().zip(split).filter(|(p, s)| **p == s.y3).count();
    Ok(correct as f64 / split.len() as f64)
}

/// Trains all four networks on PK-sampled source batches, each paired with an
/// equally sized batch of unlabeled target inputs when DA is on.
///
/// Only the inputs of `splits.train_target` are read. The final-epoch weights
/// are returned.
pub fn train(cfg: &TrainConfig, splits: &Splits, tree: &HierarchyTree) -> Result<TrainedModel> {
    cfg.validate()?;
    let d_in = splits
        .d_in()
        .ok_or_else(|| Error::ConfigSplitMismatch("empty source training split".into()))?;
    if cfg.use_da && splits.train_target.len() < 2 {
        return Err(Error::ConfigSplitMismatch(
            "domain adaptation needs at least 2 target training samples".into(),
        ));
    }
    let n_fine = tree.n_fine();
    let source_x = inputs(&splits.train_source);
    let fine = fine_labels(&splits.train_source);
    let level_labels: Vec<Vec<usize>> = cfg
        .level_assignment
        .iter()
        .map(|&lv| tree.project_labels(&fine, lv))
        .collect::<Result<_>>()
        .map_err(|e| Error::ConfigSplitMismatch(e.to_string()))?;
    let target_x = if cfg.use_da {
        Some(splits.train_target.inputs())
    } else {
        None
    };
    if target_x.as_ref().is_some_and(|t| t.cols() != d_in) {
        return Err(Error::ConfigSplitMismatch(
            "source and target widths differ".into(),
        ));
    }

    let mut model = TrainedModel::init(cfg, d_in, n_fine);
    let mut opts = Vec::with_capacity(4);
    for net in model.extractors.iter().chain([&model.classifier]) {
        opts.push(OptimState::new(
            net,
            cfg.lr,
            cfg.momentum,
            cfg.weight_decay,
        )?);
    }

    let mut src_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    src_rng.set_stream(SOURCE_STREAM);
    let mut tgt_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    tgt_rng.set_stream(TARGET_STREAM);
    let mut pk = PkSampler::new(&fine, n_fine, cfg.pk_classes, cfg.pk_samples, src_rng)?;
    let mut tgt_sampler = target_x
        .as_ref()
        .map(|t| CyclicSampler::new(t.rows(), tgt_rng));

    let batches_per_epoch = (source_x.rows() / cfg.batch_size).max(1);
    for epoch in 1..=cfg.epochs {
        let mut sums = [0.0f64; 7];
        for _ in 0..batches_per_epoch {
            let idx = pk.next_batch();
            let batch = Batch {
                source_x: source_x.select_rows(&idx),
                labels: [0, 1, 2].map(|i| idx.iter().map(|&j| level_labels[i][j]).collect()),
                fine: idx.iter().map(|&j| fine[j]).collect(),
                target_x: match (&target_x, &mut tgt_sampler) {
                    (Some(t), Some(s)) => Some(t.select_rows(&s.take(cfg.batch_size))),
                    _ => None,
                },
            };
            let step = system_objective(&model, &batch, None)?;
            for i in 0..3 {
                sums[i] += step.triplet[i];
                sums[3 + i] += step.mmd[i];
            }
            sums[6] += step.ce;
            let [g1, g2, g3, gc] = &step.grads;
            for (i, g) in [g1, g2, g3].into_iter().enumerate() {
                sgd_step(&mut model.extractors[i], g, &mut opts[i])?;
            }
            sgd_step(&mut model.classifier, gc, &mut opts[3])?;
        }
        let nb = batches_per_epoch as f64;
        if !model.extractors.iter().all(|e| e.is_finite()) || !model.classifier.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        let val_acc = accuracy(&model, &splits.val_target)?;
        model.history.push(EpochRecord {
            epoch,
            triplet: [sums[0] / nb, sums[1] / nb, sums[2] / nb],
            mmd: [sums[3] / nb, sums[4] / nb, sums[5] / nb],
            ce: sums[6] / nb,
            val_acc,
        });
    }
    Ok(model)
}

/// Top-1 accuracy of `model` on labeled samples (NaN for an empty split).
pub fn split_accuracy(model: &TrainedModel, split: &[Sample]) -> Result<f64> {
    accuracy(model, split)
}
