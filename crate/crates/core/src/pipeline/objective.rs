//! Per-batch objectives of the four networks.
//!
//! Extractor `i` minimizes `triplet_i + λ·MMD_i`; the classifier minimizes the
//! cross entropy of its logits on the fused source features. With
//! `ce_backprop_to_extractors` the cross-entropy gradient also reaches the
//! extractors, and the returned gradients are those of the summed objective.

use crate::error::{Error, Result};
use crate::losses::{
    cross_entropy, median_bandwidth, mine_hard_triplets, mmd_loss, triplet_loss, KernelBank,
};
use crate::matrix::Matrix;
use crate::tensornet::{Grads, Mlp};

use super::model::TrainedModel;

/// One training batch. `labels[i]` are the source labels at extractor `i`'s level.
#[derive(Debug, Clone)]
pub struct Batch {
    pub source_x: Matrix<f64>,
    pub labels: [Vec<usize>; 3],
    pub fine: Vec<usize>,
    /// Unlabeled target inputs; `None` when domain adaptation is off.
    pub target_x: Option<Matrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct SystemStep {
    pub triplet: [f64; 3],
    pub mmd: [f64; 3],
    pub ce: f64,
    /// Gradients for G1, G2, G3 and C.
    pub grads: [Grads<f64>; 4],
}

impl SystemStep {
    pub fn total(&self, lambda: f64) -> f64 {
        (0..3)
            .map(|i| self.triplet[i] + lambda * self.mmd[i])
            .sum::<f64>()
            + self.ce
    }
}

/// Kernel bank from the median heuristic over the joint source/target features.
pub fn batch_kernel_bank(source: &Matrix<f64>, target: &Matrix<f64>) -> Result<KernelBank<f64>> {
    let joint = Matrix::from_rows(source.iter_rows().chain(target.iter_rows()))?;
    KernelBank::multiscale(median_bandwidth(&joint)?.sigma)
}

/// Loss value and gradient w.r.t. one extractor's parameters.
pub fn extractor_objective(
    net: &Mlp<f64>,
    batch_source: &Matrix<f64>,
    labels: &[usize],
    batch_target: Option<&Matrix<f64>>,
    alpha: f64,
    lambda: f64,
    bank: Option<&KernelBank<f64>>,
) -> Result<(f64, f64, Grads<f64>)> {
    let (fs, tape_s) = net.forward(batch_source)?;
    let triplets = mine_hard_triplets(&fs, labels);
    let (lt, mut gs) = triplet_loss(&fs, &triplets, alpha)?;
    let mut grads;
    let mut lm = 0.0;
    if let Some(xt) = batch_target {
        let (ft, tape_t) = net.forward(xt)?;
        let owned;
        let bank = match bank {
            Some(b) => b,
            None => {
                owned = batch_kernel_bank(&fs, &ft)?;
                &owned
            }
        };
        let m = mmd_loss(&fs, &ft, bank)?;
        lm = m.value;
        for (g, &d) in gs.as_mut_slice().iter_mut().zip(m.grad_source.as_slice()) {
            *g += lambda * d;
        }
        let gt = m.grad_target.map(|v| lambda * v);
        grads = net.backward(&tape_s, &gs)?.0;
        grads.accumulate(&net.backward(&tape_t, &gt)?.0)?;
    } else {
        grads = net.backward(&tape_s, &gs)?.0;
    }
    Ok((lt, lm, grads))
}

/// Losses and gradients of all four networks on one batch. `banks` fixes the
/// MMD kernels per extractor; otherwise they come from the median heuristic.
pub fn system_objective(
    model: &TrainedModel,
    batch: &Batch,
    banks: Option<&[KernelBank<f64>; 3]>,
) -> Result<SystemStep> {
    let cfg = &model.config;
    let d = model.d_feat();
    let use_target = cfg.use_da && batch.target_x.is_some();

    let mut triplet = [0.0; 3];
    let mut mmd = [0.0; 3];
    let mut src_feats = Vec::with_capacity(3);
    let mut src_tapes = Vec::with_capacity(3);
    let mut src_grads = Vec::with_capacity(3);
    let mut tgt_parts = Vec::with_capacity(3);
    for (i, net) in model.extractors.iter().enumerate() {
        let (fs, tape_s) = net.forward(&batch.source_x)?;
        let triplets = mine_hard_triplets(&fs, &batch.labels[i]);
        let (lt, mut gs) = triplet_loss(&fs, &triplets, cfg.alpha)?;
        triplet[i] = lt;
        if use_target {
            let xt = batch.target_x.as_ref().expect("checked above");
            let (ft, tape_t) = net.forward(xt)?;
            let owned;
            let bank = match banks {
                Some(b) => &b[i],
                None => {
                    owned = batch_kernel_bank(&fs, &ft)?;
                    &owned
                }
            };
            let m = mmd_loss(&fs, &ft, bank)?;
            mmd[i] = m.value;
            for (g, &dm) in gs.as_mut_slice().iter_mut().zip(m.grad_source.as_slice()) {
                *g += cfg.lambda * dm;
            }
            tgt_parts.push(Some((tape_t, m.grad_target.map(|v| cfg.lambda * v))));
        } else {
            tgt_parts.push(None);
        }
        src_feats.push(fs);
        src_tapes.push(tape_s);
        src_grads.push(gs);
    }

    let fused = Matrix::hstack(&[&src_feats[0], &src_feats[1], &src_feats[2]])?;
    let (logits, tape_c) = model.classifier.forward(&fused)?;
    let (ce, g_logits) = cross_entropy(&logits, &batch.fine)?;
    let (g_cls, g_fused) = model.classifier.backward(&tape_c, &g_logits)?;
    if cfg.ce_backprop_to_extractors {
        for (i, gs) in src_grads.iter_mut().enumerate() {
            let slice = g_fused.col_slice(i * d, (i + 1) * d);
            for (g, &v) in gs.as_mut_slice().iter_mut().zip(slice.as_slice()) {
                *g += v;
            }
        }
    }

    let mut ext_grads = Vec::with_capacity(3);
    for (i, net) in model.extractors.iter().enumerate() {
        let mut g = net.backward(&src_tapes[i], &src_grads[i])?.0;
        if let Some((tape_t, gt)) = &tgt_parts[i] {
            g.accumulate(&net.backward(tape_t, gt)?.0)?;
        }
        ext_grads.push(g);
    }
    let losses_finite = triplet.iter().chain(&mmd).all(|v| v.is_finite()) && ce.is_finite();
    if !losses_finite {
        return Err(Error::NonFiniteLoss);
    }
    let mut it = ext_grads.into_iter();
    let mut next = || it.next().expect("three extractor grads");
    Ok(SystemStep {
        triplet,
        mmd,
        ce,
        grads: [next(), next(), next(), g_cls],
    })
}
