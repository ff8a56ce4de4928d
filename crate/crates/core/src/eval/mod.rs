//! Scoring of trained models: top-1, class prototypes, and the
//! confusion-tendency metric M(C1, C2).

mod metrics;
mod pca;
mod report;

use crate::datagen::{fine_labels, inputs, Sample, Splits};
use crate::error::{Error, Result};
use crate::hierarchy::HierarchyTree;
use crate::pipeline::TrainedModel;

pub use metrics::{
    confusion_matrix, cosine_similarity, indicator, m_matrix, m_metric_features,
    per_class_accuracy, prototypes_from_features, strict_nearest, top1_from_predictions,
    PrototypeSet,
};
pub use pca::pca_2d;
pub use report::{
    emit_report, fmt_sig6, EvalReport, MEntry, FEATURES_2D_FILE, LAMBDA_SWEEP_FILE,
    TABLE_ABLATION_FILE, TABLE_DA_FILE, TABLE_MAIN_FILE, TABLE_M_FILE,
};

/// Fraction of `split` whose prediction equals the fine label.
pub fn top1(model: &TrainedModel, split: &[Sample]) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::EmptySplit);
    }
    top1_from_predictions(&fine_labels(split), &model.predict(&inputs(split))?)
}

/// Mean fused feature per fine class over `reference_split`.
pub fn class_prototypes(
    model: &TrainedModel,
    reference_split: &[Sample],
    split_id: &str,
) -> Result<PrototypeSet<f64>> {
    if reference_split.is_empty() {
        return Err(Error::MissingClass(0));
    }
    let f = model.fuse(&inputs(reference_split))?;
    prototypes_from_features(&f, &fine_labels(reference_split), model.n_fine(), split_id)
}

/// M(C1, C2) over the samples of `split`.
pub fn m_metric(
    model: &TrainedModel,
    split: &[Sample],
    protos: &PrototypeSet<f64>,
    c1: usize,
    c2: usize,
) -> Result<f64> {
    if !split.iter().any(|s| s.y3 == c1) {
        return Err(Error::NoSamplesOfClass(c1));
    }
    let f = model.fuse(&inputs(split))?;
    m_metric_features(&f, &fine_labels(split), protos, c1, c2)
}

/// Number of most-confused off-diagonal pairs added to the M table.
pub const EXTRA_CONFUSED_PAIRS: usize = 5;

/// Full evaluation on the target test split. Prototypes come from the labeled
/// source training split; target training labels are never touched.
pub fn evaluate(
    model: &TrainedModel,
    splits: &Splits,
    tree: &HierarchyTree,
    named_pairs: &[(usize, usize)],
) -> Result<EvalReport> {
    let test = &splits.test_target;
    if test.is_empty() {
        return Err(Error::EmptySplit);
    }
    let n = model.n_fine();
    let truth = fine_labels(test);
    let fused = model.fuse(&inputs(test))?;
    let pred = model.predict(&inputs(test))?;
    let top1 = top1_from_predictions(&truth, &pred)?;
    let per_class = per_class_accuracy(&truth, &pred, n);

    let protos = class_prototypes(model, &splits.train_source, "train_source")?;
    let m = m_matrix(&fused, &truth, &protos)?;
    let present: Vec<bool> = (0..n).map(|c| truth.contains(&c)).collect();

    let mut pairs: Vec<(usize, usize)> = named_pairs
        .iter()
        .copied()
        .filter(|&(c1, _)| present[c1])
        .collect();
    let mut extra: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| a != b && present[a] && !pairs.contains(&(a, b)) && m[a][b] > 0.0)
        .collect();
    // stable sort keeps (c1, c2) order among equal values
    extra.sort_by(|x, y| m[y.0][y.1].partial_cmp(&m[x.0][x.1]).expect("finite M"));
    pairs.extend(extra.into_iter().take(EXTRA_CONFUSED_PAIRS));

    let m_table = pairs
        .iter()
        .map(|&(c1, c2)| MEntry {
            c1: tree.fine_name(c1).to_string(),
            c2: tree.fine_name(c2).to_string(),
            m_self: m[c1][c1],
            m_pair: m[c1][c2],
            named: named_pairs.contains(&(c1, c2)),
        })
        .collect();

    let coords = pca_2d(&fused);
    Ok(EvalReport {
        variant: model.config.variant_name(),
        levels: model.config.level_assignment.map(|l| l.index()),
        seed: model.config.seed,
        lambda: model.config.lambda,
        use_da: model.config.use_da,
        top1,
        per_class_accuracy: per_class,
        m_table,
        projection: truth
            .iter()
            .zip(coords)
            .map(|(&y, (a, b))| (y, a, b))
            .collect(),
    })
}
