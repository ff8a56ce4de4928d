use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};
use crate::scalar::Scalar;

/// Mean fused feature per fine class.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet<T> {
    pub prototypes: Vec<Vec<T>>,
    /// Which split the prototypes were averaged over.
    pub source_split_id: String,
}

impl<T: Scalar> PrototypeSet<T> {
    pub fn len(&self) -> usize {
        self.prototypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.is_empty()
    }
}

/// Per-class means of `features` rows. Every class in `0..n_classes` must occur
/// and its mean must have nonzero norm.
pub fn prototypes_from_features<T: Scalar>(
    features: &Matrix<T>,
    labels: &[usize],
    n_classes: usize,
    split_id: &str,
) -> Result<PrototypeSet<T>> {
    let d = features.cols();
    let mut sums = vec![vec![T::zero(); d]; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (row, &y) in features.iter_rows().zip(labels) {
        if y >= n_classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: n_classes,
            });
        }
        counts[y] += 1;
        for (s, &v) in sums[y].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (c, (sum, &n)) in sums.iter_mut().zip(&counts).enumerate() {
        if n == 0 {
            return Err(Error::MissingClass(c));
        }
        let inv = T::one() / T::from_usize_lossy(n);
        for v in sum.iter_mut() {
            *v *= inv;
        }
        if norm(sum) == T::zero() {
            return Err(Error::DegeneratePrototype(c));
        }
    }
    Ok(PrototypeSet {
        prototypes: sums,
        source_split_id: split_id.to_string(),
    })
}

pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        return Err(Error::ZeroVector);
    }
    Ok(dot(a, b) / (na * nb))
}

/// The class whose prototype is strictly the most cosine-similar to `f`, or
/// `None` when the maximum is shared.
pub fn strict_nearest<T: Scalar>(f: &[T], protos: &PrototypeSet<T>) -> Result<Option<usize>> {
    let sims = protos
        .prototypes
        .iter()
        .map(|p| cosine_similarity(f, p))
        .collect::<Result<Vec<T>>>()?;
    let mut best: Option<usize> = None;
    let mut tied = false;
    for (j, &s) in sims.iter().enumerate() {
        match best {
            None => best = Some(j),
            Some(b) if s > sims[b] => {
                best = Some(j);
                tied = false;
            }
            Some(b) if s == sims[b] => tied = true,
            _ => {}
        }
    }
    Ok(if tied { None } else { best })
}

/// 1 iff `CS(f, P_i) > CS(f, P_j)` for every `j ≠ i`.
pub fn indicator<T: Scalar>(f: &[T], protos: &PrototypeSet<T>, i: usize) -> Result<u8> {
    if i >= protos.len() {
        return Err(Error::LabelOutOfRange {
            label: i,
            classes: protos.len(),
        });
    }
    Ok(u8::from(strict_nearest(f, protos)? == Some(i)))
}

/// Fraction of rows labeled `c1` whose indicator fires for `c2`.
pub fn m_metric_features<T: Scalar>(
    features: &Matrix<T>,
    labels: &[usize],
    protos: &PrototypeSet<T>,
    c1: usize,
    c2: usize,
) -> Result<f64> {
    let mut total = 0usize;
    let mut hits = 0usize;
    for (row, &y) in features.iter_rows().zip(labels) {
        if y == c1 {
            total += 1;
            hits += indicator(row, protos, c2)? as usize;
        }
    }
    if total == 0 {
        return Err(Error::NoSamplesOfClass(c1));
    }
    Ok(hits as f64 / total as f64)
}

/// Row `c1`, column `c2`: M(c1, c2) for every class pair. Rows of classes absent
/// from `labels` are all zero.
pub fn m_matrix<T: Scalar>(
    features: &Matrix<T>,
    labels: &[usize],
    protos: &PrototypeSet<T>,
) -> Result<Vec<Vec<f64>>> {
    let n = protos.len();
    let mut hits = vec![vec![0usize; n]; n];
    let mut totals = vec![0usize; n];
    for (row, &y) in features.iter_rows().zip(labels) {
        totals[y] += 1;
        if let Some(j) = strict_nearest(row, protos)? {
            hits[y][j] += 1;
        }
    }
    Ok(hits
        .into_iter()
        .zip(totals)
        .map(|(h, t)| {
            h.into_iter()
                .map(|v| if t == 0 { 0.0 } else { v as f64 / t as f64 })
                .collect()
        })
        .collect())
}

/// `counts[true][pred]`.
pub fn confusion_matrix(truth: &[usize], pred: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        m[t][p] += 1;
    }
    m
}

pub fn top1_from_predictions(truth: &[usize], pred: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptySplit);
    }
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// Per-class accuracy; NaN for classes absent from `truth`.
pub fn per_class_accuracy(truth: &[usize], pred: &[usize], n_classes: usize) -> Vec<f64> {
    confusion_matrix(truth, pred, n_classes)
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            if total == 0 {
                f64::NAN
            } else {
                row[c] as f64 / total as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn protos(p: Vec<Vec<f64>>) -> PrototypeSet<f64> {
        PrototypeSet {
            prototypes: p,
            source_split_id: "test".into(),
        }
    }

    #[test]
    fn prototype_is_mean() {
        let f = Matrix::from_rows([[1.0, 0.0], [3.0, 2.0], [0.0, 5.0]]).unwrap();
        let p = prototypes_from_features(&f, &[0, 0, 1], 2, "s").unwrap();
        assert_eq!(p.prototypes[0], vec![2.0, 1.0]);
        assert_eq!(p.prototypes[1], vec![0.0, 5.0]);
        assert!(matches!(
            prototypes_from_features(&f, &[0, 0, 0], 2, "s"),
            Err(Error::MissingClass(1))
        ));
        let z = Matrix::from_rows([[1.0, 1.0], [-1.0, -1.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            prototypes_from_features(&z, &[0, 0, 1], 2, "s"),
            Err(Error::DegeneratePrototype(0))
        ));
    }

    #[test]
    fn indicator_cases() {
        let p = protos(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert_eq!(indicator(&[1.0, 0.0, 0.0], &p, 0).unwrap(), 1);
        assert_eq!(indicator(&[1.0, 0.0, 0.0], &p, 1).unwrap(), 0);
        // equal angle to classes 0 and 1
        assert_eq!(indicator(&[1.0, 1.0, 0.0], &p, 0).unwrap(), 0);
        assert_eq!(indicator(&[1.0, 1.0, 0.0], &p, 1).unwrap(), 0);
        assert!(matches!(
            indicator(&[0.0, 0.0, 0.0], &p, 0),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn m_metric_self_with_prototype_features() {
        let p = protos(vec![vec![1.0, 0.2], vec![-0.3, 1.0]]);
        let f = Matrix::from_rows(p.prototypes.clone()).unwrap();
        assert_eq!(m_metric_features(&f, &[0, 1], &p, 0, 0).unwrap(), 1.0);
        assert!(matches!(
            m_metric_features(&f, &[0, 0], &p, 1, 1),
            Err(Error::NoSamplesOfClass(1))
        ));
    }

    #[test]
    fn top1_and_confusion() {
        let t = [0, 1, 2, 2];
        let p = [0, 2, 2, 2];
        assert_eq!(top1_from_predictions(&t, &p).unwrap(), 0.75);
        assert!(matches!(
            top1_from_predictions(&[], &[]),
            Err(Error::EmptySplit)
        ));
        let pc = per_class_accuracy(&t, &p, 3);
        assert_eq!(&pc, &[1.0, 0.0, 1.0]);
    }
}
