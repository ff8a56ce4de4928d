use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};
use crate::scalar::Scalar;

/// Indices into a feature batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Euclidean distance matrix with a fixed summation order.
pub fn pairwise_distances<T: Scalar>(features: &Matrix<T>) -> Matrix<T> {
    let n = features.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sq_dist(features.row(i), features.row(j)).sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Batch-hard mining: for every anchor with at least one same-label and one
/// different-label partner, pairs it with its farthest positive and nearest
/// negative. Ties go to the lowest index. Anchors without a valid positive or
/// negative are skipped.
pub fn mine_hard_triplets<T: Scalar>(features: &Matrix<T>, labels: &[usize]) -> Vec<Triplet> {
    assert_eq!(features.rows(), labels.len(), "one label per feature row");
    let n = labels.len();
    let d = pairwise_distances(features);
    let mut out = Vec::new();
    for a in 0..n {
        let mut pos: Option<(usize, T)> = None;
        let mut neg: Option<(usize, T)> = None;
        for j in 0..n {
            if j == a {
                continue;
            }
            let dj = d[(a, j)];
            if labels[j] == labels[a] {
                if pos.is_none_or(|(_, best)| dj > best) {
                    pos = Some((j, dj));
                }
            } else if neg.is_none_or(|(_, best)| dj < best) {
                neg = Some((j, dj));
            }
        }
        if let (Some((p, _)), Some((q, _))) = (pos, neg) {
            out.push(Triplet {
                anchor: a,
                positive: p,
                negative: q,
            });
        }
    }
    out
}

/// Every valid `(a, p, n)` triplet in the batch, in lexicographic order.
pub fn mine_all_triplets(labels: &[usize]) -> Vec<Triplet> {
    let n = labels.len();
    let mut out = Vec::new();
    for a in 0..n {
        for p in 0..n {
            if p == a || labels[p] != labels[a] {
                continue;
            }
            for q in 0..n {
                if labels[q] != labels[a] {
                    out.push(Triplet {
                        anchor: a,
                        positive: p,
                        negative: q,
                    });
                }
            }
        }
    }
    out
}

/// Mean hinge `max(‖a−p‖ − ‖a−n‖ + α, 0)` over the given triplets, with the
/// gradient w.r.t. every feature row. An empty list gives zero loss and zero
/// gradient. Coincident points contribute a zero subgradient.
pub fn triplet_loss<T: Scalar>(
    features: &Matrix<T>,
    triplets: &[Triplet],
    alpha: T,
) -> Result<(T, Matrix<T>)> {
    let (n, dim) = features.shape();
    let mut grad = Matrix::zeros(n, dim);
    if triplets.is_empty() {
        return Ok((T::zero(), grad));
    }
    for t in triplets {
        for index in [t.anchor, t.positive, t.negative] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
        }
    }
    let inv_n = T::one() / T::from_usize_lossy(triplets.len());
    let mut total = T::zero();
    let mut u = vec![T::zero(); dim];
    let mut v = vec![T::zero(); dim];
    for t in triplets {
        let (fa, fp, fq) = (
            features.row(t.anchor),
            features.row(t.positive),
            features.row(t.negative),
        );
        let dap = sq_dist(fa, fp).sqrt();
        let dan = sq_dist(fa, fq).sqrt();
        let term = dap - dan + alpha;
        if term <= T::zero() {
            continue;
        }
        total += term;
        // d/da = (a-p)/|a-p| - (a-n)/|a-n|, d/dp = -(a-p)/|a-p|, d/dn = (a-n)/|a-n|
        for k in 0..dim {
            u[k] = if dap > T::zero() {
                (fa[k] - fp[k]) / dap
            } else {
                T::zero()
            };
            v[k] = if dan > T::zero() {
                (fa[k] - fq[k]) / dan
            } else {
                T::zero()
            };
        }
        for k in 0..dim {
            grad[(t.anchor, k)] += (u[k] - v[k]) * inv_n;
            grad[(t.positive, k)] -= u[k] * inv_n;
            grad[(t.negative, k)] += v[k] * inv_n;
        }
    }
    Ok((total * inv_n, grad))
}
