use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut p = logits.clone();
    for i in 0..p.rows() {
        let row = p.row_mut(i);
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut z = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    p
}

/// Mean negative log-likelihood of `labels` under softmax(`logits`), with
/// gradient `(softmax − onehot) / n`.
pub fn cross_entropy<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<(T, Matrix<T>)> {
    let (n, classes) = logits.shape();
    if n == 0 || labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {n} logit rows",
            labels.len()
        )));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let inv_n = T::one() / T::from_usize_lossy(n);
    let mut loss = T::zero();
    let mut grad = softmax(logits);
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        loss += lse - row[y];
        grad[(i, y)] -= T::one();
    }
    for v in grad.as_mut_slice() {
        *v *= inv_n;
    }
    Ok((loss * inv_n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_classes() {
        let logits = Matrix::<f64>::zeros(3, 15);
        let (l, _) = cross_entropy(&logits, &[0, 7, 14]).unwrap();
        assert!((l - 15f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_logits() {
        let mut logits = Matrix::<f64>::zeros(2, 15);
        logits[(0, 3)] = 1e4;
        logits[(1, 9)] = 1e4;
        let (l, _) = cross_entropy(&logits, &[3, 9]).unwrap();
        assert!(l < 1e-6);
    }

    #[test]
    fn label_out_of_range() {
        let logits = Matrix::<f64>::zeros(1, 4);
        assert!(matches!(
            cross_entropy(&logits, &[4]),
            Err(Error::LabelOutOfRange {
                label: 4,
                classes: 4
            })
        ));
    }

    #[test]
    fn matches_direct_softmax() {
        let logits = Matrix::from_rows([
            [0.2, -1.0, 3.0, 0.5],
            [1.1, 0.0, -0.4, 2.2],
            [-2.0, 0.3, 0.3, 0.9],
        ])
        .unwrap();
        let labels = [2, 0, 3];
        let mut expect = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let z: f64 = logits.row(i).iter().map(|v: &f64| v.exp()).sum();
            expect += -(logits[(i, y)].exp() / z).ln();
        }
        expect /= 3.0;
        let (l, g) = cross_entropy(&logits, &labels).unwrap();
        assert!((l - expect).abs() < 1e-14);
        for i in 0..3 {
            let s: f64 = g.row(i).iter().sum();
            assert!(s.abs() < 1e-15);
        }
    }
}
