use crate::matrix::{dot, norm, Matrix};
use crate::scalar::Scalar;

const ITERATIONS: usize = 500;

/// Projection of the centered rows of `x` onto its top two principal axes.
///
/// Axes come from power iteration with deflation on the covariance, starting
/// from a fixed vector, so the output is deterministic. Each axis is signed so
/// that its largest-magnitude component is positive.
pub fn pca_2d<T: Scalar>(x: &Matrix<T>) -> Vec<(T, T)> {
    let (n, d) = x.shape();
    if n == 0 || d == 0 {
        return Vec::new();
    }
    let mut mean = vec![T::zero(); d];
    for row in x.iter_rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let inv = T::one() / T::from_usize_lossy(n);
    mean.iter_mut().for_each(|m| *m *= inv);
    let centered: Vec<Vec<T>> = x
        .iter_rows()
        .map(|r| r.iter().zip(&mean).map(|(&v, &m)| v - m).collect())
        .collect();

    let mut cov = Matrix::zeros(d, d);
    for r in &centered {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += r[i] * r[j];
            }
        }
    }

    let mut axes: Vec<Vec<T>> = Vec::with_capacity(2);
    for _ in 0..2.min(d) {
        let axis = top_eigenvector(&cov, &axes);
        axes.push(axis);
    }
    while axes.len() < 2 {
        axes.push(vec![T::zero(); d]);
    }
    centered
        .iter()
        .map(|r| (dot(r, &axes[0]), dot(r, &axes[1])))
        .collect()
}

fn top_eigenvector<T: Scalar>(cov: &Matrix<T>, found: &[Vec<T>]) -> Vec<T> {
    let d = cov.rows();
    let mut v: Vec<T> = (0..d)
        .map(|i| T::lit(1.0 + 0.5 * ((i as f64) * 1.618).sin()))
        .collect();
    let orthogonalize = |v: &mut Vec<T>| {
        for a in found {
            let p = dot(v, a);
            for (x, &y) in v.iter_mut().zip(a) {
                *x -= p * y;
            }
        }
    };
    orthogonalize(&mut v);
    for _ in 0..ITERATIONS {
        let mut w: Vec<T> = (0..d).map(|i| dot(cov.row(i), &v)).collect();
        orthogonalize(&mut w);
        let nw = norm(&w);
        if nw == T::zero() {
            break;
        }
        w.iter_mut().for_each(|x| *x /= nw);
        v = w;
    }
    let nv = norm(&v);
    if nv == T::zero() {
        return v;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let lead = v.iter().copied().fold(
        T::zero(),
        |acc, x| if x.abs() > acc.abs() { x } else { acc },
    );
    if lead < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_dominant_axis() {
        // points spread along (1, 1) with small spread along (1, -1)
        let rows: Vec<[f64; 2]> = (0..20)
            .map(|i| {
                let t = i as f64 - 9.5;
                let e = if i % 2 == 0 { 0.1 } else { -0.1 };
                [t + e, t - e]
            })
            .collect();
        let p = pca_2d(&Matrix::from_rows(rows).unwrap());
        assert_eq!(p.len(), 20);
        let var1: f64 = p.iter().map(|q| q.0 * q.0).sum();
        let var2: f64 = p.iter().map(|q| q.1 * q.1).sum();
        assert!(var1 > 100.0 * var2);
        // first coordinate increases with t
        assert!(p[19].0 > p[0].0);
    }

    #[test]
    fn empty_input() {
        assert!(pca_2d(&Matrix::<f64>::zeros(0, 3)).is_empty());
    }
}
