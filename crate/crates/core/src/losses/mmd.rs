use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};
use crate::scalar::Scalar;

/// Family of Gaussian kernels `k(u, v) = exp(−‖u−v‖² / (2σ²))` with convex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank<T> {
    bandwidths: Vec<T>,
    weights: Vec<T>,
}

/// Multipliers applied to the median-heuristic base bandwidth.
pub const BANDWIDTH_SCALES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

impl<T: Scalar> KernelBank<T> {
    pub fn new(bandwidths: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if bandwidths.is_empty() || bandwidths.len() != weights.len() {
            return Err(Error::BadConfig(
                "kernel bank needs matching, non-empty bandwidths and weights".into(),
            ));
        }
        if bandwidths
            .iter()
            .any(|s| !(s.is_finite() && *s > T::zero()))
        {
            return Err(Error::BadConfig(
                "bandwidths must be finite and positive".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= T::zero())) {
            return Err(Error::BadConfig(
                "kernel weights must be non-negative".into(),
            ));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::BadConfig("kernel weights must sum to 1".into()));
        }
        Ok(KernelBank {
            bandwidths,
            weights,
        })
    }

    pub fn single(sigma: T) -> Result<Self> {
        Self::new(vec![sigma], vec![T::one()])
    }

    /// Five kernels at `σ_base × {¼, ½, 1, 2, 4}` with uniform weights.
    pub fn multiscale(sigma_base: T) -> Result<Self> {
        let w = T::one() / T::from_usize_lossy(BANDWIDTH_SCALES.len());
        Self::new(
            BANDWIDTH_SCALES
                .iter()
                .map(|&s| sigma_base * T::lit(s))
                .collect(),
            vec![w; BANDWIDTH_SCALES.len()],
        )
    }

    pub fn bandwidths(&self) -> &[T] {
        &self.bandwidths
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Median-heuristic base bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth<T> {
    pub sigma: T,
    /// All points coincided; `sigma` fell back to 1.
    pub degenerate: bool,
}

/// `σ² = median(pairwise squared distances) / 2` over the joint batch. An even
/// number of pairs uses the mean of the two middle values.
pub fn median_bandwidth<T: Scalar>(features_joint: &Matrix<T>) -> Result<Bandwidth<T>> {
    let m = features_joint.rows();
    if m < 2 {
        return Err(Error::BatchTooSmall(m, 0));
    }
    let mut d2 = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            d2.push(sq_dist(features_joint.row(i), features_joint.row(j)));
        }
    }
    d2.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let k = d2.len();
    let median = if k % 2 == 1 {
        d2[k / 2]
    } else {
        (d2[k / 2 - 1] + d2[k / 2]) / T::lit(2.0)
    };
    let sigma = (median / T::lit(2.0)).sqrt();
    if sigma > T::zero() && sigma.is_finite() {
        Ok(Bandwidth {
            sigma,
            degenerate: false,
        })
    } else {
        Ok(Bandwidth {
            sigma: T::one(),
            degenerate: true,
        })
    }
}

/// MMD value with gradients for both inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdOutput<T> {
    pub value: T,
    pub grad_source: Matrix<T>,
    pub grad_target: Matrix<T>,
}

/// Biased (V-statistic) multi-kernel MMD²:
/// `Σ_k w_k [mean k(s,s') + mean k(t,t') − 2 mean k(s,t)]`.
pub fn mmd_loss<T: Scalar>(
    source: &Matrix<T>,
    target: &Matrix<T>,
    bank: &KernelBank<T>,
) -> Result<MmdOutput<T>> {
    let (ns, nt) = (source.rows(), target.rows());
    if ns < 2 || nt < 2 {
        return Err(Error::BatchTooSmall(ns, nt));
    }
    if source.cols() != target.cols() {
        return Err(Error::ShapeMismatch(format!(
            "source width {} vs target width {}",
            source.cols(),
            target.cols()
        )));
    }
    let dim = source.cols();
    let mut grad_source = Matrix::zeros(ns, dim);
    let mut grad_target = Matrix::zeros(nt, dim);

    // squared distances are shared by every kernel
    let dss = cross_sq(source, source);
    let dtt = cross_sq(target, target);
    let dst = cross_sq(source, target);

    let (fs, ft) = (T::from_usize_lossy(ns), T::from_usize_lossy(nt));
    let two = T::lit(2.0);
    let mut value = T::zero();
    for (&sigma, &w) in bank.bandwidths.iter().zip(&bank.weights) {
        let inv2s2 = T::one() / (two * sigma * sigma);
        let kss = dss.map(|d| (-d * inv2s2).exp());
        let ktt = dtt.map(|d| (-d * inv2s2).exp());
        let kst = dst.map(|d| (-d * inv2s2).exp());
        let mss = kss.as_slice().iter().copied().sum::<T>() / (fs * fs);
        let mtt = ktt.as_slice().iter().copied().sum::<T>() / (ft * ft);
        let mst = kst.as_slice().iter().copied().sum::<T>() / (fs * ft);
        value += w * (mss + mtt - two * mst);

        // dk(u,v)/du = −k(u,v)(u−v)/σ²
        let inv_s2 = T::one() / (sigma * sigma);
        let css = w * two / (fs * fs) * inv_s2;
        let ctt = w * two / (ft * ft) * inv_s2;
        let cst = w * two / (fs * ft) * inv_s2;
        for i in 0..ns {
            for j in 0..ns {
                let k = kss[(i, j)];
                for c in 0..dim {
                    grad_source[(i, c)] -= css * k * (source[(i, c)] - source[(j, c)]);
                }
            }
            for j in 0..nt {
                let k = kst[(i, j)];
                for c in 0..dim {
                    let diff = source[(i, c)] - target[(j, c)];
                    grad_source[(i, c)] += cst * k * diff;
                    grad_target[(j, c)] -= cst * k * diff;
                }
            }
        }
        for i in 0..nt {
            for j in 0..nt {
                let k = ktt[(i, j)];
                for c in 0..dim {
                    grad_target[(i, c)] -= ctt * k * (target[(i, c)] - target[(j, c)]);
                }
            }
        }
    }
    Ok(MmdOutput {
        value: value.max(T::zero()),
        grad_source,
        grad_target,
    })
}

fn cross_sq<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let mut d = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            d[(i, j)] = sq_dist(a.row(i), b.row(j));
        }
    }
    d
}
