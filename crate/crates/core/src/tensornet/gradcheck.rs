//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::mlp::{Grads, Mlp};

pub const MIN_COORDS: usize = 50;

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck<T> {
    pub max_rel_error: T,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub coords_checked: usize,
}

/// Compares `loss`'s analytic gradient with central differences on a seeded
/// subset of at least [`MIN_COORDS`] coordinates (all of them if fewer exist).
///
/// Relative error per coordinate is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn finite_diff_check_flat<T, F>(
    params: &[T],
    eps: T,
    seed: u64,
    mut loss: F,
) -> Result<GradCheck<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<(T, Vec<T>)>,
{
    if eps.is_nan() || eps <= T::zero() {
        return Err(Error::BadConfig(
            "finite-difference step must be positive".into(),
        ));
    }
    let (l0, analytic) = loss(params)?;
    if !l0.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    if analytic.len() != params.len() {
        return Err(Error::ShapeMismatch(
            "gradient length != parameter count".into(),
        ));
    }
    let n = params.len();
    let mut coords: Vec<usize> = if n <= MIN_COORDS {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample(&mut rng, n, MIN_COORDS.max(n / 20).min(n)).into_vec()
    };
    coords.sort_unstable();

    let floor = T::lit(1e-8);
    let two = T::lit(2.0);
    let mut p = params.to_vec();
    let mut worst = GradCheck {
        max_rel_error: T::zero(),
        worst_index: coords.first().copied().unwrap_or(0),
        coords_checked: coords.len(),
    };
    for &i in &coords {
        let orig = p[i];
        p[i] = orig + eps;
        let (lp, _) = loss(&p)?;
        p[i] = orig - eps;
        let (lm, _) = loss(&p)?;
        p[i] = orig;
        if !lp.is_finite() || !lm.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        let numeric = (lp - lm) / (two * eps);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(floor);
        let rel = (a - numeric).abs() / denom;
        if rel > worst.max_rel_error {
            worst.max_rel_error = rel;
            worst.worst_index = i;
        }
    }
    Ok(worst)
}

/// [`finite_diff_check_flat`] over one network's parameters.
pub fn finite_diff_check<T, F>(net: &Mlp<T>, eps: T, seed: u64, mut loss: F) -> Result<GradCheck<T>>
where
    T: Scalar,
    F: FnMut(&Mlp<T>) -> Result<(T, Grads<T>)>,
{
    let mut probe = net.clone();
    finite_diff_check_flat(&net.params_flat(), eps, seed, |p| {
        probe.set_params_flat(p)?;
        let (l, g) = loss(&probe)?;
        Ok((l, g.flat()))
    })
}
