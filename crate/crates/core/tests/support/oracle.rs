//! Exhaustive reference for batch-hard mining.

use hierfuse::hierarchy::{lego15_default, Level};
use hierfuse::losses::{mine_all_triplets, mine_hard_triplets, Triplet};
use hierfuse::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(f: &Matrix<f64>, i: usize, j: usize) -> f64 {
    f.row(i)
        .iter()
        .zip(f.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Per anchor: among all valid triplets, the one with the largest positive
/// distance, then the smallest negative distance, then the lowest indices.
pub fn oracle(f: &Matrix<f64>, labels: &[usize]) -> Vec<Triplet> {
    let all = mine_all_triplets(labels);
    let mut out: Vec<Triplet> = Vec::new();
    for a in 0..labels.len() {
        let best = all.iter().filter(|t| t.anchor == a).min_by(|x, y| {
            let kx = (
                -dist(f, a, x.positive),
                dist(f, a, x.negative),
                x.positive,
                x.negative,
            );
            let ky = (
                -dist(f, a, y.positive),
                dist(f, a, y.negative),
                y.positive,
                y.negative,
            );
            kx.partial_cmp(&ky).unwrap()
        });
        out.extend(best.copied());
    }
    out
}

/// 100 seeded batches on an integer grid, where distance ties are common,
/// mined at every level. Returns how many mined lists were non-empty.
pub fn run_cases() -> Result<usize, String> {
    let tree = lego15_default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut nonempty = 0;
    for case in 0..100 {
        let n = rng.random_range(2..=12);
        let d = rng.random_range(1..=4);
        let f = Matrix::from_vec(
            n,
            d,
            (0..n * d)
                .map(|_| rng.random_range(-3..=3) as f64)
                .collect(),
        )
        .unwrap();
        let fine: Vec<usize> = (0..n).map(|_| rng.random_range(0..15)).collect();
        for level in Level::ALL {
            let labels = tree.project_labels(&fine, level).unwrap();
            let got = mine_hard_triplets(&f, &labels);
            if got != oracle(&f, &labels) {
                return Err(format!("case {case} level {level}"));
            }
            nonempty += usize::from(!got.is_empty());
        }
    }
    Ok(nonempty)
}
