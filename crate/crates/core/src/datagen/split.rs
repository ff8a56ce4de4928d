use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{DatasetMeta, Domain, MaskedSamples, Sample, Splits};

/// Integer quotas `floor(total·n_c/N)` plus a seeded `+1` for as many classes as
/// the floors fall short, never exceeding `capacity[c]`.
fn proportional_quotas(
    total: usize,
    class_sizes: &[usize],
    capacity: &[usize],
    rng: &mut ChaCha8Rng,
    what: &str,
) -> Result<Vec<usize>> {
    let n: usize = class_sizes.iter().sum();
    if total == 0 {
        return Ok(vec![0; class_sizes.len()]);
    }
    let mut q: Vec<usize> = class_sizes.iter().map(|&c| total * c / n).collect();
    for (qc, &cap) in q.iter().zip(capacity) {
        if *qc > cap {
            return Err(Error::InfeasibleCounts(format!(
                "{what}: class quota exceeds its samples"
            )));
        }
    }
    let mut remainder = total - q.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.shuffle(rng);
    for &c in &order {
        if remainder == 0 {
            break;
        }
        if q[c] < capacity[c] {
            q[c] += 1;
            remainder -= 1;
        }
    }
    if remainder > 0 {
        return Err(Error::InfeasibleCounts(format!(
            "{what}: {remainder} samples could not be placed"
        )));
    }
    Ok(q)
}

/// Sends every source sample to `train_source` and splits target samples
/// per fine class, proportionally, into train / val / test; test receives the
/// remainder.
pub fn split(samples: &[Sample], counts: (usize, usize), seed: u64) -> Result<Splits> {
    let (n_train, n_val) = counts;
    let train_source: Vec<Sample> = samples
        .iter()
        .filter(|s| s.domain == Domain::Source)
        .cloned()
        .collect();
    let mut by_class: BTreeMap<usize, Vec<&Sample>> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.domain == Domain::Target) {
        by_class.entry(s.y3).or_default().push(s);
    }
    let n_target: usize = by_class.values().map(Vec::len).sum();
    if n_train + n_val > n_target {
        return Err(Error::InfeasibleCounts(format!(
            "{n_train} train + {n_val} val exceeds {n_target} target samples"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools: Vec<Vec<&Sample>> = by_class.into_values().collect();
    for pool in &mut pools {
        pool.shuffle(&mut rng);
    }
    let sizes: Vec<usize> = pools.iter().map(Vec::len).collect();
    let train_q = proportional_quotas(n_train, &sizes, &sizes, &mut rng, "train")?;
    let spare: Vec<usize> = sizes.iter().zip(&train_q).map(|(s, t)| s - t).collect();
    let val_q = proportional_quotas(n_val, &sizes, &spare, &mut rng, "val")?;

    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for ((pool, &t), &v) in pools.iter().zip(&train_q).zip(&val_q) {
        train.extend(pool[..t].iter().map(|&s| s.clone()));
        val.extend(pool[t..t + v].iter().map(|&s| s.clone()));
        test.extend(pool[t + v..].iter().map(|&s| s.clone()));
    }
    Ok(Splits {
        train_source,
        train_target: MaskedSamples::new(train),
        val_target: val,
        test_target: test,
        meta: DatasetMeta {
            split_seed: seed,
            ..DatasetMeta::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GenConfig};

    fn per_class(s: &[Sample], nf: usize) -> Vec<usize> {
        let mut c = vec![0; nf];
        for x in s {
            c[x.y3] += 1;
        }
        c
    }

    #[test]
    fn full_scale_split_sizes() {
        let s = generate(&GenConfig::full_scale()).unwrap();
        let sp = split(&s, (750, 75), 0).unwrap();
        assert_eq!(sp.train_source.len(), 3000);
        assert_eq!(sp.train_target.len(), 750);
        assert_eq!(sp.val_target.len(), 75);
        assert_eq!(sp.test_target.len(), 863);
    }

    #[test]
    fn zero_counts_send_everything_to_test() {
        let s = generate(&GenConfig::desk_default()).unwrap();
        let sp = split(&s, (0, 0), 3).unwrap();
        assert_eq!(sp.test_target.len(), 600);
        assert!(sp.train_target.is_empty() && sp.val_target.is_empty());
    }

    #[test]
    fn desk_scale_is_exactly_proportional() {
        // 15 classes × 40 target: 150 train → 10 each, 30 val → 2 each
        let s = generate(&GenConfig::desk_default()).unwrap();
        let sp = split(&s, (150, 30), 1).unwrap();
        assert_eq!(sp.test_target.len(), 420);
        assert_eq!(per_class(sp.train_target.raw(), 15), vec![10; 15]);
        assert_eq!(per_class(&sp.val_target, 15), vec![2; 15]);
    }

    #[test]
    fn infeasible() {
        let s = generate(&GenConfig::desk_default()).unwrap();
        assert!(matches!(
            split(&s, (500, 101), 0),
            Err(Error::InfeasibleCounts(_))
        ));
    }

    #[test]
    fn partitions_are_disjoint_and_complete() {
        let s = generate(&GenConfig::full_scale()).unwrap();
        let sp = split(&s, (750, 75), 9).unwrap();
        let mut seen: Vec<&Sample> = sp
            .train_target
            .raw()
            .iter()
            .chain(&sp.val_target)
            .chain(&sp.test_target)
            .collect();
        assert_eq!(seen.len(), 1688);
        seen.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        seen.dedup_by(|a, b| a.x == b.x);
        assert_eq!(seen.len(), 1688);
        // floor quotas differ from the exact share by less than one sample
        let sizes = per_class(
            &s.iter()
                .filter(|x| x.domain == Domain::Target)
                .cloned()
                .collect::<Vec<_>>(),
            15,
        );
        for (c, &t) in per_class(sp.train_target.raw(), 15).iter().enumerate() {
            let exact = 750.0 * sizes[c] as f64 / 1688.0;
            assert!((t as f64 - exact).abs() < 1.0);
        }
    }
}
