//! Seeded gradient checks; each returns the worst relative error at one point.

use hierfuse::losses::{cross_entropy, mine_hard_triplets, mmd_loss, triplet_loss, KernelBank};
use hierfuse::pipeline::{
    batch_kernel_bank, extractor_objective, system_objective, Batch, TrainConfig, TrainedModel,
};
use hierfuse::tensornet::{finite_diff_check_flat, Activation, Mlp};
use hierfuse::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const EPS: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const POINTS: u64 = 10;

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.sample(StandardNormal))
            .collect(),
    )
    .unwrap()
}

/// Random weights and biases; zero biases put dead rows exactly on a relu kink.
fn randomized(net: &Mlp<f64>, rng: &mut ChaCha8Rng) -> Mlp<f64> {
    let mut out = net.clone();
    let p: Vec<f64> = net
        .params_flat()
        .iter()
        .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    out.set_params_flat(&p).unwrap();
    out
}

/// Smallest distance from a nondifferentiable boundary: relu pre-activations,
/// hinge margins, and near-ties that would flip the mined positive or negative.
fn kink_gap(net: &Mlp<f64>, x: &Matrix<f64>, labels: Option<(&[usize], f64)>) -> f64 {
    let mut gap = f64::INFINITY;
    let mut h = x.clone();
    for layer in net.layers() {
        let mut z = Matrix::zeros(h.rows(), layer.out_dim());
        for r in 0..h.rows() {
            for o in 0..layer.out_dim() {
                let v = layer.bias[o]
                    + layer
                        .weight
                        .row(o)
                        .iter()
                        .zip(h.row(r))
                        .map(|(w, x)| w * x)
                        .sum::<f64>();
                if layer.activation == Activation::Relu {
                    gap = gap.min(v.abs());
                }
                z[(r, o)] = if layer.activation == Activation::Relu {
                    v.max(0.0)
                } else {
                    v
                };
            }
        }
        h = z;
    }
    if let Some((y, alpha)) = labels {
        let n = h.rows();
        let dist = |a: usize, b: usize| {
            h.row(a)
                .iter()
                .zip(h.row(b))
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt()
        };
        for t in mine_hard_triplets(&h, y) {
            let (dp, dn) = (dist(t.anchor, t.positive), dist(t.anchor, t.negative));
            gap = gap.min((dp - dn + alpha).abs());
            for j in 0..n {
                if j == t.anchor {
                    continue;
                }
                let other = if y[j] == y[t.anchor] {
                    (dp - dist(t.anchor, j)).abs()
                } else {
                    (dn - dist(t.anchor, j)).abs()
                };
                if j != t.positive && j != t.negative {
                    gap = gap.min(other);
                }
            }
        }
    }
    gap
}

const MIN_GAP: f64 = 1e-3;

fn labels(n: usize, classes: usize) -> Vec<usize> {
    (0..n).map(|i| i % classes).collect()
}

pub fn triplet(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = gaussian(8, 5, &mut rng);
    let y = labels(8, 3);
    let triplets = mine_hard_triplets(&f, &y);
    // a margin large enough that every triplet is active
    let check = finite_diff_check_flat(f.as_slice(), EPS, seed, |p| {
        let m = Matrix::from_vec(8, 5, p.to_vec())?;
        let (l, g) = triplet_loss(&m, &triplets, 5.0)?;
        Ok((l, g.into_vec()))
    })
    .unwrap();
    check.max_rel_error
}

pub fn mmd(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
    let s = gaussian(6, 4, &mut rng);
    let t = gaussian(7, 4, &mut rng).map(|v| v + 0.5);
    let bank = batch_kernel_bank(&s, &t).unwrap();
    let n_s = s.as_slice().len();
    let mut joint = s.as_slice().to_vec();
    joint.extend_from_slice(t.as_slice());
    let check = finite_diff_check_flat(&joint, EPS, seed, |p| {
        let a = Matrix::from_vec(6, 4, p[..n_s].to_vec())?;
        let b = Matrix::from_vec(7, 4, p[n_s..].to_vec())?;
        let out = mmd_loss(&a, &b, &bank)?;
        let mut g = out.grad_source.into_vec();
        g.extend(out.grad_target.into_vec());
        Ok((out.value, g))
    })
    .unwrap();
    check.max_rel_error
}

pub fn cross_entropy_loss(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
    let z = gaussian(5, 15, &mut rng);
    let y: Vec<usize> = (0..5).map(|i| (i * 7 + seed as usize) % 15).collect();
    let check = finite_diff_check_flat(z.as_slice(), EPS, seed, |p| {
        let m = Matrix::from_vec(5, 15, p.to_vec())?;
        let (l, g) = cross_entropy(&m, &y)?;
        Ok((l, g.into_vec()))
    })
    .unwrap();
    check.max_rel_error
}

pub fn extractor(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
    let y = labels(8, 4);
    let (net, xs, xt) = loop {
        let net = randomized(&Mlp::new(&[6, 10, 4], &mut rng), &mut rng);
        let xs = gaussian(8, 6, &mut rng);
        let xt = gaussian(8, 6, &mut rng).map(|v| v + 0.3);
        if kink_gap(&net, &xs, Some((&y, 2.0))).min(kink_gap(&net, &xt, None)) > MIN_GAP {
            break (net, xs, xt);
        }
    };
    let bank = batch_kernel_bank(&net.infer(&xs).unwrap(), &net.infer(&xt).unwrap()).unwrap();
    let objective = |n: &Mlp<f64>| {
        let (lt, lm, g) = extractor_objective(n, &xs, &y, Some(&xt), 2.0, 0.7, Some(&bank))?;
        Ok((lt + 0.7 * lm, g.flat()))
    };
    let full = net.params_flat();
    // both terms are translation invariant, so the output bias has zero gradient
    let out_bias = full.len() - net.out_dim();
    let (_, g) = objective(&net).unwrap();
    assert!(
        g[out_bias..].iter().all(|v| v.abs() < 1e-10),
        "{:?}",
        &g[out_bias..]
    );

    let mut probe = net.clone();
    let check = finite_diff_check_flat(&full[..out_bias], EPS, seed, |p| {
        let mut all = p.to_vec();
        all.extend_from_slice(&full[out_bias..]);
        probe.set_params_flat(&all)?;
        let (l, mut g) = objective(&probe)?;
        g.truncate(out_bias);
        Ok((l, g))
    })
    .unwrap();
    check.max_rel_error
}

fn model_params(m: &TrainedModel) -> Vec<f64> {
    let mut p = Vec::new();
    for net in m.extractors.iter().chain([&m.classifier]) {
        p.extend(net.params_flat());
    }
    p
}

fn set_model_params(m: &mut TrainedModel, p: &[f64]) {
    let mut off = 0;
    for net in m.extractors.iter_mut().chain([&mut m.classifier]) {
        let n = net.n_params();
        net.set_params_flat(&p[off..off + n]).unwrap();
        off += n;
    }
}

pub fn system_with_ce_backprop(seed: u64) -> f64 {
    let cfg = TrainConfig {
        ce_backprop_to_extractors: true,
        alpha: 2.0,
        lambda: 0.5,
        d_feat: 3,
        hidden: 6,
        seed,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
    let fine = labels(8, 6);
    let coarse: Vec<usize> = fine.iter().map(|y| y / 3).collect();
    let middle: Vec<usize> = fine.iter().map(|y| y / 2).collect();
    let (model, batch) = loop {
        let mut model = TrainedModel::init(&cfg, 5, 6);
        for net in model.extractors.iter_mut().chain([&mut model.classifier]) {
            *net = randomized(net, &mut rng);
        }
        let batch = Batch {
            source_x: gaussian(8, 5, &mut rng),
            labels: [coarse.clone(), middle.clone(), fine.clone()],
            fine: fine.clone(),
            target_x: Some(gaussian(8, 5, &mut rng).map(|v| v - 0.4)),
        };
        let xt = batch.target_x.as_ref().unwrap();
        let clear = (0..3).all(|i| {
            let g = &model.extractors[i];
            kink_gap(g, &batch.source_x, Some((&batch.labels[i], cfg.alpha)))
                .min(kink_gap(g, xt, None))
                > MIN_GAP
        });
        if clear {
            break (model, batch);
        }
    };
    let xt = batch.target_x.as_ref().unwrap();
    let banks: [KernelBank<f64>; 3] = std::array::from_fn(|i| {
        let g = &model.extractors[i];
        batch_kernel_bank(&g.infer(&batch.source_x).unwrap(), &g.infer(xt).unwrap()).unwrap()
    });
    let mut probe = model.clone();
    let check = finite_diff_check_flat(&model_params(&model), EPS, seed, |p| {
        set_model_params(&mut probe, p);
        let step = system_objective(&probe, &batch, Some(&banks))?;
        let grads: Vec<f64> = step.grads.iter().flat_map(|g| g.flat()).collect();
        Ok((step.total(cfg.lambda), grads))
    })
    .unwrap();
    check.max_rel_error
}

pub type Check = fn(u64) -> f64;

pub const CHECKS: [(&str, Check); 5] = [
    ("triplet", triplet),
    ("mmd", mmd),
    ("cross entropy", cross_entropy_loss),
    ("extractor objective", extractor),
    ("system objective", system_with_ce_backprop),
];
