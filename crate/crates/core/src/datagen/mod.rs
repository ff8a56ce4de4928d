//! Seeded two-domain synthetic benchmark with hierarchical cluster structure.
//!
//! Source samples come from a three-level Gaussian mixture that mirrors the
//! class taxonomy. Target samples come from the same mixture pushed through a
//! fixed block-wise rotation and a translation, so both domains share labels
//! but differ in their input marginals.

mod io;
mod split;

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hierarchy::{HierarchyTree, Level};
use crate::matrix::Matrix;

pub use io::{
    dataset_from_text, dataset_to_text, load_dataset, save_dataset, DATASET_MAGIC, DATASET_VERSION,
};
pub use split::split;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub domain: Domain,
    /// Coarse label.
    pub y1: usize,
    /// Middle label.
    pub y2: usize,
    /// Fine label.
    pub y3: usize,
}

/// Two fine classes whose centers are drawn toward each other.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusablePair {
    pub a: usize,
    pub b: usize,
    /// In `(0, 1]`; `b`'s center moves to `a + proximity·(b − a)`.
    pub proximity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub tree: HierarchyTree,
    pub d_in: usize,
    pub per_class_source: usize,
    pub per_class_target: usize,
    /// Per-fine-class target counts; overrides `per_class_target` when set.
    pub target_counts: Option<Vec<usize>>,
    pub coarse_spread: f64,
    pub middle_spread: f64,
    pub fine_spread: f64,
    pub noise_sigma: f64,
    pub shift_rotation_angle: f64,
    pub shift_translation_norm: f64,
    pub confusable_pairs: Vec<ConfusablePair>,
    pub seed: u64,
}

/// Target counts of the full-scale layout: 70..=150 per class, 1688 in total.
pub const FULL_TARGET_COUNTS: [usize; 15] = [
    70, 150, 112, 98, 130, 85, 120, 105, 140, 75, 110, 125, 95, 135, 138,
];

impl GenConfig {
    /// Desk-scale defaults on the 15-class brick taxonomy.
    pub fn desk_default() -> Self {
        let tree = crate::hierarchy::lego15_default();
        let confusable_pairs = crate::hierarchy::LEGO15_CONFUSABLE
            .iter()
            .map(|(a, b)| ConfusablePair {
                a: tree.fine_index(a).expect("built-in name"),
                b: tree.fine_index(b).expect("built-in name"),
                proximity: 0.35,
            })
            .collect();
        GenConfig {
            tree,
            d_in: 32,
            per_class_source: 80,
            per_class_target: 40,
            target_counts: None,
            coarse_spread: 1.0,
            middle_spread: 0.6,
            fine_spread: 0.35,
            noise_sigma: 0.8,
            shift_rotation_angle: 0.7,
            shift_translation_norm: 1.0,
            confusable_pairs,
            seed: 7,
        }
    }

    /// Source 200 per class (3000 total) and 1688 target samples.
    pub fn full_scale() -> Self {
        GenConfig {
            per_class_source: 200,
            target_counts: Some(FULL_TARGET_COUNTS.to_vec()),
            ..Self::desk_default()
        }
    }

    pub fn target_count(&self, fine: usize) -> usize {
        match &self.target_counts {
            Some(c) => c[fine],
            None => self.per_class_target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadConfig(m.to_string()));
        self.tree.validate()?;
        if self.d_in == 0 {
            return bad("d_in must be positive");
        }
        if self.per_class_source == 0 {
            return bad("per_class_source must be >= 1");
        }
        match &self.target_counts {
            Some(c) if c.len() != self.tree.n_fine() => {
                return bad("target_counts needs one entry per fine class")
            }
            Some(c) if c.contains(&0) => return bad("target counts must be >= 1"),
            None if self.per_class_target == 0 => return bad("per_class_target must be >= 1"),
            _ => {}
        }
        for (name, v) in [
            ("coarse_spread", self.coarse_spread),
            ("middle_spread", self.middle_spread),
            ("fine_spread", self.fine_spread),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::BadConfig(format!("{name} must be positive")));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be non-negative");
        }
        if !self.shift_rotation_angle.is_finite()
            || !(self.shift_translation_norm.is_finite() && self.shift_translation_norm >= 0.0)
        {
            return bad("shift parameters must be finite, translation non-negative");
        }
        for p in &self.confusable_pairs {
            if p.a >= self.tree.n_fine() || p.b >= self.tree.n_fine() || p.a == p.b {
                return bad("confusable pair must name two distinct fine classes");
            }
            if !(p.proximity > 0.0 && p.proximity <= 1.0) {
                return bad("proximity must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

/// Class centers and shift parameters drawn by [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub fine_centers: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn draw_geometry(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Result<Geometry> {
    let tree = &cfg.tree;
    let (nc, nm, nf) = tree.level_sizes();
    let d = cfg.d_in;
    let coarse: Vec<Vec<f64>> = (0..nc)
        .map(|_| gaussian_vec(rng, d, cfg.coarse_spread))
        .collect();
    let mut middle = Vec::with_capacity(nm);
    for m in 0..nm {
        let c = tree.ancestor(tree.children_of_middle(m)[0], Level::Coarse)?;
        let off = gaussian_vec(rng, d, cfg.middle_spread);
        middle.push(
            coarse[c]
                .iter()
                .zip(off)
                .map(|(a, b)| a + b)
                .collect::<Vec<_>>(),
        );
    }
    let mut fine = Vec::with_capacity(nf);
    for f in 0..nf {
        let m = tree.ancestor(f, Level::Middle)?;
        let off = gaussian_vec(rng, d, cfg.fine_spread);
        fine.push(
            middle[m]
                .iter()
                .zip(off)
                .map(|(a, b)| a + b)
                .collect::<Vec<f64>>(),
        );
    }
    for p in &cfg.confusable_pairs {
        let a = fine[p.a].clone();
        for (bk, ak) in fine[p.b].iter_mut().zip(&a) {
            *bk = ak + p.proximity * (*bk - ak);
        }
    }
    let mut dir = gaussian_vec(rng, d, 1.0);
    let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut dir {
        *v *= cfg.shift_translation_norm / n;
    }
    Ok(Geometry {
        fine_centers: fine,
        translation: dir,
    })
}

/// Rotates coordinate pairs `(0,1), (2,3), ...` by `angle`; an odd last
/// coordinate is left alone.
pub fn rotate_blockwise(x: &mut [f64], angle: f64) {
    let (s, c) = angle.sin_cos();
    for pair in x.chunks_exact_mut(2) {
        let (u, v) = (pair[0], pair[1]);
        pair[0] = c * u - s * v;
        pair[1] = s * u + c * v;
    }
}

/// Draws the class geometry only (same RNG stream prefix as [`generate`]).
pub fn geometry(cfg: &GenConfig) -> Result<Geometry> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    draw_geometry(cfg, &mut rng)
}

/// Generates all source samples (class-major) followed by all target samples.
pub fn generate(cfg: &GenConfig) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let geo = draw_geometry(cfg, &mut rng)?;
    let tree = &cfg.tree;
    let nf = tree.n_fine();
    let mut out = Vec::new();
    let label = |f: usize| -> Result<(usize, usize)> {
        Ok((
            tree.ancestor(f, Level::Coarse)?,
            tree.ancestor(f, Level::Middle)?,
        ))
    };
    for f in 0..nf {
        let (y1, y2) = label(f)?;
        for _ in 0..cfg.per_class_source {
            let noise = gaussian_vec(&mut rng, cfg.d_in, cfg.noise_sigma);
            let x = geo.fine_centers[f]
                .iter()
                .zip(noise)
                .map(|(a, b)| a + b)
                .collect();
            out.push(Sample {
                x,
                domain: Domain::Source,
                y1,
                y2,
                y3: f,
            });
        }
    }
    for f in 0..nf {
        let (y1, y2) = label(f)?;
        for _ in 0..cfg.target_count(f) {
            let noise = gaussian_vec(&mut rng, cfg.d_in, cfg.noise_sigma);
            let mut x: Vec<f64> = geo.fine_centers[f]
                .iter()
                .zip(noise)
                .map(|(a, b)| a + b)
                .collect();
            rotate_blockwise(&mut x, cfg.shift_rotation_angle);
            for (v, t) in x.iter_mut().zip(&geo.translation) {
                *v += t;
            }
            out.push(Sample {
                x,
                domain: Domain::Target,
                y1,
                y2,
                y3: f,
            });
        }
    }
    Ok(out)
}

/// Stacks sample inputs into an `n × d` matrix.
pub fn inputs(samples: &[Sample]) -> Matrix<f64> {
    Matrix::from_rows(samples.iter().map(|s| s.x.as_slice())).expect("uniform sample width")
}

pub fn fine_labels(samples: &[Sample]) -> Vec<usize> {
    samples.iter().map(|s| s.y3).collect()
}

/// Target training samples whose labels are withheld from training code.
///
/// Inputs are freely readable. Every call to [`MaskedSamples::labels`] is
/// counted and fails while the mask is set.
#[derive(Debug)]
pub struct MaskedSamples {
    samples: Vec<Sample>,
    masked: bool,
    label_reads: AtomicUsize,
}

impl MaskedSamples {
    pub fn new(samples: Vec<Sample>) -> Self {
        MaskedSamples {
            samples,
            masked: true,
            label_reads: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_masked(&self) -> bool {
        self.masked
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.samples[i].x
    }

    pub fn inputs(&self) -> Matrix<f64> {
        inputs(&self.samples)
    }

    /// Attempted label reads so far, including refused ones.
    pub fn label_reads(&self) -> usize {
        self.label_reads.load(Ordering::Relaxed)
    }

    pub fn labels(&self) -> Result<Vec<(usize, usize, usize)>> {
        self.label_reads.fetch_add(1, Ordering::Relaxed);
        if self.masked {
            return Err(Error::MaskedLabelAccess);
        }
        Ok(self.samples.iter().map(|s| (s.y1, s.y2, s.y3)).collect())
    }

    /// Full samples for serialization; not for training code.
    pub(crate) fn raw(&self) -> &[Sample] {
        &self.samples
    }
}

impl Clone for MaskedSamples {
    fn clone(&self) -> Self {
        MaskedSamples {
            samples: self.samples.clone(),
            masked: self.masked,
            label_reads: AtomicUsize::new(self.label_reads()),
        }
    }
}

impl PartialEq for MaskedSamples {
    fn eq(&self, other: &Self) -> bool {
        self.masked == other.masked && self.samples == other.samples
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetMeta {
    pub split_seed: u64,
    pub gen_seed: Option<u64>,
    pub tree: Option<HierarchyTree>,
    /// Generator settings echoed into the dataset header, one line each.
    pub config_echo: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train_source: Vec<Sample>,
    pub train_target: MaskedSamples,
    pub val_target: Vec<Sample>,
    pub test_target: Vec<Sample>,
    pub meta: DatasetMeta,
}

impl Splits {
    pub fn d_in(&self) -> Option<usize> {
        self.train_source.first().map(|s| s.x.len())
    }

    pub fn n_target(&self) -> usize {
        self.train_target.len() + self.val_target.len() + self.test_target.len()
    }
}
