use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensornet::{Checkpoint, Mlp};

use super::config::TrainConfig;

pub const CONFIG_FILE: &str = "config.echo";
pub const CHECKPOINT_FILE: &str = "checkpoint.final";
pub const HISTORY_FILE: &str = "history.csv";

const NET_NAMES: [&str; 4] = ["G1", "G2", "G3", "C"];

/// Per-epoch means over batches. MMD terms are zero when DA is off;
/// `val_acc` is NaN when the validation split is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub triplet: [f64; 3],
    pub mmd: [f64; 3],
    pub ce: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub extractors: [Mlp<f64>; 3],
    pub classifier: Mlp<f64>,
    pub config: TrainConfig,
    pub history: Vec<EpochRecord>,
}

impl TrainedModel {
    /// Freshly initialized networks: `d_in → hidden → hidden → d_feat` extractors
    /// and a single affine classifier `3·d_feat → n_fine`. The draw order
    /// depends only on the seed, so every variant starts from the same weights.
    pub fn init(cfg: &TrainConfig, d_in: usize, n_fine: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let widths = [d_in, cfg.hidden, cfg.hidden, cfg.d_feat];
        let extractors = [
            Mlp::new(&widths, &mut rng),
            Mlp::new(&widths, &mut rng),
            Mlp::new(&widths, &mut rng),
        ];
        let classifier = Mlp::new(&[3 * cfg.d_feat, n_fine], &mut rng);
        TrainedModel {
            extractors,
            classifier,
            config: cfg.clone(),
            history: Vec::new(),
        }
    }

    pub fn d_in(&self) -> usize {
        self.extractors[0].in_dim()
    }

    pub fn d_feat(&self) -> usize {
        self.extractors[0].out_dim()
    }

    pub fn n_fine(&self) -> usize {
        self.classifier.out_dim()
    }

    pub fn n_params(&self) -> usize {
        self.extractors.iter().map(Mlp::n_params).sum::<usize>() + self.classifier.n_params()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d_feat();
        if self
            .extractors
            .iter()
            .any(|e| e.out_dim() != d || e.in_dim() != self.d_in())
        {
            return Err(Error::ShapeMismatch("extractor shapes differ".into()));
        }
        if self.classifier.in_dim() != 3 * d {
            return Err(Error::ShapeMismatch(format!(
                "classifier input {} != 3 x {d}",
                self.classifier.in_dim()
            )));
        }
        Ok(())
    }

    /// Fused features `[G1(x) | G2(x) | G3(x)]`.
    pub fn fuse(&self, x: &Matrix<f64>) -> Result<Matrix<f64>> {
        let f: Vec<Matrix<f64>> = self
            .extractors
            .iter()
            .map(|g| g.infer(x))
            .collect::<Result<_>>()?;
        Matrix::hstack(&[&f[0], &f[1], &f[2]])
    }

    pub fn logits(&self, x: &Matrix<f64>) -> Result<Matrix<f64>> {
        self.classifier.infer(&self.fuse(x)?)
    }

    /// Argmax of the classifier logits; ties go to the lowest class index.
    pub fn predict(&self, x: &Matrix<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.logits(x)?))
    }

    pub fn checkpoint(&self) -> Checkpoint<f64> {
        let mut nets: Vec<(String, Mlp<f64>)> = self
            .extractors
            .iter()
            .zip(NET_NAMES)
            .map(|(n, name)| (name.to_string(), n.clone()))
            .collect();
        nets.push((NET_NAMES[3].to_string(), self.classifier.clone()));
        Checkpoint {
            seed: self.config.seed,
            epoch: self.history.len(),
            nets,
        }
    }

    pub fn from_checkpoint(ck: Checkpoint<f64>, config: TrainConfig) -> Result<Self> {
        let names: Vec<&str> = ck.nets.iter().map(|(n, _)| n.as_str()).collect();
        if names != NET_NAMES {
            return Err(Error::SchemaMismatch(format!(
                "checkpoint nets {names:?}, expected {NET_NAMES:?}"
            )));
        }
        let mut nets = ck.nets.into_iter().map(|(_, n)| n);
        let mut next = || nets.next().expect("four nets checked above");
        let model = TrainedModel {
            extractors: [next(), next(), next()],
            classifier: next(),
            config,
            history: Vec::new(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,lt1,lt2,lt3,mmd1,mmd2,mmd3,ce,val_acc\n");
        for r in &self.history {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.epoch,
                r.triplet[0],
                r.triplet[1],
                r.triplet[2],
                r.mmd[0],
                r.mmd[1],
                r.mmd[2],
                r.ce,
                r.val_acc
            );
        }
        s
    }

    /// Writes `config.echo`, `checkpoint.final` and `history.csv` into `dir`.
    pub fn save_run(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(p, e))
        };
        write(CONFIG_FILE, self.config.to_toml())?;
        write(HISTORY_FILE, self.history_csv())?;
        // checkpoint last: its presence marks a completed run
        self.checkpoint().save(dir.join(CHECKPOINT_FILE))
    }

    /// Loads networks and config from a run directory; history is not restored.
    pub fn load_run(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let cpath = dir.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&cpath).map_err(|e| Error::io(cpath, e))?;
        let config = TrainConfig::from_toml(&text)?;
        let ck = Checkpoint::load(dir.join(CHECKPOINT_FILE))?;
        Self::from_checkpoint(ck, config)
    }
}

pub(crate) fn argmax_rows(m: &Matrix<f64>) -> Vec<usize> {
    m.iter_rows()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::Variant;

    #[test]
    fn fused_width_and_slices() {
        let cfg = TrainConfig::default();
        let m = TrainedModel::init(&cfg, 5, 15);
        let x = Matrix::from_vec(3, 5, (0..15).map(|i| (i as f64 * 0.37).cos()).collect()).unwrap();
        let f = m.fuse(&x).unwrap();
        assert_eq!(f.shape(), (3, 48));
        for (k, g) in m.extractors.iter().enumerate() {
            assert_eq!(f.col_slice(16 * k, 16 * (k + 1)), g.infer(&x).unwrap());
        }
        assert!(matches!(
            m.fuse(&Matrix::zeros(1, 4)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn zero_extractors_fuse_to_zero() {
        let mut m = TrainedModel::init(&TrainConfig::default(), 4, 3);
        for e in &mut m.extractors {
            let n = e.n_params();
            e.set_params_flat(&vec![0.0; n]).unwrap();
        }
        let x = Matrix::from_vec(2, 4, vec![1.0, -2.0, 3.0, 0.5, 0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(m.fuse(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn biased_classifier_predicts_constant() {
        let mut m = TrainedModel::init(&TrainConfig::default(), 4, 15);
        let n = m.classifier.n_params();
        m.classifier.set_params_flat(&vec![0.0; n]).unwrap();
        m.classifier.layers_mut()[0].bias[7] = 10.0;
        let x = Matrix::from_vec(3, 4, (0..12).map(|i| i as f64).collect()).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![7, 7, 7]);
        assert_eq!(m.predict(&x.select_rows(&[1])).unwrap().len(), 1);
    }

    #[test]
    fn capacity_parity_across_variants() {
        let base = TrainedModel::init(
            &TrainConfig::default().with_variant(Variant::Baseline),
            32,
            15,
        );
        let ours = TrainedModel::init(&TrainConfig::default().with_variant(Variant::Ours), 32, 15);
        assert_eq!(base.n_params(), ours.n_params());
        assert_eq!(base.classifier.in_dim(), ours.classifier.in_dim());
        // identical initial weights for the same seed
        assert_eq!(base.extractors, ours.extractors);
        assert_eq!(base.classifier, ours.classifier);
    }

    #[test]
    fn argmax_ties_lowest() {
        let m = Matrix::from_rows([[1.0, 3.0, 3.0], [2.0, 2.0, 2.0]]).unwrap();
        assert_eq!(argmax_rows(&m), vec![1, 0]);
    }
}
