//! Project configuration file: one TOML table per module.
//!
//! ```toml
//! [gen]
//! hierarchy = "lego15"
//! d_in = 32
//!
//! [[gen.confusable]]
//! a = "85080"
//! b = "6141"
//! proximity = 0.35
//!
//! [split]
//! n_train_target = 270
//!
//! [train]
//! lambda = 1.0
//!
//! [eval]
//! pairs = [["85080", "6141"]]
//! ```
//!
//! Every key is optional; missing keys take the values printed by
//! [`ProjectConfig::default_text`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{ConfusablePair, GenConfig};
use crate::error::{Error, Result};
use crate::hierarchy::{lego15_default, HierarchyTree, LEGO15_CONFUSABLE};
use crate::pipeline::TrainConfig;

/// Name of the built-in 15-class brick taxonomy.
pub const BUILTIN_HIERARCHY: &str = "lego15";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub a: String,
    pub b: String,
    pub proximity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSection {
    /// `lego15` or a path to a `fine,middle,coarse` file, relative to the config file.
    pub hierarchy: String,
    pub d_in: usize,
    pub per_class_source: usize,
    pub per_class_target: usize,
    /// One count per fine class; empty means `per_class_target` everywhere.
    pub target_counts: Vec<usize>,
    pub coarse_spread: f64,
    pub middle_spread: f64,
    pub fine_spread: f64,
    pub noise_sigma: f64,
    pub shift_rotation_angle: f64,
    pub shift_translation_norm: f64,
    pub seed: u64,
    pub confusable: Vec<PairSpec>,
}

impl Default for GenSection {
    fn default() -> Self {
        let g = GenConfig::desk_default();
        let tree = &g.tree;
        GenSection {
            hierarchy: BUILTIN_HIERARCHY.into(),
            d_in: g.d_in,
            per_class_source: g.per_class_source,
            per_class_target: g.per_class_target,
            target_counts: g.target_counts.clone().unwrap_or_default(),
            coarse_spread: g.coarse_spread,
            middle_spread: g.middle_spread,
            fine_spread: g.fine_spread,
            noise_sigma: g.noise_sigma,
            shift_rotation_angle: g.shift_rotation_angle,
            shift_translation_norm: g.shift_translation_norm,
            seed: g.seed,
            confusable: g
                .confusable_pairs
                .iter()
                .map(|p| PairSpec {
                    a: tree.fine_name(p.a).into(),
                    b: tree.fine_name(p.b).into(),
                    proximity: p.proximity,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub n_train_target: usize,
    pub n_val_target: usize,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            n_train_target: 270,
            n_val_target: 30,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Fine-class name pairs (C1, C2) reported in the M table.
    pub pairs: Vec<[String; 2]>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            pairs: LEGO15_CONFUSABLE
                .iter()
                .map(|(a, b)| [a.to_string(), b.to_string()])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub gen: GenSection,
    pub split: SplitSection,
    pub train: TrainConfig,
    pub eval: EvalSection,
    /// Directory that relative hierarchy paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ProjectConfig {
    /// Full-size dataset (3000 source, 1688 target; 750/75 target split) and
    /// the full-size optimizer schedule.
    pub fn full_scale() -> Self {
        let g = GenConfig::full_scale();
        ProjectConfig {
            gen: GenSection {
                per_class_source: g.per_class_source,
                target_counts: g.target_counts.unwrap_or_default(),
                ..GenSection::default()
            },
            split: SplitSection {
                n_train_target: 750,
                n_val_target: 75,
                ..SplitSection::default()
            },
            train: TrainConfig::full_scale(),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ProjectConfig =
            toml::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))?;
        cfg.train
            .validate()
            .map_err(|e| Error::BadConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("project config serializes")
    }

    /// The defaults as a config file.
    pub fn default_text() -> String {
        Self::default().to_toml()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn tree(&self) -> Result<HierarchyTree> {
        if self.gen.hierarchy == BUILTIN_HIERARCHY {
            return Ok(lego15_default());
        }
        let p = Path::new(&self.gen.hierarchy);
        match (&self.base_dir, p.is_relative()) {
            (Some(base), true) => HierarchyTree::load(base.join(p)),
            _ => HierarchyTree::load(p),
        }
    }

    pub fn gen_config(&self) -> Result<GenConfig> {
        let tree = self.tree()?;
        let g = &self.gen;
        let confusable_pairs = g
            .confusable
            .iter()
            .map(|p| {
                Ok(ConfusablePair {
                    a: lookup(&tree, &p.a)?,
                    b: lookup(&tree, &p.b)?,
                    proximity: p.proximity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = GenConfig {
            tree,
            d_in: g.d_in,
            per_class_source: g.per_class_source,
            per_class_target: g.per_class_target,
            target_counts: (!g.target_counts.is_empty()).then(|| g.target_counts.clone()),
            coarse_spread: g.coarse_spread,
            middle_spread: g.middle_spread,
            fine_spread: g.fine_spread,
            noise_sigma: g.noise_sigma,
            shift_rotation_angle: g.shift_rotation_angle,
            shift_translation_norm: g.shift_translation_norm,
            confusable_pairs,
            seed: g.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fine-class index pairs for the M table.
    pub fn eval_pairs(&self, tree: &HierarchyTree) -> Result<Vec<(usize, usize)>> {
        self.eval
            .pairs
            .iter()
            .map(|[a, b]| Ok((lookup(tree, a)?, lookup(tree, b)?)))
            .collect()
    }

    /// The `[gen]` and `[split]` tables, one line per entry, for dataset headers.
    pub fn data_echo(&self) -> Vec<String> {
        #[derive(Serialize)]
        struct Data<'a> {
            gen: &'a GenSection,
            split: &'a SplitSection,
        }
        toml::to_string(&Data {
            gen: &self.gen,
            split: &self.split,
        })
        .expect("data sections serialize")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(String::from)
        .collect()
    }
}

fn lookup(tree: &HierarchyTree, name: &str) -> Result<usize> {
    tree.fine_index(name)
        .map_err(|_| Error::BadConfig(format!("unknown fine class {name:?}")))
}
