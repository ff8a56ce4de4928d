use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::Level;

impl Serialize for Level {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.index())
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        u8::try_from(v)
            .ok()
            .and_then(|v| Level::from_index(v).ok())
            .ok_or_else(|| serde::de::Error::custom(format!("bad level {v}")))
    }
}

/// Label-level assignments for the three extractors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Baseline,
    BaselineWCoarse,
    BaselineWMiddle,
    Ours,
}

impl Variant {
    /// Ablation-table order.
    pub const ALL: [Variant; 4] = [
        Variant::Baseline,
        Variant::BaselineWCoarse,
        Variant::BaselineWMiddle,
        Variant::Ours,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::BaselineWCoarse => "baseline_w_coarse",
            Variant::BaselineWMiddle => "baseline_w_middle",
            Variant::Ours => "ours",
        }
    }

    pub fn levels(self) -> [Level; 3] {
        use Level::*;
        match self {
            Variant::Baseline => [Fine, Fine, Fine],
            Variant::BaselineWCoarse => [Coarse, Fine, Fine],
            Variant::BaselineWMiddle => [Fine, Middle, Fine],
            Variant::Ours => [Coarse, Middle, Fine],
        }
    }

    pub fn from_levels(levels: [Level; 3]) -> Option<Variant> {
        Self::ALL.into_iter().find(|v| v.levels() == levels)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Level assignment for a named variant.
pub fn make_variant(name: &str) -> Result<[Level; 3]> {
    Ok(name.parse::<Variant>()?.levels())
}

/// Human-readable name of a level assignment, e.g. `ours` or `levels_3_1_2`.
pub fn assignment_name(levels: [Level; 3]) -> String {
    match Variant::from_levels(levels) {
        Some(v) => v.name().to_string(),
        None => format!(
            "levels_{}_{}_{}",
            levels[0].index(),
            levels[1].index(),
            levels[2].index()
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Label level supervising each extractor (1 = coarse, 3 = fine).
    pub level_assignment: [Level; 3],
    pub lambda: f64,
    pub alpha: f64,
    pub use_da: bool,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fine classes per source batch.
    pub pk_classes: usize,
    /// Samples per class in a source batch.
    pub pk_samples: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub d_feat: usize,
    pub hidden: usize,
    pub ce_backprop_to_extractors: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            level_assignment: Variant::Ours.levels(),
            lambda: 1.0,
            alpha: 1.0,
            use_da: true,
            epochs: 30,
            batch_size: 8,
            pk_classes: 4,
            pk_samples: 2,
            lr: 0.003,
            momentum: 0.9,
            weight_decay: 0.0005,
            seed: 0,
            d_feat: 16,
            hidden: 64,
            ce_backprop_to_extractors: false,
        }
    }
}

impl TrainConfig {
    /// Optimizer and schedule of the full-size experiments.
    pub fn full_scale() -> Self {
        TrainConfig {
            lr: 0.0001,
            momentum: 0.9,
            weight_decay: 0.0005,
            batch_size: 8,
            epochs: 60,
            ..Self::default()
        }
    }

    pub fn with_variant(mut self, v: Variant) -> Self {
        self.level_assignment = v.levels();
        self
    }

    pub fn variant_name(&self) -> String {
        assignment_name(self.level_assignment)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadTrainConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size != self.pk_classes * self.pk_samples {
            return bad("batch_size must equal pk_classes * pk_samples");
        }
        if self.pk_classes < 2 || self.pk_samples < 1 {
            return bad("PK sampler needs at least 2 classes and 1 sample per class");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be >= 0");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be >= 0");
        }
        if !(self.lr >= 0.0 && self.momentum >= 0.0 && self.weight_decay >= 0.0) {
            return bad("optimizer settings must be >= 0");
        }
        if self.d_feat == 0 || self.hidden == 0 {
            return bad("layer widths must be positive");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("train config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::BadTrainConfig(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        use Level::*;
        assert_eq!(make_variant("ours").unwrap(), [Coarse, Middle, Fine]);
        assert_eq!(make_variant("baseline").unwrap(), [Fine, Fine, Fine]);
        assert_eq!(
            make_variant("baseline_w_coarse").unwrap(),
            [Coarse, Fine, Fine]
        );
        assert_eq!(
            make_variant("baseline_w_middle").unwrap(),
            [Fine, Middle, Fine]
        );
        assert!(matches!(
            make_variant("nope"),
            Err(Error::UnknownVariant(_))
        ));
    }

    #[test]
    fn full_scale_echo() {
        let c = TrainConfig::full_scale();
        assert_eq!((c.lr, c.momentum, c.weight_decay), (0.0001, 0.9, 0.0005));
        assert_eq!((c.batch_size, c.epochs), (8, 60));
        assert_eq!(c.lambda, 1.0);
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_validation() {
        let c = TrainConfig::default().with_variant(Variant::BaselineWMiddle);
        assert_eq!(TrainConfig::from_toml(&c.to_toml()).unwrap(), c);
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 9,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(TrainConfig::from_toml("level_assignment = [1, 2, 7]").is_err());
    }
}
