//! Dataset text format.
//!
//! ```text
//! hierfuse-dataset 1
//! #seed gen=7 split=0
//! #tree 85080,bricks round,bricks
//! #cfg d_in = 32
//! split,domain,y1,y2,y3,x_0,...,x_31
//! train_source,source,0,0,0,1.2345678901234567e0,...
//! ```
//! Inputs are written at 17 significant digits, so a load reproduces every
//! value exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hierarchy::HierarchyTree;
use crate::tensornet::fmt17;

use super::{DatasetMeta, Domain, MaskedSamples, Sample, Splits};

pub const DATASET_MAGIC: &str = "hierfuse-dataset";
pub const DATASET_VERSION: u32 = 1;

const SPLIT_NAMES: [&str; 4] = ["train_source", "train_target", "val_target", "test_target"];

fn record(out: &mut String, split: &str, s: &Sample) {
    let _ = write!(
        out,
        "{split},{},{},{},{}",
        s.domain.as_str(),
        s.y1,
        s.y2,
        s.y3
    );
    for &v in &s.x {
        out.push(',');
        out.push_str(&fmt17(v));
    }
    out.push('\n');
}

pub fn dataset_to_text(splits: &Splits) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_MAGIC} {DATASET_VERSION}");
    let m = &splits.meta;
    match m.gen_seed {
        Some(g) => {
            let _ = writeln!(out, "#seed gen={g} split={}", m.split_seed);
        }
        None => {
            let _ = writeln!(out, "#seed split={}", m.split_seed);
        }
    }
    if let Some(tree) = &m.tree {
        for line in tree.to_text().lines() {
            let _ = writeln!(out, "#tree {line}");
        }
    }
    for line in &m.config_echo {
        let _ = writeln!(out, "#cfg {line}");
    }
    let d = splits.d_in().unwrap_or(0);
    out.push_str("split,domain,y1,y2,y3");
    for i in 0..d {
        let _ = write!(out, ",x_{i}");
    }
    out.push('\n');
    for s in &splits.train_source {
        record(&mut out, SPLIT_NAMES[0], s);
    }
    for s in splits.train_target.raw() {
        record(&mut out, SPLIT_NAMES[1], s);
    }
    for s in &splits.val_target {
        record(&mut out, SPLIT_NAMES[2], s);
    }
    for s in &splits.test_target {
        record(&mut out, SPLIT_NAMES[3], s);
    }
    out
}

pub fn dataset_from_text(text: &str) -> Result<Splits> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines
        .next()
        .ok_or_else(|| Error::SchemaMismatch("empty dataset file".into()))?;
    let mut hp = head.split_whitespace();
    if hp.next() != Some(DATASET_MAGIC) {
        return Err(Error::SchemaMismatch("not a dataset file".into()));
    }
    match hp.next().and_then(|v| v.parse::<u32>().ok()) {
        Some(DATASET_VERSION) => {}
        Some(v) => {
            return Err(Error::SchemaMismatch(format!(
                "dataset version {v}, expected {DATASET_VERSION}"
            )))
        }
        None => return Err(Error::SchemaMismatch("missing dataset version".into())),
    }

    let mut meta = DatasetMeta::default();
    let mut tree_text = String::new();
    let mut buckets: [Vec<Sample>; 4] = Default::default();
    let mut width: Option<usize> = None;
    for (i, line) in lines {
        let perr = |msg: String| Error::Parse { line: i + 1, msg };
        if let Some(rest) = line.strip_prefix("#seed ") {
            for kv in rest.split_whitespace() {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| perr("bad seed field".into()))?;
                let v: u64 = v.parse().map_err(|_| perr(format!("bad seed {v:?}")))?;
                match k {
                    "gen" => meta.gen_seed = Some(v),
                    "split" => meta.split_seed = v,
                    _ => return Err(perr(format!("unknown seed key {k:?}"))),
                }
            }
        } else if let Some(rest) = line.strip_prefix("#tree ") {
            tree_text.push_str(rest);
            tree_text.push('\n');
        } else if let Some(rest) = line.strip_prefix("#cfg ") {
            meta.config_echo.push(rest.to_string());
        } else if line.starts_with("split,") {
            width = Some(line.split(',').count() - 5);
        } else if line.trim().is_empty() {
            continue;
        } else {
            let width = width.ok_or_else(|| perr("record before column header".into()))?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 + width {
                return Err(perr(format!(
                    "{} fields, expected {}",
                    fields.len(),
                    5 + width
                )));
            }
            let bucket = SPLIT_NAMES
                .iter()
                .position(|&n| n == fields[0])
                .ok_or_else(|| perr(format!("unknown split {:?}", fields[0])))?;
            let domain = match fields[1] {
                "source" => Domain::Source,
                "target" => Domain::Target,
                other => return Err(perr(format!("unknown domain {other:?}"))),
            };
            let label = |f: &str| {
                f.parse::<usize>()
                    .map_err(|_| perr(format!("bad label {f:?}")))
            };
            let x = fields[5..]
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| perr(format!("bad value {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            buckets[bucket].push(Sample {
                x,
                domain,
                y1: label(fields[2])?,
                y2: label(fields[3])?,
                y3: label(fields[4])?,
            });
        }
    }
    if !tree_text.is_empty() {
        meta.tree = Some(HierarchyTree::parse(&tree_text)?);
    }
    let [train_source, train_target, val_target, test_target] = buckets;
    Ok(Splits {
        train_source,
        train_target: MaskedSamples::new(train_target),
        val_target,
        test_target,
        meta,
    })
}

pub fn save_dataset(splits: &Splits, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dataset_to_text(splits)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Splits> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dataset_from_text(&text)
}
