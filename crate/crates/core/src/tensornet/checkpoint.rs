//! Text checkpoint of named networks.
//!
//! ```text
//! hierfuse-checkpoint 1
//! seed 0
//! epoch 60
//! net G1 32x64:relu,64x64:relu,64x16:identity
//! w 0 <row-major weights>
//! b 0 <biases>
//! ...
//! ```
//! Values are written at 17 significant digits, so parsing reproduces every
//! 64-bit parameter exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::mlp::{Activation, Dense, Mlp};

pub const CHECKPOINT_MAGIC: &str = "hierfuse-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub seed: u64,
    pub epoch: usize,
    pub nets: Vec<(String, Mlp<T>)>,
}

pub(crate) fn fmt17<T: Scalar>(v: T) -> String {
    format!("{v:.16e}")
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "epoch {}", self.epoch);
        for (name, net) in &self.nets {
            let _ = writeln!(s, "net {name} {}", net.arch());
            for (k, l) in net.layers().iter().enumerate() {
                let _ = write!(s, "w {k}");
                for &v in l.weight.as_slice() {
                    let _ = write!(s, " {}", fmt17(v));
                }
                s.push('\n');
                let _ = write!(s, "b {k}");
                for &v in &l.bias {
                    let _ = write!(s, " {}", fmt17(v));
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().peekable();
        let perr = |line: usize, msg: &str| Error::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (_, head) = lines.next().ok_or_else(|| perr(0, "empty checkpoint"))?;
        let mut hp = head.split_whitespace();
        if hp.next() != Some(CHECKPOINT_MAGIC) {
            return Err(Error::SchemaMismatch("not a checkpoint file".into()));
        }
        let version: u32 = hp
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::SchemaMismatch("missing checkpoint version".into()))?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "checkpoint version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        let mut field = |key: &str| -> Result<u64> {
            let (i, l) = lines.next().ok_or_else(|| perr(0, "truncated header"))?;
            let mut p = l.split_whitespace();
            if p.next() != Some(key) {
                return Err(perr(i, &format!("expected {key}")));
            }
            p.next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| perr(i, &format!("bad {key} value")))
        };
        let seed = field("seed")?;
        let epoch = field("epoch")? as usize;

        let mut nets = Vec::new();
        while let Some((i, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let mut p = line.split_whitespace();
            if p.next() != Some("net") {
                return Err(perr(i, "expected net record"));
            }
            let name = p
                .next()
                .ok_or_else(|| perr(i, "missing net name"))?
                .to_string();
            let arch = p.next().ok_or_else(|| perr(i, "missing architecture"))?;
            let mut layers = Vec::new();
            for (k, spec) in arch.split(',').enumerate() {
                let (dims, act) = spec
                    .split_once(':')
                    .ok_or_else(|| perr(i, "bad layer spec"))?;
                let (din, dout) = dims
                    .split_once('x')
                    .ok_or_else(|| perr(i, "bad layer dims"))?;
                let din: usize = din.parse().map_err(|_| perr(i, "bad input dim"))?;
                let dout: usize = dout.parse().map_err(|_| perr(i, "bad output dim"))?;
                let act: Activation = act.parse()?;
                let w = read_values::<T>(lines.next(), 'w', k, din * dout)?;
                let b = read_values::<T>(lines.next(), 'b', k, dout)?;
                layers.push(Dense {
                    weight: Matrix::from_vec(dout, din, w)?,
                    bias: b,
                    activation: act,
                });
            }
            nets.push((name, Mlp::from_layers(layers)?));
        }
        Ok(Checkpoint { seed, epoch, nets })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn read_values<T: Scalar>(
    line: Option<(usize, &str)>,
    tag: char,
    layer: usize,
    expect: usize,
) -> Result<Vec<T>> {
    let (i, line) = line.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "truncated checkpoint".into(),
    })?;
    let err = |msg: String| Error::Parse { line: i + 1, msg };
    let mut p = line.split_whitespace();
    let t = p.next().unwrap_or("");
    let k: Option<usize> = p.next().and_then(|v| v.parse().ok());
    if t != tag.to_string() || k != Some(layer) {
        return Err(err(format!("expected {tag} {layer}")));
    }
    let vals = p
        .map(|v| v.parse::<T>().map_err(|_| err(format!("bad value {v:?}"))))
        .collect::<Result<Vec<T>>>()?;
    if vals.len() != expect {
        return Err(err(format!("{} values, expected {expect}", vals.len())));
    }
    Ok(vals)
}
