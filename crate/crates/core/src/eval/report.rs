use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::Variant;

pub const TABLE_ABLATION_FILE: &str = "table_ablation.csv";
pub const TABLE_MAIN_FILE: &str = "table_main.csv";
pub const TABLE_DA_FILE: &str = "table_da.csv";
pub const TABLE_M_FILE: &str = "table_m.csv";
pub const LAMBDA_SWEEP_FILE: &str = "lambda_sweep.csv";
pub const FEATURES_2D_FILE: &str = "features_2d.csv";

/// One row of the confusion-tendency table.
#[derive(Debug, Clone, PartialEq)]
pub struct MEntry {
    pub c1: String,
    pub c2: String,
    /// M(c1, c1)
    pub m_self: f64,
    /// M(c1, c2)
    pub m_pair: f64,
    /// Whether the pair was configured, as opposed to picked by confusion rank.
    pub named: bool,
}

/// Evaluation of one trained run on the target test split.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub variant: String,
    pub levels: [u8; 3],
    pub seed: u64,
    pub lambda: f64,
    pub use_da: bool,
    pub top1: f64,
    pub per_class_accuracy: Vec<f64>,
    pub m_table: Vec<MEntry>,
    /// `(y3, pc1, pc2)` per test sample.
    pub projection: Vec<(usize, f64, f64)>,
}

/// Six significant digits, shortest form.
pub fn fmt_sig6(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

/// Mean and sample standard deviation (0 for a single value).
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Rank of a variant name in table order; unnamed assignments sort last.
fn variant_rank(name: &str) -> usize {
    Variant::ALL
        .iter()
        .position(|v| v.name() == name)
        .unwrap_or(Variant::ALL.len())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    rank: usize,
    variant: String,
    use_da: bool,
    lambda_bits: u64,
}

fn group(results: &[EvalReport]) -> BTreeMap<GroupKey, Vec<&EvalReport>> {
    let mut g: BTreeMap<GroupKey, Vec<&EvalReport>> = BTreeMap::new();
    for r in results {
        g.entry(GroupKey {
            rank: variant_rank(&r.variant),
            variant: r.variant.clone(),
            use_da: r.use_da,
            // positive finite lambdas order like their bit patterns
            lambda_bits: r.lambda.to_bits(),
        })
        .or_default()
        .push(r);
    }
    g
}

fn is_main(name: &str) -> bool {
    name == Variant::Baseline.name() || name == Variant::Ours.name()
}

fn pct(v: f64) -> String {
    format!("{}%", (v * 100.0).round() as i64)
}

/// Writes the six report CSVs into `dir`. Runs are grouped by
/// (variant, use_da, λ); accuracy columns are means and sample standard
/// deviations over seeds.
/// M(c1,c1) and M(c1,c2) across runs.
type PairValues = (Vec<f64>, Vec<f64>);

pub fn emit_report(results: &[EvalReport], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let groups = group(results);
    let stats = |rs: &[&EvalReport]| {
        let acc: Vec<f64> = rs.iter().map(|r| r.top1).collect();
        let (m, s) = mean_std(&acc);
        (fmt_sig6(m), fmt_sig6(s), rs.len())
    };

    let mut ablation = String::from("method,fe1,fe2,fe3,lambda,top1_mean,top1_std,n_seeds\n");
    let mut main = String::from("method,lambda,top1_mean,top1_std,n_seeds\n");
    let mut m_table =
        String::from("method,use_da,lambda,c1,c2,m_c1_c1,m_c1_c2,cell,named,n_seeds\n");
    for (k, rs) in &groups {
        let lambda = fmt_sig6(f64::from_bits(k.lambda_bits));
        let (mean, std, n) = stats(rs);
        if k.use_da {
            let l = rs[0].levels;
            let _ = writeln!(
                ablation,
                "{},{},{},{},{lambda},{mean},{std},{n}",
                k.variant, l[0], l[1], l[2]
            );
            if is_main(&k.variant) {
                let _ = writeln!(main, "{},{lambda},{mean},{std},{n}", k.variant);
            }
        }
        // entries keyed by pair, in first-seen order
        let mut pairs: Vec<(&str, &str, bool)> = Vec::new();
        let mut vals: BTreeMap<(&str, &str), PairValues> = BTreeMap::new();
        for r in rs {
            for e in &r.m_table {
                let key = (e.c1.as_str(), e.c2.as_str());
                if !vals.contains_key(&key) {
                    pairs.push((key.0, key.1, e.named));
                }
                let slot = vals.entry(key).or_default();
                slot.0.push(e.m_self);
                slot.1.push(e.m_pair);
            }
        }
        for (c1, c2, named) in pairs {
            let (s, p) = &vals[&(c1, c2)];
            let (ms, mp) = (mean_std(s).0, mean_std(p).0);
            let _ = writeln!(
                m_table,
                "{},{},{lambda},{c1},{c2},{},{},{}({}),{named},{}",
                k.variant,
                k.use_da,
                fmt_sig6(ms),
                fmt_sig6(mp),
                pct(ms),
                pct(mp),
                s.len()
            );
        }
    }

    // DA-off rows first, as in the necessity table
    let mut da = String::from("method,use_da,lambda,top1_mean,top1_std,n_seeds\n");
    for use_da in [false, true] {
        for (k, rs) in groups
            .iter()
            .filter(|(k, _)| k.use_da == use_da && is_main(&k.variant))
        {
            let (mean, std, n) = stats(rs);
            let lambda = fmt_sig6(f64::from_bits(k.lambda_bits));
            let _ = writeln!(da, "{},{use_da},{lambda},{mean},{std},{n}", k.variant);
        }
    }

    let mut sweep = String::from("lambda,method,top1_mean,top1_std,n_seeds\n");
    let mut by_lambda: Vec<(&GroupKey, &Vec<&EvalReport>)> = groups
        .iter()
        .filter(|(k, _)| k.use_da && is_main(&k.variant))
        .collect();
    by_lambda.sort_by_key(|(k, _)| (k.lambda_bits, k.rank));
    for (k, rs) in by_lambda {
        let (mean, std, n) = stats(rs);
        let lambda = fmt_sig6(f64::from_bits(k.lambda_bits));
        let _ = writeln!(sweep, "{lambda},{},{mean},{std},{n}", k.variant);
    }

    let mut feats = String::from("method,seed,use_da,lambda,y3,pc1,pc2\n");
    for (k, rs) in &groups {
        let lambda = fmt_sig6(f64::from_bits(k.lambda_bits));
        let mut rs = rs.clone();
        rs.sort_by_key(|r| r.seed);
        for r in rs {
            for &(y, a, b) in &r.projection {
                let _ = writeln!(
                    feats,
                    "{},{},{},{lambda},{y},{},{}",
                    k.variant,
                    r.seed,
                    k.use_da,
                    fmt_sig6(a),
                    fmt_sig6(b)
                );
            }
        }
    }

    for (name, text) in [
        (TABLE_ABLATION_FILE, ablation),
        (TABLE_MAIN_FILE, main),
        (TABLE_DA_FILE, da),
        (TABLE_M_FILE, m_table),
        (LAMBDA_SWEEP_FILE, sweep),
        (FEATURES_2D_FILE, feats),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(variant: &str, seed: u64, lambda: f64, use_da: bool, top1: f64) -> EvalReport {
        EvalReport {
            variant: variant.into(),
            levels: [3, 3, 3],
            seed,
            lambda,
            use_da,
            top1,
            per_class_accuracy: vec![top1],
            m_table: vec![MEntry {
                c1: "85080".into(),
                c2: "6141".into(),
                m_self: 0.35,
                m_pair: 0.64,
                named: true,
            }],
            projection: vec![(0, 1.0, -1.0)],
        }
    }

    fn lines(dir: &Path, name: &str) -> Vec<String> {
        std::fs::read_to_string(dir.join(name))
            .unwrap()
            .lines()
            .map(String::from)
            .collect()
    }

    #[test]
    fn sig6_format() {
        assert_eq!(fmt_sig6(std::f64::consts::LN_2), "0.693147");
        assert_eq!(fmt_sig6(64.31), "64.31");
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(123456789.0), "123457000");
        assert_eq!(fmt_sig6(f64::NAN), "nan");
    }

    #[test]
    fn empty_results_give_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&[], dir.path()).unwrap();
        for f in [
            TABLE_ABLATION_FILE,
            TABLE_MAIN_FILE,
            TABLE_DA_FILE,
            TABLE_M_FILE,
            LAMBDA_SWEEP_FILE,
            FEATURES_2D_FILE,
        ] {
            assert_eq!(lines(dir.path(), f).len(), 1, "{f}");
        }
    }

    #[test]
    fn one_run_one_row() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&[report("baseline", 0, 1.0, true, 0.5)], dir.path()).unwrap();
        for f in [
            TABLE_ABLATION_FILE,
            TABLE_MAIN_FILE,
            TABLE_DA_FILE,
            TABLE_M_FILE,
            LAMBDA_SWEEP_FILE,
        ] {
            assert_eq!(lines(dir.path(), f).len(), 2, "{f}");
        }
        let m = lines(dir.path(), TABLE_M_FILE);
        assert!(m[1].contains("35%(64%)"), "{}", m[1]);
    }

    #[test]
    fn seeds_aggregate_and_sweep_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut rs = Vec::new();
        for &l in &[0.2, 0.5, 1.0, 2.0, 4.0] {
            for v in ["ours", "baseline"] {
                for s in 0..3 {
                    rs.push(report(v, s, l, true, 0.5 + 0.1 * s as f64));
                }
            }
        }
        emit_report(&rs, dir.path()).unwrap();
        let sweep = lines(dir.path(), LAMBDA_SWEEP_FILE);
        assert_eq!(sweep.len(), 11);
        assert!(
            sweep[1].starts_with("0.2,baseline,0.6,0.1,3"),
            "{}",
            sweep[1]
        );
        assert!(sweep[2].starts_with("0.2,ours,"));
        assert!(sweep[10].starts_with("4,ours,"));
    }

    #[test]
    fn ablation_row_order() {
        let dir = tempfile::tempdir().unwrap();
        let rs: Vec<EvalReport> = ["ours", "baseline_w_middle", "baseline", "baseline_w_coarse"]
            .iter()
            .map(|v| report(v, 0, 1.0, true, 0.5))
            .collect();
        emit_report(&rs, dir.path()).unwrap();
        let names: Vec<String> = lines(dir.path(), TABLE_ABLATION_FILE)[1..]
            .iter()
            .map(|l| l.split(',').next().unwrap().to_string())
            .collect();
        let expected: Vec<String> = Variant::ALL.iter().map(|v| v.name().to_string()).collect();
        assert_eq!(names, expected);
    }
}
