//! Three-level class taxonomy (coarse → middle → fine) and ancestry queries.
//!
//! Labels are dense integers per level. Each level also carries a name table so
//! classes can be addressed by their brick IDs (e.g. `"85080"`).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Label level; `Coarse` is level 1 and `Fine` is level 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Coarse = 1,
    Middle = 2,
    Fine = 3,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Coarse, Level::Middle, Level::Fine];

    pub fn from_index(level: u8) -> Result<Level> {
        match level {
            1 => Ok(Level::Coarse),
            2 => Ok(Level::Middle),
            3 => Ok(Level::Fine),
            other => Err(Error::BadLevel(other)),
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyTree {
    fine_to_middle: Vec<usize>,
    middle_to_coarse: Vec<usize>,
    fine_names: Vec<String>,
    middle_names: Vec<String>,
    coarse_names: Vec<String>,
}

/// Builds a validated tree from `(fine, middle, coarse)` index triples.
///
/// Every fine label must appear; labels at each level must form `0..n`.
pub fn build_hierarchy(assignments: &[(usize, usize, usize)]) -> Result<HierarchyTree> {
    if assignments.is_empty() {
        return Err(Error::EmptyLevel);
    }
    let mut f2m: HashMap<usize, usize> = HashMap::new();
    let mut m2c: HashMap<usize, usize> = HashMap::new();
    let mut coarse_seen = std::collections::HashSet::new();
    for &(f, m, c) in assignments {
        if let Some(&prev) = f2m.get(&f) {
            if prev != m {
                return Err(Error::ConflictingParent(format!(
                    "fine {f} claims middle {prev} and {m}"
                )));
            }
        }
        if let Some(&prev) = m2c.get(&m) {
            if prev != c {
                return Err(Error::ConflictingParent(format!(
                    "middle {m} claims coarse {prev} and {c}"
                )));
            }
        }
        f2m.insert(f, m);
        m2c.insert(m, c);
        coarse_seen.insert(c);
    }
    let dense = |keys: &mut dyn Iterator<Item = usize>, n: usize, level| {
        let mut seen = vec![false; n];
        for k in keys {
            if k >= n {
                return Err(Error::NonDenseLabels { level, n });
            }
            seen[k] = true;
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::NonDenseLabels { level, n })
        }
    };
    let (nf, nm, nc) = (f2m.len(), m2c.len(), coarse_seen.len());
    dense(&mut f2m.keys().copied(), nf, "fine")?;
    dense(&mut m2c.keys().copied(), nm, "middle")?;
    dense(&mut coarse_seen.iter().copied(), nc, "coarse")?;

    let fine_to_middle = (0..nf).map(|f| f2m[&f]).collect();
    let middle_to_coarse = (0..nm).map(|m| m2c[&m]).collect();
    let tree = HierarchyTree {
        fine_to_middle,
        middle_to_coarse,
        fine_names: (0..nf).map(|i| i.to_string()).collect(),
        middle_names: (0..nm).map(|i| i.to_string()).collect(),
        coarse_names: (0..nc).map(|i| i.to_string()).collect(),
    };
    tree.validate()?;
    Ok(tree)
}

impl HierarchyTree {
    /// Builds a tree from named `(fine, middle, coarse)` records, assigning dense
    /// indices per level in first-appearance order.
    pub fn from_named<S: AsRef<str>>(records: &[(S, S, S)]) -> Result<HierarchyTree> {
        fn intern(names: &mut Vec<String>, map: &mut HashMap<String, usize>, s: &str) -> usize {
            *map.entry(s.to_string()).or_insert_with(|| {
                names.push(s.to_string());
                names.len() - 1
            })
        }
        let (mut fnames, mut mnames, mut cnames) = (Vec::new(), Vec::new(), Vec::new());
        let (mut fmap, mut mmap, mut cmap) = (HashMap::new(), HashMap::new(), HashMap::new());
        let mut triples = Vec::with_capacity(records.len());
        for (f, m, c) in records {
            let fi = intern(&mut fnames, &mut fmap, f.as_ref());
            let mi = intern(&mut mnames, &mut mmap, m.as_ref());
            let ci = intern(&mut cnames, &mut cmap, c.as_ref());
            triples.push((fi, mi, ci));
        }
        let mut tree = build_hierarchy(&triples)?;
        tree.fine_names = fnames;
        tree.middle_names = mnames;
        tree.coarse_names = cnames;
        Ok(tree)
    }

    /// Parses the line-oriented `fine,middle,coarse` format. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<HierarchyTree> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected fine,middle,coarse, got {line:?}"),
                });
            }
            records.push((parts[0], parts[1], parts[2]));
        }
        Self::from_named(&records)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<HierarchyTree> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// One `fine,middle,coarse` record per fine class, in fine-index order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in 0..self.n_fine() {
            let m = self.fine_to_middle[f];
            let c = self.middle_to_coarse[m];
            out.push_str(&format!(
                "{},{},{}\n",
                self.fine_names[f], self.middle_names[m], self.coarse_names[c]
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let (nc, nm, nf) = self.level_sizes();
        if nc == 0 || nm == 0 || nf == 0 {
            return Err(Error::EmptyLevel);
        }
        if !(nc <= nm && nm <= nf) {
            return Err(Error::ConflictingParent(format!(
                "level sizes ({nc},{nm},{nf}) are not nested"
            )));
        }
        let mut middle_used = vec![false; nm];
        for &m in &self.fine_to_middle {
            if m >= nm {
                return Err(Error::NonDenseLabels {
                    level: "middle",
                    n: nm,
                });
            }
            middle_used[m] = true;
        }
        let mut coarse_used = vec![false; nc];
        for &c in &self.middle_to_coarse {
            if c >= nc {
                return Err(Error::NonDenseLabels {
                    level: "coarse",
                    n: nc,
                });
            }
            coarse_used[c] = true;
        }
        if !middle_used.iter().all(|&u| u) {
            return Err(Error::NonDenseLabels {
                level: "middle",
                n: nm,
            });
        }
        if !coarse_used.iter().all(|&u| u) {
            return Err(Error::NonDenseLabels {
                level: "coarse",
                n: nc,
            });
        }
        Ok(())
    }

    /// `(n_coarse, n_middle, n_fine)`.
    pub fn level_sizes(&self) -> (usize, usize, usize) {
        (
            self.coarse_names.len(),
            self.middle_names.len(),
            self.fine_names.len(),
        )
    }

    pub fn n_fine(&self) -> usize {
        self.fine_to_middle.len()
    }

    pub fn n_at(&self, level: Level) -> usize {
        let (c, m, f) = self.level_sizes();
        match level {
            Level::Coarse => c,
            Level::Middle => m,
            Level::Fine => f,
        }
    }

    pub fn ancestor(&self, fine: usize, level: Level) -> Result<usize> {
        let m = *self
            .fine_to_middle
            .get(fine)
            .ok_or_else(|| Error::UnknownLabel(fine.to_string()))?;
        Ok(match level {
            Level::Fine => fine,
            Level::Middle => m,
            Level::Coarse => self.middle_to_coarse[m],
        })
    }

    /// Maps fine labels to their ancestors at `level`.
    pub fn project_labels(&self, fine: &[usize], level: Level) -> Result<Vec<usize>> {
        fine.iter().map(|&f| self.ancestor(f, level)).collect()
    }

    pub fn fine_index(&self, name: &str) -> Result<usize> {
        self.fine_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn fine_name(&self, fine: usize) -> &str {
        &self.fine_names[fine]
    }

    pub fn middle_name(&self, middle: usize) -> &str {
        &self.middle_names[middle]
    }

    pub fn coarse_name(&self, coarse: usize) -> &str {
        &self.coarse_names[coarse]
    }

    /// Fine labels grouped under each middle label.
    pub fn children_of_middle(&self, middle: usize) -> Vec<usize> {
        (0..self.n_fine())
            .filter(|&f| self.fine_to_middle[f] == middle)
            .collect()
    }

    pub fn middles_of_coarse(&self, coarse: usize) -> Vec<usize> {
        (0..self.middle_to_coarse.len())
            .filter(|&m| self.middle_to_coarse[m] == coarse)
            .collect()
    }
}

/// The fixed 15-class brick taxonomy: 3 coarse, 10 middle and 15 fine classes.
///
/// | coarse  | middle             | fine             |
/// |---------|--------------------|------------------|
/// | bricks  | bricks round       | 85080, 3062b     |
/// | bricks  | bricks special     | 87087            |
/// | bricks  | bricks basic       | 3001, 3003       |
/// | plates  | plates round       | 6141             |
/// | plates  | plates rectangular | 3020, 3023       |
/// | plates  | plates special     | 44728            |
/// | plates  | tiles              | 3068b, 3069b     |
/// | slopes  | slopes straight    | 3298, 3040       |
/// | slopes  | slopes wedge       | 6564             |
/// | slopes  | slopes curved      | 11477            |
pub fn lego15_default() -> HierarchyTree {
    HierarchyTree::parse(LEGO15).expect("built-in taxonomy is valid")
}

pub const LEGO15: &str = "\
85080,bricks round,bricks
3062b,bricks round,bricks
87087,bricks special,bricks
3001,bricks basic,bricks
3003,bricks basic,bricks
6141,plates round,plates
3020,plates rectangular,plates
3023,plates rectangular,plates
44728,plates special,plates
3068b,tiles,plates
3069b,tiles,plates
3298,slopes straight,slopes
3040,slopes straight,slopes
6564,slopes wedge,slopes
11477,slopes curved,slopes
";

/// The five frequently-confused `(C1, C2)` brick pairs tracked by the confusion report.
pub const LEGO15_CONFUSABLE: [(&str, &str); 5] = [
    ("3068b", "6564"),
    ("44728", "3298"),
    ("6564", "3020"),
    ("85080", "6141"),
    ("87087", "85080"),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_chain() {
        let t = build_hierarchy(&[(0, 0, 0)]).unwrap();
        assert_eq!(t.level_sizes(), (1, 1, 1));
        assert_eq!(t.ancestor(0, Level::Middle).unwrap(), 0);
    }

    #[test]
    fn conflicting_coarse_parent() {
        let r = build_hierarchy(&[(0, 0, 0), (1, 0, 1)]);
        assert!(matches!(r, Err(Error::ConflictingParent(_))));
    }

    #[test]
    fn conflicting_middle_parent() {
        let r = build_hierarchy(&[(0, 0, 0), (0, 1, 0)]);
        assert!(matches!(r, Err(Error::ConflictingParent(_))));
    }

    #[test]
    fn empty_and_sparse() {
        assert!(matches!(build_hierarchy(&[]), Err(Error::EmptyLevel)));
        let r = build_hierarchy(&[(0, 0, 0), (2, 0, 0)]);
        assert!(matches!(
            r,
            Err(Error::NonDenseLabels { level: "fine", .. })
        ));
    }

    #[test]
    fn bad_level_and_unknown_label() {
        assert!(matches!(Level::from_index(0), Err(Error::BadLevel(0))));
        assert!(matches!(Level::from_index(4), Err(Error::BadLevel(4))));
        let t = lego15_default();
        assert!(matches!(
            t.ancestor(15, Level::Fine),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn lego15_shape_and_named_relations() {
        let t = lego15_default();
        assert_eq!(t.level_sizes(), (3, 10, 15));
        t.validate().unwrap();
        let a = t.fine_index("85080").unwrap();
        let b = t.fine_index("3062b").unwrap();
        assert_eq!(
            t.ancestor(a, Level::Middle).unwrap(),
            t.ancestor(b, Level::Middle).unwrap()
        );
        assert_eq!(
            t.middle_name(t.ancestor(a, Level::Middle).unwrap()),
            "bricks round"
        );
        // bricks round and bricks special share the coarse class "bricks"
        let special = t.fine_index("87087").unwrap();
        assert_eq!(
            t.middle_name(t.ancestor(special, Level::Middle).unwrap()),
            "bricks special"
        );
        assert_eq!(
            t.ancestor(a, Level::Coarse).unwrap(),
            t.ancestor(special, Level::Coarse).unwrap()
        );
        for f in 0..15 {
            assert_eq!(t.ancestor(f, Level::Fine).unwrap(), f);
            assert!(t.ancestor(f, Level::Coarse).unwrap() < 3);
        }
        for (c1, c2) in LEGO15_CONFUSABLE {
            t.fine_index(c1).unwrap();
            t.fine_index(c2).unwrap();
        }
    }

    #[test]
    fn text_round_trip() {
        let t = lego15_default();
        assert_eq!(HierarchyTree::parse(&t.to_text()).unwrap(), t);
        assert!(matches!(
            HierarchyTree::parse("a,b\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
