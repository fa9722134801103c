use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mda::Mda;

/// A scalar binary operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Mul,
    Add,
    Min,
    Max,
}

impl Op {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Mul => a * b,
            Op::Add => a + b,
            Op::Min => a.min(b),
            Op::Max => a.max(b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Mul => "mul",
            Op::Add => "add",
            Op::Min => "min",
            Op::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Result<Op> {
        match s {
            "mul" => Ok(Op::Mul),
            "add" => Ok(Op::Add),
            "min" => Ok(Op::Min),
            "max" => Ok(Op::Max),
            _ => Err(Error::Malformed(format!("unknown base operation {s:?}"))),
        }
    }
}

/// Tuple operation ⋆ and slice operation ⋄, written `"{star}_{diamond}"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BaseOps {
    pub star: Op,
    pub diamond: Op,
}

impl BaseOps {
    pub const MUL_ADD: BaseOps = BaseOps { star: Op::Mul, diamond: Op::Add };
    pub const ADD_MIN: BaseOps = BaseOps { star: Op::Add, diamond: Op::Min };
    pub const ADD_MAX: BaseOps = BaseOps { star: Op::Add, diamond: Op::Max };
    pub const MAX_ADD: BaseOps = BaseOps { star: Op::Max, diamond: Op::Add };
    /// Elementwise sum; ⋄ never fires without contractions.
    pub const ADD_ADD: BaseOps = BaseOps { star: Op::Add, diamond: Op::Add };

    pub fn new(star: Op, diamond: Op) -> BaseOps {
        BaseOps { star, diamond }
    }

    /// Whether ⋆ distributes over ⋄ on the reals (both sides).
    pub fn distributive(&self) -> bool {
        use Op::*;
        matches!(
            (self.star, self.diamond),
            (Mul, Add) | (Add, Min) | (Add, Max) | (Max, Min) | (Min, Max) | (Max, Max) | (Min, Min)
        )
    }

    /// All four operations are associative and commutative.
    pub fn associative(&self) -> bool {
        true
    }

    /// Numerically confirm the claimed flags on 100 random triples.
    pub fn spot_check(&self, seed: u64) -> Result<()> {
        if !self.distributive() || !self.associative() {
            return Err(Error::Algebra(format!("{self} does not distribute ⋆ over ⋄")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, d) = (self.star, self.diamond);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(-10.0..10.0);
            let b: f64 = rng.gen_range(-10.0..10.0);
            let c: f64 = rng.gen_range(-10.0..10.0);
            let checks = [
                (s.apply(a, d.apply(b, c)), d.apply(s.apply(a, b), s.apply(a, c))),
                (s.apply(d.apply(b, c), a), d.apply(s.apply(b, a), s.apply(c, a))),
                (d.apply(d.apply(a, b), c), d.apply(a, d.apply(b, c))),
                (s.apply(s.apply(a, b), c), s.apply(a, s.apply(b, c))),
            ];
            if let Some((x, y)) = checks.iter().find(|(x, y)| !close(*x, *y)) {
                return Err(Error::Algebra(format!("{self}: identity fails at ({a}, {b}, {c}): {x} vs {y}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for BaseOps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.star.name(), self.diamond.name())
    }
}

impl From<BaseOps> for String {
    fn from(b: BaseOps) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BaseOps {
    type Error = Error;

    fn try_from(s: String) -> Result<BaseOps> {
        let (a, b) = s
            .split_once('_')
            .ok_or_else(|| Error::Malformed(format!("base operations {s:?} are not of the form star_diamond")))?;
        Ok(BaseOps { star: Op::parse(a)?, diamond: Op::parse(b)? })
    }
}

/// A tensor operation matrix.
///
/// Row `r` is operand `r`; column `c` is a coupling. `modes[r]`, when given,
/// lists the column of each of operand `r`'s modes in the operand's own mode
/// order; otherwise operand modes map to the row's filled columns in
/// ascending order. `batch` names a column left out of the order complexity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tom {
    pub rows: usize,
    pub cols: usize,
    pub incidence: Vec<Vec<u8>>,
    pub contracted: Vec<bool>,
    pub shapes: Vec<Vec<usize>>,
    pub base_ops: BaseOps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
}

/// Outcome of [`validate_tom`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomReport {
    pub valid: bool,
    pub errors: Vec<String>,
    /// Common extent of each column, when determinable.
    pub column_sizes: Vec<Option<usize>>,
}

impl Tom {
    /// Build from per-row column lists (operand mode order) and column flags.
    pub fn from_modes(modes: Vec<Vec<usize>>, contracted: Vec<bool>, shapes: Vec<Vec<usize>>, base_ops: BaseOps) -> Result<Tom> {
        let cols = contracted.len();
        let mut incidence = vec![vec![0u8; cols]; modes.len()];
        for (r, ms) in modes.iter().enumerate() {
            for &c in ms {
                if c >= cols {
                    return Err(Error::Shape(format!("row {r} names column {c} of {cols}")));
                }
                incidence[r][c] = 1;
            }
        }
        let ascending = modes.iter().all(|m| m.windows(2).all(|w| w[0] < w[1]));
        let t = Tom {
            rows: modes.len(),
            cols,
            incidence,
            contracted,
            shapes,
            base_ops,
            modes: if ascending { None } else { Some(modes) },
            labels: None,
            batch: None,
        };
        let errs = t.structure_errors();
        if errs.is_empty() {
            Ok(t)
        } else {
            Err(Error::Shape(errs.join("; ")))
        }
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Tom {
        self.labels = Some(labels.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn with_batch(mut self, col: usize) -> Tom {
        self.batch = Some(col);
        self
    }

    pub fn filled(&self, r: usize, c: usize) -> bool {
        self.incidence[r][c] != 0
    }

    /// Column of each mode of operand `r`.
    pub fn row_modes(&self, r: usize) -> Vec<usize> {
        match &self.modes {
            Some(m) => m[r].clone(),
            None => (0..self.cols).filter(|&c| self.filled(r, c)).collect(),
        }
    }

    pub fn all_row_modes(&self) -> Vec<Vec<usize>> {
        (0..self.rows).map(|r| self.row_modes(r)).collect()
    }

    pub fn output_columns(&self) -> Vec<usize> {
        (0..self.cols).filter(|&c| !self.contracted[c]).collect()
    }

    pub fn contracted_columns(&self) -> Vec<usize> {
        (0..self.cols).filter(|&c| self.contracted[c]).collect()
    }

    pub fn column_fill(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.filled(r, c)).count()
    }

    /// Extent of each column from the declared shapes.
    pub fn column_sizes(&self) -> Result<Vec<usize>> {
        let mut sizes = vec![None; self.cols];
        for r in 0..self.rows {
            for (k, c) in self.row_modes(r).into_iter().enumerate() {
                let d = self.shapes[r][k];
                match sizes[c] {
                    None => sizes[c] = Some(d),
                    Some(e) if e != d => {
                        return Err(Error::Coupling(format!("column {c} couples sizes {e} and {d}")));
                    }
                    _ => {}
                }
            }
        }
        sizes
            .into_iter()
            .enumerate()
            .map(|(c, s)| s.ok_or_else(|| Error::Shape(format!("column {c} is empty"))))
            .collect()
    }

    pub fn output_shape(&self) -> Result<Vec<usize>> {
        let sizes = self.column_sizes()?;
        Ok(self.output_columns().into_iter().map(|c| sizes[c]).collect())
    }

    /// Arity, order complexity and coupling arity.
    pub fn complexity(&self) -> (usize, usize, usize) {
        let fill = (0..self.cols).map(|c| self.column_fill(c)).max().unwrap_or(0);
        (self.rows, self.cols, fill)
    }

    /// Order complexity with the batch column left out.
    pub fn order_complexity(&self) -> usize {
        self.cols - usize::from(self.batch.is_some())
    }

    /// Problems that do not depend on operand values.
    pub fn structure_errors(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.rows == 0 {
            e.push("a tensor operation needs at least one operand".into());
        }
        if self.incidence.len() != self.rows || self.shapes.len() != self.rows {
            e.push(format!("{} rows declared, {} incidence rows, {} shapes", self.rows, self.incidence.len(), self.shapes.len()));
            return e;
        }
        if self.contracted.len() != self.cols {
            e.push(format!("{} columns declared, {} contraction flags", self.cols, self.contracted.len()));
            return e;
        }
        for (r, row) in self.incidence.iter().enumerate() {
            if row.len() != self.cols {
                e.push(format!("row {r} has {} entries, expected {}", row.len(), self.cols));
                return e;
            }
            if row.iter().any(|&v| v > 1) {
                e.push(format!("row {r} has entries other than 0 and 1"));
            }
        }
        if let Some(m) = &self.modes {
            if m.len() != self.rows {
                e.push("modes must list one entry per row".into());
                return e;
            }
            for (r, ms) in m.iter().enumerate() {
                let set: BTreeSet<usize> = ms.iter().copied().collect();
                let filled: BTreeSet<usize> = (0..self.cols).filter(|&c| self.filled(r, c)).collect();
                if set.len() != ms.len() || set != filled {
                    e.push(format!("row {r}: modes {ms:?} do not match its filled columns"));
                }
            }
            if !e.is_empty() {
                return e;
            }
        }
        for r in 0..self.rows {
            let fill = self.incidence[r].iter().filter(|&&v| v == 1).count();
            if fill != self.shapes[r].len() {
                e.push(format!("row {r} fills {fill} columns but its shape has order {}", self.shapes[r].len()));
            }
            if self.shapes[r].contains(&0) {
                e.push(format!("row {r} has a zero extent"));
            }
        }
        for c in 0..self.cols {
            if self.column_fill(c) == 0 {
                e.push(format!("column {c} has no filled entry"));
            }
        }
        if let Some(b) = self.batch {
            if b >= self.cols {
                e.push(format!("batch column {b} out of range"));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != self.rows {
                e.push(format!("{} labels for {} rows", l.len(), self.rows));
            } else if l.iter().collect::<BTreeSet<_>>().len() != l.len() {
                e.push("an operation may not contain the same tensor twice".into());
            }
        }
        if e.is_empty() {
            if let Err(err) = self.column_sizes() {
                e.push(err.to_string());
            }
        }
        e
    }

    pub fn from_json_str(s: &str) -> Result<Tom> {
        let t: Tom = serde_json::from_str(s)?;
        let errs = t.structure_errors();
        if errs.is_empty() {
            Ok(t)
        } else {
            Err(Error::Malformed(errs.join("; ")))
        }
    }
}

/// Check a TOM against its operands.
///
/// Operand shapes must equal the declared shapes, and every column's coupled
/// modes must have one common tensor length (the extent of present
/// positions, so jagged operands couple by their longest slice).
pub fn validate_tom(t: &Tom, operands: &[&Mda]) -> TomReport {
    let mut errors = t.structure_errors();
    let mut sizes: Vec<Option<usize>> = vec![None; t.cols];
    if errors.is_empty() {
        if operands.len() != t.rows {
            errors.push(format!("{} operands for arity {}", operands.len(), t.rows));
        } else {
            for (r, x) in operands.iter().enumerate() {
                if x.shape() != t.shapes[r].as_slice() {
                    errors.push(format!("operand {r} has shape {:?}, declared {:?}", x.shape(), t.shapes[r]));
                    continue;
                }
                let lens = x.tensor_lengths();
                for (k, c) in t.row_modes(r).into_iter().enumerate() {
                    match sizes[c] {
                        None => sizes[c] = Some(lens[k]),
                        Some(l) if l != lens[k] => errors.push(format!(
                            "column {c}: operand {r} mode {k} has tensor length {}, expected {l}",
                            lens[k]
                        )),
                        _ => {}
                    }
                }
            }
        }
    }
    TomReport { valid: errors.is_empty(), errors, column_sizes: sizes }
}

/// Arity, order complexity and coupling arity.
pub fn tom_complexity(t: &Tom) -> (usize, usize, usize) {
    t.complexity()
}
