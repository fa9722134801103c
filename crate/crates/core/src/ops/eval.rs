use crate::error::{Error, Result};
use crate::mda::{self, Entry, Mda};

use super::tom::{validate_tom, BaseOps, Tom};

/// Strided walk over a grid of TOM columns, tracking each operand's flat
/// position.
struct Walk<'a> {
    operands: &'a [&'a Mda],
    sizes: Vec<usize>,
    steps: Vec<Vec<usize>>,
    digits: Vec<usize>,
    flat: Vec<usize>,
}

impl<'a> Walk<'a> {
    /// `order` lists the columns from slowest to fastest.
    fn new(t: &Tom, operands: &'a [&'a Mda], col_sizes: &[usize], order: &[usize]) -> Walk<'a> {
        let mut steps = vec![vec![0; order.len()]; t.rows];
        let mut flat = vec![0; t.rows];
        for (r, x) in operands.iter().enumerate() {
            let st = mda::strides(x.shape());
            let off = x.offsets();
            let modes = t.row_modes(r);
            for (k, &c) in modes.iter().enumerate() {
                flat[r] += off[k] * st[k];
                let pos = order.iter().position(|&o| o == c).expect("every column is ordered");
                steps[r][pos] = st[k];
            }
        }
        Walk {
            operands,
            sizes: order.iter().map(|&c| col_sizes[c]).collect(),
            steps,
            digits: vec![0; order.len()],
            flat,
        }
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.operands.iter().zip(&self.flat).flat_map(|(x, &f)| x.entry_flat(f).iter().copied())
    }

    fn advance(&mut self) {
        for k in (0..self.sizes.len()).rev() {
            self.digits[k] += 1;
            for (f, s) in self.flat.iter_mut().zip(&self.steps) {
                *f += s[k];
            }
            if self.digits[k] < self.sizes[k] {
                return;
            }
            for (f, s) in self.flat.iter_mut().zip(&self.steps) {
                *f -= s[k] * self.sizes[k];
            }
            self.digits[k] = 0;
        }
    }
}

fn checked_sizes(t: &Tom, operands: &[&Mda]) -> Result<Vec<usize>> {
    let report = validate_tom(t, operands);
    if !report.valid {
        return Err(Error::Precondition(report.errors.join("; ")));
    }
    let sizes: Vec<usize> = report.column_sizes.into_iter().map(|s| s.unwrap_or(0)).collect();
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Shape(format!("column {c} has no present entries")));
    }
    Ok(sizes)
}

/// Evaluate a tensor operation.
///
/// At each grid point the operand entries are folded with ⋆ in row order;
/// contracted columns are then folded with ⋄ in lexicographic order. Empty
/// tuples contribute nothing; an output position with no contributions is
/// absent. Output modes follow the non-contracted columns.
pub fn evaluate(t: &Tom, operands: &[&Mda], ops: BaseOps) -> Result<Mda> {
    let sizes = checked_sizes(t, operands)?;
    let outs = t.output_columns();
    let cons = t.contracted_columns();
    let order: Vec<usize> = outs.iter().chain(&cons).copied().collect();
    let out_shape: Vec<usize> = outs.iter().map(|&c| sizes[c]).collect();
    let n_out = mda::grid_len(&out_shape);
    let n_in: usize = cons.iter().map(|&c| sizes[c]).product();
    let (star, diamond) = (ops.star, ops.diamond);
    let mut walk = Walk::new(t, operands, &sizes, &order);
    let mut entries = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        let mut acc: Option<f64> = None;
        for _ in 0..n_in {
            let tuple = walk.entries().reduce(|a, b| star.apply(a, b));
            if let Some(v) = tuple {
                acc = Some(match acc {
                    None => v,
                    Some(a) => diamond.apply(a, v),
                });
            }
            walk.advance();
        }
        entries.push(acc.map(|a| smallvec::smallvec![a]).unwrap_or_default());
    }
    Mda::from_entries(&out_shape, entries)
}

/// The un-collapsed hyper-tensor over all columns: each position holds the
/// present operand entries it couples, in row order. Also returns the
/// contracted columns.
pub fn build_hyper(t: &Tom, operands: &[&Mda]) -> Result<(Mda, Vec<usize>)> {
    let sizes = checked_sizes(t, operands)?;
    let order: Vec<usize> = (0..t.cols).collect();
    let mut walk = Walk::new(t, operands, &sizes, &order);
    let n = mda::grid_len(&sizes);
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        entries.push(walk.entries().collect::<Entry>());
        walk.advance();
    }
    Ok((Mda::from_entries(&sizes, entries)?, t.contracted_columns()))
}

/// Collapse a hyper-tensor from [`build_hyper`] with the base operations.
pub fn collapse_hyper(hyper: &Mda, contracted: &[usize], ops: BaseOps) -> Result<Mda> {
    hyper.collapse(|a, b| ops.star.apply(a, b)).reduce(contracted, |a, b| ops.diamond.apply(a, b))
}
