//! Reference evaluation of tensor operations by plain recursive loops.
//!
//! Shares no code with [`crate::ops::evaluate`]; used for differential
//! testing and by the `oracle` command.

use crate::error::{Error, Result};
use crate::mda::{Entry, Mda};
use crate::ops::{BaseOps, Tom};

struct Ctx<'a> {
    t: &'a Tom,
    operands: &'a [&'a Mda],
    modes: Vec<Vec<usize>>,
    offsets: Vec<Vec<usize>>,
    sizes: Vec<usize>,
    ops: BaseOps,
}

impl Ctx<'_> {
    fn tuple(&self, idx: &[usize]) -> Option<f64> {
        let mut acc: Option<f64> = None;
        for r in 0..self.t.rows {
            let at: Vec<usize> = self.modes[r].iter().zip(&self.offsets[r]).map(|(&c, &o)| idx[c] + o).collect();
            for &v in self.operands[r].entry(&at) {
                acc = Some(match acc {
                    None => v,
                    Some(a) => self.ops.star.apply(a, v),
                });
            }
        }
        acc
    }

    /// Fold over contracted columns `cons[k..]` in lexicographic order.
    fn inner(&self, cons: &[usize], k: usize, idx: &mut Vec<usize>, acc: &mut Option<f64>) {
        if k == cons.len() {
            if let Some(v) = self.tuple(idx) {
                *acc = Some(match *acc {
                    None => v,
                    Some(a) => self.ops.diamond.apply(a, v),
                });
            }
            return;
        }
        for i in 0..self.sizes[cons[k]] {
            idx[cons[k]] = i;
            self.inner(cons, k + 1, idx, acc);
        }
    }

    fn outer(&self, outs: &[usize], cons: &[usize], k: usize, idx: &mut Vec<usize>, out: &mut Vec<Entry>) {
        if k == outs.len() {
            let mut acc = None;
            self.inner(cons, 0, idx, &mut acc);
            out.push(acc.into_iter().collect());
            return;
        }
        for i in 0..self.sizes[outs[k]] {
            idx[outs[k]] = i;
            self.outer(outs, cons, k + 1, idx, out);
        }
    }
}

/// Lowest present coordinate and present extent along each mode.
fn extent(x: &Mda) -> (Vec<usize>, Vec<usize>) {
    let o = x.order();
    let mut lo = vec![usize::MAX; o];
    let mut hi = vec![0; o];
    let shape = x.shape().to_vec();
    let mut idx = vec![0; o];
    let total: usize = shape.iter().product();
    for _ in 0..total {
        if !x.entry(&idx).is_empty() {
            for k in 0..o {
                lo[k] = lo[k].min(idx[k]);
                hi[k] = hi[k].max(idx[k]);
            }
        }
        for k in (0..o).rev() {
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    let len = lo.iter().zip(&hi).map(|(&l, &h)| if l == usize::MAX { 0 } else { h - l + 1 }).collect();
    (lo.into_iter().map(|l| if l == usize::MAX { 0 } else { l }).collect(), len)
}

pub fn oracle_evaluate(t: &Tom, operands: &[&Mda], ops: BaseOps) -> Result<Mda> {
    if operands.len() != t.rows {
        return Err(Error::Precondition(format!("{} operands for arity {}", operands.len(), t.rows)));
    }
    let modes: Vec<Vec<usize>> = (0..t.rows).map(|r| t.row_modes(r)).collect();
    let mut sizes = vec![0usize; t.cols];
    let mut offsets = Vec::with_capacity(t.rows);
    for (r, x) in operands.iter().enumerate() {
        if x.order() != modes[r].len() {
            return Err(Error::Precondition(format!("operand {r} has order {}", x.order())));
        }
        let (lo, len) = extent(x);
        for (k, &c) in modes[r].iter().enumerate() {
            if sizes[c] != 0 && sizes[c] != len[k] {
                return Err(Error::Precondition(format!("column {c} couples lengths {} and {}", sizes[c], len[k])));
            }
            sizes[c] = len[k];
        }
        offsets.push(lo);
    }
    let outs: Vec<usize> = (0..t.cols).filter(|&c| !t.contracted[c]).collect();
    let cons: Vec<usize> = (0..t.cols).filter(|&c| t.contracted[c]).collect();
    let ctx = Ctx { t, operands, modes, offsets, sizes, ops };
    let mut out = Vec::new();
    let mut idx = vec![0; t.cols];
    ctx.outer(&outs, &cons, 0, &mut idx, &mut out);
    let shape: Vec<usize> = outs.iter().map(|&c| ctx.sizes[c]).collect();
    Mda::from_entries(&shape, out)
}
