use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::mda::Mda;

use super::eval::evaluate;
use super::tom::{BaseOps, Tom};

fn check_flags(ops: BaseOps) -> Result<()> {
    ops.spot_check(0x5eed)
}

/// Rebuild a TOM from row modes, keeping labels aligned with `label_rows`.
fn assemble(
    modes: Vec<Vec<usize>>,
    contracted: Vec<bool>,
    shapes: Vec<Vec<usize>>,
    ops: BaseOps,
    labels: Option<Vec<String>>,
    batch: Option<usize>,
) -> Result<Tom> {
    let mut t = Tom::from_modes(modes, contracted, shapes, ops)?;
    t.labels = labels;
    t.batch = batch;
    Ok(t)
}

/// Split off the last operand: returns an `(α−1)`-ary operation producing an
/// intermediate, and a binary operation combining that intermediate with the
/// last operand.
///
/// The first keeps the columns touched by the first `α−1` operands; a
/// contraction survives there only when its column does not touch the last
/// operand. The second contracts whatever remains.
pub fn decompose_arity(t: &Tom, ops: BaseOps) -> Result<(Tom, Tom)> {
    if t.rows < 3 {
        return Err(Error::Arity(format!("arity {} is below 3", t.rows)));
    }
    check_flags(ops)?;
    let modes = t.all_row_modes();
    let sizes = t.column_sizes()?;
    let last = t.rows - 1;
    let touches_last: BTreeSet<usize> = modes[last].iter().copied().collect();

    let first_cols: Vec<usize> = (0..t.cols).filter(|&c| (0..last).any(|r| t.filled(r, c))).collect();
    let pos1 = |c: usize| first_cols.iter().position(|&x| x == c).unwrap();
    let contracted1: Vec<bool> = first_cols.iter().map(|&c| t.contracted[c] && !touches_last.contains(&c)).collect();
    let modes1: Vec<Vec<usize>> = modes[..last].iter().map(|ms| ms.iter().map(|&c| pos1(c)).collect()).collect();
    let labels1 = t.labels.as_ref().map(|l| l[..last].to_vec());
    let batch1 = t.batch.filter(|b| first_cols.contains(b)).map(pos1);
    let s1 = assemble(modes1, contracted1.clone(), t.shapes[..last].to_vec(), ops, labels1, batch1)?;

    let gone: BTreeSet<usize> = first_cols.iter().zip(&contracted1).filter(|(_, &k)| k).map(|(&c, _)| c).collect();
    let cols2: Vec<usize> = (0..t.cols).filter(|c| !gone.contains(c)).collect();
    let pos2 = |c: usize| cols2.iter().position(|&x| x == c).unwrap();
    let beta: Vec<usize> = first_cols.iter().zip(&contracted1).filter(|(_, &k)| !k).map(|(&c, _)| c).collect();
    let modes2 = vec![beta.iter().map(|&c| pos2(c)).collect(), modes[last].iter().map(|&c| pos2(c)).collect()];
    let shapes2 = vec![beta.iter().map(|&c| sizes[c]).collect(), t.shapes[last].clone()];
    let contracted2 = cols2.iter().map(|&c| t.contracted[c]).collect();
    let labels2 = t.labels.as_ref().map(|l| vec![format!("{}..{}", l[0], l[last - 1]), l[last].clone()]);
    let batch2 = t.batch.filter(|b| cols2.contains(b)).map(pos2);
    let s2 = assemble(modes2, contracted2, shapes2, ops, labels2, batch2)?;
    Ok((s1, s2))
}

/// Repeated [`decompose_arity`]: a chain of binary operations, the first
/// taking operands 0 and 1 and each later one taking the running result and
/// the next operand.
pub fn decompose_to_binary(t: &Tom, ops: BaseOps) -> Result<Vec<Tom>> {
    match t.rows {
        0 | 1 => Err(Error::Arity(format!("arity {} has no binary decomposition", t.rows))),
        2 => Ok(vec![t.clone()]),
        _ => {
            let (head, tail) = decompose_arity(t, ops)?;
            let mut chain = decompose_to_binary(&head, ops)?;
            chain.push(tail);
            Ok(chain)
        }
    }
}

/// Evaluate a chain from [`decompose_to_binary`]. Operands must be dense.
pub fn evaluate_chain(chain: &[Tom], operands: &[&Mda], ops: BaseOps) -> Result<Mda> {
    if let Some(i) = operands.iter().position(|x| !x.is_dense() || x.is_hyper()) {
        return Err(Error::Jagged(format!("operand {i} is not dense; decomposition needs dense operands")));
    }
    if chain.is_empty() || operands.len() != chain.len() + 1 {
        return Err(Error::Arity(format!("{} operands for a chain of {}", operands.len(), chain.len())));
    }
    let mut acc = evaluate(&chain[0], &operands[..2], ops)?;
    for (k, t) in chain.iter().enumerate().skip(1) {
        acc = evaluate(t, &[&acc, operands[k + 1]], ops)?;
    }
    Ok(acc)
}

/// Substitute `t1` for operand `bind` of `t2`.
///
/// `t1`'s output modes are identified with the bound operand's modes in
/// order; `t1`'s contracted columns become new contracted columns. Rows are
/// `t2[..bind] ++ t1 ++ t2[bind+1..]`.
pub fn merge_ops(t1: &Tom, t2: &Tom, bind: usize, ops: BaseOps) -> Result<Tom> {
    if bind >= t2.rows {
        return Err(Error::Binding(format!("operand {bind} of an arity-{} operation", t2.rows)));
    }
    check_flags(ops)?;
    let out1 = t1.output_shape()?;
    if out1 != t2.shapes[bind] {
        return Err(Error::Coupling(format!(
            "first operation produces shape {out1:?}, operand {bind} expects {:?}",
            t2.shapes[bind]
        )));
    }
    let m2 = t2.all_row_modes();
    let bound = &m2[bind];
    let mut map1 = vec![0; t1.cols];
    let mut contracted = t2.contracted.clone();
    let mut k = 0;
    for c in 0..t1.cols {
        if t1.contracted[c] {
            map1[c] = contracted.len();
            contracted.push(true);
        } else {
            map1[c] = bound[k];
            k += 1;
        }
    }
    let mut modes = m2[..bind].to_vec();
    modes.extend(t1.all_row_modes().into_iter().map(|ms| ms.into_iter().map(|c| map1[c]).collect::<Vec<_>>()));
    modes.extend(m2[bind + 1..].iter().cloned());
    let mut shapes = t2.shapes[..bind].to_vec();
    shapes.extend(t1.shapes.iter().cloned());
    shapes.extend(t2.shapes[bind + 1..].iter().cloned());
    let labels = match (&t1.labels, &t2.labels) {
        (Some(a), Some(b)) => {
            let mut l = b[..bind].to_vec();
            l.extend(a.iter().cloned());
            l.extend(b[bind + 1..].iter().cloned());
            let uniq: BTreeSet<&String> = l.iter().collect();
            if uniq.len() != l.len() {
                return Err(Error::DuplicateTensor("merged operation would contain the same tensor twice".into()));
            }
            Some(l)
        }
        _ => None,
    };
    assemble(modes, contracted, shapes, ops, labels, t2.batch)
}
