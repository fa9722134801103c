//! Merge two binary products into one ternary operation, then split it back
//! into a chain of binary ones.

use hcc_tensor::mda::Mda;
use hcc_tensor::ops::{decompose_to_binary, evaluate, evaluate_chain, merge_ops, tom_complexity, BaseOps, Tom};

fn main() -> hcc_tensor::Result<()> {
    let ops = BaseOps::MUL_ADD;
    let (n, d, e) = (3, 4, 2);
    // ZQ = X WQ, then A = ZQ K^T.
    let q = Tom::from_modes(vec![vec![0, 2], vec![2, 1]], vec![false, false, true], vec![vec![n, d], vec![d, e]], ops)?
        .with_labels(&["X", "WQ"]);
    let s = Tom::from_modes(vec![vec![0, 2], vec![1, 2]], vec![false, false, true], vec![vec![n, e], vec![n, e]], ops)?
        .with_labels(&["ZQ", "K"]);
    let merged = merge_ops(&q, &s, 0, ops)?;
    println!("merged (rows, cols, fill) = {:?}", tom_complexity(&merged));

    let x = Mda::from_fn(&[n, d], |i| (i[0] + i[1]) as f64)?;
    let wq = Mda::from_fn(&[d, e], |i| i[0] as f64 - i[1] as f64)?;
    let k = Mda::from_fn(&[n, e], |i| (i[0] * e + i[1]) as f64 / 4.0)?;
    let y = evaluate(&merged, &[&x, &wq, &k], ops)?;
    let chain = decompose_to_binary(&merged, ops)?;
    println!("chain of {} binary operations", chain.len());
    assert_eq!(evaluate_chain(&chain, &[&x, &wq, &k], ops)?, y);
    println!("{:?}", y.to_dense_vec()?);

    match hcc_tensor::ops::decompose_arity(&merged, BaseOps::MAX_ADD) {
        Err(e) => println!("(max, +): {e}"),
        Ok(_) => unreachable!("(max, +) does not distribute"),
    }
    Ok(())
}
