//! Evaluate a matrix product under two semirings and check it against the
//! nested-loop oracle.

use hcc_tensor::mda::Mda;
use hcc_tensor::ops::{evaluate, BaseOps, Tom};
use hcc_tensor::oracle::oracle_evaluate;

fn main() -> hcc_tensor::Result<()> {
    // Y[i,j] = <> over k of A[i,k] * B[k,j]; columns i, j, k.
    let a = Mda::dense(&[2, 2], vec![1.0, 2.0, 3.0, 4.0])?;
    let b = Mda::dense(&[2, 2], vec![5.0, 6.0, 7.0, 8.0])?;
    for ops in [BaseOps::MUL_ADD, BaseOps::ADD_MIN, BaseOps::ADD_MAX] {
        let t = Tom::from_modes(vec![vec![0, 2], vec![2, 1]], vec![false, false, true], vec![vec![2, 2]; 2], ops)?;
        let y = evaluate(&t, &[&a, &b], ops)?;
        assert_eq!(y, oracle_evaluate(&t, &[&a, &b], ops)?);
        println!("({}, {}) {:?}", ops.star.name(), ops.diamond.name(), y.to_dense_vec()?);
    }

    // Jagged operands: absent positions drop out of the reduction.
    let a = Mda::jagged(&[2, 2], vec![true, true, true, false], vec![1.0, 2.0, 3.0])?;
    let b = Mda::jagged(&[2, 2], vec![true, true, false, true], vec![5.0, 6.0, 8.0])?;
    let t = Tom::from_modes(vec![vec![0, 2], vec![2, 1]], vec![false, false, true], vec![vec![2, 2]; 2], BaseOps::MUL_ADD)?;
    println!("jagged {:?}", evaluate(&t, &[&a, &b], BaseOps::MUL_ADD)?.to_dense_vec()?);
    Ok(())
}
