//! Express a 2-D convolution as patch extraction followed by one tensor
//! operation.

use hcc_tensor::mda::Mda;
use hcc_tensor::modemap;
use hcc_tensor::ops::{evaluate, BaseOps, Tom};

fn main() -> hcc_tensor::Result<()> {
    let (c, h, w, co, p) = (1, 4, 4, 1, 3);
    let img = Mda::from_fn(&[c, h, w], |i| (i[1] * w + i[2]) as f64)?;
    // A Laplacian-style kernel.
    let ker = Mda::dense(&[co, c, p, p], vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0])?;
    let map = modemap::unfold(&[c, h, w], &[p, p], &[1, 1], &[1, 1])?;
    println!("unfold {:?} -> {:?}, components valid: {}", map.source, map.target, map.verify().valid);
    let patches = map.apply(&img)?;
    // columns c', h', w', c, p_h, p_w
    let t = Tom::from_modes(
        vec![vec![3, 1, 2, 4, 5], vec![0, 3, 4, 5]],
        vec![false, false, false, true, true, true],
        vec![patches.shape().to_vec(), ker.shape().to_vec()],
        BaseOps::MUL_ADD,
    )?;
    let y = evaluate(&t, &[&patches, &ker], BaseOps::MUL_ADD)?;
    for row in y.to_dense_vec()?.chunks(w) {
        println!("{row:?}");
    }
    Ok(())
}
