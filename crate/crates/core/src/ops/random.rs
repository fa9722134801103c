use rand::seq::SliceRandom;
use rand::Rng;

use crate::mda::Mda;

use super::tom::{BaseOps, Tom};

/// Bounds for [`random_tom`].
#[derive(Clone, Copy, Debug)]
pub struct TomBounds {
    pub min_arity: usize,
    pub max_arity: usize,
    pub max_cols: usize,
    pub max_size: usize,
    /// Probability that a column is contracted.
    pub p_contract: f64,
    /// Whether operand modes may be listed out of column order.
    pub permute_modes: bool,
}

impl Default for TomBounds {
    fn default() -> Self {
        TomBounds { min_arity: 1, max_arity: 4, max_cols: 6, max_size: 4, p_contract: 0.4, permute_modes: true }
    }
}

/// A random valid TOM with every column filled and every row non-empty.
pub fn random_tom<R: Rng>(rng: &mut R, b: TomBounds, ops: BaseOps) -> Tom {
    let arity = rng.gen_range(b.min_arity..=b.max_arity);
    let cols = rng.gen_range(1..=b.max_cols);
    let sizes: Vec<usize> = (0..cols).map(|_| rng.gen_range(1..=b.max_size)).collect();
    let mut inc = vec![vec![false; cols]; arity];
    for row in inc.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.gen_bool(0.5);
        }
        if !row.iter().any(|&x| x) {
            row[rng.gen_range(0..cols)] = true;
        }
    }
    for c in 0..cols {
        if !(0..arity).any(|r| inc[r][c]) {
            inc[rng.gen_range(0..arity)][c] = true;
        }
    }
    let modes: Vec<Vec<usize>> = inc
        .iter()
        .map(|row| {
            let mut m: Vec<usize> = (0..cols).filter(|&c| row[c]).collect();
            if b.permute_modes && rng.gen_bool(0.5) {
                m.shuffle(rng);
            }
            m
        })
        .collect();
    let shapes = modes.iter().map(|m| m.iter().map(|&c| sizes[c]).collect()).collect();
    let contracted = (0..cols).map(|_| rng.gen_bool(b.p_contract)).collect();
    Tom::from_modes(modes, contracted, shapes, ops).expect("generated TOM is well formed")
}

/// Dense operands for `t` with values uniform in `[-1, 1)`.
pub fn random_operands<R: Rng>(rng: &mut R, t: &Tom) -> Vec<Mda> {
    t.shapes
        .iter()
        .map(|s| Mda::from_fn(s, |_| rng.gen_range(-1.0..1.0)).expect("declared shapes are valid"))
        .collect()
}
