use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mda::Mda;

/// Activation kinds. The first four form the sampler's pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActKind {
    LeakyRelu,
    Relu6,
    LayerNorm,
    Softmax,
    Silu,
    Softplus,
}

impl ActKind {
    pub const POOL: [ActKind; 4] = [ActKind::LeakyRelu, ActKind::Relu6, ActKind::LayerNorm, ActKind::Softmax];

    pub fn takes_axes(self) -> bool {
        matches!(self, ActKind::LayerNorm | ActKind::Softmax)
    }
}

pub const DEFAULT_SLOPE: f64 = 0.01;
pub const DEFAULT_EPS: f64 = 1e-5;

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn relu6(x: f64) -> f64 {
    x.clamp(0.0, 6.0)
}

pub fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn check_axes(x: &Mda, axes: &[usize]) -> Result<()> {
    let mut seen = vec![false; x.order()];
    for &a in axes {
        if a >= x.order() || seen[a] {
            return Err(Error::Mode(format!("axis {a} is invalid for order {}", x.order())));
        }
        seen[a] = true;
    }
    if axes.is_empty() {
        return Err(Error::Mode("axis-bearing activation needs at least one axis".into()));
    }
    Ok(())
}

/// Normalize each slice along `axis` to sum to one. Absent positions are skipped.
pub fn softmax(x: &Mda, axis: usize) -> Result<Mda> {
    check_axes(x, &[axis])?;
    let space = x.slice_space(&[axis])?;
    let slices: Vec<Mda> = (0..space.num_slices())
        .map(|s| {
            let sl = space.slice(s);
            let hi = sl.values().iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let e = sl.map(|v| (v - hi).exp());
            let z: f64 = e.values().iter().flatten().sum();
            e.map(|v| v / z)
        })
        .collect();
    space.reassemble(&slices)
}

/// Normalize each slice spanned by `axes` to zero mean and unit variance,
/// then scale by `gamma` and shift by `beta` (both shaped like the axes).
pub fn layer_norm(x: &Mda, axes: &[usize], eps: f64, affine: Option<(&Mda, &Mda)>) -> Result<Mda> {
    check_axes(x, axes)?;
    let space = x.slice_space(axes)?;
    if let Some((g, b)) = affine {
        let want = space.inner_shape();
        if g.shape() != want.as_slice() || b.shape() != want.as_slice() {
            return Err(Error::Shape(format!("layer norm parameters must have shape {want:?}")));
        }
    }
    let slices = (0..space.num_slices())
        .map(|s| {
            let sl = space.slice(s);
            let vals: Vec<f64> = sl.values().into_iter().flatten().collect();
            let n = vals.len().max(1) as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let inv = 1.0 / (var + eps).sqrt();
            let entries = (0..sl.grid_len())
                .map(|f| match sl.get_flat(f) {
                    None => Default::default(),
                    Some(v) => {
                        let mut y = (v - mean) * inv;
                        if let Some((g, b)) = affine {
                            y = g.get_flat(f).unwrap_or(1.0) * y + b.get_flat(f).unwrap_or(0.0);
                        }
                        smallvec::smallvec![y]
                    }
                })
                .collect();
            Mda::from_entries(sl.shape(), entries)
        })
        .collect::<Result<Vec<_>>>()?;
    space.reassemble(&slices)
}

/// Parameters of one activation application.
#[derive(Clone, Debug, Default)]
pub struct ActParams<'a> {
    pub axes: &'a [usize],
    pub eps: Option<f64>,
    pub slope: Option<f64>,
    pub affine: Option<(&'a Mda, &'a Mda)>,
}

pub fn apply(kind: ActKind, x: &Mda, p: &ActParams<'_>) -> Result<Mda> {
    match kind {
        ActKind::LeakyRelu => {
            let s = p.slope.unwrap_or(DEFAULT_SLOPE);
            Ok(x.map(|v| leaky_relu(v, s)))
        }
        ActKind::Relu6 => Ok(x.map(relu6)),
        ActKind::Silu => Ok(x.map(silu)),
        ActKind::Softplus => Ok(x.map(softplus)),
        ActKind::Softmax => {
            if p.axes.len() != 1 {
                return Err(Error::Mode("softmax takes exactly one axis".into()));
            }
            softmax(x, p.axes[0])
        }
        ActKind::LayerNorm => layer_norm(x, p.axes, p.eps.unwrap_or(DEFAULT_EPS), p.affine),
    }
}
