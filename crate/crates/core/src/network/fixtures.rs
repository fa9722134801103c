//! Reference network blocks written as TEMs.

use crate::error::{Error, Result};
use crate::modemap::{Mmc, ModeMapJson};
use crate::ops::{BaseOps, Tom};

use super::{ActKind, Role, Row, Tem, TensorDecl};

/// Incremental TEM builder with einsum-style operation rows.
#[derive(Clone, Debug, Default)]
pub struct Builder {
    pub tem: Tem,
}

impl Builder {
    pub fn new() -> Builder {
        Builder::default()
    }

    pub fn tensor(&mut self, name: &str, role: Role, shape: &[usize]) -> &mut Builder {
        self.tem.tensors.push(TensorDecl::new(name, role, shape));
        self
    }

    pub fn input(&mut self, name: &str, shape: &[usize]) -> &mut Builder {
        self.tensor(name, Role::Input, shape)
    }

    pub fn weight(&mut self, name: &str, shape: &[usize]) -> &mut Builder {
        self.tensor(name, Role::Weight, shape)
    }

    /// Weight left out of `c_t`.
    pub fn aux_weight(&mut self, name: &str, shape: &[usize]) -> &mut Builder {
        self.tem.tensors.push(TensorDecl::new(name, Role::Weight, shape).uncounted());
        self
    }

    pub fn uncount(&mut self, name: &str) -> &mut Builder {
        if let Some(t) = self.tem.tensors.iter_mut().find(|t| t.name == name) {
            t.counted = false;
        }
        self
    }

    pub fn set_role(&mut self, name: &str, role: Role) -> &mut Builder {
        if let Some(t) = self.tem.tensors.iter_mut().find(|t| t.name == name) {
            t.role = role;
        }
        self
    }

    fn shape(&self, name: &str) -> Result<Vec<usize>> {
        self.tem
            .tensor(name)
            .map(|t| t.shape.clone())
            .ok_or_else(|| Error::Binding(format!("unknown tensor {name}")))
    }

    /// Operation row. `cols` is `"out modes | contracted modes"` with
    /// whitespace-separated column names; each operand lists its modes by
    /// column name. The output is declared as an intermediate unless it
    /// already exists.
    pub fn ein(&mut self, cols: &str, operands: &[(&str, &str)], output: &str, ops: BaseOps) -> Result<&mut Builder> {
        let (outs, cons) = cols.split_once('|').unwrap_or((cols, ""));
        let names: Vec<&str> = outs.split_whitespace().chain(cons.split_whitespace()).collect();
        let n_out = outs.split_whitespace().count();
        let col = |m: &str| {
            names
                .iter()
                .position(|&c| c == m)
                .ok_or_else(|| Error::Mode(format!("unknown column {m}")))
        };
        let mut modes = Vec::new();
        let mut shapes = Vec::new();
        for (t, ms) in operands {
            modes.push(ms.split_whitespace().map(col).collect::<Result<Vec<_>>>()?);
            shapes.push(self.shape(t)?);
        }
        let contracted = (0..names.len()).map(|c| c >= n_out).collect();
        let labels: Vec<&str> = operands.iter().map(|(t, _)| *t).collect();
        let tom = Tom::from_modes(modes, contracted, shapes, ops)?.with_labels(&labels);
        if self.tem.tensor(output).is_none() {
            let s = tom.output_shape()?;
            self.tensor(output, Role::Intermediate, &s);
        }
        self.tem.rows.push(Row::op(tom, &labels, output));
        Ok(self)
    }

    pub fn act(&mut self, kind: ActKind, tensor: &str, axes: &[usize]) -> &mut Builder {
        self.tem.rows.push(Row::act(kind, tensor, axes));
        self
    }

    /// In-place layer norm with scale and shift tensors.
    pub fn layer_norm(&mut self, tensor: &str, axes: &[usize], gamma: &str, beta: &str) -> &mut Builder {
        self.tem.rows.push(Row::Act {
            act: ActKind::LayerNorm,
            input: tensor.to_string(),
            output: tensor.to_string(),
            axes: axes.to_vec(),
            eps: None,
            slope: None,
            affine: Some([gamma.to_string(), beta.to_string()]),
        });
        self
    }

    pub fn map(&mut self, map: ModeMapJson, input: &str, output: &str) -> Result<&mut Builder> {
        let s = map.target_shape()?;
        self.tensor(output, Role::Intermediate, &s);
        self.tem.rows.push(Row::modemap(map, input, output));
        Ok(self)
    }

    /// Same-padded unfold of a `(C, S1.., Sn)` tensor with odd patch `p`.
    pub fn unfold_same(&mut self, input: &str, p: usize, output: &str) -> Result<&mut Builder> {
        let shape = self.shape(input)?;
        let n = shape.len() - 1;
        self.map(
            ModeMapJson::Unfold { shape, patch: vec![p; n], stride: vec![1; n], padding: Some(vec![p / 2; n]) },
            input,
            output,
        )
    }

    /// Reverse mode `axis`.
    pub fn flip(&mut self, input: &str, axis: usize, output: &str) -> Result<&mut Builder> {
        self.map(flip_map(&self.shape(input)?, axis), input, output)
    }

    pub fn notes(&mut self, s: &str) -> &mut Builder {
        self.tem.notes = Some(s.to_string());
        self
    }

    pub fn finish(&mut self) -> Tem {
        std::mem::take(&mut self.tem)
    }
}

/// Mode map reversing one mode.
pub fn flip_map(shape: &[usize], axis: usize) -> ModeMapJson {
    let n = crate::mda::grid_len(shape);
    let pairs = (0..n)
        .map(|t| {
            let mut idx = crate::mda::unravel(t, shape);
            idx[axis] = shape[axis] - 1 - idx[axis];
            [t, crate::mda::ravel(&idx, shape)]
        })
        .collect();
    ModeMapJson::Custom {
        source: shape.to_vec(),
        target: shape.to_vec(),
        pairs,
        fill: None,
        components: (0..shape.len()).map(|k| Mmc::new(vec![k], vec![k])).collect(),
    }
}

const MA: BaseOps = BaseOps::MUL_ADD;
const AA: BaseOps = BaseOps::ADD_ADD;

/// Fully connected layer `Y = X W`.
pub fn fcnn() -> Tem {
    let mut b = Builder::new();
    b.input("X", &[4, 8]).weight("W", &[8, 3]);
    b.ein("n m | d", &[("X", "n d"), ("W", "d m")], "Y", MA).unwrap();
    b.act(ActKind::Relu6, "Y", &[]).set_role("Y", Role::Output).uncount("Y");
    b.notes("output left out of c_t").finish()
}

/// 3x3 same-padded convolution.
pub fn cnn() -> Tem {
    let mut b = Builder::new();
    b.input("X", &[3, 6, 6]).weight("W", &[4, 3, 3, 3]);
    b.unfold_same("X", 3, "Xu").unwrap();
    b.ein("o h w | c p q", &[("Xu", "c h w p q"), ("W", "o c p q")], "Y", MA).unwrap();
    b.act(ActKind::LeakyRelu, "Y", &[]).set_role("Y", Role::Output).uncount("Y");
    b.notes("output left out of c_t").finish()
}

fn conv(b: &mut Builder, x: &str, w: &str, out: &str) {
    let xu = format!("{x}u");
    if b.tem.tensor(&xu).is_none() {
        b.unfold_same(x, 3, &xu).unwrap();
    }
    b.ein("o h w | c p q", &[(&xu, "c h w p q"), (w, "o c p q")], out, MA).unwrap();
}

/// Residual block of two convolutions.
pub fn resnet() -> Tem {
    let c = 3;
    let mut b = Builder::new();
    b.input("X", &[c, 5, 5]).weight("W1", &[c, c, 3, 3]).weight("W2", &[c, c, 3, 3]);
    conv(&mut b, "X", "W1", "Z1");
    b.act(ActKind::LeakyRelu, "Z1", &[]);
    conv(&mut b, "Z1", "W2", "Z2");
    b.ein("c h w", &[("X", "c h w"), ("Z2", "c h w")], "Y", AA).unwrap();
    b.set_role("Y", Role::Output).finish()
}

/// Single-head self-attention with the key projection fused into the
/// score operation and the value projection into the output operation.
pub fn transformer() -> Tem {
    let (n, d, e) = (5, 4, 3);
    let mut b = Builder::new();
    b.input("X", &[n, d]).weight("W_Q", &[d, e]).weight("W_K", &[d, e]).weight("W_V", &[d, e]);
    b.ein("n f | d", &[("X", "n d"), ("W_Q", "d f")], "Z_Q", MA).unwrap();
    b.ein("n m | f d", &[("Z_Q", "n f"), ("X", "m d"), ("W_K", "d f")], "A", MA).unwrap();
    b.act(ActKind::Softmax, "A", &[1]);
    b.ein("n e | m d", &[("A", "n m"), ("X", "m d"), ("W_V", "d e")], "Y", MA).unwrap();
    b.set_role("Y", Role::Output);
    b.notes("c_t = 7 counts X, the three projections, Z_Q, the scores A and Y; the softmax acts on A in place").finish()
}

/// Polynomial block: products of convolution branches.
pub fn polynet() -> Tem {
    let c = 2;
    let mut b = Builder::new();
    b.input("X", &[c, 5, 5]);
    for w in ["W1", "W2", "W3", "W4"] {
        b.weight(w, &[c, c, 3, 3]);
    }
    conv(&mut b, "X", "W1", "Z1");
    conv(&mut b, "X", "W2", "Z2");
    b.ein("o h w | c p q", &[("Z1", "o h w"), ("Xu", "c h w p q"), ("W3", "o c p q")], "Z3", MA).unwrap();
    b.unfold_same("Z3", 3, "Z3u").unwrap();
    b.ein("o h w | c p q", &[("Z2", "o h w"), ("Z3u", "c h w p q"), ("W4", "o c p q")], "Y", MA).unwrap();
    b.set_role("Y", Role::Output).finish()
}

/// PolyNet block on matrices, where every branch is a plain product.
pub fn polynet_matrix() -> Tem {
    let (n, d) = (2, 2);
    let mut b = Builder::new();
    b.input("X", &[n, d]);
    for w in ["W1", "W2", "W3", "W4"] {
        b.weight(w, &[d, d]);
    }
    b.ein("n e | d", &[("X", "n d"), ("W1", "d e")], "Z1", MA).unwrap();
    b.ein("n e | d", &[("X", "n d"), ("W2", "d e")], "Z2", MA).unwrap();
    b.ein("n e | d", &[("Z1", "n e"), ("X", "n d"), ("W3", "d e")], "Z3", MA).unwrap();
    b.ein("n e | d", &[("Z2", "n e"), ("Z3", "n d"), ("W4", "d e")], "Y", MA).unwrap();
    b.set_role("Y", Role::Output).finish()
}

/// Multiplicative low-rank block.
pub fn monet() -> Tem {
    let (n, d, m, l) = (4, 5, 3, 2);
    let mut b = Builder::new();
    b.input("X", &[n, d]).weight("W_A", &[d, m]).weight("W_B", &[d, l]).weight("W_D", &[l, m]).weight("W_C", &[m, d]);
    b.ein("n m | d", &[("X", "n d"), ("W_A", "d m")], "Z1", MA).unwrap();
    b.ein("n m | d l", &[("Z1", "n m"), ("X", "n d"), ("W_B", "d l"), ("W_D", "l m")], "Z2", MA).unwrap();
    b.ein("n m", &[("Z2", "n m"), ("Z1", "n m")], "Z3", AA).unwrap();
    b.ein("n e | m", &[("Z3", "n m"), ("W_C", "m e")], "Y", MA).unwrap();
    b.set_role("Y", Role::Output).finish()
}

/// Depthwise-separable block with a multiplicative skip and a residual.
pub fn ttnet() -> Tem {
    let c = 3;
    let mut b = Builder::new();
    b.input("X", &[c, 5, 5]);
    b.weight("W_C1", &[c, 3, 3]).weight("W_L1", &[c, c]).weight("W_L2", &[c, c]);
    b.weight("W_C2", &[c, 3, 3]).weight("W_L3", &[c, c]);
    b.unfold_same("X", 3, "Xu").unwrap();
    b.ein("o h w | c p q", &[("Xu", "c h w p q"), ("W_C1", "c p q"), ("W_L1", "c o")], "Z1", MA).unwrap();
    b.ein("o h w | c", &[("X", "c h w"), ("W_L2", "c o")], "Z2", MA).unwrap();
    b.unfold_same("Z2", 3, "Z2u").unwrap();
    b.ein("c h w | p q", &[("Z2u", "c h w p q"), ("W_C2", "c p q"), ("Z1", "c h w")], "Z3", MA).unwrap();
    b.ein("o h w | c", &[("Z3", "c h w"), ("W_L3", "c o")], "Z4", MA).unwrap();
    b.ein("c h w", &[("X", "c h w"), ("Z4", "c h w")], "Y", AA).unwrap();
    b.set_role("Y", Role::Output).finish()
}

fn vim_direction(b: &mut Builder, dir: &str, x: &str, dims: (usize, usize, usize)) {
    let (e, k, n) = dims;
    let w = |s: &str| format!("{s}_{dir}");
    let (xu, c, cb, d, delta, abar, bbar, h, u1, u2, y, yz) =
        (w("xu"), w("c"), w("cb"), w("d"), w("Delta"), w("Abar"), w("Bbar"), w("h"), w("u1"), w("u2"), w("y"), w("yz"));
    let (wconv, bconv, wdelta, pdelta, pa, wb, wc) =
        (w("W_conv"), w("b_conv"), w("W_Delta"), w("P_Delta"), w("P_A"), w("W_B"), w("W_C"));
    b.weight(&wconv, &[e, k]).weight(&bconv, &[e]).weight(&wdelta, &[e, e]).weight(&pdelta, &[e]);
    b.weight(&pa, &[e, n]).weight(&wb, &[e, n]).weight(&wc, &[e, n]);
    b.unfold_same(x, k, &xu).unwrap();
    b.ein("e m | k", &[(&xu, "e m k"), (&wconv, "e k")], &c, MA).unwrap();
    b.ein("e m", &[(&c, "e m"), (&bconv, "e")], &cb, AA).unwrap();
    b.act(ActKind::Silu, &cb, &[]);
    b.ein("f m | e", &[(&cb, "e m"), (&wdelta, "e f")], &d, MA).unwrap();
    b.ein("e m", &[(&d, "e m"), (&pdelta, "e")], &delta, AA).unwrap();
    b.act(ActKind::Softplus, &delta, &[]);
    b.ein("e m n", &[(&delta, "e m"), (&pa, "e n")], &abar, MA).unwrap();
    b.ein("e m n | g", &[(&delta, "e m"), (&cb, "g m"), (&wb, "g n")], &bbar, MA).unwrap();
    let m = b.shape(x).unwrap()[1];
    b.tensor(&h, Role::State, &[e, m, n]);
    b.ein("e m n", &[(&abar, "e m n"), (&h, "e m n")], &u1, MA).unwrap();
    b.ein("e m n", &[(&bbar, "e m n"), (&cb, "e m")], &u2, MA).unwrap();
    b.ein("e m n", &[(&u1, "e m n"), (&u2, "e m n")], &h, AA).unwrap();
    b.ein("e m | n g", &[(&h, "e m n"), (&cb, "g m"), (&wc, "g n")], &y, MA).unwrap();
    b.ein("e m", &[(&y, "e m"), ("z", "e m")], &yz, MA).unwrap();
}

/// Bidirectional state-space block, one scan step per direction.
pub fn vim() -> Tem {
    let (m, d, e, k, n) = (6, 4, 5, 3, 2);
    let mut b = Builder::new();
    b.input("T", &[m, d]).weight("W_x", &[d, e]).weight("W_z", &[d, e]).weight("W_T", &[e, d]);
    b.act(ActKind::LayerNorm, "T", &[1]);
    b.ein("e m | d", &[("T", "m d"), ("W_x", "d e")], "x", MA).unwrap();
    b.ein("e m | d", &[("T", "m d"), ("W_z", "d e")], "z", MA).unwrap();
    b.act(ActKind::Silu, "z", &[]);
    vim_direction(&mut b, "f", "x", (e, k, n));
    b.flip("x", 1, "x_rev").unwrap();
    vim_direction(&mut b, "b", "x_rev", (e, k, n));
    b.flip("yz_b", 1, "yz_b_rev").unwrap();
    b.ein("e m", &[("yz_f", "e m"), ("yz_b_rev", "e m")], "s", AA).unwrap();
    b.ein("m d | e", &[("s", "e m"), ("W_T", "e d")], "t", MA).unwrap();
    b.ein("m d", &[("t", "m d"), ("T", "m d")], "T_l", AA).unwrap();
    b.set_role("T_l", Role::Output);
    b.notes("gating z is shared by both directions; the backward branch scans the reversed sequence").finish()
}

/// Extents of the four-operation block: `s`, `t`, `u`, `v`, `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RedStarDims {
    pub s: usize,
    pub t: usize,
    pub u: usize,
    pub v: usize,
    pub w: usize,
}

impl RedStarDims {
    pub const FULL: RedStarDims = RedStarDims { s: 16, t: 17, u: 32, v: 30, w: 2 };
    pub const SMALL: RedStarDims = RedStarDims { s: 3, t: 2, u: 2, v: 2, w: 2 };
}

/// Four high-arity operations with two affine layer norms.
pub fn red_star(dims: RedStarDims) -> Tem {
    let RedStarDims { s, t, u, v, w } = dims;
    let mut b = Builder::new();
    b.input("X", &[s, s, w, s, w]);
    b.weight("W1", &[s, s, w]).weight("W2", &[w, w]).weight("W3", &[s, s]).weight("W4", &[t, w]);
    b.weight("W5", &[s, s, s]).weight("W6", &[t, u, w, v]).weight("W7", &[s, t, s, w]);
    b.aux_weight("gamma2", &[s]).aux_weight("beta2", &[s]);
    b.aux_weight("gamma4", &[s, w]).aux_weight("beta4", &[s, w]);
    b.ein(
        "j l | i k m n",
        &[("X", "j k l m n"), ("W1", "k m n"), ("W2", "l n"), ("W3", "i m")],
        "Z1",
        MA,
    )
    .unwrap();
    b.ein("i j k m n | l", &[("X", "j k l m n"), ("W4", "i l")], "Z2", MA).unwrap();
    b.layer_norm("Z2", &[1], "gamma2", "beta2");
    b.ein(
        "k l n p q | i j m o",
        &[("W3", "k o"), ("Z2", "i j k m p"), ("W5", "j m o"), ("W6", "i l n q")],
        "Z3",
        MA,
    )
    .unwrap();
    b.ein(
        "i n | j k l m o",
        &[("Z1", "l n"), ("W6", "j k n o"), ("Z3", "i k m n o"), ("W7", "i j l m")],
        "Z4",
        MA,
    )
    .unwrap();
    b.layer_norm("Z4", &[0, 1], "gamma4", "beta4");
    b.set_role("Z4", Role::Output);
    b.notes("layer-norm scales and shifts are left out of c_t").finish()
}

/// Named fixtures with their expected signatures.
pub fn table() -> Vec<(&'static str, Tem, (usize, usize, usize, usize, usize))> {
    vec![
        ("fcnn", fcnn(), (1, 2, 2, 3, 2)),
        ("cnn", cnn(), (1, 2, 2, 6, 2)),
        ("resnet", resnet(), (3, 6, 2, 6, 2)),
        ("transformer", transformer(), (3, 7, 3, 4, 2)),
        ("polynet", polynet(), (4, 9, 3, 6, 2)),
        ("monet", monet(), (4, 9, 4, 4, 2)),
        ("vim", vim(), (27, 45, 3, 4, 2)),
        ("ttnet", ttnet(), (5, 11, 3, 6, 3)),
    ]
}

pub fn by_name(name: &str) -> Option<Tem> {
    match name {
        "red_star" => Some(red_star(RedStarDims::FULL)),
        "red_star_small" => Some(red_star(RedStarDims::SMALL)),
        "polynet_matrix" => Some(polynet_matrix()),
        _ => table().into_iter().find(|(n, ..)| *n == name).map(|(_, t, _)| t),
    }
}
