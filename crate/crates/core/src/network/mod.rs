//! Networks as tensor equation matrices (TEMs): tensors with roles, an
//! ordered list of rows (tensor operations, activations, mode maps),
//! validation, forward evaluation and complexity signatures.

pub mod act;
pub mod fixtures;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::mda::{self, Mda};
use crate::modemap::ModeMapJson;
use crate::ops::{self, Tom};

pub use act::ActKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Weight,
    Intermediate,
    Output,
    /// Recurrent state: rows listed before its producer read the previous
    /// value (zeros on the first pass).
    State,
}

fn is_true(b: &bool) -> bool {
    *b
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorDecl {
    pub name: String,
    pub role: Role,
    pub shape: Vec<usize>,
    /// Whether the tensor counts towards `c_t`.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub counted: bool,
}

impl TensorDecl {
    pub fn new(name: &str, role: Role, shape: &[usize]) -> TensorDecl {
        TensorDecl { name: name.to_string(), role, shape: shape.to_vec(), counted: true }
    }

    pub fn uncounted(mut self) -> TensorDecl {
        self.counted = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Row {
    Op {
        tom: Tom,
        inputs: Vec<String>,
        output: String,
    },
    /// Unary activation; `input == output` applies it in place.
    Act {
        act: ActKind,
        input: String,
        output: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        axes: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slope: Option<f64>,
        /// Names of the scale and shift tensors of a layer norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        affine: Option<[String; 2]>,
    },
    Modemap {
        map: ModeMapJson,
        input: String,
        output: String,
    },
}

impl Row {
    pub fn act(kind: ActKind, tensor: &str, axes: &[usize]) -> Row {
        Row::Act {
            act: kind,
            input: tensor.to_string(),
            output: tensor.to_string(),
            axes: axes.to_vec(),
            eps: None,
            slope: None,
            affine: None,
        }
    }

    pub fn op(tom: Tom, inputs: &[&str], output: &str) -> Row {
        Row::Op { tom, inputs: inputs.iter().map(|s| s.to_string()).collect(), output: output.to_string() }
    }

    pub fn modemap(map: ModeMapJson, input: &str, output: &str) -> Row {
        Row::Modemap { map, input: input.to_string(), output: output.to_string() }
    }

    /// Tensors read by the row.
    pub fn reads(&self) -> Vec<&str> {
        match self {
            Row::Op { inputs, .. } => inputs.iter().map(String::as_str).collect(),
            Row::Act { input, affine, .. } => {
                let mut r = vec![input.as_str()];
                if let Some([g, b]) = affine {
                    r.push(g);
                    r.push(b);
                }
                r
            }
            Row::Modemap { input, .. } => vec![input.as_str()],
        }
    }

    pub fn output(&self) -> &str {
        match self {
            Row::Op { output, .. } | Row::Act { output, .. } | Row::Modemap { output, .. } => output,
        }
    }

    pub fn in_place(&self) -> bool {
        matches!(self, Row::Act { input, output, .. } if input == output)
    }
}

/// A network block.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tem {
    pub tensors: Vec<TensorDecl>,
    pub rows: Vec<Row>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemReport {
    pub valid: bool,
    pub errors: Vec<String>,
}

/// `(C_op, C_T, C_α, C_O, C_A)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub c_op: usize,
    pub c_t: usize,
    pub c_alpha: usize,
    pub c_o: usize,
    pub c_a: usize,
}

impl Signature {
    pub fn tuple(&self) -> (usize, usize, usize, usize, usize) {
        (self.c_op, self.c_t, self.c_alpha, self.c_o, self.c_a)
    }
}

impl Tem {
    pub fn tensor(&self, name: &str) -> Option<&TensorDecl> {
        self.tensors.iter().find(|t| t.name == name)
    }

    fn shape_of(&self, name: &str) -> Result<&[usize]> {
        self.tensor(name)
            .map(|t| t.shape.as_slice())
            .ok_or_else(|| Error::Binding(format!("unknown tensor {name}")))
    }

    /// Rows × tensors incidence: a row touches its operands and its output.
    pub fn incidence(&self) -> Vec<Vec<bool>> {
        self.rows
            .iter()
            .map(|r| {
                let mut touched: BTreeSet<&str> = r.reads().into_iter().collect();
                touched.insert(r.output());
                self.tensors.iter().map(|t| touched.contains(t.name.as_str())).collect()
            })
            .collect()
    }

    /// Outputs of mode-map rows; left out of `c_t`.
    pub fn packaging(&self) -> BTreeSet<&str> {
        self.rows
            .iter()
            .filter_map(|r| match r {
                Row::Modemap { output, .. } => Some(output.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Execution order: a topological order of the producing rows, each
    /// followed by the in-place activations on its output. In-place
    /// activations on tensors nobody produces run first.
    pub fn schedule(&self) -> Result<Vec<usize>> {
        let mut producer: HashMap<&str, usize> = HashMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            if !r.in_place() {
                if let Some(p) = producer.insert(r.output(), i) {
                    return Err(Error::Binding(format!("{} is produced by rows {p} and {i}", r.output())));
                }
            }
        }
        let state: BTreeSet<&str> =
            self.tensors.iter().filter(|t| t.role == Role::State).map(|t| t.name.as_str()).collect();
        let mut indeg = vec![0usize; self.rows.len()];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); self.rows.len()];
        for (i, r) in self.rows.iter().enumerate() {
            if r.in_place() {
                continue;
            }
            for t in r.reads() {
                if let Some(&p) = producer.get(t) {
                    // A state read listed before its producer sees the previous value.
                    let (a, b) = if state.contains(t) && i < p { (i, p) } else { (p, i) };
                    if a != b {
                        succ[a].push(b);
                        indeg[b] += 1;
                    }
                }
            }
        }
        let mut inplace: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            if r.in_place() {
                inplace.entry(r.output()).or_default().push(i);
            }
        }
        let mut order = Vec::with_capacity(self.rows.len());
        for (t, rows) in &inplace {
            if !producer.contains_key(t) {
                order.extend(rows);
            }
        }
        order.sort_unstable();
        let mut ready: BTreeSet<usize> =
            (0..self.rows.len()).filter(|&i| !self.rows[i].in_place() && indeg[i] == 0).collect();
        let mut done = 0;
        while let Some(i) = ready.pop_first() {
            done += 1;
            order.push(i);
            if let Some(acts) = inplace.get(self.rows[i].output()) {
                order.extend(acts);
            }
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        let producing = self.rows.iter().filter(|r| !r.in_place()).count();
        if done != producing {
            let stuck: Vec<usize> = (0..self.rows.len()).filter(|&i| !self.rows[i].in_place() && indeg[i] > 0).collect();
            return Err(Error::Precondition(format!("rows {stuck:?} form a dependency cycle")));
        }
        Ok(order)
    }

    fn row_errors(&self, i: usize, row: &Row) -> Vec<String> {
        let mut e = Vec::new();
        let shape = |n: &str| self.tensor(n).map(|t| t.shape.clone());
        for t in row.reads().into_iter().chain([row.output()]) {
            if self.tensor(t).is_none() {
                e.push(format!("row {i}: unknown tensor {t}"));
            }
        }
        if !e.is_empty() {
            return e;
        }
        match row {
            Row::Op { tom, inputs, output } => {
                let se = tom.structure_errors();
                if !se.is_empty() {
                    e.extend(se.into_iter().map(|s| format!("row {i}: {s}")));
                    return e;
                }
                if inputs.len() != tom.rows {
                    e.push(format!("row {i}: {} inputs for arity {}", inputs.len(), tom.rows));
                    return e;
                }
                if inputs.iter().collect::<BTreeSet<_>>().len() != inputs.len() {
                    e.push(format!("row {i}: an operation may not contain the same tensor twice"));
                }
                if inputs.contains(output) {
                    e.push(format!("row {i}: consumes its own output {output}"));
                }
                for (r, n) in inputs.iter().enumerate() {
                    if shape(n).unwrap() != tom.shapes[r] {
                        e.push(format!("row {i}: {n} has shape {:?}, operand {r} expects {:?}", shape(n).unwrap(), tom.shapes[r]));
                    }
                }
                match tom.output_shape() {
                    Ok(s) if s != shape(output).unwrap() => {
                        e.push(format!("row {i}: produces shape {s:?}, {output} is declared {:?}", shape(output).unwrap()))
                    }
                    Err(err) => e.push(format!("row {i}: {err}")),
                    _ => {}
                }
            }
            Row::Act { act, input, output, axes, affine, .. } => {
                let s = shape(input).unwrap();
                if s != shape(output).unwrap() {
                    e.push(format!("row {i}: activation changes shape"));
                }
                if act.takes_axes() {
                    let uniq: BTreeSet<&usize> = axes.iter().collect();
                    if axes.is_empty() || uniq.len() != axes.len() || axes.iter().any(|&a| a >= s.len()) {
                        e.push(format!("row {i}: axes {axes:?} invalid for order {}", s.len()));
                    } else if *act == ActKind::Softmax && axes.len() != 1 {
                        e.push(format!("row {i}: softmax takes one axis"));
                    } else if let Some([g, b]) = affine {
                        let want: Vec<usize> = axes.iter().map(|&a| s[a]).collect();
                        for p in [g, b] {
                            if shape(p).unwrap() != want {
                                e.push(format!("row {i}: {p} must have shape {want:?}"));
                            }
                        }
                    }
                } else if affine.is_some() {
                    e.push(format!("row {i}: only layer norm takes affine parameters"));
                }
            }
            Row::Modemap { map, input, output } => {
                if map.source_shape() != shape(input).unwrap().as_slice() {
                    e.push(format!("row {i}: map expects {:?}, {input} is {:?}", map.source_shape(), shape(input).unwrap()));
                }
                match map.target_shape() {
                    Ok(t) if t != shape(output).unwrap() => {
                        e.push(format!("row {i}: map produces {t:?}, {output} is declared {:?}", shape(output).unwrap()))
                    }
                    Err(err) => e.push(format!("row {i}: {err}")),
                    _ => {}
                }
            }
        }
        e
    }

    /// Acyclicity, one producer per produced tensor, role consistency and
    /// shape closure through every row.
    pub fn validate(&self) -> TemReport {
        let mut errors = Vec::new();
        let mut names = BTreeSet::new();
        for t in &self.tensors {
            if !names.insert(t.name.as_str()) {
                errors.push(format!("tensor {} declared twice", t.name));
            }
            if t.shape.contains(&0) {
                errors.push(format!("tensor {} has a zero extent", t.name));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            errors.extend(self.row_errors(i, r));
        }
        let mut produced: BTreeMap<&str, usize> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| !r.in_place()) {
            *produced.entry(r.output()).or_default() += 1;
        }
        for t in &self.tensors {
            let n = produced.get(t.name.as_str()).copied().unwrap_or(0);
            match t.role {
                Role::Input | Role::Weight if n > 0 => errors.push(format!("{} is a {:?} but is produced", t.name, t.role)),
                Role::Intermediate | Role::Output | Role::State if n != 1 => {
                    errors.push(format!("{} is produced {n} times", t.name))
                }
                _ => {}
            }
        }
        if let Err(e) = self.schedule() {
            errors.push(e.to_string());
        }
        TemReport { valid: errors.is_empty(), errors }
    }

    /// Complexity signature; activations count as operations only on request.
    pub fn signature(&self, count_activations: bool) -> Signature {
        let packaging = self.packaging();
        let mut s = Signature {
            c_t: self.tensors.iter().filter(|t| t.counted && !packaging.contains(t.name.as_str())).count(),
            ..Signature::default()
        };
        for r in &self.rows {
            match r {
                Row::Op { tom, .. } => {
                    let (a, _, fill) = tom.complexity();
                    s.c_op += 1;
                    s.c_alpha = s.c_alpha.max(a);
                    s.c_o = s.c_o.max(tom.order_complexity());
                    s.c_a = s.c_a.max(fill);
                }
                Row::Act { .. } if count_activations => {
                    s.c_op += 1;
                    s.c_alpha = s.c_alpha.max(1);
                }
                _ => {}
            }
        }
        s
    }

    /// Total number of weight entries.
    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().filter(|t| t.role == Role::Weight).map(|t| mda::grid_len(&t.shape)).sum()
    }

    fn affine_params(&self) -> BTreeMap<&str, bool> {
        let mut m = BTreeMap::new();
        for r in &self.rows {
            if let Row::Act { affine: Some([g, b]), .. } = r {
                m.insert(g.as_str(), true);
                m.insert(b.as_str(), false);
            }
        }
        m
    }

    /// Fan of a weight: product of the contracted column sizes its first
    /// operation couples it to.
    fn fan(&self, name: &str) -> usize {
        for r in &self.rows {
            if let Row::Op { tom, inputs, .. } = r {
                if let Some(k) = inputs.iter().position(|n| n == name) {
                    let sizes = tom.column_sizes().unwrap_or_default();
                    return tom
                        .row_modes(k)
                        .into_iter()
                        .filter(|&c| tom.contracted[c])
                        .map(|c| sizes.get(c).copied().unwrap_or(1))
                        .product::<usize>()
                        .max(1);
                }
            }
        }
        1
    }

    /// Seeded weights: uniform on `±1/√fan`; layer-norm scales are one and
    /// shifts zero.
    pub fn init_weights(&self, seed: u64) -> Result<BTreeMap<String, Mda>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let affine = self.affine_params();
        let mut out = BTreeMap::new();
        for t in self.tensors.iter().filter(|t| t.role == Role::Weight) {
            let m = match affine.get(t.name.as_str()) {
                Some(&scale) => Mda::filled(&t.shape, if scale { 1.0 } else { 0.0 })?,
                None => {
                    let bound = 1.0 / (self.fan(&t.name) as f64).sqrt();
                    Mda::from_fn(&t.shape, |_| rng.gen_range(-bound..=bound))?
                }
            };
            out.insert(t.name.clone(), m);
        }
        Ok(out)
    }

    /// Seeded inputs uniform on `[-1, 1]`.
    pub fn random_inputs(&self, seed: u64) -> Result<BTreeMap<String, Mda>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.tensors
            .iter()
            .filter(|t| t.role == Role::Input)
            .map(|t| Ok((t.name.clone(), Mda::from_fn(&t.shape, |_| rng.gen_range(-1.0..=1.0))?)))
            .collect()
    }

    /// Evaluate every row; returns all tensor values.
    pub fn forward_all(&self, bindings: &BTreeMap<String, Mda>) -> Result<BTreeMap<String, Mda>> {
        let report = self.validate();
        if !report.valid {
            return Err(Error::Precondition(report.errors.join("; ")));
        }
        let mut env: BTreeMap<String, Mda> = BTreeMap::new();
        for t in &self.tensors {
            match t.role {
                Role::Input | Role::Weight => {
                    let v = bindings
                        .get(&t.name)
                        .ok_or_else(|| Error::Binding(format!("no value bound to {}", t.name)))?;
                    if v.shape() != t.shape.as_slice() {
                        return Err(Error::Shape(format!("{} bound with shape {:?}, declared {:?}", t.name, v.shape(), t.shape)));
                    }
                    env.insert(t.name.clone(), v.clone());
                }
                Role::State => {
                    env.insert(t.name.clone(), Mda::filled(&t.shape, 0.0)?);
                }
                _ => {}
            }
        }
        for i in self.schedule()? {
            let row = &self.rows[i];
            let get = |n: &str| env.get(n).ok_or_else(|| Error::Binding(format!("row {i}: {n} has no value yet")));
            let value = match row {
                Row::Op { tom, inputs, .. } => {
                    let xs = inputs.iter().map(|n| get(n)).collect::<Result<Vec<_>>>()?;
                    ops::evaluate(tom, &xs, tom.base_ops)
                }
                Row::Act { act, input, axes, eps, slope, affine, .. } => {
                    let x = get(input)?;
                    let aff = match affine {
                        Some([g, b]) => Some((get(g)?, get(b)?)),
                        None => None,
                    };
                    act::apply(*act, x, &act::ActParams { axes, eps: *eps, slope: *slope, affine: aff })
                }
                Row::Modemap { map, input, .. } => map.build().and_then(|m| m.apply(get(input)?)),
            }
            .map_err(|e| Error::Shape(format!("row {i}: {e}")))?;
            let want = self.shape_of(row.output())?;
            if value.shape() != want {
                return Err(Error::Shape(format!("row {i}: produced {:?}, declared {want:?}", value.shape())));
            }
            env.insert(row.output().to_string(), value);
        }
        Ok(env)
    }

    /// Evaluate and return the output-role tensors.
    pub fn forward(&self, inputs: &BTreeMap<String, Mda>, weights: &BTreeMap<String, Mda>) -> Result<BTreeMap<String, Mda>> {
        let mut b = inputs.clone();
        b.extend(weights.iter().map(|(k, v)| (k.clone(), v.clone())));
        let all = self.forward_all(&b)?;
        Ok(self
            .tensors
            .iter()
            .filter(|t| t.role == Role::Output)
            .map(|t| (t.name.clone(), all[&t.name].clone()))
            .collect())
    }
}

pub fn validate_tem(n: &Tem) -> TemReport {
    n.validate()
}

pub fn signature(n: &Tem, count_activations: bool) -> Signature {
    n.signature(count_activations)
}

impl Tem {
    /// Replace every operation of arity three or more with its chain of
    /// binary operations, adding the chain intermediates as tensors.
    pub fn decompose_rows(&self) -> Result<Tem> {
        let mut out = Tem { tensors: self.tensors.clone(), rows: Vec::new(), notes: self.notes.clone() };
        for (i, row) in self.rows.iter().enumerate() {
            match row {
                Row::Op { tom, inputs, output } if tom.rows >= 3 => {
                    let chain = ops::decompose_to_binary(tom, tom.base_ops)?;
                    let mut acc = inputs[0].clone();
                    for (k, t) in chain.iter().enumerate() {
                        let target = if k + 1 == chain.len() { output.clone() } else { format!("{output}~{i}.{k}") };
                        if k + 1 < chain.len() {
                            out.tensors.push(TensorDecl::new(&target, Role::Intermediate, &t.output_shape()?).uncounted());
                        }
                        let operands = if k == 0 { vec![acc.clone(), inputs[1].clone()] } else { vec![acc.clone(), inputs[k + 1].clone()] };
                        let mut t = t.clone();
                        t.labels = Some(operands.clone());
                        out.rows.push(Row::Op { tom: t, inputs: operands, output: target.clone() });
                        acc = target;
                    }
                }
                _ => out.rows.push(row.clone()),
            }
        }
        Ok(out)
    }
}

impl Tem {
    /// `(row, output, shape)` in execution order, from declared shapes only.
    pub fn shape_trace(&self) -> Vec<(usize, String, Vec<usize>)> {
        self.schedule()
            .unwrap_or_default()
            .into_iter()
            .map(|i| {
                let out = self.rows[i].output();
                (i, out.to_string(), self.tensor(out).map(|t| t.shape.clone()).unwrap_or_default())
            })
            .collect()
    }
}
