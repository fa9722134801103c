//! Constrained random generation of network blocks: a TEM skeleton, then one
//! rejection-sampled TOM per row, then an activation policy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mda;
use crate::network::{ActKind, Role, Row, Signature, Tem, TensorDecl};
use crate::ops::{BaseOps, Tom};

pub const GENERATOR: &str = "chacha8";

/// Inclusive ranges on the signature plus the block input shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConstraints {
    pub c_op: [usize; 2],
    pub c_t: [usize; 2],
    pub c_alpha: [usize; 2],
    pub c_a: [usize; 2],
    pub c_o_max: usize,
    pub input: Vec<usize>,
    /// Largest tensor, in elements.
    pub max_elems: usize,
    /// Largest TOM grid (product of all column sizes).
    pub max_grid: usize,
    /// TOM draws per row before giving up.
    pub budget: usize,
}

impl Default for SampleConstraints {
    fn default() -> SampleConstraints {
        SampleConstraints {
            c_op: [2, 5],
            c_t: [5, 16],
            c_alpha: [2, 4],
            c_a: [2, 4],
            c_o_max: 11,
            input: vec![64, 16, 16],
            max_elems: 1 << 20,
            max_grid: 1 << 22,
            budget: 10_000,
        }
    }
}

impl SampleConstraints {
    pub fn with_input(mut self, shape: &[usize]) -> SampleConstraints {
        self.input = shape.to_vec();
        self
    }

    pub fn check(&self) -> Result<()> {
        for (name, [lo, hi]) in [("c_op", self.c_op), ("c_t", self.c_t), ("c_alpha", self.c_alpha), ("c_a", self.c_a)] {
            if lo > hi {
                return Err(Error::Precondition(format!("{name} range {lo}..{hi} is empty")));
            }
        }
        if self.c_op[0] == 0 || self.c_alpha[0] < 1 {
            return Err(Error::Precondition("need at least one operation of arity one or more".into()));
        }
        if self.input.is_empty() || self.input.contains(&0) {
            return Err(Error::Precondition(format!("input shape {:?} is degenerate", self.input)));
        }
        if self.c_o_max < self.input.len() {
            return Err(Error::Precondition("c_o_max is below the input order".into()));
        }
        Ok(())
    }

    /// True when `s` lies inside every range.
    pub fn admits(&self, s: &Signature) -> bool {
        let inside = |v: usize, [lo, hi]: [usize; 2]| lo <= v && v <= hi;
        inside(s.c_op, self.c_op)
            && inside(s.c_t, self.c_t)
            && inside(s.c_alpha, self.c_alpha)
            && inside(s.c_a, self.c_a)
            && s.c_o <= self.c_o_max
    }
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

enum Slot {
    Data(Vec<usize>),
    Weight,
}

/// One TOM draw for the given data operands, or `None` on rejection.
/// Returns the TOM (operands in slot order) and the shapes of its weights.
fn draw_tom(rng: &mut ChaCha8Rng, c: &SampleConstraints, slots: &[Slot], divs: &[usize]) -> Option<(Tom, Vec<Vec<usize>>)> {
    let order = rng.gen_range(1..=4);
    let mut sizes = Vec::with_capacity(order);
    let mut elems = 1;
    // Without weights every output column must come from a data mode.
    let data_sizes: Vec<usize> = slots.iter().flat_map(|s| if let Slot::Data(sh) = s { sh.clone() } else { vec![] }).collect();
    let pool = if slots.iter().any(|s| matches!(s, Slot::Weight)) { divs } else { &data_sizes[..] };
    for _ in 0..order {
        let fit: Vec<usize> = pool.iter().copied().filter(|&d| elems * d <= c.max_elems).collect();
        let d = *fit.choose(rng)?;
        elems *= d;
        sizes.push(d);
    }
    let n_out = order;
    let mut contracted = vec![false; n_out];
    let mut modes: Vec<Vec<usize>> = Vec::with_capacity(slots.len());
    for slot in slots {
        let Slot::Data(shape) = slot else {
            modes.push(Vec::new());
            continue;
        };
        let mut used = Vec::new();
        for &s in shape {
            let free: Vec<usize> = (0..sizes.len()).filter(|&k| sizes[k] == s && !used.contains(&k)).collect();
            // Reuse a matching column or open a new contracted one.
            let k = if !free.is_empty() && rng.gen_bool(0.5) {
                *free.choose(rng).unwrap()
            } else {
                sizes.push(s);
                contracted.push(true);
                sizes.len() - 1
            };
            used.push(k);
        }
        modes.push(used);
    }
    let cols = sizes.len();
    let weights: Vec<usize> = (0..slots.len()).filter(|&r| matches!(slots[r], Slot::Weight)).collect();
    for (i, &r) in weights.iter().enumerate() {
        let mut pick: Vec<usize> = (0..cols).filter(|_| rng.gen_bool(0.5)).collect();
        if i + 1 == weights.len() {
            for k in 0..cols {
                if !modes.iter().any(|m| m.contains(&k)) && !pick.contains(&k) {
                    pick.push(k);
                }
            }
            pick.sort_unstable();
        }
        if pick.is_empty() {
            pick.push(rng.gen_range(0..cols));
        }
        modes[r] = pick;
    }
    if cols > c.c_o_max || (0..cols).any(|k| !modes.iter().any(|m| m.contains(&k))) {
        return None;
    }
    let fill = (0..cols).map(|k| modes.iter().filter(|m| m.contains(&k)).count()).max().unwrap_or(0);
    if fill > c.c_a[1] || sizes.iter().try_fold(1usize, |a, &s| a.checked_mul(s).filter(|&p| p <= c.max_grid)).is_none() {
        return None;
    }
    let shapes: Vec<Vec<usize>> = modes.iter().map(|m| m.iter().map(|&k| sizes[k]).collect()).collect();
    if shapes.iter().any(|s| mda::grid_len(s) > c.max_elems) {
        return None;
    }
    let wshapes = weights.iter().map(|&r| shapes[r].clone()).collect();
    let tom = Tom::from_modes(modes, contracted, shapes, BaseOps::MUL_ADD).ok()?;
    Some((tom, wshapes))
}

fn try_sample(rng: &mut ChaCha8Rng, c: &SampleConstraints) -> Result<Tem> {
    let n_op = rng.gen_range(c.c_op[0]..=c.c_op[1]);
    let divs = divisors(c.input.iter().product());
    let mut tem = Tem { tensors: vec![TensorDecl::new("X", Role::Input, &c.input)], rows: Vec::new(), notes: None };
    let mut data: Vec<String> = vec!["X".into()];
    let mut n_w = 0;
    for r in 0..n_op {
        let arity = rng.gen_range(c.c_alpha[0]..=c.c_alpha[1]);
        let first = data.last().unwrap().clone();
        let mut chosen = vec![first];
        let mut is_weight = vec![false];
        for _ in 1..arity {
            let free: Vec<&String> = data.iter().filter(|d| !chosen.contains(d)).collect();
            if free.is_empty() || rng.gen_bool(0.5) {
                chosen.push(String::new());
                is_weight.push(true);
            } else {
                chosen.push((*free.choose(rng).unwrap()).clone());
                is_weight.push(false);
            }
        }
        let slots: Vec<Slot> = chosen
            .iter()
            .zip(&is_weight)
            .map(|(n, &w)| if w { Slot::Weight } else { Slot::Data(tem.tensor(n).unwrap().shape.clone()) })
            .collect();
        let mut drawn = None;
        for _ in 0..c.budget {
            if let Some(d) = draw_tom(rng, c, &slots, &divs) {
                drawn = Some(d);
                break;
            }
        }
        let (mut tom, wshapes) =
            drawn.ok_or_else(|| Error::SamplingTimeout(format!("row {r}: no compatible operation in {} draws", c.budget)))?;
        let mut ws = wshapes.into_iter();
        for (n, &w) in chosen.iter_mut().zip(&is_weight) {
            if w {
                n_w += 1;
                *n = format!("W{n_w}");
                tem.tensors.push(TensorDecl::new(n, Role::Weight, &ws.next().unwrap()));
            }
        }
        let out = if r + 1 == n_op { "Y".to_string() } else { format!("Z{}", r + 1) };
        let role = if r + 1 == n_op { Role::Output } else { Role::Intermediate };
        tem.tensors.push(TensorDecl::new(&out, role, &tom.output_shape()?));
        tom.labels = Some(chosen.clone());
        tem.rows.push(Row::Op { tom, inputs: chosen, output: out.clone() });
        data.push(out);
    }
    Ok(tem)
}

/// Sample a block whose signature lies inside every range of `c`.
pub fn sample_architecture(c: &SampleConstraints, seed: u64) -> Result<Tem> {
    c.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const ATTEMPTS: usize = 1000;
    let mut last = String::from("no block inside the ranges");
    for _ in 0..ATTEMPTS {
        match try_sample(&mut rng, c) {
            Ok(tem) if c.admits(&tem.signature(false)) && tem.validate().valid => return Ok(tem),
            Ok(_) => {}
            // A row with no compatible operation restarts the whole block.
            Err(Error::SamplingTimeout(e)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SamplingTimeout(format!("{last} (after {ATTEMPTS} attempts)")))
}

/// After each operation row, add no activation (probability 1/2), one (1/4)
/// or two (1/4), each drawn uniformly from the pool and applied in place.
pub fn insert_activations(tem: &Tem, seed: u64) -> Tem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xac71_7a71_0000_0001);
    let mut out = Tem { tensors: tem.tensors.clone(), rows: Vec::new(), notes: tem.notes.clone() };
    for row in &tem.rows {
        out.rows.push(row.clone());
        let Row::Op { output, .. } = row else { continue };
        let order = tem.tensor(output).map_or(0, |t| t.shape.len());
        let u: f64 = rng.gen();
        let n = if u < 0.5 {
            0
        } else if u < 0.75 {
            1
        } else {
            2
        };
        for _ in 0..n {
            let kind = *ActKind::POOL.choose(&mut rng).unwrap();
            let axes = if kind.takes_axes() { vec![rng.gen_range(0..order)] } else { vec![] };
            out.rows.push(Row::act(kind, output, &axes));
        }
    }
    out
}

/// Number of operation rows followed by zero, one and two activations.
pub fn activation_histogram(tem: &Tem) -> [usize; 3] {
    let mut h = [0; 3];
    let mut run: Option<usize> = None;
    for row in &tem.rows {
        match row {
            Row::Op { .. } => {
                if let Some(k) = run.replace(0) {
                    h[k.min(2)] += 1;
                }
            }
            Row::Act { .. } => {
                if let Some(k) = run.as_mut() {
                    *k += 1;
                }
            }
            Row::Modemap { .. } => {}
        }
    }
    if let Some(k) = run {
        h[k.min(2)] += 1;
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub file: String,
    pub seed: u64,
    pub signature: Signature,
    pub parameters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub constraints: SampleConstraints,
    pub records: Vec<Record>,
    pub failures: Vec<Failure>,
}

/// Sample with activations for one seed.
pub fn sample_record(c: &SampleConstraints, seed: u64) -> Result<Tem> {
    Ok(insert_activations(&sample_architecture(c, seed)?, seed))
}

/// Write `n` blocks (seeds `base_seed + i`) and a manifest into `dir`.
/// Timeouts are recorded and skipped.
pub fn emit_dataset(n: usize, c: &SampleConstraints, base_seed: u64, dir: &Path) -> Result<Manifest> {
    c.check()?;
    std::fs::create_dir_all(dir)?;
    let mut m = Manifest { generator: GENERATOR.into(), constraints: c.clone(), records: Vec::new(), failures: Vec::new() };
    for i in 0..n {
        let seed = base_seed.wrapping_add(i as u64);
        match sample_record(c, seed) {
            Ok(tem) => {
                let file = format!("arch_{i:05}.json");
                crate::json::save(dir.join(&file), &tem)?;
                m.records.push(Record { file, seed, signature: tem.signature(false), parameters: tem.parameter_count() });
            }
            Err(Error::SamplingTimeout(e)) => m.failures.push(Failure { seed, error: e }),
            Err(e) => return Err(e),
        }
    }
    crate::json::save(dir.join("manifest.json"), &m)?;
    Ok(m)
}
