//! Mode maps: structure-preserving maps between tensors, stored as a
//! materialized pullback (each target position names the source position it
//! reads), plus the declared mode map components.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::mda::{self, Entry, Mda};
use crate::pwohg::{gt_from_mda, GenTensor};

/// A mode map component: source modes `p1` paired with target modes `p2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mmc {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
}

impl Mmc {
    pub fn new(source: Vec<usize>, target: Vec<usize>) -> Mmc {
        Mmc { source, target }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeMap {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    /// Source flat position read by each target flat position; `None` reads
    /// `fill` (or is absent when there is no fill).
    pub pull: Vec<Option<usize>>,
    pub fill: Option<f64>,
    pub components: Vec<Mmc>,
}

/// One slice whose image is split across several slices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmcViolation {
    pub component: usize,
    /// `"target"` when a target slice reads from several source slices,
    /// `"source"` when a source slice feeds several target slices.
    pub side: String,
    /// Multi-index of one offending slice on `side` (coordinates outside the
    /// component's modes).
    pub slice: Vec<usize>,
    /// Two positions that disagree, as `[on side, on the other side]` pairs.
    pub witness: Vec<(Vec<usize>, Vec<usize>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeMapReport {
    pub valid: bool,
    pub errors: Vec<String>,
    pub violations: Vec<MmcViolation>,
}

impl ModeMap {
    pub fn new(
        source: &[usize],
        target: &[usize],
        pull: Vec<Option<usize>>,
        fill: Option<f64>,
        components: Vec<Mmc>,
    ) -> Result<ModeMap> {
        if pull.len() != mda::grid_len(target) {
            return Err(Error::Shape("pullback length does not match target shape".into()));
        }
        let n = mda::grid_len(source);
        if let Some(bad) = pull.iter().flatten().find(|&&s| s >= n) {
            return Err(Error::Shape(format!("source position {bad} out of range")));
        }
        Ok(ModeMap { source: source.to_vec(), target: target.to_vec(), pull, fill, components })
    }

    /// True when no source position is read twice.
    pub fn is_injective(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.pull.iter().flatten().all(|s| seen.insert(*s))
    }

    /// True when every source position is read exactly once and nothing is filled.
    pub fn is_bijective(&self) -> bool {
        self.pull.iter().all(Option::is_some) && self.is_injective() && self.pull.len() == mda::grid_len(&self.source)
    }

    pub fn apply(&self, t: &Mda) -> Result<Mda> {
        if t.shape() != self.source.as_slice() {
            return Err(Error::Shape(format!(
                "mode map expects shape {:?}, got {:?}",
                self.source,
                t.shape()
            )));
        }
        let entries = self
            .pull
            .iter()
            .map(|p| match p {
                Some(s) => Entry::from_slice(t.entry_flat(*s)),
                None => self.fill.map(|f| smallvec::smallvec![f]).unwrap_or_default(),
            })
            .collect();
        Mda::from_entries(&self.target, entries)
    }

    /// `other` after `self`. Components chain where `self`'s target modes
    /// equal `other`'s source modes.
    pub fn then(&self, other: &ModeMap) -> Result<ModeMap> {
        if self.target != other.source {
            return Err(Error::Shape("mode maps do not compose".into()));
        }
        let pull = other.pull.iter().map(|p| p.and_then(|s| self.pull[s])).collect();
        let mut components = Vec::new();
        for a in &self.components {
            for b in &other.components {
                if sorted(&a.target) == sorted(&b.source) {
                    components.push(Mmc::new(a.source.clone(), b.target.clone()));
                }
            }
        }
        ModeMap::new(&self.source, &other.target, pull, other.fill.or(self.fill), components)
    }

    /// Check the declared components.
    ///
    /// For every component `p1 ↔ p2`, each target `p2`-slice must read from a
    /// single source `p1`-slice. When the map is injective the forward
    /// direction is checked too: each source `p1`-slice must land in a single
    /// target `p2`-slice.
    pub fn verify(&self) -> ModeMapReport {
        let mut errors = Vec::new();
        let mut violations = Vec::new();
        for (k, c) in self.components.iter().enumerate() {
            if c.source.is_empty() || c.target.is_empty() {
                errors.push(format!("component {k} has an empty side"));
                continue;
            }
            if c.source.iter().any(|&m| m >= self.source.len()) || c.target.iter().any(|&m| m >= self.target.len()) {
                errors.push(format!("component {k} names an unknown mode"));
                continue;
            }
            let pairs: Vec<(usize, usize)> =
                self.pull.iter().enumerate().filter_map(|(t, s)| s.map(|s| (t, s))).collect();
            if let Some(v) = split_slices(k, "target", &pairs, &self.target, &c.target, &self.source, &c.source) {
                violations.push(v);
            }
            if self.is_injective() {
                let flipped: Vec<(usize, usize)> = pairs.iter().map(|&(t, s)| (s, t)).collect();
                if let Some(v) = split_slices(k, "source", &flipped, &self.source, &c.source, &self.target, &c.target) {
                    violations.push(v);
                }
            }
        }
        ModeMapReport { valid: errors.is_empty() && violations.is_empty(), errors, violations }
    }

    pub fn to_json(&self) -> ModeMapJson {
        ModeMapJson::Custom {
            source: self.source.clone(),
            target: self.target.clone(),
            pairs: self.pull.iter().enumerate().filter_map(|(t, s)| s.map(|s| [t, s])).collect(),
            fill: self.fill,
            components: self.components.clone(),
        }
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Group `pairs` (position on this side, position on the other side) by the
/// slice of `this_modes` they lie in, and report the first slice whose
/// partners do not share one slice of `other_modes`.
fn split_slices(
    component: usize,
    side: &str,
    pairs: &[(usize, usize)],
    this_shape: &[usize],
    this_modes: &[usize],
    other_shape: &[usize],
    other_modes: &[usize],
) -> Option<MmcViolation> {
    let outside = |shape: &[usize], modes: &[usize], flat: usize| -> Vec<usize> {
        let idx = mda::unravel(flat, shape);
        (0..shape.len()).filter(|m| !modes.contains(m)).map(|m| idx[m]).collect()
    };
    let mut first: BTreeMap<Vec<usize>, (usize, usize, Vec<usize>)> = BTreeMap::new();
    for &(here, there) in pairs {
        let slice = outside(this_shape, this_modes, here);
        let key = outside(other_shape, other_modes, there);
        match first.get(&slice) {
            None => {
                first.insert(slice, (here, there, key));
            }
            Some((h0, t0, k0)) if *k0 != key => {
                return Some(MmcViolation {
                    component,
                    side: side.to_string(),
                    slice,
                    witness: vec![
                        (mda::unravel(*h0, this_shape), mda::unravel(*t0, other_shape)),
                        (mda::unravel(here, this_shape), mda::unravel(there, other_shape)),
                    ],
                });
            }
            Some(_) => {}
        }
    }
    None
}

fn out_len(size: usize, patch: usize, stride: usize, pad: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::Shape("stride must be positive".into()));
    }
    if patch == 0 || patch > size + 2 * pad {
        return Err(Error::Shape(format!("patch {patch} does not fit extent {size} with padding {pad}")));
    }
    Ok((size + 2 * pad - patch) / stride + 1)
}

/// Patch extraction `(C, S1..Sn) → (C, O1..On, P1..Pn)` with zero padding.
///
/// `O_k = ⌊(S_k + 2·pad_k − P_k) / stride_k⌋ + 1`. Components are
/// `{C} ↔ {C}` and `{S1..Sn} ↔ {O1..On, P1..Pn}`.
pub fn unfold(image: &[usize], patch: &[usize], stride: &[usize], padding: &[usize]) -> Result<ModeMap> {
    let n = patch.len();
    if image.len() != n + 1 || stride.len() != n || padding.len() != n || n == 0 {
        return Err(Error::Shape(format!(
            "unfold of shape {image:?} needs {} patch, stride and padding extents",
            image.len().saturating_sub(1)
        )));
    }
    let outs = (0..n)
        .map(|k| out_len(image[k + 1], patch[k], stride[k], padding[k]))
        .collect::<Result<Vec<_>>>()?;
    let mut target = vec![image[0]];
    target.extend(&outs);
    target.extend(patch);
    let mut pull = Vec::with_capacity(mda::grid_len(&target));
    let mut idx = vec![0; target.len()];
    let mut src = vec![0; n + 1];
    loop {
        src[0] = idx[0];
        let mut inside = true;
        for k in 0..n {
            let s = (idx[1 + k] * stride[k] + idx[1 + n + k]) as isize - padding[k] as isize;
            if s < 0 || s as usize >= image[k + 1] {
                inside = false;
                break;
            }
            src[k + 1] = s as usize;
        }
        pull.push(if inside { Some(mda::ravel(&src, image)) } else { None });
        if !mda::advance(&mut idx, &target) {
            break;
        }
    }
    let components = vec![Mmc::new(vec![0], vec![0]), Mmc::new((1..=n).collect(), (1..=2 * n).collect())];
    let fill = if padding.iter().any(|&p| p > 0) { Some(0.0) } else { None };
    ModeMap::new(image, &target, pull, fill, components)
}

/// Target mode `k` is source mode `perm[k]`.
pub fn permute(shape: &[usize], perm: &[usize]) -> Result<ModeMap> {
    if sorted(perm) != (0..shape.len()).collect::<Vec<_>>() {
        return Err(Error::Shape(format!("{perm:?} is not a permutation of {} modes", shape.len())));
    }
    let target: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let st = mda::strides(shape);
    let mut pull = Vec::with_capacity(mda::grid_len(shape));
    let mut idx = vec![0; target.len()];
    loop {
        pull.push(Some(perm.iter().zip(&idx).map(|(&p, &i)| i * st[p]).sum()));
        if !mda::advance(&mut idx, &target) {
            break;
        }
    }
    let components = perm.iter().enumerate().map(|(k, &p)| Mmc::new(vec![p], vec![k])).collect();
    ModeMap::new(shape, &target, pull, None, components)
}

/// Merge modes `start..end` into one, row-major.
pub fn flatten(shape: &[usize], start: usize, end: usize) -> Result<ModeMap> {
    if start >= end || end > shape.len() {
        return Err(Error::Shape(format!("cannot flatten modes {start}..{end} of {shape:?}")));
    }
    let mut target = shape[..start].to_vec();
    target.push(shape[start..end].iter().product());
    target.extend(&shape[end..]);
    let mut components: Vec<Mmc> = (0..start).map(|m| Mmc::new(vec![m], vec![m])).collect();
    components.push(Mmc::new((start..end).collect(), vec![start]));
    components.extend((end..shape.len()).map(|m| Mmc::new(vec![m], vec![m - (end - start) + 1])));
    let pull = (0..mda::grid_len(shape)).map(Some).collect();
    ModeMap::new(shape, &target, pull, None, components)
}

/// Same row-major order, new shape.
pub fn reshape(shape: &[usize], target: &[usize]) -> Result<ModeMap> {
    if mda::grid_len(shape) != mda::grid_len(target) || target.contains(&0) {
        return Err(Error::Shape(format!("cannot reshape {shape:?} into {target:?}")));
    }
    let pull = (0..mda::grid_len(shape)).map(Some).collect();
    let components = if shape.is_empty() || target.is_empty() {
        Vec::new()
    } else {
        vec![Mmc::new((0..shape.len()).collect(), (0..target.len()).collect())]
    };
    ModeMap::new(shape, target, pull, None, components)
}

/// An array with repeated values as a map from its distinct values onto its
/// positions. Returns the position tensor (element `i` is flat position `i`),
/// the value vector in first-seen order, and the collapsing map.
pub fn noninjective_as_modemap(m: &Mda) -> Result<(GenTensor, Mda, ModeMap)> {
    if m.is_hyper() {
        return Err(Error::Hyper("hyper arrays hold several values per position".into()));
    }
    let mut values: Vec<f64> = Vec::new();
    let mut slot: BTreeMap<u64, usize> = BTreeMap::new();
    let pull = (0..m.grid_len())
        .map(|f| {
            m.get_flat(f).map(|v| {
                *slot.entry(v.to_bits()).or_insert_with(|| {
                    values.push(v);
                    values.len() - 1
                })
            })
        })
        .collect();
    let positions = Mda::from_fn(m.shape(), {
        let mut k = 0.0;
        move |_| {
            k += 1.0;
            k - 1.0
        }
    })?;
    let index = gt_from_mda(&positions)?;
    let vector = Mda::dense(&[values.len().max(1)], if values.is_empty() { vec![0.0] } else { values })?;
    let components = if m.order() == 0 { Vec::new() } else { vec![Mmc::new(vec![0], (0..m.order()).collect())] };
    let map = ModeMap::new(vector.shape(), m.shape(), pull, None, components)?;
    Ok((index, vector, map))
}

/// Serialized mode maps, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModeMapJson {
    Unfold {
        shape: Vec<usize>,
        patch: Vec<usize>,
        stride: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        padding: Option<Vec<usize>>,
    },
    Permute {
        shape: Vec<usize>,
        perm: Vec<usize>,
    },
    Flatten {
        shape: Vec<usize>,
        start: usize,
        end: usize,
    },
    Reshape {
        shape: Vec<usize>,
        target: Vec<usize>,
    },
    /// `pairs` lists `[target flat, source flat]`; unlisted targets read `fill`.
    Custom {
        source: Vec<usize>,
        target: Vec<usize>,
        pairs: Vec<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fill: Option<f64>,
        #[serde(default)]
        components: Vec<Mmc>,
    },
}

impl ModeMapJson {
    pub fn build(&self) -> Result<ModeMap> {
        match self {
            ModeMapJson::Unfold { shape, patch, stride, padding } => {
                let pad = padding.clone().unwrap_or_else(|| vec![0; patch.len()]);
                unfold(shape, patch, stride, &pad)
            }
            ModeMapJson::Permute { shape, perm } => permute(shape, perm),
            ModeMapJson::Flatten { shape, start, end } => flatten(shape, *start, *end),
            ModeMapJson::Reshape { shape, target } => reshape(shape, target),
            ModeMapJson::Custom { source, target, pairs, fill, components } => {
                let mut pull = vec![None; mda::grid_len(target)];
                for &[t, s] in pairs {
                    let slot = pull
                        .get_mut(t)
                        .ok_or_else(|| Error::Shape(format!("target position {t} out of range")))?;
                    if slot.replace(s).is_some() {
                        return Err(Error::Malformed(format!("target position {t} listed twice")));
                    }
                }
                ModeMap::new(source, target, pull, *fill, components.clone())
            }
        }
    }

    /// Source shape without materializing the map.
    pub fn source_shape(&self) -> &[usize] {
        match self {
            ModeMapJson::Unfold { shape, .. }
            | ModeMapJson::Permute { shape, .. }
            | ModeMapJson::Flatten { shape, .. }
            | ModeMapJson::Reshape { shape, .. } => shape,
            ModeMapJson::Custom { source, .. } => source,
        }
    }

    /// Target shape without materializing the map.
    pub fn target_shape(&self) -> Result<Vec<usize>> {
        match self {
            ModeMapJson::Unfold { shape, patch, stride, padding } => {
                let n = patch.len();
                if shape.len() != n + 1 || stride.len() != n {
                    return Err(Error::Shape(format!("unfold of {shape:?} with patch {patch:?}")));
                }
                let pad = padding.clone().unwrap_or_else(|| vec![0; n]);
                let mut t = vec![shape[0]];
                for k in 0..n {
                    t.push(out_len(shape[k + 1], patch[k], stride[k], pad[k])?);
                }
                t.extend(patch);
                Ok(t)
            }
            ModeMapJson::Permute { shape, perm } => Ok(perm.iter().map(|&p| shape.get(p).copied().unwrap_or(0)).collect()),
            ModeMapJson::Flatten { shape, start, end } => {
                if start >= end || *end > shape.len() {
                    return Err(Error::Shape(format!("cannot flatten modes {start}..{end} of {shape:?}")));
                }
                let mut t = shape[..*start].to_vec();
                t.push(shape[*start..*end].iter().product());
                t.extend(&shape[*end..]);
                Ok(t)
            }
            ModeMapJson::Reshape { target, .. } => Ok(target.clone()),
            ModeMapJson::Custom { target, .. } => Ok(target.clone()),
        }
    }
}
