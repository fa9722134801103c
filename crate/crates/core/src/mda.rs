//! Multidimensional arrays that may be jagged (presence mask) or hyper
//! (several values per position).

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Values held at one grid position. Empty when the position is absent.
pub type Entry = SmallVec<[f64; 4]>;

/// Row-major strides for `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

pub fn grid_len(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Row-major multi-index of flat position `flat`.
pub fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

pub fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Advance `idx` in row-major order; false once it wraps around.
pub fn advance(idx: &mut [usize], shape: &[usize]) -> bool {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.contains(&0) {
        return Err(Error::Shape(format!("zero-sized mode in {shape:?}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mda {
    shape: Vec<usize>,
    present: Vec<bool>,
    entries: Vec<Entry>,
}

impl Mda {
    pub fn dense(shape: &[usize], data: Vec<f64>) -> Result<Mda> {
        check_shape(shape)?;
        if data.len() != grid_len(shape) {
            return Err(Error::Shape(format!(
                "{} values for shape {shape:?} ({} positions)",
                data.len(),
                grid_len(shape)
            )));
        }
        let entries = data.into_iter().map(|v| smallvec::smallvec![v]).collect();
        Ok(Mda { shape: shape.to_vec(), present: vec![true; grid_len(shape)], entries })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Mda> {
        check_shape(shape)?;
        let mut data = Vec::with_capacity(grid_len(shape));
        let mut idx = vec![0; shape.len()];
        loop {
            data.push(f(&idx));
            if !advance(&mut idx, shape) {
                break;
            }
        }
        Mda::dense(shape, data)
    }

    pub fn filled(shape: &[usize], v: f64) -> Result<Mda> {
        Mda::dense(shape, vec![v; grid_len(shape)])
    }

    pub fn scalar(v: f64) -> Mda {
        Mda { shape: Vec::new(), present: vec![true], entries: vec![smallvec::smallvec![v]] }
    }

    /// Jagged array: `data` lists the present positions' values in row-major order.
    pub fn jagged(shape: &[usize], present: Vec<bool>, data: Vec<f64>) -> Result<Mda> {
        check_shape(shape)?;
        if present.len() != grid_len(shape) {
            return Err(Error::Shape("mask length does not match shape".into()));
        }
        let n = present.iter().filter(|&&p| p).count();
        if data.len() != n {
            return Err(Error::Shape(format!("{} values for {n} present positions", data.len())));
        }
        let mut it = data.into_iter();
        let entries = present
            .iter()
            .map(|&p| if p { smallvec::smallvec![it.next().unwrap()] } else { Entry::new() })
            .collect();
        Ok(Mda { shape: shape.to_vec(), present, entries })
    }

    /// General constructor; a position is present iff its entry is non-empty.
    pub fn from_entries(shape: &[usize], entries: Vec<Entry>) -> Result<Mda> {
        check_shape(shape)?;
        if entries.len() != grid_len(shape) {
            return Err(Error::Shape("entry count does not match shape".into()));
        }
        let present = entries.iter().map(|e| !e.is_empty()).collect();
        Ok(Mda { shape: shape.to_vec(), present, entries })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// Number of grid positions, present or not.
    pub fn grid_len(&self) -> usize {
        self.entries.len()
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn num_present(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn is_dense(&self) -> bool {
        self.present.iter().all(|&p| p)
    }

    pub fn is_hyper(&self) -> bool {
        self.entries.iter().any(|e| e.len() > 1)
    }

    /// `Some(a)` when every present entry holds exactly `a` values.
    pub fn regularity(&self) -> Option<usize> {
        let mut it = self.entries.iter().filter(|e| !e.is_empty()).map(|e| e.len());
        let first = it.next()?;
        it.all(|l| l == first).then_some(first)
    }

    pub fn entry_flat(&self, flat: usize) -> &[f64] {
        &self.entries[flat]
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn entry(&self, idx: &[usize]) -> &[f64] {
        &self.entries[ravel(idx, &self.shape)]
    }

    /// Single value at `idx`; `None` when absent. Hyper entries yield their first value.
    pub fn get(&self, idx: &[usize]) -> Option<f64> {
        self.entry(idx).first().copied()
    }

    pub fn get_flat(&self, flat: usize) -> Option<f64> {
        self.entries[flat].first().copied()
    }

    /// Values of a non-hyper array in row-major order, absent positions as `None`.
    pub fn values(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.first().copied()).collect()
    }

    /// Flat data of a dense non-hyper array.
    pub fn to_dense_vec(&self) -> Result<Vec<f64>> {
        if self.is_hyper() {
            return Err(Error::Hyper("array has multi-valued entries".into()));
        }
        self.entries
            .iter()
            .map(|e| e.first().copied().ok_or_else(|| Error::Jagged("array has absent positions".into())))
            .collect()
    }

    /// Lowest present index along each mode (0 when nothing is present).
    pub fn offsets(&self) -> Vec<usize> {
        let mut lo = vec![usize::MAX; self.order()];
        for (flat, _) in self.present.iter().enumerate().filter(|(_, &p)| p) {
            for (k, i) in unravel(flat, &self.shape).into_iter().enumerate() {
                lo[k] = lo[k].min(i);
            }
        }
        lo.into_iter().map(|v| if v == usize::MAX { 0 } else { v }).collect()
    }

    /// Per-mode tensor length: the extent of present positions along the mode.
    ///
    /// Equals one plus the largest coordinate difference between two present
    /// positions, which for dense arrays is the mode size.
    pub fn tensor_lengths(&self) -> Vec<usize> {
        if self.is_dense() {
            return self.shape.clone();
        }
        let mut lo = vec![usize::MAX; self.order()];
        let mut hi = vec![0usize; self.order()];
        let mut any = false;
        for (flat, _) in self.present.iter().enumerate().filter(|(_, &p)| p) {
            any = true;
            for (k, i) in unravel(flat, &self.shape).into_iter().enumerate() {
                lo[k] = lo[k].min(i);
                hi[k] = hi[k].max(i);
            }
        }
        if !any {
            return vec![0; self.order()];
        }
        lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect()
    }

    /// Apply `f` to every value.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Mda {
        let entries = self.entries.iter().map(|e| e.iter().map(|&v| f(v)).collect()).collect();
        Mda { shape: self.shape.clone(), present: self.present.clone(), entries }
    }

    /// Fold each entry's values with `op`, giving a non-hyper array.
    pub fn collapse(&self, op: impl Fn(f64, f64) -> f64) -> Mda {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut it = e.iter().copied();
                match it.next() {
                    Some(first) => smallvec::smallvec![it.fold(first, &op)],
                    None => Entry::new(),
                }
            })
            .collect();
        Mda { shape: self.shape.clone(), present: self.present.clone(), entries }
    }

    /// Reinterpret the grid with a new shape of the same size.
    pub fn reshaped(&self, shape: &[usize]) -> Result<Mda> {
        check_shape(shape)?;
        if grid_len(shape) != self.grid_len() {
            return Err(Error::Shape(format!("cannot reshape {:?} into {shape:?}", self.shape)));
        }
        Ok(Mda { shape: shape.to_vec(), ..self.clone() })
    }

    /// View as a tensor-valued tensor: `inner` modes index within a slice,
    /// the remaining modes index the slices.
    pub fn slice_space(&self, inner: &[usize]) -> Result<SliceSpace<'_>> {
        let mut seen = vec![false; self.order()];
        for &m in inner {
            if m >= self.order() || seen[m] {
                return Err(Error::Mode(format!("bad inner mode {m} for order {}", self.order())));
            }
            seen[m] = true;
        }
        let outer: Vec<usize> = (0..self.order()).filter(|&m| !seen[m]).collect();
        Ok(SliceSpace { base: self, outer, inner: inner.to_vec() })
    }

    /// Copy along dummy modes. `map[i]` is the target mode receiving mode `i`.
    pub fn broadcast(&self, target: &[usize], map: &[usize]) -> Result<Mda> {
        check_shape(target)?;
        if map.len() != self.order() {
            return Err(Error::Shape("mode map length differs from array order".into()));
        }
        let mut used = vec![false; target.len()];
        for (i, &t) in map.iter().enumerate() {
            if t >= target.len() || used[t] {
                return Err(Error::Mode(format!("mode {i} maps to invalid or repeated target {t}")));
            }
            used[t] = true;
            if target[t] != self.shape[i] {
                return Err(Error::Shape(format!(
                    "mode {i} has size {} but target mode {t} has size {}",
                    self.shape[i], target[t]
                )));
            }
        }
        let src_strides = strides(&self.shape);
        let n = grid_len(target);
        let mut entries = Vec::with_capacity(n);
        let mut idx = vec![0; target.len()];
        for _ in 0..n {
            let flat: usize = map.iter().zip(&src_strides).map(|(&t, &s)| idx[t] * s).sum();
            entries.push(self.entries[flat].clone());
            advance(&mut idx, target);
        }
        Mda::from_entries(target, entries)
    }

    /// Fold `op` over `modes` in row-major order of the reduced coordinates.
    ///
    /// Only present values take part; an output position whose slice is
    /// entirely absent is absent. Hyper entries contribute all their values.
    pub fn reduce(&self, modes: &[usize], op: impl Fn(f64, f64) -> f64) -> Result<Mda> {
        if modes.is_empty() {
            return Ok(self.clone());
        }
        let space = self.slice_space(modes)?;
        let out_shape: Vec<usize> = space.outer.iter().map(|&m| self.shape[m]).collect();
        let mut entries = Vec::with_capacity(grid_len(&out_shape));
        for s in 0..space.num_slices() {
            let mut acc: Option<f64> = None;
            for flat in space.slice_positions(s) {
                for &v in &self.entries[flat] {
                    acc = Some(match acc {
                        None => v,
                        Some(a) => op(a, v),
                    });
                }
            }
            entries.push(acc.map(|a| smallvec::smallvec![a]).unwrap_or_default());
        }
        Mda::from_entries(&out_shape, entries)
    }

    pub fn to_json(&self) -> Result<TensorJson> {
        if self.is_hyper() {
            return Err(Error::Hyper("the tensor file format holds one value per position".into()));
        }
        let mask = if self.is_dense() {
            "dense".to_string()
        } else {
            self.present.iter().map(|&p| if p { '1' } else { '0' }).collect()
        };
        let data = self.entries.iter().filter_map(|e| e.first().copied()).collect();
        Ok(TensorJson { shape: self.shape.clone(), mask, data })
    }

    pub fn from_json(j: &TensorJson) -> Result<Mda> {
        if j.mask == "dense" {
            return Mda::dense(&j.shape, j.data.clone());
        }
        let present = j
            .mask
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::Malformed(format!("mask character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Mda::jagged(&j.shape, present, j.data.clone())
    }
}

/// `{"shape":[..],"mask":"dense"|bitstring,"data":[..]}`; `data` lists present
/// positions only, in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorJson {
    pub shape: Vec<usize>,
    pub mask: String,
    pub data: Vec<f64>,
}

/// A tensor viewed as a tensor of slices.
#[derive(Clone, Debug)]
pub struct SliceSpace<'a> {
    pub base: &'a Mda,
    pub outer: Vec<usize>,
    pub inner: Vec<usize>,
}

impl SliceSpace<'_> {
    pub fn outer_shape(&self) -> Vec<usize> {
        self.outer.iter().map(|&m| self.base.shape[m]).collect()
    }

    pub fn inner_shape(&self) -> Vec<usize> {
        self.inner.iter().map(|&m| self.base.shape[m]).collect()
    }

    pub fn num_slices(&self) -> usize {
        grid_len(&self.outer_shape())
    }

    /// Flat base positions of slice `s`, in row-major order of the inner modes.
    pub fn slice_positions(&self, s: usize) -> Vec<usize> {
        let st = strides(&self.base.shape);
        let oidx = unravel(s, &self.outer_shape());
        let base: usize = self.outer.iter().zip(&oidx).map(|(&m, &i)| i * st[m]).sum();
        let ishape = self.inner_shape();
        let mut out = Vec::with_capacity(grid_len(&ishape));
        let mut idx = vec![0; ishape.len()];
        loop {
            out.push(base + self.inner.iter().zip(&idx).map(|(&m, &i)| i * st[m]).sum::<usize>());
            if !advance(&mut idx, &ishape) {
                break;
            }
        }
        out
    }

    /// Slice `s` as an array shaped by the inner modes.
    pub fn slice(&self, s: usize) -> Mda {
        let entries = self.slice_positions(s).into_iter().map(|f| self.base.entries[f].clone()).collect();
        Mda::from_entries(&self.inner_shape(), entries).expect("slice shape is valid")
    }

    /// Put slices back together; inverse of taking every slice.
    pub fn reassemble(&self, slices: &[Mda]) -> Result<Mda> {
        if slices.len() != self.num_slices() {
            return Err(Error::Shape("wrong number of slices".into()));
        }
        let mut entries = vec![Entry::new(); self.base.grid_len()];
        for (s, sl) in slices.iter().enumerate() {
            if sl.shape != self.inner_shape() {
                return Err(Error::Shape(format!("slice {s} has shape {:?}", sl.shape)));
            }
            for (k, f) in self.slice_positions(s).into_iter().enumerate() {
                entries[f] = sl.entries[k].clone();
            }
        }
        Mda::from_entries(&self.base.shape, entries)
    }
}
