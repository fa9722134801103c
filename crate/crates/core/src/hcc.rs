//! Hierarchical combinatorial complexes: ranked, hash-consed cells over an
//! interned base set.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Handle into the element table of one complex.
pub type ElementId = usize;
/// Handle into the cell table of one complex.
pub type CellId = usize;

/// Highest rank a cell may have (networks are rank-5 cells).
pub const MAX_RANK: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub rank: usize,
    /// Sorted, deduplicated child handles; empty for rank 0.
    pub children: Vec<CellId>,
    /// The wrapped element, for rank-0 cells.
    pub element: Option<ElementId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    Element(ElementId),
    Set(Vec<CellId>),
}

/// Mutable construction state; freeze with [`HccBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct HccBuilder {
    labels: Vec<Option<String>>,
    cells: Vec<Cell>,
    index: HashMap<Key, CellId>,
}

impl HccBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Intern a new element and return its rank-0 cell.
    pub fn add_element(&mut self, label: Option<&str>) -> CellId {
        let e = self.labels.len();
        self.labels.push(label.map(str::to_owned));
        let id = self.cells.len();
        self.cells.push(Cell { rank: 0, children: Vec::new(), element: Some(e) });
        self.index.insert(Key::Element(e), id);
        id
    }

    /// Add (or find) the cell with the given children.
    ///
    /// All children must share one rank `k`; the new cell has rank `k + 1`.
    pub fn add_cell(&mut self, children: &[CellId]) -> Result<CellId> {
        if children.is_empty() {
            return Err(Error::Rank("cells of rank >= 1 need at least one child".into()));
        }
        let mut kids: Vec<CellId> = children.to_vec();
        kids.sort_unstable();
        kids.dedup();
        for &c in &kids {
            if c >= self.cells.len() {
                return Err(Error::Rank(format!("unknown child cell {c}")));
            }
        }
        let r = self.cells[kids[0]].rank;
        if let Some(&bad) = kids.iter().find(|&&c| self.cells[c].rank != r) {
            return Err(Error::Rank(format!(
                "children mix ranks {} and {}",
                r, self.cells[bad].rank
            )));
        }
        if r + 1 > MAX_RANK {
            return Err(Error::Rank(format!("rank {} exceeds maximum {MAX_RANK}", r + 1)));
        }
        let key = Key::Set(kids.clone());
        if let Some(&id) = self.index.get(&key) {
            return Ok(id);
        }
        let id = self.cells.len();
        self.cells.push(Cell { rank: r + 1, children: kids, element: None });
        self.index.insert(key, id);
        Ok(id)
    }

    /// Convenience: a rank-1 cell over the given elements' rank-0 cells.
    pub fn add_set(&mut self, zero_cells: &[CellId]) -> Result<CellId> {
        self.add_cell(zero_cells)
    }

    pub fn build(self) -> Hcc {
        let top = self.cells.iter().map(|c| c.rank).max().unwrap_or(0);
        let mut levels = vec![Vec::new(); top + 1];
        for (id, c) in self.cells.iter().enumerate() {
            levels[c.rank].push(id);
        }
        Hcc { labels: self.labels, cells: self.cells, index: self.index, levels }
    }
}

/// An immutable complex.
#[derive(Clone, Debug)]
pub struct Hcc {
    labels: Vec<Option<String>>,
    cells: Vec<Cell>,
    index: HashMap<Key, CellId>,
    levels: Vec<Vec<CellId>>,
}

impl Hcc {
    pub fn num_elements(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, e: ElementId) -> Option<&str> {
        self.labels.get(e).and_then(|l| l.as_deref())
    }

    /// Label if present, otherwise the numeric handle.
    pub fn display(&self, e: ElementId) -> String {
        self.label(e).map(str::to_owned).unwrap_or_else(|| e.to_string())
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Highest rank present.
    pub fn rank(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    /// Cells of rank `k`, in handle order.
    pub fn level(&self, k: usize) -> &[CellId] {
        self.levels.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn element_cell(&self, e: ElementId) -> CellId {
        self.index[&Key::Element(e)]
    }

    /// Look up a cell by its children, if it exists.
    pub fn find(&self, children: &[CellId]) -> Option<CellId> {
        let mut kids = children.to_vec();
        kids.sort_unstable();
        kids.dedup();
        self.index.get(&Key::Set(kids)).copied()
    }

    /// The `level`-cells reachable from `cell` by descending containment.
    pub fn restrict(&self, cell: CellId, level: usize) -> Result<BTreeSet<CellId>> {
        let r = self.cells[cell].rank;
        if level >= r {
            return Err(Error::Rank(format!("level {level} is not below rank {r}")));
        }
        let mut frontier: BTreeSet<CellId> = [cell].into();
        for _ in level..r {
            frontier = frontier
                .iter()
                .flat_map(|&c| self.cells[c].children.iter().copied())
                .collect();
        }
        Ok(frontier)
    }

    /// Elements under `cell` (the cell itself for rank 0).
    pub fn elements_of(&self, cell: CellId) -> BTreeSet<ElementId> {
        if self.cells[cell].rank == 0 {
            return self.cells[cell].element.into_iter().collect();
        }
        self.restrict(cell, 0)
            .expect("rank >= 1")
            .into_iter()
            .filter_map(|c| self.cells[c].element)
            .collect()
    }

    pub fn to_json(&self) -> HccJson {
        let mut order: Vec<CellId> = (0..self.cells.len()).filter(|&c| self.cells[c].rank > 0).collect();
        order.sort_by_key(|&c| (self.cells[c].rank, c));
        let pos: HashMap<CellId, usize> = order.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let cells = order
            .iter()
            .map(|&c| {
                let cell = &self.cells[c];
                let children = cell
                    .children
                    .iter()
                    .map(|&k| match self.cells[k].element {
                        Some(e) => e,
                        None => pos[&k],
                    })
                    .collect();
                CellJson { rank: cell.rank, children }
            })
            .collect();
        let elements = (0..self.labels.len()).map(|e| self.display(e)).collect();
        HccJson { elements, cells }
    }

    pub fn from_json(j: &HccJson) -> Result<Hcc> {
        let mut b = HccBuilder::new();
        let zero: Vec<CellId> = j.elements.iter().map(|l| b.add_element(Some(l))).collect();
        // cells may be listed in any order; resolve by rank
        let mut order: Vec<usize> = (0..j.cells.len()).collect();
        order.sort_by_key(|&i| j.cells[i].rank);
        let mut ids: Vec<Option<CellId>> = vec![None; j.cells.len()];
        for i in order {
            let cj = &j.cells[i];
            if cj.rank == 0 || cj.rank > MAX_RANK {
                return Err(Error::Rank(format!("cell {i} has unsupported rank {}", cj.rank)));
            }
            let mut kids = Vec::with_capacity(cj.children.len());
            for &k in &cj.children {
                let id = if cj.rank == 1 {
                    *zero
                        .get(k)
                        .ok_or_else(|| Error::Malformed(format!("cell {i}: no element {k}")))?
                } else {
                    let target = j
                        .cells
                        .get(k)
                        .ok_or_else(|| Error::Malformed(format!("cell {i}: no cell {k}")))?;
                    if target.rank != cj.rank - 1 {
                        return Err(Error::Rank(format!(
                            "cell {i} of rank {} contains cell {k} of rank {}",
                            cj.rank, target.rank
                        )));
                    }
                    ids[k].ok_or_else(|| Error::Malformed(format!("cell {i}: unresolved child {k}")))?
                };
                kids.push(id);
            }
            ids[i] = Some(b.add_cell(&kids)?);
        }
        Ok(b.build())
    }
}

/// `{"elements":[labels], "cells":[{"rank":k,"children":[ids]}]}`.
///
/// Children of rank-1 cells index `elements`; children of higher cells index
/// `cells`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HccJson {
    pub elements: Vec<String>,
    pub cells: Vec<CellJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellJson {
    pub rank: usize,
    pub children: Vec<usize>,
}

/// True iff `parts` are pairwise disjoint and their union is `universe`.
pub fn is_partition<T: Ord + Clone>(parts: &[BTreeSet<T>], universe: &BTreeSet<T>) -> bool {
    let mut seen = BTreeSet::new();
    for p in parts {
        for x in p {
            if !seen.insert(x.clone()) {
                return false;
            }
        }
    }
    seen == *universe
}

/// Every selection of exactly one member per part, in odometer order
/// (last part varies fastest).
pub fn transversals<T: Clone>(parts: &[Vec<T>]) -> Result<Transversals<T>> {
    if let Some(i) = parts.iter().position(Vec::is_empty) {
        return Err(Error::DegeneratePartition(format!("part {i} is empty")));
    }
    Ok(Transversals { parts: parts.to_vec(), cursor: Some(vec![0; parts.len()]) })
}

pub struct Transversals<T> {
    parts: Vec<Vec<T>>,
    cursor: Option<Vec<usize>>,
}

impl<T: Clone> Iterator for Transversals<T> {
    type Item = Vec<T>;

    fn next(&mut self) -> Option<Vec<T>> {
        let cur = self.cursor.as_mut()?;
        let out = cur.iter().zip(&self.parts).map(|(&i, p)| p[i].clone()).collect();
        let mut k = cur.len();
        loop {
            if k == 0 {
                self.cursor = None;
                break;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < self.parts[k].len() {
                break;
            }
            cur[k] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_dedups() {
        let mut b = HccBuilder::new();
        let a = b.add_element(Some("A"));
        let c = b.add_element(Some("B"));
        let x = b.add_cell(&[a, c]).unwrap();
        let y = b.add_cell(&[c, a, c]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn mixed_rank_children_rejected() {
        let mut b = HccBuilder::new();
        let a = b.add_element(Some("A"));
        let c = b.add_element(Some("B"));
        let s = b.add_cell(&[a, c]).unwrap();
        assert!(matches!(b.add_cell(&[s, a]), Err(Error::Rank(_))));
    }

    #[test]
    fn rank_capped() {
        let mut b = HccBuilder::new();
        let mut c = b.add_element(None);
        for _ in 0..MAX_RANK {
            c = b.add_cell(&[c]).unwrap();
        }
        assert!(b.add_cell(&[c]).is_err());
    }

    #[test]
    fn transversal_order() {
        let t: Vec<_> = transversals(&[vec![1, 2], vec![3, 4]]).unwrap().collect();
        assert_eq!(t, vec![vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4]]);
        let none: Vec<Vec<i32>> = transversals(&[]).unwrap().collect();
        assert_eq!(none, vec![Vec::<i32>::new()]);
    }
}
