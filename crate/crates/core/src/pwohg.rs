//! Partitioned, weakly ordered hypergraphs (the graph view of generalized
//! tensors): slice-ordering checks, tuples, multi-indices, maximal and
//! canonical representatives, the rank-3 encoding, and conversion to and
//! from arrays.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::hcc::{CellId, Hcc, HccBuilder};
use crate::mda::{self, Entry, Mda};

/// A vertex is an element handle.
pub type V = usize;

/// A strictly weakly ordered hyper-edge: ordered incomparability classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeakOrder {
    classes: Vec<Vec<V>>,
}

impl WeakOrder {
    pub fn new(classes: Vec<Vec<V>>) -> Result<WeakOrder> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(classes.len());
        for mut c in classes {
            if c.is_empty() {
                return Err(Error::Malformed("empty index class in edge".into()));
            }
            c.sort_unstable();
            c.dedup();
            for &v in &c {
                if !seen.insert(v) {
                    return Err(Error::Malformed(format!("vertex {v} repeated in one edge")));
                }
            }
            out.push(c);
        }
        if out.is_empty() {
            return Err(Error::Malformed("empty edge".into()));
        }
        Ok(WeakOrder { classes: out })
    }

    /// A strict chain `v0 < v1 < ...`.
    pub fn chain(vs: &[V]) -> Result<WeakOrder> {
        WeakOrder::new(vs.iter().map(|&v| vec![v]).collect())
    }

    pub fn classes(&self) -> &[Vec<V>] {
        &self.classes
    }

    /// Number of index classes `L`.
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Index in `1..=L`, if `v` lies on the edge.
    pub fn index_of(&self, v: V) -> Option<i64> {
        self.classes.iter().position(|c| c.binary_search(&v).is_ok()).map(|i| i as i64 + 1)
    }

    pub fn carrier(&self) -> BTreeSet<V> {
        self.classes.iter().flatten().copied().collect()
    }

    pub fn vertices(&self) -> impl Iterator<Item = V> + '_ {
        self.classes.iter().flatten().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode {
    pub name: String,
    pub edges: Vec<WeakOrder>,
}

/// Vertices are `0..labels.len()`; the edges are partitioned into modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pwohg {
    pub labels: Vec<String>,
    pub modes: Vec<Mode>,
}

/// Reference to one edge: `(mode, edge)` positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRef {
    pub mode: usize,
    pub edge: usize,
}

/// Alternating vertex/edge sequence `v0 e0 v1 e1 v2 ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub start: V,
    pub steps: Vec<(EdgeRef, V)>,
}

impl Path {
    pub fn end(&self) -> V {
        self.steps.last().map(|s| s.1).unwrap_or(self.start)
    }

    pub fn reversed(&self) -> Path {
        let mut verts = vec![self.start];
        verts.extend(self.steps.iter().map(|s| s.1));
        let edges: Vec<EdgeRef> = self.steps.iter().map(|s| s.0).collect();
        let start = *verts.last().unwrap();
        let steps = edges.iter().rev().zip(verts.iter().rev().skip(1)).map(|(&e, &v)| (e, v)).collect();
        Path { start, steps }
    }

    /// `other` after `self`; `other` must start where `self` ends.
    pub fn then(&self, other: &Path) -> Result<Path> {
        if other.start != self.end() {
            return Err(Error::InvalidPath("paths are not composable".into()));
        }
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().copied());
        Ok(Path { start: self.start, steps })
    }
}

/// Result of checking the slice ordering compatibility conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoccReport {
    pub connected: bool,
    pub consistent: bool,
    /// A closed path with non-zero distance in some mode.
    pub witness: Option<CycleWitness>,
    pub components: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleWitness {
    /// Vertex labels along the cycle, first repeated at the end.
    pub vertices: Vec<String>,
    /// `(mode name, edge position)` of each step.
    pub edges: Vec<(String, usize)>,
    /// Per-mode distance around the cycle.
    pub distance: Vec<i64>,
    #[serde(skip)]
    pub path: Option<Path>,
}

/// Per-vertex coordinates from a BFS over edges.
#[derive(Clone, Debug)]
struct Coords {
    coord: Vec<Option<Vec<i64>>>,
    component: Vec<usize>,
    parent: Vec<Option<(V, EdgeRef)>>,
    roots: Vec<V>,
    conflict: Option<(V, EdgeRef, V, Vec<i64>)>,
}

impl Pwohg {
    pub fn new(labels: Vec<String>, modes: Vec<Mode>) -> Result<Pwohg> {
        let n = labels.len();
        for m in &modes {
            for e in &m.edges {
                if let Some(v) = e.vertices().find(|&v| v >= n) {
                    return Err(Error::Malformed(format!("edge mentions unknown vertex {v}")));
                }
            }
        }
        Ok(Pwohg { labels, modes })
    }

    /// Build from label strings: an edge `"A<B,C<D"` has classes `A`, `{B,C}`, `D`.
    pub fn parse(elements: &[&str], modes: &[(&str, &[&str])]) -> Result<Pwohg> {
        let pos: HashMap<&str, V> = elements.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let mut out = Vec::new();
        for &(name, edges) in modes {
            let mut es = Vec::new();
            for e in edges {
                let classes = e
                    .split('<')
                    .map(|c| {
                        c.split(',')
                            .map(|l| {
                                let l = l.trim();
                                pos.get(l).copied().ok_or_else(|| Error::Malformed(format!("unknown element {l}")))
                            })
                            .collect::<Result<Vec<V>>>()
                    })
                    .collect::<Result<Vec<Vec<V>>>>()?;
                es.push(WeakOrder::new(classes)?);
            }
            out.push(Mode { name: name.to_string(), edges: es });
        }
        Pwohg::new(elements.iter().map(|s| s.to_string()).collect(), out)
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn edge(&self, r: EdgeRef) -> &WeakOrder {
        &self.modes[r.mode].edges[r.edge]
    }

    pub fn edge_refs(&self) -> impl Iterator<Item = EdgeRef> + '_ {
        self.modes
            .iter()
            .enumerate()
            .flat_map(|(m, md)| (0..md.edges.len()).map(move |e| EdgeRef { mode: m, edge: e }))
    }

    pub fn num_edges(&self) -> usize {
        self.modes.iter().map(|m| m.edges.len()).sum()
    }

    pub fn mode_index(&self, name: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.name == name)
    }

    pub fn vertex(&self, label: &str) -> Option<V> {
        self.labels.iter().position(|l| l == label)
    }

    fn incidence(&self) -> Vec<Vec<EdgeRef>> {
        let mut inc = vec![Vec::new(); self.num_vertices()];
        for r in self.edge_refs() {
            for v in self.edge(r).vertices() {
                inc[v].push(r);
            }
        }
        inc
    }

    /// Signed distance of `path` restricted to edges of `mode`.
    pub fn path_distance(&self, path: &Path, mode: usize) -> Result<i64> {
        Ok(self.path_distances(path)?[mode])
    }

    /// Signed distance of `path` in every mode.
    pub fn path_distances(&self, path: &Path) -> Result<Vec<i64>> {
        let mut d = vec![0i64; self.num_modes()];
        let mut cur = path.start;
        for &(e, next) in &path.steps {
            if e.mode >= self.num_modes() || e.edge >= self.modes[e.mode].edges.len() {
                return Err(Error::InvalidPath(format!("no edge {e:?}")));
            }
            let edge = self.edge(e);
            let (a, b) = match (edge.index_of(cur), edge.index_of(next)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::InvalidPath(format!(
                        "{} and {} are not both on edge {e:?}",
                        self.labels[cur], self.labels[next]
                    )))
                }
            };
            d[e.mode] += b - a;
            cur = next;
        }
        Ok(d)
    }

    fn bfs(&self) -> Coords {
        let n = self.num_vertices();
        let inc = self.incidence();
        let mut c = Coords {
            coord: vec![None; n],
            component: vec![usize::MAX; n],
            parent: vec![None; n],
            roots: Vec::new(),
            conflict: None,
        };
        for root in 0..n {
            if c.coord[root].is_some() {
                continue;
            }
            let comp = c.roots.len();
            c.roots.push(root);
            c.coord[root] = Some(vec![0; self.num_modes()]);
            c.component[root] = comp;
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                let cv = c.coord[v].clone().unwrap();
                for &r in &inc[v] {
                    let edge = self.edge(r);
                    let iv = edge.index_of(v).unwrap();
                    for u in edge.vertices() {
                        let mut expect = cv.clone();
                        expect[r.mode] += edge.index_of(u).unwrap() - iv;
                        match &c.coord[u] {
                            None => {
                                c.coord[u] = Some(expect);
                                c.component[u] = comp;
                                c.parent[u] = Some((v, r));
                                queue.push_back(u);
                            }
                            Some(cu) if *cu != expect => {
                                if c.conflict.is_none() {
                                    let gap = expect.iter().zip(cu).map(|(a, b)| a - b).collect();
                                    c.conflict = Some((v, r, u, gap));
                                }
                            }
                            Some(_) => {}
                        }
                    }
                }
            }
        }
        c
    }

    fn tree_path(&self, c: &Coords, v: V) -> Path {
        let mut rev = Vec::new();
        let mut cur = v;
        while let Some((p, e)) = c.parent[cur] {
            rev.push((e, cur));
            cur = p;
        }
        rev.reverse();
        Path { start: cur, steps: rev }
    }

    /// Connectivity plus zero per-mode distance around every cycle.
    pub fn check_socc(&self) -> SoccReport {
        let c = self.bfs();
        let witness = c.conflict.as_ref().map(|(v, r, u, gap)| {
            let to_v = self.tree_path(&c, *v);
            let step = Path { start: *v, steps: vec![(*r, *u)] };
            let back = self.tree_path(&c, *u).reversed();
            let cycle = to_v.then(&step).and_then(|p| p.then(&back)).expect("tree paths compose");
            let mut vertices = vec![self.labels[cycle.start].clone()];
            vertices.extend(cycle.steps.iter().map(|s| self.labels[s.1].clone()));
            let edges = cycle.steps.iter().map(|s| (self.modes[s.0.mode].name.clone(), s.0.edge)).collect();
            CycleWitness { vertices, edges, distance: gap.clone(), path: Some(cycle) }
        });
        SoccReport {
            connected: c.roots.len() <= 1,
            consistent: c.conflict.is_none(),
            witness,
            components: c.roots.len(),
        }
    }

    fn consistent_coords(&self) -> Result<Coords> {
        let c = self.bfs();
        if c.conflict.is_some() {
            return Err(Error::Precondition("slice ordering is inconsistent".into()));
        }
        Ok(c)
    }

    /// Maximal sets of vertices at zero distance from each other in every mode.
    pub fn tuples(&self) -> Result<Vec<BTreeSet<V>>> {
        let c = self.consistent_coords()?;
        let mut groups: BTreeMap<(usize, Vec<i64>), BTreeSet<V>> = BTreeMap::new();
        for v in 0..self.num_vertices() {
            groups.entry((c.component[v], c.coord[v].clone().unwrap())).or_default().insert(v);
        }
        let mut out: Vec<BTreeSet<V>> = groups.into_values().collect();
        out.sort_by_key(|t| *t.iter().next().unwrap());
        Ok(out)
    }

    /// True when every tuple is a single vertex.
    pub fn strong_socc(&self) -> Result<bool> {
        Ok(self.tuples()?.iter().all(|t| t.len() == 1))
    }

    /// Multi-indices of all tuples relative to the tuple containing `origin`.
    pub fn assign_multi_indices(&self, origin: V) -> Result<MultiIndexAssignment> {
        let c = self.consistent_coords()?;
        if c.roots.len() > 1 {
            let other = (0..self.num_vertices()).find(|&v| c.component[v] != c.component[origin]).unwrap();
            return Err(Error::Connectivity(format!(
                "{} is unreachable from {}",
                self.labels[other], self.labels[origin]
            )));
        }
        let o = c.coord[origin].clone().unwrap();
        let tuples = self.tuples()?;
        let raw: Vec<Vec<i64>> = tuples
            .iter()
            .map(|t| {
                let v = *t.iter().next().unwrap();
                c.coord[v].as_ref().unwrap().iter().zip(&o).map(|(a, b)| a - b).collect()
            })
            .collect();
        let m = self.num_modes();
        let offsets = (0..m).map(|k| 1 - raw.iter().map(|r| r[k]).min().unwrap_or(0)).collect();
        Ok(MultiIndexAssignment { tuples, raw, offsets })
    }

    /// Per-mode distance between every ordered pair of vertices in the same
    /// component.
    pub fn distance_table(&self) -> Result<BTreeMap<(V, V), Vec<i64>>> {
        let c = self.consistent_coords()?;
        let mut t = BTreeMap::new();
        for a in 0..self.num_vertices() {
            for b in 0..self.num_vertices() {
                if c.component[a] == c.component[b] {
                    let (ca, cb) = (c.coord[a].as_ref().unwrap(), c.coord[b].as_ref().unwrap());
                    t.insert((a, b), cb.iter().zip(ca).map(|(x, y)| x - y).collect());
                }
            }
        }
        Ok(t)
    }

    fn dedup_sorted(mut self) -> Pwohg {
        for m in &mut self.modes {
            let set: BTreeSet<WeakOrder> = m.edges.drain(..).collect();
            m.edges = set.into_iter().collect();
        }
        self
    }

    /// Add every edge implied by the distances: `[{a,b}]` to each mode when
    /// `a` and `b` sit at the same position, and `[a,b]` to mode `p` when `b`
    /// is exactly one step after `a` in `p` and level with it elsewhere.
    pub fn maximal_representative(&self) -> Result<Pwohg> {
        let c = self.consistent_coords()?;
        let n = self.num_vertices();
        let mut g = self.clone();
        for a in 0..n {
            for b in 0..n {
                if a == b || c.component[a] != c.component[b] {
                    continue;
                }
                let (ca, cb) = (c.coord[a].as_ref().unwrap(), c.coord[b].as_ref().unwrap());
                let diff: Vec<i64> = cb.iter().zip(ca).map(|(x, y)| x - y).collect();
                let nonzero: Vec<usize> = (0..diff.len()).filter(|&k| diff[k] != 0).collect();
                if nonzero.is_empty() && a < b {
                    let e = WeakOrder::new(vec![vec![a, b]])?;
                    for m in &mut g.modes {
                        m.edges.push(e.clone());
                    }
                } else if nonzero.len() == 1 && diff[nonzero[0]] == 1 {
                    g.modes[nonzero[0]].edges.push(WeakOrder::chain(&[a, b])?);
                }
            }
        }
        Ok(g.dedup_sorted())
    }

    /// The equivalent maximal representative with the fewest edges: within
    /// each mode, overlapping edges are merged and re-indexed by position.
    pub fn canonical_representative(&self) -> Result<Pwohg> {
        if !self.strong_socc()? {
            return Err(Error::Precondition("canonical form needs every tuple to be a single vertex".into()));
        }
        let c = self.consistent_coords()?;
        let maximal = self.maximal_representative()?;
        let mut modes = Vec::with_capacity(self.num_modes());
        for (p, mode) in maximal.modes.iter().enumerate() {
            let mut uf = UnionFind::new(self.num_vertices());
            let mut touched = BTreeSet::new();
            for e in &mode.edges {
                let vs: Vec<V> = e.vertices().collect();
                touched.extend(vs.iter().copied());
                for w in vs.windows(2) {
                    uf.union(w[0], w[1]);
                }
            }
            let mut comps: BTreeMap<V, Vec<V>> = BTreeMap::new();
            for &v in &touched {
                comps.entry(uf.find(v)).or_default().push(v);
            }
            let mut edges = Vec::new();
            for vs in comps.values() {
                let lo = vs.iter().map(|&v| c.coord[v].as_ref().unwrap()[p]).min().unwrap();
                let mut classes: BTreeMap<i64, Vec<V>> = BTreeMap::new();
                for &v in vs {
                    classes.entry(c.coord[v].as_ref().unwrap()[p] - lo).or_default().push(v);
                }
                let len = classes.len() as i64;
                if classes.keys().last() != Some(&(len - 1)) {
                    return Err(Error::Encoding(format!("merged edge in mode {} has a gap", mode.name)));
                }
                edges.push(WeakOrder::new(classes.into_values().collect())?);
            }
            edges.sort();
            modes.push(Mode { name: mode.name.clone(), edges });
        }
        Ok(Pwohg { labels: self.labels.clone(), modes })
    }

    pub fn to_json(&self) -> GtJson {
        GtJson {
            elements: Some(self.labels.clone()),
            modes: self
                .modes
                .iter()
                .map(|m| ModeJson { name: m.name.clone(), edges: m.edges.iter().map(|e| e.classes.clone()).collect() })
                .collect(),
        }
    }

    pub fn from_json(j: &GtJson) -> Result<Pwohg> {
        let labels = match &j.elements {
            Some(l) => l.clone(),
            None => {
                let n = j.modes.iter().flat_map(|m| m.edges.iter().flatten().flatten()).max().map_or(0, |&v| v + 1);
                (0..n).map(|v| v.to_string()).collect()
            }
        };
        let modes = j
            .modes
            .iter()
            .map(|m| {
                Ok(Mode {
                    name: m.name.clone(),
                    edges: m.edges.iter().map(|e| WeakOrder::new(e.clone())).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Pwohg::new(labels, modes)
    }
}

/// `{"elements":[labels]?, "modes":[{"name":..,"edges":[[[ids],..],..]}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<String>>,
    pub modes: Vec<ModeJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeJson {
    pub name: String,
    pub edges: Vec<Vec<Vec<V>>>,
}

/// Multi-indices of the tuples of a consistent, connected graph.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiIndexAssignment {
    pub tuples: Vec<BTreeSet<V>>,
    /// Per-mode distance from the origin tuple (the origin itself is all zeros).
    pub raw: Vec<Vec<i64>>,
    /// Per-mode shift that makes the smallest index 1.
    pub offsets: Vec<i64>,
}

impl MultiIndexAssignment {
    /// Offset multi-index (all entries >= 1) of tuple `t`.
    pub fn index(&self, t: usize) -> Vec<i64> {
        self.raw[t].iter().zip(&self.offsets).map(|(r, o)| r + o).collect()
    }

    /// Multi-index with the origin placed at `(1, ..., 1)`.
    pub fn from_origin(&self, t: usize) -> Vec<i64> {
        self.raw[t].iter().map(|r| r + 1).collect()
    }

    pub fn tuple_of(&self, v: V) -> Option<usize> {
        self.tuples.iter().position(|t| t.contains(&v))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Rank-3 encoding: each edge contributes its suffix unions
/// `c_i ∪ ... ∪ c_L`; each mode becomes the 2-cell of its edges' chains.
pub fn encode_rank3(g: &Pwohg) -> Result<(Hcc, CellId)> {
    let mut b = HccBuilder::new();
    let zero: Vec<CellId> = g.labels.iter().map(|l| b.add_element(Some(l))).collect();
    let mut twos = Vec::new();
    for m in &g.modes {
        if m.edges.is_empty() {
            return Err(Error::Encoding(format!("mode {} has no edges", m.name)));
        }
        let mut ones = Vec::new();
        for e in &m.edges {
            for i in 0..e.len() {
                let members: Vec<CellId> = e.classes[i..].iter().flatten().map(|&v| zero[v]).collect();
                ones.push(b.add_cell(&members)?);
            }
        }
        twos.push(b.add_cell(&ones)?);
    }
    if twos.len() != twos.iter().collect::<BTreeSet<_>>().len() {
        return Err(Error::Encoding("two modes encode to the same 2-cell".into()));
    }
    let top = b.add_cell(&twos)?;
    Ok((b.build(), top))
}

/// Inverse of [`encode_rank3`].
///
/// The edges are the ⊆-maximal 1-cells. An element's index on edge `e` is one
/// plus the number of 1-cells of `e`'s own 2-cell that contain it and are
/// strict subsets of `e`.
pub fn decode_rank3(h: &Hcc, top: CellId) -> Result<Pwohg> {
    if h.cell(top).rank != 3 {
        return Err(Error::Rank(format!("expected a rank-3 cell, got rank {}", h.cell(top).rank)));
    }
    let ones = h.restrict(top, 1)?;
    let sets: BTreeMap<CellId, BTreeSet<usize>> = ones.iter().map(|&c| (c, h.elements_of(c))).collect();
    let maximal: BTreeSet<CellId> = ones
        .iter()
        .copied()
        .filter(|c| !sets.iter().any(|(d, s)| d != c && sets[c].is_subset(s) && sets[c].len() < s.len()))
        .collect();
    let mut owner: BTreeMap<CellId, usize> = BTreeMap::new();
    let mut modes = Vec::new();
    for (p, &two) in h.cell(top).children.iter().enumerate() {
        let kids = &h.cell(two).children;
        let mut edges = Vec::new();
        for &e in kids.iter().filter(|k| maximal.contains(k)) {
            if let Some(q) = owner.insert(e, p) {
                return Err(Error::Encoding(format!("edge belongs to modes {q} and {p}")));
            }
            let es = &sets[&e];
            let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &x in es {
                let k = kids
                    .iter()
                    .filter(|&&s| s != e && sets[&s].contains(&x) && sets[&s].is_subset(es))
                    .count();
                classes.entry(k).or_default().push(x);
            }
            if classes.keys().copied().ne(0..classes.len()) {
                return Err(Error::Encoding("subset chain admits no unique order".into()));
            }
            edges.push(WeakOrder::new(classes.into_values().collect())?);
        }
        edges.sort();
        modes.push(Mode { name: format!("m{p}"), edges });
    }
    let all: Vec<(usize, &WeakOrder)> = modes.iter().enumerate().flat_map(|(p, m)| m.edges.iter().map(move |e| (p, e))).collect();
    for (i, (p, a)) in all.iter().enumerate() {
        for (q, b) in &all[i + 1..] {
            let common = a.carrier().intersection(&b.carrier()).count();
            if (p == q && common > 0) || common > 1 {
                return Err(Error::Encoding("edges overlap beyond a single minimal element".into()));
            }
        }
    }
    let labels = (0..h.num_elements()).map(|e| h.display(e)).collect();
    Pwohg::new(labels, modes)
}

/// A generalized tensor: the rank-3 complex together with its graph view and
/// optional element values.
#[derive(Clone, Debug)]
pub struct GenTensor {
    pub hcc: Hcc,
    pub cell: CellId,
    pub graph: Pwohg,
    pub values: Option<Vec<f64>>,
}

impl GenTensor {
    /// Canonicalize `g` and encode it.
    pub fn from_pwohg(g: &Pwohg, values: Option<Vec<f64>>) -> Result<GenTensor> {
        let report = g.check_socc();
        if !report.consistent {
            return Err(Error::Precondition("slice ordering is inconsistent".into()));
        }
        if !report.connected {
            return Err(Error::Connectivity("graph is not connected".into()));
        }
        let canon = g.canonical_representative()?;
        let (hcc, cell) = encode_rank3(&canon)?;
        Ok(GenTensor { hcc, cell, graph: canon, values })
    }

    pub fn from_hcc(hcc: Hcc, cell: CellId) -> Result<GenTensor> {
        let graph = decode_rank3(&hcc, cell)?;
        Ok(GenTensor { hcc, cell, graph, values: None })
    }
}

/// Represent a dense, injective array as a generalized tensor. Element `i`
/// is flat position `i`; mode `k` holds the 1-slices along array mode `k`.
pub fn gt_from_mda(m: &Mda) -> Result<GenTensor> {
    let data = m.to_dense_vec()?;
    let mut seen = BTreeSet::new();
    for v in &data {
        if !seen.insert(v.to_bits()) {
            return Err(Error::NonInjective(format!("value {v} occurs more than once; use a mode map")));
        }
    }
    let shape = m.shape();
    if shape.is_empty() {
        return Err(Error::Shape("order-0 arrays have no modes".into()));
    }
    let st = mda::strides(shape);
    let mut modes = Vec::new();
    for k in 0..shape.len() {
        let mut edges = Vec::new();
        for flat in 0..m.grid_len() {
            if (flat / st[k]) % shape[k] != 0 {
                continue;
            }
            let chain: Vec<V> = (0..shape[k]).map(|i| flat + i * st[k]).collect();
            edges.push(WeakOrder::chain(&chain)?);
        }
        modes.push(Mode { name: format!("m{k}"), edges });
    }
    let labels = data.iter().map(|v| format!("{v}")).collect();
    let g = Pwohg::new(labels, modes)?;
    let (hcc, cell) = encode_rank3(&g)?;
    Ok(GenTensor { hcc, cell, graph: g, values: Some(data) })
}

/// Coordinates of a generalized tensor as an array.
///
/// Modes are ordered by their smallest element handle, ties kept in graph
/// order. With `strict`, unequal edge lengths in a mode are an error;
/// otherwise the result is jagged. Values come from `g.values` when present,
/// else element handles.
pub fn mda_from_gt(g: &GenTensor, strict: bool) -> Result<Mda> {
    let graph = &g.graph;
    let report = graph.check_socc();
    if !report.consistent {
        return Err(Error::Precondition("slice ordering is inconsistent".into()));
    }
    if !report.connected {
        return Err(Error::Connectivity("graph is not connected".into()));
    }
    let tuples = graph.tuples()?;
    if let Some(t) = tuples.iter().find(|t| t.len() > 1) {
        let names: Vec<&str> = t.iter().map(|&v| graph.labels[v].as_str()).collect();
        return Err(Error::Hyper(format!("position holds several elements {names:?}")));
    }
    if strict {
        for m in &graph.modes {
            let lens: BTreeSet<usize> = m.edges.iter().map(WeakOrder::len).collect();
            if lens.len() > 1 {
                return Err(Error::Jagged(format!("mode {} has edge lengths {lens:?}", m.name)));
            }
        }
    }
    let mut order: Vec<usize> = (0..graph.num_modes()).collect();
    order.sort_by_key(|&p| graph.modes[p].edges.iter().flat_map(|e| e.vertices()).min().unwrap_or(usize::MAX));
    let a = graph.assign_multi_indices(*tuples[0].iter().next().unwrap())?;
    let coords: Vec<Vec<usize>> = (0..tuples.len())
        .map(|t| {
            let idx = a.index(t);
            order.iter().map(|&p| (idx[p] - 1) as usize).collect()
        })
        .collect();
    let shape: Vec<usize> = (0..order.len()).map(|k| coords.iter().map(|c| c[k] + 1).max().unwrap_or(1)).collect();
    let mut entries = vec![Entry::new(); mda::grid_len(&shape)];
    for (t, c) in tuples.iter().zip(&coords) {
        let v = *t.iter().next().unwrap();
        let value = g.values.as_ref().map_or(v as f64, |vals| vals[v]);
        entries[mda::ravel(c, &shape)] = smallvec::smallvec![value];
    }
    Mda::from_entries(&shape, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Pwohg {
        Pwohg::parse(&["A", "B", "C", "D"], &[("r", &["A<B", "C<D"]), ("c", &["A<C", "B<D"])]).unwrap()
    }

    #[test]
    fn weak_order_indices() {
        let e = WeakOrder::new(vec![vec![1], vec![3, 2]]).unwrap();
        assert_eq!(e.index_of(1), Some(1));
        assert_eq!(e.index_of(2), Some(2));
        assert_eq!(e.index_of(3), Some(2));
        assert_eq!(e.index_of(0), None);
    }

    #[test]
    fn square_is_consistent() {
        let r = square().check_socc();
        assert!(r.connected && r.consistent);
    }

    #[test]
    fn encode_decode_square() {
        let g = square();
        let (h, top) = encode_rank3(&g).unwrap();
        // 4 edges plus the chain tails {B}, {D}, {C}
        assert_eq!(h.restrict(top, 1).unwrap().len(), 7);
        let back = decode_rank3(&h, top).unwrap();
        assert_eq!(back.modes[0].edges, g.clone().dedup_sorted().modes[0].edges);
        assert_eq!(back.modes[1].edges, g.dedup_sorted().modes[1].edges);
    }

    #[test]
    fn path_reversal() {
        let g = square();
        let p = Path {
            start: 0,
            steps: vec![(EdgeRef { mode: 0, edge: 0 }, 1), (EdgeRef { mode: 1, edge: 1 }, 3)],
        };
        assert_eq!(g.path_distances(&p).unwrap(), vec![1, 1]);
        assert_eq!(g.path_distances(&p.reversed()).unwrap(), vec![-1, -1]);
    }
}
