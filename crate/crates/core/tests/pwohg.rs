use std::collections::BTreeSet;

use hcc_tensor::mda::Mda;
use hcc_tensor::pwohg::{self, EdgeRef, GenTensor, GtJson, Path, Pwohg, WeakOrder};
use hcc_tensor::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn degenerate() -> Pwohg {
    Pwohg::parse(&["A", "B", "C", "D"], &[("r", &["A<B", "C<D"]), ("c", &["A<C", "D<B"])]).unwrap()
}

fn cube() -> Pwohg {
    Pwohg::parse(
        &["A", "B", "C", "D", "E", "F", "G", "H"],
        &[
            ("r", &["A<B", "C<D", "E<F", "G<H"]),
            ("g", &["A<C", "B<D", "E<G", "F<H"]),
            ("b", &["A<E", "B<F", "C<G", "D<H"]),
        ],
    )
    .unwrap()
}

fn edges_of<'a>(g: &'a Pwohg, mode: &str) -> Vec<Vec<Vec<&'a str>>> {
    let m = &g.modes[g.mode_index(mode).unwrap()];
    m.edges
        .iter()
        .map(|e| e.classes().iter().map(|c| c.iter().map(|&v| g.labels[v].as_str()).collect()).collect())
        .collect()
}

#[test]
fn degenerate_rejected_with_witness() {
    let r = degenerate().check_socc();
    assert!(r.connected);
    assert!(!r.consistent);
    let w = r.witness.unwrap();
    assert_eq!(w.vertices.first(), w.vertices.last());
    assert!(w.distance.iter().any(|&d| d != 0));
    // The witness path really has the reported distance.
    let g = degenerate();
    assert_eq!(g.path_distances(w.path.as_ref().unwrap()).unwrap(), w.distance);
    assert!(matches!(g.tuples(), Err(Error::Precondition(_))));
}

#[test]
fn cube_indices_from_a() {
    let g = cube();
    let r = g.check_socc();
    assert!(r.connected && r.consistent && r.witness.is_none());
    let a = g.assign_multi_indices(g.vertex("A").unwrap()).unwrap();
    let h = a.tuple_of(g.vertex("H").unwrap()).unwrap();
    assert_eq!(a.from_origin(h), vec![2, 2, 2]);
    let d = a.tuple_of(g.vertex("D").unwrap()).unwrap();
    assert_eq!(a.from_origin(d), vec![2, 2, 1]);
}

#[test]
fn disconnected_reported() {
    let g = Pwohg::parse(&["A", "B", "C", "D"], &[("r", &["A<B", "C<D"])]).unwrap();
    let r = g.check_socc();
    assert!(!r.connected);
    assert_eq!(r.components, 2);
    assert!(matches!(g.assign_multi_indices(0), Err(Error::Connectivity(_))));
}

#[test]
fn split_edge_merges() {
    let g = Pwohg::parse(
        &["A", "B", "C", "D", "E", "F"],
        &[("r", &["A<B", "B<C", "D<E<F"]), ("c", &["A<D", "B<E", "C<F"])],
    )
    .unwrap();
    let c = g.canonical_representative().unwrap();
    assert_eq!(edges_of(&c, "r"), vec![vec![vec!["A"], vec!["B"], vec!["C"]], vec![vec!["D"], vec!["E"], vec!["F"]]]);
    assert_eq!(c.canonical_representative().unwrap(), c);
}

#[test]
fn maximal_restores_missing_edge() {
    let g = Pwohg::parse(&["A", "B", "C", "D"], &[("p", &["A<B", "C<D"]), ("q", &["A", "C", "B<D"])]).unwrap();
    assert!(g.check_socc().consistent);
    let m = g.maximal_representative().unwrap();
    assert!(edges_of(&m, "q").contains(&vec![vec!["A"], vec!["C"]]));
    let c = g.canonical_representative().unwrap();
    assert_eq!(edges_of(&c, "q"), vec![vec![vec!["A"], vec!["C"]], vec![vec!["B"], vec!["D"]]]);
}

#[test]
fn hyper_tuples() {
    // A and B share every position; C follows both.
    let g = Pwohg::parse(&["A", "B", "C"], &[("m", &["A,B<C"])]).unwrap();
    let t = g.tuples().unwrap();
    assert_eq!(t, vec![BTreeSet::from([0, 1]), BTreeSet::from([2])]);
    assert!(!g.strong_socc().unwrap());
    let gt = GenTensor { hcc: pwohg::encode_rank3(&g).unwrap().0, cell: 0, graph: g, values: None };
    assert!(matches!(pwohg::mda_from_gt(&gt, false), Err(Error::Hyper(_))));
}

#[test]
fn decode_rejects_shared_edge() {
    let mut b = hcc_tensor::hcc::HccBuilder::new();
    let a = b.add_element(Some("A"));
    let c = b.add_element(Some("B"));
    let ab = b.add_cell(&[a, c]).unwrap();
    let bb = b.add_cell(&[c]).unwrap();
    let e = b.add_cell(&[ab, bb]).unwrap();
    let m1 = b.add_cell(&[e]).unwrap();
    let e2 = b.add_cell(&[bb]).unwrap();
    let m2 = b.add_cell(&[e, e2]).unwrap();
    let top = b.add_cell(&[m1, m2]).unwrap();
    let h = b.build();
    assert!(pwohg::decode_rank3(&h, top).is_err());
}

#[test]
fn encode_decode_cube() {
    let g = cube();
    let (h, top) = pwohg::encode_rank3(&g).unwrap();
    assert_eq!(h.rank(), 3);
    let back = pwohg::decode_rank3(&h, top).unwrap();
    // Mode names are not part of the encoding.
    let edges = |p: &Pwohg| p.canonical_representative().unwrap().modes.into_iter().map(|m| m.edges).collect::<Vec<_>>();
    assert_eq!(back.labels, g.labels);
    assert_eq!(edges(&back), edges(&g));
}

#[test]
fn json_round_trip() {
    let g = cube();
    let s = hcc_tensor::json::to_canonical(&g.to_json()).unwrap();
    let j: GtJson = hcc_tensor::json::from_str(&s).unwrap();
    assert_eq!(Pwohg::from_json(&j).unwrap(), g);
}

#[test]
fn weak_order_rejects_repeats() {
    assert!(WeakOrder::new(vec![vec![0], vec![0]]).is_err());
    assert!(WeakOrder::new(vec![vec![]]).is_err());
}

#[test]
fn noninjective_array_refused() {
    let m = Mda::dense(&[2], vec![1.0, 1.0]).unwrap();
    assert!(matches!(pwohg::gt_from_mda(&m), Err(Error::NonInjective(_))));
}

#[test]
fn jagged_gt_strict_and_lenient() {
    let g = Pwohg::parse(&["A", "B", "C", "D", "E"], &[("r", &["A<B<C", "D<E"]), ("c", &["A<D", "B<E"])]).unwrap();
    let gt = GenTensor::from_pwohg(&g, Some(vec![1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
    assert!(matches!(pwohg::mda_from_gt(&gt, true), Err(Error::Jagged(_))));
    let m = pwohg::mda_from_gt(&gt, false).unwrap();
    assert_eq!(m.num_present(), 5);
    assert_eq!(m.grid_len(), 6);
}

fn distinct_dense(shape: &[usize], seed: u64) -> Mda {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 + rng.gen::<f64>() * 0.5).collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.gen_range(0..=i));
    }
    Mda::dense(shape, vals).unwrap()
}

/// Split every chain of length three or more into two overlapping pieces.
fn split_edges(g: &Pwohg, rng: &mut ChaCha8Rng) -> Pwohg {
    let mut j = g.to_json();
    for m in &mut j.modes {
        let mut out = Vec::new();
        for e in m.edges.drain(..) {
            if e.len() >= 3 && rng.gen_bool(0.7) {
                let cut = rng.gen_range(1..e.len() - 1);
                out.push(e[..=cut].to_vec());
                out.push(e[cut..].to_vec());
            } else {
                out.push(e);
            }
        }
        m.edges = out;
    }
    Pwohg::from_json(&j).unwrap()
}

fn random_walk(g: &Pwohg, start: usize, len: usize, rng: &mut ChaCha8Rng) -> Path {
    let mut steps = Vec::new();
    let mut v = start;
    for _ in 0..len {
        let inc: Vec<EdgeRef> = g.edge_refs().filter(|&r| g.edge(r).carrier().contains(&v)).collect();
        let r = inc[rng.gen_range(0..inc.len())];
        let vs: Vec<usize> = g.edge(r).vertices().collect();
        let u = vs[rng.gen_range(0..vs.len())];
        steps.push((r, u));
        v = u;
    }
    Path { start, steps }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn mda_gt_round_trip(shape in proptest::collection::vec(2usize..4, 1..=4), seed in any::<u64>()) {
        let m = distinct_dense(&shape, seed);
        let gt = pwohg::gt_from_mda(&m).unwrap();
        prop_assert!(gt.graph.check_socc().consistent);
        let back = pwohg::mda_from_gt(&gt, true).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn path_distance_algebra(shape in proptest::collection::vec(2usize..4, 1..=3), seed in any::<u64>()) {
        let m = distinct_dense(&shape, seed);
        let g = pwohg::gt_from_mda(&m).unwrap().graph;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_walk(&g, 0, 4, &mut rng);
        let q = random_walk(&g, p.end(), 3, &mut rng);
        let dp = g.path_distances(&p).unwrap();
        let dq = g.path_distances(&q).unwrap();
        let neg: Vec<i64> = dp.iter().map(|d| -d).collect();
        prop_assert_eq!(g.path_distances(&p.reversed()).unwrap(), neg);
        let sum: Vec<i64> = dp.iter().zip(&dq).map(|(a, b)| a + b).collect();
        prop_assert_eq!(g.path_distances(&p.then(&q).unwrap()).unwrap(), sum);
        // Consistent graphs: closed walks have zero distance.
        let back = p.then(&p.reversed()).unwrap();
        prop_assert!(g.path_distances(&back).unwrap().iter().all(|&d| d == 0));
        let table = g.distance_table().unwrap();
        prop_assert_eq!(&table[&(p.start, p.end())], &dp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn canonical_idempotent(shape in proptest::collection::vec(2usize..5, 1..=3), seed in any::<u64>()) {
        let m = distinct_dense(&shape, seed);
        let g = pwohg::gt_from_mda(&m).unwrap().graph;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let split = split_edges(&g, &mut rng);
        prop_assert!(split.check_socc().consistent);
        let c = split.canonical_representative().unwrap();
        prop_assert_eq!(c.canonical_representative().unwrap(), c.clone());
        prop_assert_eq!(c, g.canonical_representative().unwrap());
    }
}
