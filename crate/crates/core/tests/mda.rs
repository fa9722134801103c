use hcc_tensor::mda::{self, Entry, Mda, TensorJson};
use hcc_tensor::Error;
use proptest::prelude::*;
use smallvec::smallvec;

#[test]
fn dense_accessors() {
    let m = Mda::dense(&[2, 3], (0..6).map(f64::from).collect()).unwrap();
    assert_eq!(m.get(&[1, 2]), Some(5.0));
    assert_eq!(m.order(), 2);
    assert!(m.is_dense() && !m.is_hyper());
    assert_eq!(m.regularity(), Some(1));
    assert_eq!(m.tensor_lengths(), vec![2, 3]);
    assert!(matches!(Mda::dense(&[2, 3], vec![0.0; 5]), Err(Error::Shape(_))));
}

#[test]
fn scalar_is_order_zero() {
    let s = Mda::scalar(4.0);
    assert_eq!(s.order(), 0);
    assert_eq!(s.grid_len(), 1);
    assert_eq!(s.get(&[]), Some(4.0));
}

#[test]
fn jagged_lengths_and_offsets() {
    // Present: (0,1) (1,1) (1,2)
    let m = Mda::jagged(&[2, 3], vec![false, true, false, false, true, true], vec![1.0, 2.0, 3.0]).unwrap();
    assert_eq!(m.num_present(), 3);
    assert_eq!(m.get(&[0, 0]), None);
    assert_eq!(m.offsets(), vec![0, 1]);
    assert_eq!(m.tensor_lengths(), vec![2, 2]);
    assert!(matches!(m.to_dense_vec(), Err(Error::Jagged(_))));
}

#[test]
fn hyper_entries() {
    let entries: Vec<Entry> = vec![smallvec![1.0, 2.0], smallvec![3.0]];
    let m = Mda::from_entries(&[2], entries).unwrap();
    assert!(m.is_hyper());
    assert_eq!(m.regularity(), None);
    assert!(matches!(m.to_json(), Err(Error::Hyper(_))));
    assert_eq!(m.collapse(|a, b| a + b).values(), vec![Some(3.0), Some(3.0)]);
    assert_eq!(m.reduce(&[0], f64::max).unwrap().get(&[]), Some(3.0));
}

#[test]
fn reduce_skips_absent() {
    let m = Mda::jagged(&[2, 2], vec![true, false, false, false], vec![5.0]).unwrap();
    let r = m.reduce(&[1], |a, b| a + b).unwrap();
    assert_eq!(r.values(), vec![Some(5.0), None]);
}

#[test]
fn broadcast_copies_along_new_modes() {
    let v = Mda::dense(&[3], vec![1.0, 2.0, 3.0]).unwrap();
    let b = v.broadcast(&[2, 3], &[1]).unwrap();
    assert_eq!(b.to_dense_vec().unwrap(), vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
    assert!(matches!(v.broadcast(&[2, 4], &[1]), Err(Error::Shape(_))));
    assert!(matches!(v.broadcast(&[3], &[1]), Err(Error::Mode(_))));
}

#[test]
fn json_shapes() {
    let m = Mda::jagged(&[3], vec![true, false, true], vec![1.5, -2.0]).unwrap();
    let j = m.to_json().unwrap();
    assert_eq!(j.mask, "101");
    assert_eq!(hcc_tensor::json::to_canonical(&j).unwrap(), r#"{"data":[1.5,-2.0],"mask":"101","shape":[3]}"#);
    assert_eq!(Mda::from_json(&j).unwrap(), m);
    let bad = TensorJson { shape: vec![2], mask: "1x".into(), data: vec![1.0] };
    assert!(matches!(Mda::from_json(&bad), Err(Error::Malformed(_))));
}

#[test]
fn ravel_helpers() {
    assert_eq!(mda::strides(&[2, 3, 4]), vec![12, 4, 1]);
    assert_eq!(mda::ravel(&[1, 2, 3], &[2, 3, 4]), 23);
    assert_eq!(mda::unravel(23, &[2, 3, 4]), vec![1, 2, 3]);
    let mut idx = vec![0, 2];
    assert!(mda::advance(&mut idx, &[2, 3]));
    assert_eq!(idx, vec![1, 0]);
}

fn jagged_strategy() -> impl Strategy<Value = Mda> {
    proptest::collection::vec(1usize..4, 0..4).prop_flat_map(|shape| {
        let n = mda::grid_len(&shape);
        (Just(shape), proptest::collection::vec(any::<bool>(), n), proptest::collection::vec(-100.0f64..100.0, n))
    })
    .prop_map(|(shape, mask, vals)| {
        let data = vals.into_iter().zip(&mask).filter(|(_, &p)| p).map(|(v, _)| v).collect();
        Mda::jagged(&shape, mask, data).unwrap()
    })
}

proptest! {
    #[test]
    fn ravel_inverts_unravel(shape in proptest::collection::vec(1usize..5, 0..5), seed in any::<usize>()) {
        let n = mda::grid_len(&shape);
        let f = seed % n;
        prop_assert_eq!(mda::ravel(&mda::unravel(f, &shape), &shape), f);
    }

    #[test]
    fn json_round_trip(m in jagged_strategy()) {
        let s = hcc_tensor::json::to_canonical(&m.to_json().unwrap()).unwrap();
        let back = Mda::from_json(&hcc_tensor::json::from_str(&s).unwrap()).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(hcc_tensor::json::to_canonical(&back.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn slices_reassemble(m in jagged_strategy(), pick in any::<u8>()) {
        let inner: Vec<usize> = (0..m.order()).filter(|k| pick >> k & 1 == 1).collect();
        let space = m.slice_space(&inner).unwrap();
        let slices: Vec<Mda> = (0..space.num_slices()).map(|s| space.slice(s)).collect();
        prop_assert_eq!(space.reassemble(&slices).unwrap(), m);
    }

    #[test]
    fn full_reduce_matches_sum(m in jagged_strategy()) {
        let all: Vec<usize> = (0..m.order()).collect();
        let r = m.reduce(&all, |a, b| a + b).unwrap();
        let direct: f64 = m.values().into_iter().flatten().sum();
        match r.get_flat(0) {
            Some(v) => prop_assert!((v - direct).abs() < 1e-9),
            None => prop_assert_eq!(m.num_present(), 0),
        }
    }

    #[test]
    fn tensor_length_bounds(m in jagged_strategy()) {
        for (l, s) in m.tensor_lengths().iter().zip(m.shape()) {
            prop_assert!(l <= s);
        }
    }
}
