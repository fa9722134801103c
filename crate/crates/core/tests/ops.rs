use hcc_tensor::mda::Mda;
use hcc_tensor::modemap;
use hcc_tensor::ops::random::{random_operands, random_tom, TomBounds};
use hcc_tensor::ops::*;
use hcc_tensor::oracle::oracle_evaluate;
use hcc_tensor::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matmul_tom(m: usize, k: usize, n: usize, ops: BaseOps) -> Tom {
    Tom::from_modes(vec![vec![0, 2], vec![2, 1]], vec![false, false, true], vec![vec![m, k], vec![k, n]], ops).unwrap()
}

fn cone_tom(n: usize) -> Tom {
    // columns p, q, r, i
    Tom::from_modes(
        vec![vec![3, 0, 1], vec![3, 0, 2], vec![3, 1, 2]],
        vec![false, false, false, true],
        vec![vec![n; 3]; 3],
        BaseOps::MUL_ADD,
    )
    .unwrap()
}

fn fish_tom(n: usize) -> Tom {
    // columns i, j, k, p, q, r
    Tom::from_modes(
        vec![vec![0, 1, 3], vec![3, 4, 5], vec![4, 5, 2]],
        vec![false, false, false, true, true, true],
        vec![vec![n; 3]; 3],
        BaseOps::MUL_ADD,
    )
    .unwrap()
}

fn rand_mda(rng: &mut ChaCha8Rng, shape: &[usize]) -> Mda {
    Mda::from_fn(shape, |_| rng.gen_range(-1.0..1.0)).unwrap()
}

fn max_abs_diff(a: &Mda, b: &Mda) -> f64 {
    assert_eq!(a.shape(), b.shape());
    assert_eq!(a.present(), b.present());
    a.values().iter().zip(b.values()).map(|(x, y)| match (x, y) {
        (Some(x), Some(y)) => (x - y).abs(),
        _ => 0.0,
    }).fold(0.0, f64::max)
}

#[test]
fn matmul_values() {
    let a = Mda::dense(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = Mda::dense(&[2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap();
    let y = evaluate(&matmul_tom(2, 2, 2, BaseOps::MUL_ADD), &[&a, &b], BaseOps::MUL_ADD).unwrap();
    assert_eq!(y.to_dense_vec().unwrap(), vec![19.0, 22.0, 43.0, 50.0]);
}

#[test]
fn min_plus_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = rand_mda(&mut rng, &[3, 4]);
    let b = rand_mda(&mut rng, &[4, 2]);
    let t = matmul_tom(3, 4, 2, BaseOps::ADD_MIN);
    let y = evaluate(&t, &[&a, &b], BaseOps::ADD_MIN).unwrap();
    for i in 0..3 {
        for j in 0..2 {
            let want = (0..4).map(|k| a.get(&[i, k]).unwrap() + b.get(&[k, j]).unwrap()).fold(f64::INFINITY, f64::min);
            assert_eq!(y.get(&[i, j]), Some(want));
        }
    }
}

#[test]
fn cone_product_all_ones_is_two() {
    let ones = Mda::filled(&[2, 2, 2], 1.0).unwrap();
    let y = evaluate(&cone_tom(2), &[&ones, &ones, &ones], BaseOps::MUL_ADD).unwrap();
    assert_eq!(y.shape(), &[2, 2, 2]);
    assert!(y.to_dense_vec().unwrap().iter().all(|&v| v == 2.0));
    assert_eq!(tom_complexity(&cone_tom(2)), (3, 4, 3));
}

#[test]
fn cone_product_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 3;
    let xs: Vec<Mda> = (0..3).map(|_| rand_mda(&mut rng, &[n, n, n])).collect();
    let y = evaluate(&cone_tom(n), &[&xs[0], &xs[1], &xs[2]], BaseOps::MUL_ADD).unwrap();
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                let want: f64 = (0..n)
                    .map(|i| xs[0].get(&[i, p, q]).unwrap() * xs[1].get(&[i, p, r]).unwrap() * xs[2].get(&[i, q, r]).unwrap())
                    .sum();
                assert!((y.get(&[p, q, r]).unwrap() - want).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn fish_product_matches_formula_and_splits_as_written() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 2;
    let xs: Vec<Mda> = (0..3).map(|_| rand_mda(&mut rng, &[n, n, n])).collect();
    let t = fish_tom(n);
    assert_eq!(tom_complexity(&t), (3, 6, 2));
    let y = evaluate(&t, &[&xs[0], &xs[1], &xs[2]], BaseOps::MUL_ADD).unwrap();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut want = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        for r in 0..n {
                            want += xs[0].get(&[i, j, p]).unwrap() * xs[1].get(&[p, q, r]).unwrap() * xs[2].get(&[q, r, k]).unwrap();
                        }
                    }
                }
                assert!((y.get(&[i, j, k]).unwrap() - want).abs() < 1e-9);
            }
        }
    }
    let (z, last) = decompose_arity(&t, BaseOps::MUL_ADD).unwrap();
    // Z[i,j,q,r] = sum_p X1[i,j,p] X2[p,q,r]
    assert_eq!(z.output_shape().unwrap(), vec![n; 4]);
    assert_eq!(z.contracted_columns().len(), 1);
    // Y[i,j,k] = sum_{q,r} Z[i,j,q,r] X3[q,r,k]
    assert_eq!(last.contracted_columns().len(), 2);
    let chain = decompose_to_binary(&t, BaseOps::MUL_ADD).unwrap();
    let y2 = evaluate_chain(&chain, &[&xs[0], &xs[1], &xs[2]], BaseOps::MUL_ADD).unwrap();
    assert!(max_abs_diff(&y, &y2) < 1e-9);
}

#[test]
fn jagged_matmul_substitutes_symbolic_result() {
    // [[A, B], [C, _]] x [[E, F], [_, H]] with A..H = 1..8
    let a = Mda::jagged(&[2, 2], vec![true, true, true, false], vec![1.0, 2.0, 3.0]).unwrap();
    let b = Mda::jagged(&[2, 2], vec![true, true, false, true], vec![5.0, 6.0, 8.0]).unwrap();
    let t = matmul_tom(2, 2, 2, BaseOps::MUL_ADD);
    assert!(validate_tom(&t, &[&a, &b]).valid);
    let y = evaluate(&t, &[&a, &b], BaseOps::MUL_ADD).unwrap();
    let (ae, b_, ce) = (1.0 * 5.0, 2.0, 3.0 * 5.0);
    let (af, bh, cf, h) = (1.0 * 6.0, 2.0 * 8.0, 3.0 * 6.0, 8.0);
    assert_eq!(y.to_dense_vec().unwrap(), vec![ae + b_, af + bh, ce, cf + h]);
    assert_eq!(y, oracle_evaluate(&t, &[&a, &b], BaseOps::MUL_ADD).unwrap());
}

#[test]
fn shape_mismatch_is_reported() {
    let a = Mda::filled(&[2, 3], 1.0).unwrap();
    let b = Mda::filled(&[4, 5], 1.0).unwrap();
    let t = Tom::from_modes(vec![vec![0, 2], vec![2, 1]], vec![false, false, true], vec![vec![2, 3], vec![4, 5]], BaseOps::MUL_ADD);
    assert!(matches!(t, Err(Error::Shape(_))));
    let ok = matmul_tom(2, 3, 4, BaseOps::MUL_ADD);
    let report = validate_tom(&ok, &[&a, &b]);
    assert!(!report.valid);
}

#[test]
fn hyper_tensor_of_matmul_is_two_regular() {
    let a = Mda::dense(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = Mda::dense(&[2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap();
    let t = matmul_tom(2, 2, 2, BaseOps::MUL_ADD);
    let (h, cons) = build_hyper(&t, &[&a, &b]).unwrap();
    assert_eq!(h.shape(), &[2, 2, 2]);
    assert_eq!(h.regularity(), Some(2));
    assert_eq!(cons, vec![2]);
    // H[i, j, k] = (A[i,k], B[k,j])
    assert_eq!(h.entry(&[1, 0, 1]), &[4.0, 7.0]);
    let y = collapse_hyper(&h, &cons, BaseOps::MUL_ADD).unwrap();
    assert_eq!(y, evaluate(&t, &[&a, &b], BaseOps::MUL_ADD).unwrap());
}

#[test]
fn unary_hyper_is_input() {
    let a = Mda::dense(&[3], vec![1.0, 2.0, 3.0]).unwrap();
    let t = Tom::from_modes(vec![vec![0]], vec![false], vec![vec![3]], BaseOps::MUL_ADD).unwrap();
    let (h, _) = build_hyper(&t, &[&a]).unwrap();
    assert_eq!(h, a);
}

#[test]
fn cone_hyper_tuples_follow_formula() {
    let x: Vec<Mda> = (0..3)
        .map(|k| Mda::from_fn(&[2, 2, 2], |i| (100 * (k + 1) + 4 * i[0] + 2 * i[1] + i[2]) as f64).unwrap())
        .collect();
    let (h, _) = build_hyper(&cone_tom(2), &[&x[0], &x[1], &x[2]]).unwrap();
    for p in 0..2 {
        for q in 0..2 {
            for r in 0..2 {
                for i in 0..2 {
                    let want = [x[0].get(&[i, p, q]).unwrap(), x[1].get(&[i, p, r]).unwrap(), x[2].get(&[i, q, r]).unwrap()];
                    assert_eq!(h.entry(&[p, q, r, i]), &want);
                }
            }
        }
    }
}

#[test]
fn attention_ternary_matches_two_matmuls() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, d, e) = (3, 4, 2);
    let zq = rand_mda(&mut rng, &[n, e]);
    let x = rand_mda(&mut rng, &[n, d]);
    let wk = rand_mda(&mut rng, &[d, e]);
    // A[n,m] = sum_{d,e} ZQ[n,e] X[m,d] WK[d,e]; columns n, m, d, e
    let t = Tom::from_modes(
        vec![vec![0, 3], vec![1, 2], vec![2, 3]],
        vec![false, false, true, true],
        vec![vec![n, e], vec![n, d], vec![d, e]],
        BaseOps::MUL_ADD,
    )
    .unwrap();
    let a = evaluate(&t, &[&zq, &x, &wk], BaseOps::MUL_ADD).unwrap();
    for i in 0..n {
        for m in 0..n {
            let mut want = 0.0;
            for dd in 0..d {
                for ee in 0..e {
                    want += zq.get(&[i, ee]).unwrap() * x.get(&[m, dd]).unwrap() * wk.get(&[dd, ee]).unwrap();
                }
            }
            assert!((a.get(&[i, m]).unwrap() - want).abs() < 1e-9);
        }
    }
    let chain = decompose_to_binary(&t, BaseOps::MUL_ADD).unwrap();
    assert_eq!(chain.len(), 2);
    assert!(chain.iter().all(|c| c.rows == 2));
    let a2 = evaluate_chain(&chain, &[&zq, &x, &wk], BaseOps::MUL_ADD).unwrap();
    assert!(max_abs_diff(&a, &a2) < 1e-9);
}

#[test]
fn conv_via_unfold_matches_direct() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (c, h, w, co, ph, pw) = (2, 4, 4, 3, 2, 2);
    let x = rand_mda(&mut rng, &[c, h, w]);
    let k = rand_mda(&mut rng, &[co, c, ph, pw]);
    let map = modemap::unfold(&[c, h, w], &[ph, pw], &[1, 1], &[0, 0]).unwrap();
    let xu = map.apply(&x).unwrap();
    let (oh, ow) = (h - ph + 1, w - pw + 1);
    // columns c', h', w', c, p_h, p_w
    let t = Tom::from_modes(
        vec![vec![3, 1, 2, 4, 5], vec![0, 3, 4, 5]],
        vec![false, false, false, true, true, true],
        vec![vec![c, oh, ow, ph, pw], vec![co, c, ph, pw]],
        BaseOps::MUL_ADD,
    )
    .unwrap();
    let y = evaluate(&t, &[&xu, &k], BaseOps::MUL_ADD).unwrap();
    assert_eq!(y.shape(), &[co, oh, ow]);
    for o in 0..co {
        for i in 0..oh {
            for j in 0..ow {
                let mut want = 0.0;
                for ci in 0..c {
                    for a in 0..ph {
                        for b in 0..pw {
                            want += x.get(&[ci, i + a, j + b]).unwrap() * k.get(&[o, ci, a, b]).unwrap();
                        }
                    }
                }
                assert!((y.get(&[o, i, j]).unwrap() - want).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn random_toms_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let t = random_tom(&mut rng, TomBounds::default(), BaseOps::MUL_ADD);
        let xs = random_operands(&mut rng, &t);
        let refs: Vec<&Mda> = xs.iter().collect();
        let y = evaluate(&t, &refs, BaseOps::MUL_ADD).unwrap();
        let o = oracle_evaluate(&t, &refs, BaseOps::MUL_ADD).unwrap();
        assert!(max_abs_diff(&y, &o) <= 1e-9);
    }
}

#[test]
fn random_decompositions_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let b = TomBounds { min_arity: 3, max_arity: 4, ..TomBounds::default() };
    for _ in 0..100 {
        let t = random_tom(&mut rng, b, BaseOps::MUL_ADD);
        let xs = random_operands(&mut rng, &t);
        let refs: Vec<&Mda> = xs.iter().collect();
        let y = evaluate(&t, &refs, BaseOps::MUL_ADD).unwrap();
        let chain = decompose_to_binary(&t, BaseOps::MUL_ADD).unwrap();
        assert_eq!(chain.len(), t.rows - 1);
        let y2 = evaluate_chain(&chain, &refs, BaseOps::MUL_ADD).unwrap();
        for (p, q) in y.values().iter().zip(y2.values()) {
            let (p, q) = (p.unwrap(), q.unwrap());
            assert!((p - q).abs() <= 1e-9 * p.abs().max(1.0));
        }
    }
}

#[test]
fn tropical_decomposition_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let b = TomBounds { min_arity: 3, max_arity: 4, ..TomBounds::default() };
    for _ in 0..50 {
        let t = random_tom(&mut rng, b, BaseOps::ADD_MAX);
        let xs = random_operands(&mut rng, &t);
        let refs: Vec<&Mda> = xs.iter().collect();
        let y = evaluate(&t, &refs, BaseOps::ADD_MAX).unwrap();
        let chain = decompose_to_binary(&t, BaseOps::ADD_MAX).unwrap();
        let y2 = evaluate_chain(&chain, &refs, BaseOps::ADD_MAX).unwrap();
        assert!(max_abs_diff(&y, &y2) <= 1e-12);
    }
}

#[test]
fn non_distributive_pair_refuses_decomposition() {
    let t = cone_tom(2);
    assert!(matches!(decompose_arity(&t, BaseOps::MAX_ADD), Err(Error::Algebra(_))));
    let ones = Mda::filled(&[2, 2, 2], 1.0).unwrap();
    // direct evaluation still works: max over the tuple, then sum over i
    let y = evaluate(&t, &[&ones, &ones, &ones], BaseOps::MAX_ADD).unwrap();
    assert!(y.to_dense_vec().unwrap().iter().all(|&v| v == 2.0));
}

#[test]
fn arity_below_three_is_rejected() {
    let t = matmul_tom(2, 2, 2, BaseOps::MUL_ADD);
    assert!(matches!(decompose_arity(&t, BaseOps::MUL_ADD), Err(Error::Arity(_))));
    assert_eq!(decompose_to_binary(&t, BaseOps::MUL_ADD).unwrap(), vec![t]);
}

#[test]
fn merging_two_matmuls_gives_ternary() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (n, d, e) = (3, 4, 2);
    let x = rand_mda(&mut rng, &[n, d]);
    let wq = rand_mda(&mut rng, &[d, e]);
    let k = rand_mda(&mut rng, &[n, e]);
    let t1 = matmul_tom(n, d, e, BaseOps::MUL_ADD).with_labels(&["X", "WQ"]);
    // A[n,m] = sum_e ZQ[n,e] K[m,e]; columns n, m, e
    let t2 = Tom::from_modes(vec![vec![0, 2], vec![1, 2]], vec![false, false, true], vec![vec![n, e], vec![n, e]], BaseOps::MUL_ADD)
        .unwrap()
        .with_labels(&["ZQ", "K"]);
    let merged = merge_ops(&t1, &t2, 0, BaseOps::MUL_ADD).unwrap();
    assert_eq!(tom_complexity(&merged), (3, 4, 2));
    let zq = evaluate(&t1, &[&x, &wq], BaseOps::MUL_ADD).unwrap();
    let direct = evaluate(&t2, &[&zq, &k], BaseOps::MUL_ADD).unwrap();
    let y = evaluate(&merged, &[&x, &wq, &k], BaseOps::MUL_ADD).unwrap();
    assert!(max_abs_diff(&direct, &y) < 1e-9);

    let dup = t1.clone().with_labels(&["X", "K"]);
    assert!(matches!(merge_ops(&dup, &t2, 0, BaseOps::MUL_ADD), Err(Error::DuplicateTensor(_))));
    let wrong = matmul_tom(n, d, 5, BaseOps::MUL_ADD);
    assert!(matches!(merge_ops(&wrong, &t2, 0, BaseOps::MUL_ADD), Err(Error::Coupling(_))));
}

#[test]
fn merge_with_identity_is_unchanged() {
    let t2 = cone_tom(2);
    let id = Tom::from_modes(vec![vec![0, 1, 2]], vec![false; 3], vec![vec![2; 3]], BaseOps::MUL_ADD).unwrap();
    assert_eq!(merge_ops(&id, &t2, 1, BaseOps::MUL_ADD).unwrap(), t2);
}

#[test]
fn merge_then_decompose_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let b = TomBounds { min_arity: 2, max_arity: 3, max_cols: 5, max_size: 3, ..TomBounds::default() };
    let mut done = 0;
    while done < 30 {
        let t1 = random_tom(&mut rng, b, BaseOps::MUL_ADD);
        let t2 = random_tom(&mut rng, b, BaseOps::MUL_ADD);
        let bind = rng.gen_range(0..t2.rows);
        if t1.output_shape().unwrap() != t2.shapes[bind] {
            continue;
        }
        done += 1;
        let merged = merge_ops(&t1, &t2, bind, BaseOps::MUL_ADD).unwrap();
        assert_eq!(merged.rows, t1.rows + t2.rows - 1);
        let x1 = random_operands(&mut rng, &t1);
        let mut x2 = random_operands(&mut rng, &t2);
        let r1: Vec<&Mda> = x1.iter().collect();
        let z = evaluate(&t1, &r1, BaseOps::MUL_ADD).unwrap();
        x2[bind] = z;
        let r2: Vec<&Mda> = x2.iter().collect();
        let want = evaluate(&t2, &r2, BaseOps::MUL_ADD).unwrap();
        let mut all: Vec<&Mda> = x2[..bind].iter().collect();
        all.extend(x1.iter());
        all.extend(x2[bind + 1..].iter());
        let got = evaluate(&merged, &all, BaseOps::MUL_ADD).unwrap();
        for (p, q) in want.values().iter().zip(got.values()) {
            assert!((p.unwrap() - q.unwrap()).abs() <= 1e-9 * p.unwrap().abs().max(1.0));
        }
        if merged.rows >= 3 {
            let chain = decompose_to_binary(&merged, BaseOps::MUL_ADD).unwrap();
            let back = evaluate_chain(&chain, &all, BaseOps::MUL_ADD).unwrap();
            for (p, q) in want.values().iter().zip(back.values()) {
                assert!((p.unwrap() - q.unwrap()).abs() <= 1e-9 * p.unwrap().abs().max(1.0));
            }
        }
    }
}

#[test]
fn flags_spot_check_matches_table() {
    let all = [Op::Mul, Op::Add, Op::Min, Op::Max];
    for s in all {
        for d in all {
            let b = BaseOps::new(s, d);
            if b.distributive() {
                b.spot_check(1).unwrap();
            } else {
                assert!(b.spot_check(1).is_err());
            }
        }
    }
}

#[test]
fn tom_json_round_trip() {
    let t = cone_tom(2).with_labels(&["X1", "X2", "X3"]);
    let s = hcc_tensor::json::to_canonical(&t).unwrap();
    let back = Tom::from_json_str(&s).unwrap();
    assert_eq!(back, t);
    assert_eq!(hcc_tensor::json::to_canonical(&back).unwrap(), s);
    assert!(s.contains("\"base_ops\":\"mul_add\""));
}
