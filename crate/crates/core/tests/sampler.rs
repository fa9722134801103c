use std::time::Instant;

use hcc_tensor::network::{Role, Row, Tem};
use hcc_tensor::sampler::{self, SampleConstraints};

fn small() -> SampleConstraints {
    SampleConstraints { max_elems: 1 << 12, max_grid: 1 << 16, ..SampleConstraints::default().with_input(&[8, 4, 4]) }
}

fn forward_shapes_ok(tem: &Tem, seed: u64) -> bool {
    let mut b = tem.random_inputs(seed).unwrap();
    b.extend(tem.init_weights(seed).unwrap());
    let all = tem.forward_all(&b).unwrap();
    tem.tensors.iter().all(|t| all[&t.name].shape() == t.shape.as_slice() && all[&t.name].values().iter().flatten().all(|v| v.is_finite()))
}

#[test]
fn default_constraints_seed_one() {
    let c = SampleConstraints::default();
    let tem = sampler::sample_architecture(&c, 1).unwrap();
    assert!(tem.validate().valid);
    assert!(c.admits(&tem.signature(false)));
    assert_eq!(tem.tensor("X").unwrap().shape, vec![64, 16, 16]);
}

#[test]
fn binary_chain_only() {
    let c = SampleConstraints { c_op: [2, 2], c_alpha: [2, 2], ..small() };
    for seed in 0..50 {
        let tem = sampler::sample_architecture(&c, seed).unwrap();
        let ops: Vec<_> = tem.rows.iter().filter_map(|r| if let Row::Op { tom, .. } = r { Some(tom.rows) } else { None }).collect();
        assert_eq!(ops, vec![2, 2]);
    }
}

#[test]
fn many_seeds_valid() {
    let c = small();
    let t0 = Instant::now();
    for seed in 0..200 {
        let tem = sampler::sample_record(&c, seed).unwrap();
        assert!(tem.validate().valid, "seed {seed}");
        assert!(c.admits(&tem.signature(false)), "seed {seed}");
        assert!(forward_shapes_ok(&tem, seed), "seed {seed}");
    }
    eprintln!("200 samples in {:?}", t0.elapsed());
}

#[test]
fn deterministic() {
    let c = small();
    for seed in [0, 7, 99] {
        let a = hcc_tensor::json::to_canonical(&sampler::sample_record(&c, seed).unwrap()).unwrap();
        let b = hcc_tensor::json::to_canonical(&sampler::sample_record(&c, seed).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn activation_policy() {
    // 10,000 rows of a synthetic chain.
    let c = SampleConstraints { c_op: [5, 5], ..small() };
    let base = sampler::sample_architecture(&c, 3).unwrap();
    let mut h = [0usize; 3];
    for seed in 0..2000 {
        let t = sampler::insert_activations(&base, seed);
        let k = sampler::activation_histogram(&t);
        for i in 0..3 {
            h[i] += k[i];
        }
    }
    let n = h.iter().sum::<usize>() as f64;
    assert_eq!(n, 10_000.0);
    let p0 = h[0] as f64 / n;
    assert!((p0 - 0.5).abs() <= 0.02, "{h:?}");
    for (k, p) in [(1, 0.25), (2, 0.25)] {
        let sigma = (p * (1.0 - p) / n).sqrt();
        assert!((h[k] as f64 / n - p).abs() <= 3.0 * sigma, "{h:?}");
    }
}

#[test]
fn zero_op_rows_unchanged() {
    let tem = Tem::default();
    assert_eq!(sampler::insert_activations(&tem, 1), tem);
}

#[test]
fn dataset_round_trip() {
    let dir = std::env::temp_dir().join(format!("hcc-sample-{}", std::process::id()));
    let m = sampler::emit_dataset(10, &small(), 42, &dir).unwrap();
    assert_eq!(m.records.len() + m.failures.len(), 10);
    for r in &m.records {
        let tem: Tem = hcc_tensor::json::load(dir.join(&r.file)).unwrap();
        assert!(tem.validate().valid);
        assert_eq!(tem.signature(false), r.signature);
        assert_eq!(tem.parameter_count(), r.parameters);
        assert!(tem.tensors.iter().any(|t| t.role == Role::Output));
    }
    let again = sampler::emit_dataset(10, &small(), 42, &dir).unwrap();
    assert_eq!(again, m);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn empty_range_rejected() {
    let c = SampleConstraints { c_op: [3, 2], ..small() };
    assert!(sampler::sample_architecture(&c, 0).is_err());
}
