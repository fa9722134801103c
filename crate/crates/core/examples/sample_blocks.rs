//! Sample a few random network blocks, run them forward and print their
//! signatures. With a directory argument, also write a dataset there.

use hcc_tensor::sampler::{self, SampleConstraints};

fn main() -> hcc_tensor::Result<()> {
    let c = SampleConstraints { max_elems: 1 << 12, max_grid: 1 << 16, ..SampleConstraints::default().with_input(&[8, 4, 4]) };
    for seed in 0..5 {
        let tem = sampler::sample_record(&c, seed)?;
        let out = tem.forward(&tem.random_inputs(seed)?, &tem.init_weights(seed)?)?;
        let shapes: Vec<_> = out.iter().map(|(n, v)| (n.clone(), v.shape().to_vec())).collect();
        println!(
            "seed {seed}: {:?} params={} activations={:?} outputs={shapes:?}",
            tem.signature(false).tuple(),
            tem.parameter_count(),
            sampler::activation_histogram(&tem)
        );
    }
    if let Some(dir) = std::env::args().nth(1) {
        let m = sampler::emit_dataset(20, &c, 0, std::path::Path::new(&dir))?;
        println!("wrote {} blocks to {dir}", m.records.len());
    }
    Ok(())
}
