//! Print the complexity signature of every reference block; with a
//! directory argument, also write each block as canonical JSON.

use hcc_tensor::json;
use hcc_tensor::network::fixtures;

fn main() -> hcc_tensor::Result<()> {
    let out = std::env::args().nth(1);
    let mut named: Vec<_> = fixtures::table().into_iter().map(|(n, t, _)| (n, t)).collect();
    named.push(("red_star", fixtures::by_name("red_star").unwrap()));
    for (name, tem) in &named {
        let s = tem.signature(false);
        println!("{name:12} {:?} params={}", s.tuple(), tem.parameter_count());
        if let Some(dir) = &out {
            json::save(format!("{dir}/{name}.json"), tem)?;
        }
    }
    Ok(())
}
