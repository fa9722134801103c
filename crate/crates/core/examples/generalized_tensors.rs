//! Build graphs of weakly ordered slices, check the ordering conditions and
//! convert between arrays and generalized tensors.

use hcc_tensor::mda::Mda;
use hcc_tensor::pwohg::{self, Pwohg};

fn main() -> hcc_tensor::Result<()> {
    let cube = Pwohg::parse(
        &["A", "B", "C", "D", "E", "F", "G", "H"],
        &[
            ("r", &["A<B", "C<D", "E<F", "G<H"]),
            ("g", &["A<C", "B<D", "E<G", "F<H"]),
            ("b", &["A<E", "B<F", "C<G", "D<H"]),
        ],
    )?;
    let a = cube.assign_multi_indices(cube.vertex("A").unwrap())?;
    for v in ["A", "D", "H"] {
        let t = a.tuple_of(cube.vertex(v).unwrap()).unwrap();
        println!("{v} -> {:?}", a.from_origin(t));
    }

    let degenerate = Pwohg::parse(&["A", "B", "C", "D"], &[("r", &["A<B", "C<D"]), ("c", &["A<C", "D<B"])])?;
    let report = degenerate.check_socc();
    println!("degenerate consistent={} witness={:?}", report.consistent, report.witness.map(|w| w.distance));

    let m = Mda::dense(&[2, 3], vec![10.0, 11.0, 12.0, 13.0, 14.0, 15.0])?;
    let gt = pwohg::gt_from_mda(&m)?;
    println!("{}", hcc_tensor::json::to_canonical(&gt.graph.to_json())?);
    assert_eq!(pwohg::mda_from_gt(&gt, true)?, m);
    Ok(())
}
