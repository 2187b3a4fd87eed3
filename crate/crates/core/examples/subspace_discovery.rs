//! Groups ICA sources into independent subspaces and prints the merge trace.

use misc_clustering::data::{compose_multiview, generate, standardize, GeneratorKind, GeneratorSpec};
use misc_clustering::ica::{whiten, FastIca};
use misc_clustering::subspace::{merge_subspaces, select_partition};

fn main() -> misc_clustering::Result<()> {
    let triangle = GeneratorKind::blobs(vec![vec![0.0, 0.0], vec![6.0, 0.0], vec![3.0, 5.2], vec![3.0, 1.73]], 0.6);
    let pair = GeneratorKind::GaussianBlobs {
        centers: vec![vec![0.0, 0.0], vec![6.0, 3.0]],
        scales: vec![0.5, 1.5],
    };
    let parts = [generate(&GeneratorSpec::new(triangle, 600, 0))?, generate(&GeneratorSpec::new(pair, 600, 100))?];
    let data = compose_multiview(&parts, 0)?.data;

    let std = standardize(&data)?;
    let dec = FastIca::new(500, 1e-6, 0).fit(&whiten(&std.data)?)?;
    let trace = merge_subspaces(&dec.sources.view())?;

    println!("{:>3}  {:>12}  {:>10}  partition", "v", "MDL (bits)", "C_I");
    for step in &trace.steps {
        let cost = step.pair_cost.map_or("-".to_string(), |c| format!("{c:.1}"));
        println!("{:>3}  {:>12.1}  {:>10}  {:?}", step.partition.len(), step.mdl, cost, step.partition.groups());
    }
    println!("selected: {:?}", select_partition(&trace)?.groups());
    Ok(())
}
