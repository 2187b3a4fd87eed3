//! End to end: two hidden groupings in one dataset, recovered as two clusterings.
//!
//! `cargo run --release --example multiple_clusterings -- [seed] [out_dir]`

use misc_clustering::data::{compose_multiview, generate, GeneratorKind, GeneratorSpec};
use misc_clustering::pipeline::{run_and_evaluate, PipelineConfig};
use std::path::Path;

fn main() -> misc_clustering::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = args.next();

    let triangle = GeneratorKind::blobs(vec![vec![0.0, 0.0], vec![6.0, 0.0], vec![3.0, 5.2], vec![3.0, 1.73]], 0.6);
    let pair = GeneratorKind::GaussianBlobs {
        centers: vec![vec![0.0, 0.0], vec![6.0, 3.0]],
        scales: vec![0.5, 1.5],
    };
    let mut parts = vec![
        generate(&GeneratorSpec::new(triangle, 600, seed))?,
        generate(&GeneratorSpec::new(pair, 600, seed + 100))?,
    ];
    parts[0].views[0].0 = "triangle".into();
    parts[1].views[0].0 = "pair".into();
    let ds = compose_multiview(&parts, seed)?;

    let report = run_and_evaluate(&ds.data, &ds.views, &PipelineConfig::default().with_seed(seed))?;
    println!("subspaces: {:?}", report.partition.groups());
    for (i, s) in report.subspaces.iter().enumerate() {
        println!(
            "C{}: components {:?}, k = {}, {} iterations, objective {:.3}",
            i + 1,
            s.components,
            s.k,
            s.iterations,
            s.objective
        );
    }
    if let Some(metrics) = &report.metrics {
        print!("\n{metrics}");
    }
    if let Some(dir) = out {
        report.write(Path::new(&dir))?;
        println!("\nwrote {dir}");
    }
    Ok(())
}
