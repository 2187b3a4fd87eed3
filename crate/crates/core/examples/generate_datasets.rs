//! Builds the synthetic families and a two-view composite, then writes them as CSV.
//!
//! `cargo run --example generate_datasets -- out_dir`

use misc_clustering::data::{compose_multiview, generate, write_data_csv, write_views_csv, GeneratorKind, GeneratorSpec};
use std::path::PathBuf;

fn main() -> misc_clustering::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "datasets".into()));
    std::fs::create_dir_all(&dir).map_err(|e| misc_clustering::MiscError::Io {
        path: dir.clone(),
        source: e,
    })?;

    for kind in [GeneratorKind::atom(), GeneratorKind::lsun(), GeneratorKind::rings()] {
        let name = kind.name();
        let ds = generate(&GeneratorSpec::new(kind, 400, 1))?;
        write_data_csv(dir.join(format!("{name}.csv")), &ds.data)?;
        write_views_csv(dir.join(format!("{name}_views.csv")), &ds.views)?;
        println!("{name:>8}: {} samples x {} features", ds.data.n_samples(), ds.data.dim());
    }

    // Two unrelated groupings of the same 600 samples, stacked side by side.
    let triangle = GeneratorKind::blobs(vec![vec![0.0, 0.0], vec![6.0, 0.0], vec![3.0, 5.2], vec![3.0, 1.73]], 0.6);
    let pair = GeneratorKind::GaussianBlobs {
        centers: vec![vec![0.0, 0.0], vec![6.0, 3.0]],
        scales: vec![0.5, 1.5],
    };
    let mut parts = vec![generate(&GeneratorSpec::new(triangle, 600, 1))?, generate(&GeneratorSpec::new(pair, 600, 2))?];
    parts[0].views[0].0 = "triangle".into();
    parts[1].views[0].0 = "pair".into();
    let composite = compose_multiview(&parts, 3)?;
    write_data_csv(dir.join("composite.csv"), &composite.data)?;
    write_views_csv(dir.join("composite_views.csv"), &composite.views)?;
    println!(
        "composite: {} samples x {} features, views {:?}",
        composite.data.n_samples(),
        composite.data.dim(),
        composite.views.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>()
    );
    println!("wrote {}", dir.display());
    Ok(())
}
