//! Compares the four factorization variants on the Lsun data, with and without the graph term.

use misc_clustering::data::{generate, GeneratorKind, GeneratorSpec};
use misc_clustering::factorization::{run_variant, KernelSpec, SolverConfig, Variant};
use misc_clustering::metrics::nmi;
use misc_clustering::model_selection::kmeans;

fn main() -> misc_clustering::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let ds = generate(&GeneratorSpec::new(GeneratorKind::lsun(), 400, seed))?;
    let x = ds.data.values().view();
    let truth = &ds.views[0].1;

    println!("{:>8}  {:>6}  {:>5}", "method", "NMI", "iters");
    let baseline = kmeans(&x, 3, seed, 10)?;
    println!("{:>8}  {:>6.3}  {:>5}", "k-means", nmi(&baseline.labels, truth)?, "-");
    let cfg = SolverConfig::default().with_seed(seed);
    for variant in Variant::ALL {
        let state = run_variant(&x, 3, variant, &KernelSpec::gaussian(), 5, &cfg)?;
        let labels = state.assign(seed, 10)?.labels;
        println!("{:>8}  {:>6.3}  {:>5}", variant.name(), nmi(&labels, truth)?, state.iterations);
    }
    Ok(())
}
