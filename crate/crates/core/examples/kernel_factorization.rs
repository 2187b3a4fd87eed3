//! Kernel semi-NMF on the Atom data (a ball inside a shell), against plain k-means.

use misc_clustering::data::{generate, GeneratorKind, GeneratorSpec};
use misc_clustering::factorization::{gram, kgsnmf, KernelSpec, SolverConfig};
use misc_clustering::metrics::nmi;
use misc_clustering::model_selection::kmeans;

fn main() -> misc_clustering::Result<()> {
    let ds = generate(&GeneratorSpec::new(GeneratorKind::atom(), 800, 1))?;
    let x = ds.data.values().view();
    let truth = &ds.views[0].1;

    let k = kmeans(&x, 2, 1, 10)?;
    println!("k-means      NMI {:.3}", nmi(&k.labels, truth)?);

    let kernel = gram(&x, &KernelSpec::gaussian())?;
    let cfg = SolverConfig {
        lambda: 0.0,
        ..SolverConfig::default()
    }
    .with_seed(1);
    let state = kgsnmf(&kernel.view(), None, 2, &cfg)?;
    let labels = state.assign(1, 10)?.labels;
    println!(
        "kernel NMF   NMI {:.3} ({} iterations, objective {:.2} -> {:.2})",
        nmi(&labels, truth)?,
        state.iterations,
        state.objective_trace[0],
        state.final_objective()
    );
    Ok(())
}
