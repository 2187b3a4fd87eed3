//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//!
//! Run with `cargo test --release --test acceptance` for meaningful timings.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use misc_clustering::data::{compose_multiview, generate, DataMatrix, GeneratorKind, GeneratorSpec, LabeledDataset};
use misc_clustering::factorization::{
    gram, kgsnmf, knn_graph, run_variant, split_pos_neg, update_h, update_w, HUpdateRule, KernelSpec, SolverConfig,
    Variant,
};
use misc_clustering::ica::{amari_error, whiten, FastIca};
use misc_clustering::linalg::min_eigenvalue;
use misc_clustering::metrics::{f1_pairs, nmi};
use misc_clustering::model_selection::kmeans;
use misc_clustering::pipeline::{run_and_evaluate, run_misc, PipelineConfig};
use misc_clustering::subspace::{merge_subspaces, SubspacePartition};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, outcome: &Outcome) {
    // Written past the test harness capture so the lines always show up.
    let status = if outcome.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stdout().lock(), "[{status}] criterion {id} ({name}): {}", outcome.detail);
}

fn two_view_dataset(seed: u64) -> LabeledDataset {
    let view_a = GeneratorKind::blobs(vec![vec![0.0, 0.0], vec![6.0, 0.0], vec![3.0, 5.2], vec![3.0, 1.73]], 0.6);
    let view_b = GeneratorKind::GaussianBlobs {
        centers: vec![vec![0.0, 0.0], vec![6.0, 3.0]],
        scales: vec![0.5, 1.5],
    };
    let parts = [
        generate(&GeneratorSpec::new(view_a, 600, seed)).unwrap(),
        generate(&GeneratorSpec::new(view_b, 600, seed + 100)).unwrap(),
    ];
    compose_multiview(&parts, seed).unwrap()
}

fn subspace_recovery() -> Outcome {
    let mut hits = 0;
    let mut slowest = 0.0f64;
    let mut rows = Vec::new();
    for seed in 0..10u64 {
        let ds = two_view_dataset(seed);
        let start = Instant::now();
        let report = run_and_evaluate(&ds.data, &ds.views, &PipelineConfig::default().with_seed(seed)).unwrap();
        let secs = start.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let matched = report.metrics.as_ref().unwrap().matched_nmi();
        let ok = report.v == 2 && matched.len() == 2 && matched.iter().all(|&v| v >= 0.9);
        hits += ok as usize;
        rows.push(format!("v={} nmi={:.3?}", report.v, matched));
    }
    Outcome {
        pass: hits >= 8 && slowest <= 60.0,
        detail: format!("{hits}/10 seeds with v=2 and matched NMI >= 0.9 (need 8), slowest seed {slowest:.1}s (limit 60s); {}", rows.join(", ")),
    }
}

fn variant_nmi(x: &ArrayView2<f64>, truth: &[usize], k: usize, variant: Variant, seed: u64) -> f64 {
    let cfg = SolverConfig::default().with_seed(seed);
    let state = run_variant(x, k, variant, &KernelSpec::gaussian(), 5, &cfg).unwrap();
    nmi(&state.assign(seed, 10).unwrap().labels, truth).unwrap()
}

fn nonlinear_separation() -> Outcome {
    let start = Instant::now();
    let (mut kg, mut ks) = (0, 0);
    let (mut worst_snmf, mut worst_kmeans) = (0.0f64, 0.0f64);
    for seed in 0..10u64 {
        let ds = generate(&GeneratorSpec::new(GeneratorKind::atom(), 800, seed)).unwrap();
        let x = ds.data.values().view();
        let truth = &ds.views[0].1;
        kg += (variant_nmi(&x, truth, 2, Variant::Kgsnmf, seed) >= 1.0 - 1e-12) as usize;
        ks += (variant_nmi(&x, truth, 2, Variant::Ksnmf, seed) >= 1.0 - 1e-12) as usize;
        worst_snmf = worst_snmf.max(variant_nmi(&x, truth, 2, Variant::Snmf, seed));
        worst_kmeans = worst_kmeans.max(nmi(&kmeans(&x, 2, seed, 10).unwrap().labels, truth).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: kg >= 9 && ks >= 9 && worst_snmf < 0.6 && worst_kmeans < 0.6 && secs <= 30.0,
        detail: format!(
            "NMI = 1: kgsnmf {kg}/10, ksnmf {ks}/10 (need 9); max NMI snmf {worst_snmf:.3}, k-means {worst_kmeans:.3} (need < 0.6); {secs:.1}s (limit 30s)"
        ),
    }
}

fn graph_regularization() -> Outcome {
    let start = Instant::now();
    let (mut kg, mut ks) = (Vec::new(), Vec::new());
    for seed in 0..10u64 {
        let ds = generate(&GeneratorSpec::new(GeneratorKind::lsun(), 400, seed)).unwrap();
        let x = ds.data.values().view();
        let truth = &ds.views[0].1;
        kg.push(variant_nmi(&x, truth, 3, Variant::Kgsnmf, seed));
        ks.push(variant_nmi(&x, truth, 3, Variant::Ksnmf, seed));
    }
    let secs = start.elapsed().as_secs_f64();
    let hits = kg.iter().filter(|&&v| v >= 0.9).count();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mkg, mks) = (mean(&kg), mean(&ks));
    Outcome {
        pass: hits >= 7 && mkg > mks && secs <= 30.0,
        detail: format!(
            "kgsnmf NMI >= 0.9 in {hits}/10 (need 7); mean NMI kgsnmf {mkg:.3} vs ksnmf {mks:.3}; {secs:.1}s (limit 30s)"
        ),
    }
}

fn objective_monotonicity() -> Outcome {
    let mut violations = 0;
    let mut worst = 0.0f64;
    let mut runs = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((10, 100), || rng.sample::<f64, _>(StandardNormal));
        let kernel = gram(&x.view(), &KernelSpec::gaussian()).unwrap();
        let graph = knn_graph(&x.view(), 5).unwrap();
        for lambda in [0.0, 10.0] {
            let cfg = SolverConfig {
                lambda,
                max_iter: 300,
                rel_tol: 1e-12,
                seed,
                ..SolverConfig::default()
            };
            let state = kgsnmf(&kernel.view(), Some(&graph), 3, &cfg).unwrap();
            runs += 1;
            for pair in state.objective_trace.windows(2) {
                let rise = (pair[1] - pair[0]) / pair[0].abs();
                worst = worst.max(rise);
                violations += (rise > 1e-8) as usize;
            }
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{runs} traces, {violations} steps rising more than 1e-8 relative (largest relative rise {worst:.2e})"),
    }
}

/// Product-Gaussian leave-one-out KDE evaluated term by term, `Σⱼ −log₂ f₋ⱼ(sⱼ)`.
fn oracle_code_length(s: &ArrayView2<f64>) -> f64 {
    let (m, n) = s.dim();
    let h: Vec<f64> = (0..m)
        .map(|i| {
            let row = s.row(i);
            let mean = row.sum() / n as f64;
            let sd = (row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
            (1.06 * sd * (n as f64).powf(-1.0 / (4.0 + m as f64))).max(1e-6)
        })
        .collect();
    let mut total = 0.0;
    for j in 0..n {
        let mut density = 0.0;
        for l in (0..n).filter(|&l| l != j) {
            let mut kernel = 1.0;
            for i in 0..m {
                let z = (s[[i, j]] - s[[i, l]]) / h[i];
                kernel *= (-0.5 * z * z).exp() / (h[i] * (2.0 * std::f64::consts::PI).sqrt());
            }
            density += kernel;
        }
        total -= (density / (n - 1) as f64).log2();
    }
    total
}

fn oracle_mdl(sources: &ArrayView2<f64>, partition: &SubspacePartition) -> f64 {
    let (d, n) = sources.dim();
    let (df, nf) = (d as f64, n as f64);
    let model = df * df / 2.0 * nf.log2() + (partition.len() as f64 + 1.0) * df.log2();
    let data = df / 2.0 * nf.log2()
        + partition
            .groups()
            .iter()
            .map(|g| oracle_code_length(&sources.select(Axis(0), g).view()))
            .sum::<f64>();
    model + data
}

fn mdl_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut steps = 0;
    let mut merged_instances = 0;
    for inst in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + inst);
        let d = rng.random_range(1..=5);
        let n = rng.random_range(10..=60);
        let mut s = Array2::from_shape_simple_fn((d, n), || rng.random::<f64>() * 2.0 - 1.0);
        // Make some rows depend on earlier ones so that merges happen.
        for i in 1..d {
            if rng.random_bool(0.5) {
                let src = rng.random_range(0..i);
                let noise: Array1<f64> = (0..n).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
                let dep = s.row(src).mapv(|v| v * v) + noise;
                s.row_mut(i).assign(&dep);
            }
        }
        let trace = merge_subspaces(&s.view()).unwrap();
        merged_instances += (trace.steps.len() > 1) as usize;
        for step in &trace.steps {
            worst = worst.max((step.mdl - oracle_mdl(&s.view(), &step.partition)).abs());
            steps += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("{steps} trace steps over 50 instances ({merged_instances} with merges), max |stored − oracle| = {worst:.2e} bits (limit 1e-9)"),
    }
}

fn oracle_nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    let mut pab: HashMap<(usize, usize), f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *pa.entry(x).or_default() += 1.0 / n;
        *pb.entry(y).or_default() += 1.0 / n;
        *pab.entry((x, y)).or_default() += 1.0 / n;
    }
    match (pa.len(), pb.len()) {
        (1, 1) => return 1.0,
        (1, _) | (_, 1) => return 0.0,
        _ => {}
    }
    let h = |p: &HashMap<usize, f64>| -p.values().map(|v| v * v.ln()).sum::<f64>();
    let mi: f64 = pab.iter().map(|(&(x, y), &p)| p * (p / (pa[&x] * pb[&y])).ln()).sum();
    (mi / (h(&pa) * h(&pb)).sqrt()).clamp(0.0, 1.0)
}

fn oracle_f1(a: &[usize], b: &[usize]) -> f64 {
    let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let (sa, sb) = (a[i] == a[j], b[i] == b[j]);
            in_a += sa as u8 as f64;
            in_b += sb as u8 as f64;
            both += (sa && sb) as u8 as f64;
        }
    }
    if both == 0.0 {
        return 0.0;
    }
    let (p, r) = (both / in_a, both / in_b);
    2.0 * p * r / (p + r)
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut worst_nmi, mut worst_f1) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.random_range(2..=12);
        let (ka, kb) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..ka)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..kb)).collect();
        worst_nmi = worst_nmi.max((nmi(&a, &b).unwrap() - oracle_nmi(&a, &b)).abs());
        worst_f1 = worst_f1.max((f1_pairs(&a, &b).unwrap() - oracle_f1(&a, &b)).abs());
    }
    Outcome {
        pass: worst_nmi <= 1e-12 && worst_f1 <= 1e-12,
        detail: format!("200 instances, max deviation NMI {worst_nmi:.2e}, F1 {worst_f1:.2e} (limit 1e-12)"),
    }
}

fn ica_quality() -> Outcome {
    let start = Instant::now();
    let mut hits = 0;
    let mut errors = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sources = Array2::from_shape_simple_fn((2, 2000), || {
            let a: f64 = Exp1.sample(&mut rng);
            let b: f64 = Exp1.sample(&mut rng);
            a - b
        });
        let mixing = Array2::from_shape_simple_fn((2, 2), || rng.sample::<f64, _>(StandardNormal));
        let x = DataMatrix::new(mixing.dot(&sources)).unwrap();
        let dec = FastIca::new(500, 1e-6, seed).fit(&whiten(&x).unwrap()).unwrap();
        let err = amari_error(&dec.full_unmixing().dot(&mixing).view()).unwrap();
        hits += (err <= 0.1) as usize;
        errors.push(err);
    }
    let secs = start.elapsed().as_secs_f64();
    let max = errors.iter().copied().fold(0.0f64, f64::max);
    Outcome {
        pass: hits >= 18 && secs <= 10.0,
        detail: format!("amari <= 0.1 in {hits}/20 (need 18), largest {max:.3}; {secs:.2}s (limit 10s)"),
    }
}

fn is_exact_cover(groups: &[Vec<usize>], d: usize) -> bool {
    let mut seen = vec![false; d];
    groups.iter().all(|g| !g.is_empty()) && groups.iter().flatten().all(|&i| i < d && !std::mem::replace(&mut seen[i], true)) && seen.iter().all(|&s| s)
}

fn strip_timings(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("timings_ms");
    v.to_string()
}

fn structural_invariants() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    // Partitions along a real merge trace, plus rejection of overlaps.
    let ds = two_view_dataset(3);
    let cfg = PipelineConfig::default().with_seed(3);
    let first = run_misc(&ds.data, &cfg).unwrap();
    let d = first.partition.n_components();
    check(
        first.merge_trace.steps.iter().all(|s| is_exact_cover(s.partition.groups(), d)) && is_exact_cover(first.partition.groups(), d),
        "partition cover/disjointness",
    );
    check(SubspacePartition::new(vec![vec![0, 1], vec![1, 2]]).is_err(), "overlapping partition rejected");
    check(SubspacePartition::new(vec![vec![0], vec![2]]).is_err(), "gapped partition rejected");

    // Byte-identical report apart from timings.
    let second = run_misc(&ds.data, &cfg).unwrap();
    check(strip_timings(&first.to_json().unwrap()) == strip_timings(&second.to_json().unwrap()), "report.json determinism");

    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_simple_fn((3, 60), || rng.sample::<f64, _>(StandardNormal));

        let graph = knn_graph(&x.view(), 5).unwrap();
        let row_sums = graph.laplacian.sum_axis(Axis(1));
        check(row_sums.iter().all(|v| v.abs() <= 1e-12), "laplacian zero row sums");
        check(min_eigenvalue(&graph.laplacian.view()) >= -1e-8, "laplacian PSD");

        for spec in [KernelSpec::gaussian(), KernelSpec::linear()] {
            let k = gram(&x.view(), &spec).unwrap();
            check(k == k.t(), "kernel symmetry");
            check(min_eigenvalue(&k.view()) >= -1e-8 * k.diag().sum().max(1.0), "kernel PSD");

            // W and H stay nonnegative at every step, including with a mixed-sign kernel.
            let (kp, km) = split_pos_neg(&k.view());
            let mut w = Array2::from_shape_simple_fn((60, 3), || 1.0 - rng.random::<f64>());
            let mut h = Array2::from_shape_simple_fn((3, 60), || 1.0 - rng.random::<f64>());
            for _ in 0..100 {
                w = update_w(&w.view(), &h.view(), &kp.view(), &km.view(), 1e-12);
                h = update_h(&w.view(), &h.view(), &kp.view(), &km.view(), Some(&graph), 10.0, HUpdateRule::Kkt, 1e-12);
                check(w.iter().chain(h.iter()).all(|&v| v >= 0.0 && v.is_finite()), "W/H nonnegativity");
            }
        }
    }
    failures.sort();
    failures.dedup();
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "partition cover, laplacian rows/PSD, kernel symmetry/PSD, W/H nonnegativity, report determinism all hold".into()
        } else {
            format!("violated: {}", failures.join(", "))
        },
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("subspace recovery", subspace_recovery),
        ("nonlinear separation", nonlinear_separation),
        ("graph regularization", graph_regularization),
        ("objective monotonicity", objective_monotonicity),
        ("MDL oracle", mdl_oracle),
        ("metric oracle", metric_oracle),
        ("ICA quality", ica_quality),
        ("structural invariants", structural_invariants),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        report(i + 1, name, &outcome);
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
