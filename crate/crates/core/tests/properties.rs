use misc_clustering::data::{load_csv, standardize, write_data_csv, DataMatrix, Orientation};
use misc_clustering::density::entropy_cost;
use misc_clustering::factorization::{gram, kgsnmf, knn_graph, KernelSpec, SolverConfig};
use misc_clustering::metrics::{adjusted_rand_index, f1_pairs, nmi};
use misc_clustering::subspace::{independence_cost, merge_subspaces, select_partition};
use ndarray::{Array2, Axis};
use proptest::prelude::*;

fn labels(max_n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2..=max_n).prop_flat_map(|n| (prop::collection::vec(0..4usize, n), prop::collection::vec(0..4usize, n)))
}

fn matrix(rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Array2<f64>> {
    (rows, cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0..10.0f64, r * c).prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_symmetric_and_bounded((a, b) in labels(30)) {
        let (ab, ba) = (nmi(&a, &b).unwrap(), nmi(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        let (fab, fba) = (f1_pairs(&a, &b).unwrap(), f1_pairs(&b, &a).unwrap());
        prop_assert!((fab - fba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&fab));
        prop_assert!(adjusted_rand_index(&a, &b).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn metrics_ignore_label_names((a, b) in labels(30), shift in 1usize..10) {
        let renamed: Vec<usize> = a.iter().map(|&l| (3 - l) * 7 + shift).collect();
        prop_assert!((nmi(&a, &b).unwrap() - nmi(&renamed, &b).unwrap()).abs() < 1e-12);
        prop_assert!((f1_pairs(&a, &b).unwrap() - f1_pairs(&renamed, &b).unwrap()).abs() < 1e-12);
        prop_assert!((nmi(&a, &renamed).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_cost_ignores_sample_order(s in matrix(1..=3, 5..=30), rot in 0usize..30) {
        let n = s.ncols();
        let order: Vec<usize> = (0..n).map(|j| (j + rot) % n).collect();
        let shuffled = s.select(Axis(1), &order);
        let (a, b) = (entropy_cost(&s.view()).unwrap(), entropy_cost(&shuffled.view()).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn independence_cost_is_symmetric(s in matrix(2..=4, 5..=30)) {
        let d = s.nrows();
        let (a, b): (Vec<usize>, Vec<usize>) = ((0..d / 2).collect(), (d / 2..d).collect());
        prop_assert_eq!(
            independence_cost(&s.view(), &a, &b).unwrap().to_bits(),
            independence_cost(&s.view(), &b, &a).unwrap().to_bits()
        );
    }

    #[test]
    fn merge_trace_partitions_cover_and_shrink(s in matrix(1..=4, 8..=30)) {
        let d = s.nrows();
        let trace = merge_subspaces(&s.view()).unwrap();
        prop_assert_eq!(trace.steps[0].partition.len(), d);
        for (i, step) in trace.steps.iter().enumerate() {
            prop_assert_eq!(step.partition.len(), d - i);
            let mut all: Vec<usize> = step.partition.groups().iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..d).collect::<Vec<_>>());
        }
        let best = select_partition(&trace).unwrap();
        let min = trace.steps.iter().map(|s| s.mdl).fold(f64::INFINITY, f64::min);
        let first_min = trace.steps.iter().find(|s| s.mdl == min).unwrap();
        prop_assert_eq!(best, &first_min.partition);
    }

    #[test]
    fn knn_graph_is_symmetric_with_min_degree(x in matrix(1..=3, 6..=25), eps in 1usize..5) {
        let g = knn_graph(&x.view(), eps).unwrap();
        prop_assert!(g.adjacency == g.adjacency.t());
        prop_assert!(g.degree.iter().all(|&d| d >= eps as f64));
        prop_assert!(g.adjacency.diag().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kgsnmf_trace_never_rises(x in matrix(2..=4, 8..=25), seed in 0u64..1000, lambda in prop::sample::select(vec![0.0, 1.0, 10.0])) {
        let kernel = gram(&x.view(), &KernelSpec::gaussian()).unwrap();
        let graph = knn_graph(&x.view(), 3).unwrap();
        let cfg = SolverConfig { lambda, max_iter: 60, rel_tol: 1e-12, seed, ..SolverConfig::default() };
        let state = kgsnmf(&kernel.view(), Some(&graph), 2, &cfg).unwrap();
        for w in state.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-8 * w[0].abs());
        }
        prop_assert!(state.w.iter().chain(state.h.iter()).all(|&v| v >= 0.0));
    }

    #[test]
    fn standardized_rows_have_zero_mean_unit_variance(x in matrix(1..=4, 3..=40)) {
        let st = standardize(&DataMatrix::new(x).unwrap()).unwrap();
        let v = st.data.values();
        for row in v.rows() {
            let n = row.len() as f64;
            let mean = row.sum() / n;
            let var = row.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip_is_exact(x in matrix(1..=4, 2..=20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let data = DataMatrix::new(x).unwrap();
        write_data_csv(&path, &data).unwrap();
        let back = load_csv(&path, Orientation::SamplesAsRows).unwrap();
        prop_assert_eq!(back.values(), data.values());
    }
}
