//! Scores clusterings against ground-truth views with NMI, pairwise F1 and ARI.

use misc_clustering::metrics::{adjusted_rand_index, evaluate_views, f1_pairs, nmi};

fn main() -> misc_clustering::Result<()> {
    let color = vec![0, 0, 0, 1, 1, 1, 2, 2, 2];
    let shape = vec![0, 1, 2, 0, 1, 2, 0, 1, 2];
    let found_a = vec![5, 5, 5, 7, 7, 7, 9, 9, 9];
    let found_b = vec![0, 1, 1, 0, 1, 1, 0, 1, 2];

    for (name, found) in [("A", &found_a), ("B", &found_b)] {
        println!(
            "{name} vs color: NMI {:.3}  F1 {:.3}  ARI {:.3}",
            nmi(found, &color)?,
            f1_pairs(found, &color)?,
            adjusted_rand_index(found, &color)?
        );
    }

    let views = vec![("color".to_string(), color), ("shape".to_string(), shape)];
    let report = evaluate_views(&[found_a, found_b], &views)?;
    print!("\n{report}");
    println!("\nmatched NMI per clustering: {:?}", report.matched_nmi());
    Ok(())
}
