//! Score a predicted label map against ground truth: confusion matrix,
//! overall accuracy, Cohen's kappa, and per-class user's accuracy, plus
//! the CSV/text report round-trip the pipeline persists.
//!
//!     cargo run --example evaluate_maps

use landcover::metrics::{confusion, users_accuracy, ConfusionMatrix, MetricReport};
use landcover::raster::LabelMask;

fn main() {
    // A tiny hand-checkable pair: 6x4 truth in two vertical halves,
    // prediction correct except three pixels and one background cell.
    let truth = LabelMask::new(
        6,
        4,
        2,
        vec![
            0, 0, 0, 1, 1, 1, //
            0, 0, 0, 1, 1, 1, //
            0, 0, 0, 1, 1, 1, //
            0, 0, 0, 1, 1, 1,
        ],
    )
    .unwrap();
    let pred = LabelMask::new(
        6,
        4,
        2,
        vec![
            0, 0, 1, 1, 1, 1, //
            0, 0, 0, 1, 1, 1, //
            0, 1, 0, 0, 1, 1, //
            0, 0, 0, 1, 1, landcover::BACKGROUND,
        ],
    )
    .unwrap();

    let cm = confusion(&truth, &pred, 2).unwrap();
    println!("confusion counts (truth x predicted):");
    for a in 0..2 {
        let rejected = cm.rejected(a);
        println!(
            "  class {a}: {:?}  (+{rejected} rejected as background)",
            (0..2).map(|b| cm.count(a, b)).collect::<Vec<_>>()
        );
    }

    let report = MetricReport::from_matrix(&cm).unwrap();
    println!("overall accuracy: {:.4}", report.overall_accuracy);
    println!("kappa:            {:.4}", report.kappa.value);
    for class in 0..2u16 {
        match users_accuracy(&cm, class).unwrap() {
            Some(ua) => println!("user's accuracy class {class}: {ua:.4}"),
            None => println!("user's accuracy class {class}: undefined (never predicted)"),
        }
    }

    // The pipeline writes reports as CSV; parsing one back is lossless.
    let csv = report.to_csv();
    let reparsed = MetricReport::from_csv(&csv).unwrap();
    assert_eq!(reparsed.overall_accuracy, report.overall_accuracy);
    println!("\nCSV report round-trips:\n{csv}");

    // Same machinery on a classic textbook matrix.
    let fixture = ConfusionMatrix::from_counts(vec![vec![30, 20], vec![20, 30]]);
    let r = MetricReport::from_matrix(&fixture).unwrap();
    println!("[[30,20],[20,30]] -> OA {:.1}, kappa {:.1}", r.overall_accuracy, r.kappa.value);
}
