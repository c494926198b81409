//! The whole experiment in one call: synthesize sources and a shifted
//! target, pre-train, mine and fine-tune, classify with both models, vote,
//! and evaluate. Equivalent to `landcover run-all`.
//!
//!     cargo run --example full_run [seed]

use landcover::pipeline::{run_all, PipelineConfig};

fn main() {
    let mut cfg = PipelineConfig::default();
    cfg.seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    cfg.out_dir = format!("out/full_run_{}", cfg.seed).into();

    let summary = run_all(&cfg).expect("run experiment");

    println!("seed {}: {} survivors, fallback {}", cfg.seed, summary.survivors, summary.fallback);
    println!(
        "pre-trained model:  patchwise OA {:.4} -> voted OA {:.4}",
        summary.pretrained_patchwise_oa, summary.pretrained_final_oa
    );
    println!(
        "fine-tuned model:   patchwise OA {:.4} -> voted OA {:.4}",
        summary.finetuned_patchwise_oa, summary.finetuned_final_oa
    );
    println!(
        "transfer gain on the final map: {:+.1} OA points",
        100.0 * (summary.finetuned_final_oa - summary.pretrained_final_oa)
    );
    println!("maps, models, metrics -> {}", cfg.out_dir.display());
}
