//! Pre-train the patch classifier on labeled source scenes and classify a
//! held-out scene from the same domain, reporting window accuracy and the
//! per-pixel overall accuracy of the fused multi-scale map.
//!
//!     cargo run --example train_and_classify

use landcover::fusion::classify_map;
use landcover::metrics::{confusion, MetricReport};
use landcover::patching::extract_training_samples;
use landcover::pipeline::{run_pretrain, source_scene_spec, synth_scene, PipelineConfig};

fn main() {
    let mut cfg = PipelineConfig::default();
    cfg.out_dir = "out/train_and_classify".into();

    let sources: Vec<_> = (0..cfg.source_scenes)
        .map(|i| synth_scene(&source_scene_spec(&cfg, i)).expect("generate scene"))
        .collect();

    let outcome = run_pretrain(&cfg, &sources).expect("pre-train");
    println!(
        "trained on {} windows from {} scenes -> {}",
        outcome.samples.len(),
        sources.len(),
        cfg.out_dir.join("pretrained.clf").display()
    );

    // A fresh scene from the same domain: same recipe, unseen seed.
    let mut held_out_spec = source_scene_spec(&cfg, 0);
    held_out_spec.seed ^= 0x5eed;
    let (raster, truth) = synth_scene(&held_out_spec).unwrap();

    let sc = cfg.scale_config().unwrap();
    let (windows, _) =
        extract_training_samples(&raster, &truth, &sc, 40, cfg.purity, 424242).unwrap();
    let hits = windows
        .iter()
        .filter(|s| outcome.model.predict_proba(&s.patch).top().0 == s.label)
        .count();
    println!(
        "held-out window accuracy: {:.4} ({hits}/{} windows)",
        hits as f64 / windows.len() as f64,
        windows.len()
    );

    let map = classify_map(&outcome.model, &raster, &sc).unwrap();
    let cm = confusion(&truth, &map, cfg.classes as usize).unwrap();
    let report = MetricReport::from_matrix(&cm).unwrap();
    println!(
        "held-out map: OA {:.4}, kappa {:.4}",
        report.overall_accuracy, report.kappa.value
    );
}
