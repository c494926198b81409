//! Refine a patch-wise classification map by per-region majority voting
//! and measure what the segmentation-guided cleanup is worth in overall
//! accuracy.
//!
//!     cargo run --example vote_refinement

use landcover::fusion::classify_map;
use landcover::metrics::{confusion, overall_accuracy};
use landcover::pipeline::{
    run_pretrain, source_scene_spec, synth_scene, target_scene_spec, PipelineConfig,
};
use landcover::segmentation::segment;
use landcover::voting::majority_vote;

fn main() {
    let mut cfg = PipelineConfig::default();
    cfg.out_dir = "out/vote_refinement".into();

    let sources: Vec<_> = (0..cfg.source_scenes)
        .map(|i| synth_scene(&source_scene_spec(&cfg, i)).expect("generate scene"))
        .collect();
    let (target, truth) = synth_scene(&target_scene_spec(&cfg)).unwrap();

    let model = run_pretrain(&cfg, &sources).expect("pre-train").model;

    let sc = cfg.scale_config().unwrap();
    let patchwise = classify_map(&model, &target, &sc).unwrap();
    let seg = segment(&target, &cfg.seg).unwrap();
    let voted = majority_vote(&patchwise, &seg).unwrap();

    let oa = |map| overall_accuracy(&confusion(&truth, map, 4).unwrap()).unwrap();
    println!("patch-wise map OA:      {:.4}", oa(&patchwise));
    println!(
        "majority-voted map OA:  {:.4}  ({} regions vote)",
        oa(&voted),
        seg.region_count()
    );

    // Voting makes the map constant inside every region; count the cells
    // it actually flipped.
    let flipped = patchwise
        .labels()
        .iter()
        .zip(voted.labels())
        .filter(|(a, b)| a != b)
        .count();
    println!(
        "{} of {} pixels changed label under voting",
        flipped,
        patchwise.labels().len()
    );
}
