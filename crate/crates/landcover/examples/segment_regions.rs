//! Hierarchically segment a synthetic scene: graph-based initial regions,
//! greedy similarity merging, and a boundary overlay PNG you can eyeball.
//! Prints how region granularity responds to the scale parameter `k`.
//!
//!     cargo run --example segment_regions [out_dir]

use std::path::PathBuf;

use landcover::pipeline::{synth_scene, target_scene_spec, PipelineConfig};
use landcover::segmentation::{export_boundary_overlay, initial_segmentation, segment};
use landcover::SegConfig;

fn main() {
    let out = PathBuf::from(
        std::env::args().nth(1).unwrap_or_else(|| "out/segment_regions".into()),
    );
    std::fs::create_dir_all(&out).expect("create output directory");

    let cfg = PipelineConfig::default();
    let (raster, _) = synth_scene(&target_scene_spec(&cfg)).expect("generate scene");

    for k in [20.0, 60.0, 200.0, 600.0] {
        let seg_cfg = SegConfig { k_scale: k, ..cfg.seg.clone() };
        let initial = initial_segmentation(&raster, &seg_cfg).unwrap();
        let merged = segment(&raster, &seg_cfg).unwrap();
        let sizes = merged.region_sizes();
        let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
        println!(
            "k = {k:>5}: {:>5} initial regions -> {:>4} after merging (mean {mean:.0} px, largest {} px)",
            initial.region_count(),
            merged.region_count(),
            sizes.iter().max().unwrap(),
        );
    }

    let seg = segment(&raster, &cfg.seg).unwrap();
    let overlay = out.join("boundaries.png");
    export_boundary_overlay(&raster, &seg, &overlay).unwrap();
    println!(
        "default config ({} regions) overlay -> {}",
        seg.region_count(),
        overlay.display()
    );
}
