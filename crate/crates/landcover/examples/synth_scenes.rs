//! Generate the synthetic experiment data: a ladder of labeled source
//! scenes under increasing illumination and a spectrally shifted target
//! scene, written as `.mbr` rasters, `.msk` masks, and PNG previews.
//!
//!     cargo run --example synth_scenes [out_dir]

use std::path::PathBuf;

use landcover::pipeline::{source_scene_spec, synth_scene, target_scene_spec, PipelineConfig};
use landcover::raster::{export_mask_png, write_mask, write_raster};

fn main() {
    let out = PathBuf::from(
        std::env::args().nth(1).unwrap_or_else(|| "out/synth_scenes".into()),
    );
    std::fs::create_dir_all(&out).expect("create output directory");

    let cfg = PipelineConfig::default();
    let legend = cfg.legend().unwrap();

    for i in 0..cfg.source_scenes {
        let spec = source_scene_spec(&cfg, i);
        let (raster, mask) = synth_scene(&spec).expect("generate source scene");
        write_raster(&raster, out.join(format!("source_{i}.mbr"))).unwrap();
        write_mask(&mask, out.join(format!("source_{i}.msk"))).unwrap();
        export_mask_png(&mask, &legend, out.join(format!("source_{i}_truth.png"))).unwrap();
        println!(
            "source {i}: {}x{}x{} bands, brightness +{:.1}, texture cover {:.2}",
            raster.width(),
            raster.height(),
            raster.bands(),
            spec.brightness,
            spec.texture_cover[0],
        );
    }

    let spec = target_scene_spec(&cfg);
    let (target, truth) = synth_scene(&spec).expect("generate target scene");
    write_raster(&target, out.join("target.mbr")).unwrap();
    write_mask(&truth, out.join("target_truth.msk")).unwrap();
    export_mask_png(&truth, &legend, out.join("target_truth.png")).unwrap();
    println!(
        "target: gain {:?}, offset {:?} (the simulated sensor change)",
        spec.gain, spec.offset
    );
    println!("wrote {} scenes to {}", cfg.source_scenes + 1, out.display());
}
