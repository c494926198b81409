//! Round-trip every on-disk artifact format: MBR1 rasters, MSK1 label
//! masks, SEG1 segmentations, and CLF1 classifier models. Each reader is
//! the exact inverse of its writer, byte for byte.
//!
//!     cargo run --example file_formats [out_dir]

use std::path::PathBuf;

use landcover::classifier::{load_model, save_model, train_with_hidden, TrainConfig};
use landcover::patching::extract_training_samples;
use landcover::pipeline::{synth_scene, SceneSpec};
use landcover::raster::{read_mask, read_raster, write_mask, write_raster};
use landcover::segmentation::{read_segmentation, segment, write_segmentation};
use landcover::SegConfig;

fn main() {
    let out = PathBuf::from(
        std::env::args().nth(1).unwrap_or_else(|| "out/file_formats".into()),
    );
    std::fs::create_dir_all(&out).expect("create output directory");

    let (raster, mask) = synth_scene(&SceneSpec::uniform(96, 64, 3, 4, 11)).unwrap();

    write_raster(&raster, out.join("scene.mbr")).unwrap();
    let r2 = read_raster(out.join("scene.mbr")).unwrap();
    assert_eq!(raster.samples(), r2.samples());
    println!(
        "MBR1: {}x{}x{} raster, {} bytes",
        raster.width(),
        raster.height(),
        raster.bands(),
        std::fs::metadata(out.join("scene.mbr")).unwrap().len()
    );

    write_mask(&mask, out.join("scene.msk")).unwrap();
    let m2 = read_mask(out.join("scene.msk")).unwrap();
    assert_eq!(mask.labels(), m2.labels());
    println!(
        "MSK1: {} labels over {} classes, {} bytes",
        mask.labels().len(),
        mask.num_classes(),
        std::fs::metadata(out.join("scene.msk")).unwrap().len()
    );

    let seg = segment(&raster, &SegConfig::default()).unwrap();
    write_segmentation(&seg, &out.join("scene.seg")).unwrap();
    let s2 = read_segmentation(&out.join("scene.seg")).unwrap();
    assert_eq!(seg.ids(), s2.ids());
    println!(
        "SEG1: {} regions, {} bytes",
        seg.region_count(),
        std::fs::metadata(out.join("scene.seg")).unwrap().len()
    );

    let scales = landcover::ScaleConfig::new(vec![8, 16], 8).unwrap();
    let (samples, _) = extract_training_samples(&raster, &mask, &scales, 20, 0.9, 5).unwrap();
    let model =
        train_with_hidden(&samples, 16, &TrainConfig { epochs: 3, ..Default::default() })
            .unwrap();
    save_model(&model, &out.join("model.clf")).unwrap();
    let m = load_model(&out.join("model.clf")).unwrap();
    let probe = &samples[0].patch;
    assert_eq!(model.predict_proba(probe).probs(), m.predict_proba(probe).probs());
    println!(
        "CLF1: {}-{}-{} network, {} bytes",
        model.input_dim(),
        model.hidden_dim(),
        model.num_classes(),
        std::fs::metadata(out.join("model.clf")).unwrap().len()
    );

    println!("all four formats round-tripped in {}", out.display());
}
